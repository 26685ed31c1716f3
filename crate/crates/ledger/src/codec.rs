//! Canonical byte encoding: big-endian integers, length-prefixed byte
//! strings, one tag byte for optional fields.

use crate::error::{LedgerError, Result};
use crate::hash::Hash32;

#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Encoder::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn str(&mut self, v: &str) -> &mut Self {
        self.bytes(v.as_bytes())
    }

    pub fn hash(&mut self, h: &Hash32) -> &mut Self {
        self.buf.extend_from_slice(&h.0);
        self
    }

    pub fn opt_hash(&mut self, h: &Option<Hash32>) -> &mut Self {
        match h {
            Some(h) => self.u8(1).hash(h),
            None => self.u8(0),
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Decoder { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(LedgerError::Corrupt(format!("unexpected end of data at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u64()?;
        let n = usize::try_from(n).map_err(|_| LedgerError::Corrupt("length overflow".into()))?;
        self.take(n)
    }

    pub fn string(&mut self) -> Result<String> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| LedgerError::Corrupt("invalid utf-8".into()))
    }

    pub fn hash(&mut self) -> Result<Hash32> {
        Ok(Hash32(self.take(32)?.try_into().expect("32 bytes")))
    }

    pub fn opt_hash(&mut self) -> Result<Option<Hash32>> {
        match self.u8()? {
            0 => Ok(None),
            1 => Ok(Some(self.hash()?)),
            t => Err(LedgerError::Corrupt(format!("bad option tag {t}"))),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let h = Hash32::of(b"z");
        let mut e = Encoder::new();
        e.u8(7).u64(1 << 40).i64(-3).str("héllo").hash(&h).opt_hash(&None).opt_hash(&Some(h));
        let bytes = e.finish();
        let mut d = Decoder::new(&bytes);
        assert_eq!(d.u8().unwrap(), 7);
        assert_eq!(d.u64().unwrap(), 1 << 40);
        assert_eq!(d.i64().unwrap(), -3);
        assert_eq!(d.string().unwrap(), "héllo");
        assert_eq!(d.hash().unwrap(), h);
        assert_eq!(d.opt_hash().unwrap(), None);
        assert_eq!(d.opt_hash().unwrap(), Some(h));
        assert!(d.is_empty());
    }

    #[test]
    fn length_prefix_separates_fields() {
        let a = {
            let mut e = Encoder::new();
            e.str("ab").str("c");
            e.finish()
        };
        let b = {
            let mut e = Encoder::new();
            e.str("a").str("bc");
            e.finish()
        };
        assert_ne!(a, b);
    }

    #[test]
    fn truncated_input() {
        let mut d = Decoder::new(&[0, 0, 0, 0, 0, 0, 0, 9, 1]);
        assert!(d.bytes().is_err());
    }
}
