//! ICU-style relational tables, the join that turns them into the four-feature
//! diabetes dataset, and a seeded generator of schema-compatible cohorts.
//!
//! The generator exists because the real tables require credentialed access.
//! Its output goes through exactly the same join as real exports do.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{schemas, Dataset, Record, Value};
use crate::error::{Error, Result};

/// Ethnicity values treated as missing; such patients are dropped.
pub const MISSING_ETHNICITIES: [&str; 3] =
    ["UNKNOWN/NOT SPECIFIED", "PATIENT DECLINED TO ANSWER", "UNABLE TO OBTAIN"];
/// ICD9 prefix of the diabetes mellitus family.
pub const DIABETES_ICD9_PREFIX: &str = "250";
/// ICD9 code for a family history of diabetes mellitus.
pub const FAMILY_HISTORY_ICD9: &str = "V180";
/// Ages above 89 are obscured in the source tables; they are capped here.
pub const MAX_AGE: i32 = 90;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    #[serde(rename = "SUBJECT_ID")]
    pub subject_id: u64,
    #[serde(rename = "GENDER")]
    pub gender: String,
    #[serde(rename = "DOB", with = "date_prefix")]
    pub dob: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admission {
    #[serde(rename = "SUBJECT_ID")]
    pub subject_id: u64,
    #[serde(rename = "ADMITTIME", with = "date_prefix")]
    pub admit_time: NaiveDate,
    #[serde(rename = "ETHNICITY")]
    pub ethnicity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    #[serde(rename = "SUBJECT_ID")]
    pub subject_id: u64,
    #[serde(rename = "ICD9_CODE")]
    pub icd9_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcdEntry {
    #[serde(rename = "ICD9_CODE")]
    pub icd9_code: String,
    #[serde(rename = "LONG_TITLE")]
    pub description: String,
}

/// Real exports carry timestamps ("2101-10-20 19:08:00"); only the date matters.
mod date_prefix {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&d.format("%Y-%m-%d").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let raw = String::deserialize(d)?;
        let head = raw.get(..10).unwrap_or(&raw);
        NaiveDate::parse_from_str(head, "%Y-%m-%d").map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MimicTables {
    pub patients: Vec<Patient>,
    pub admissions: Vec<Admission>,
    pub diagnoses: Vec<Diagnosis>,
    pub icd_dictionary: Vec<IcdEntry>,
}

const PATIENTS_FILE: &str = "PATIENTS.csv";
const ADMISSIONS_FILE: &str = "ADMISSIONS.csv";
const DIAGNOSES_FILE: &str = "DIAGNOSES_ICD.csv";
const DICTIONARY_FILE: &str = "D_ICD_DIAGNOSES.csv";

impl MimicTables {
    /// Checks that every admission and diagnosis refers to a known patient.
    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for p in &self.patients {
            if !ids.insert(p.subject_id) {
                return Err(Error::Domain(format!("duplicate SUBJECT_ID {}", p.subject_id)));
            }
        }
        if let Some(a) = self.admissions.iter().find(|a| !ids.contains(&a.subject_id)) {
            return Err(Error::Domain(format!("admission for unknown SUBJECT_ID {}", a.subject_id)));
        }
        if let Some(d) = self.diagnoses.iter().find(|d| !ids.contains(&d.subject_id)) {
            return Err(Error::Domain(format!("diagnosis for unknown SUBJECT_ID {}", d.subject_id)));
        }
        Ok(())
    }

    /// Reads the four tables from `dir`. Extra columns in real exports are ignored.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        Ok(MimicTables {
            patients: read_table(&dir.join(PATIENTS_FILE))?,
            admissions: read_table(&dir.join(ADMISSIONS_FILE))?,
            diagnoses: read_table(&dir.join(DIAGNOSES_FILE))?,
            icd_dictionary: read_table(&dir.join(DICTIONARY_FILE))?,
        })
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_table(&dir.join(PATIENTS_FILE), &self.patients)?;
        write_table(&dir.join(ADMISSIONS_FILE), &self.admissions)?;
        write_table(&dir.join(DIAGNOSES_FILE), &self.diagnoses)?;
        write_table(&dir.join(DICTIONARY_FILE), &self.icd_dictionary)?;
        Ok(())
    }
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::load(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        out.push(row.map_err(|e| Error::Load {
            row: Some(i + 1),
            column: None,
            message: format!("{}: {e}", path.display()),
        })?);
    }
    Ok(out)
}

fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::load(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::load(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Counts from the table join.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub patients_seen: usize,
    pub skipped_no_admission: usize,
    pub excluded_missing_ethnicity: usize,
    pub rows_emitted: usize,
}

#[derive(Debug, Clone)]
pub struct MimicBuild {
    pub dataset: Dataset,
    pub report: BuildReport,
}

/// Whole years from `dob` to `at`.
pub fn whole_years_between(dob: NaiveDate, at: NaiveDate) -> i32 {
    let mut years = at.year() - dob.year();
    if (at.month(), at.day()) < (dob.month(), dob.day()) {
        years -= 1;
    }
    years
}

/// Joins the tables into one row per patient: age at first admission, gender,
/// ethnicity (from the first admission) and family history; labeled positive
/// when any diagnosis is in the 250.xx family.
pub fn build_mimic_like_dataset(t: &MimicTables) -> Result<MimicBuild> {
    t.validate()?;
    let mut first_admission: HashMap<u64, &Admission> = HashMap::new();
    for a in &t.admissions {
        first_admission
            .entry(a.subject_id)
            .and_modify(|cur| {
                if a.admit_time < cur.admit_time {
                    *cur = a;
                }
            })
            .or_insert(a);
    }
    let mut diabetic = std::collections::HashSet::new();
    let mut family = std::collections::HashSet::new();
    for d in &t.diagnoses {
        let code = d.icd9_code.trim();
        if code.starts_with(DIABETES_ICD9_PREFIX) {
            diabetic.insert(d.subject_id);
        }
        if code == FAMILY_HISTORY_ICD9 {
            family.insert(d.subject_id);
        }
    }

    let mut report = BuildReport { patients_seen: t.patients.len(), ..Default::default() };
    let mut rows = Vec::with_capacity(t.patients.len());
    for p in &t.patients {
        let Some(adm) = first_admission.get(&p.subject_id) else {
            report.skipped_no_admission += 1;
            continue;
        };
        let eth = adm.ethnicity.trim();
        if MISSING_ETHNICITIES.contains(&eth) {
            report.excluded_missing_ethnicity += 1;
            continue;
        }
        let age = whole_years_between(p.dob, adm.admit_time).clamp(0, MAX_AGE);
        let gender = match p.gender.trim() {
            "M" => "M",
            "F" => "F",
            other => {
                return Err(Error::Domain(format!("SUBJECT_ID {}: unknown gender '{other}'", p.subject_id)));
            }
        };
        rows.push(Record {
            values: vec![
                Value::Num(f64::from(age)),
                Value::Text(gender.into()),
                Value::Text(eth.to_string()),
                Value::Text(if family.contains(&p.subject_id) { "1" } else { "0" }.into()),
            ],
            label: diabetic.contains(&p.subject_id),
        });
    }
    report.rows_emitted = rows.len();
    if rows.is_empty() {
        return Err(Error::Preprocess("table join produced no rows".into()));
    }
    Ok(MimicBuild { dataset: Dataset::new(schemas::mimic(), rows)?, report })
}

/// Knobs for the synthetic cohort. The risk model is a latent score
/// `age_effect·(age−60) + ethnicity effect + family/gender effects + logistic noise`;
/// the top `class_ratio` fraction by score is labeled diabetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub n: usize,
    pub class_ratio: f64,
    pub seed: u64,
    pub age_mean: f64,
    pub age_sd: f64,
    pub age_min: f64,
    pub age_max: f64,
    /// `(ethnicity, weight, score effect)` for the retained ethnicities.
    pub ethnicities: Vec<(String, f64, f64)>,
    /// Share of patients whose ethnicity is one of the missing markers.
    pub missing_ethnicity_rate: f64,
    pub male_fraction: f64,
    pub family_history_rate: f64,
    /// Share of patients with no admission row at all.
    pub no_admission_rate: f64,
    pub age_effect_per_year: f64,
    pub family_history_effect: f64,
    pub male_effect: f64,
}

impl CohortConfig {
    /// Proportions shaped after the real cohort: 46,520 patients of which about
    /// 84.5% survive ethnicity cleaning, 22.5% diabetic.
    pub fn new(n: usize, class_ratio: f64, seed: u64) -> Self {
        CohortConfig {
            n,
            class_ratio,
            seed,
            age_mean: 62.0,
            age_sd: 17.0,
            age_min: 18.0,
            age_max: 89.0,
            ethnicities: vec![
                ("WHITE".into(), 0.78, 0.0),
                ("BLACK/AFRICAN AMERICAN".into(), 0.11, 0.9),
                ("HISPANIC OR LATINO".into(), 0.04, 0.3),
                ("ASIAN".into(), 0.04, 0.2),
                ("OTHER".into(), 0.03, 0.0),
            ],
            missing_ethnicity_rate: 0.155,
            male_fraction: 0.56,
            family_history_rate: 0.02,
            no_admission_rate: 0.0,
            age_effect_per_year: 0.045,
            family_history_effect: 0.6,
            male_effect: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::Domain(format!("cohort size must be at least 10, got {}", self.n)));
        }
        if !(self.class_ratio > 0.0 && self.class_ratio < 1.0) {
            return Err(Error::Domain(format!("class_ratio must lie in (0, 1), got {}", self.class_ratio)));
        }
        for (name, r) in [
            ("missing_ethnicity_rate", self.missing_ethnicity_rate),
            ("male_fraction", self.male_fraction),
            ("family_history_rate", self.family_history_rate),
            ("no_admission_rate", self.no_admission_rate),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1), got {r}")));
            }
        }
        if self.ethnicities.is_empty() || self.ethnicities.iter().any(|e| e.1 <= 0.0) {
            return Err(Error::Domain("ethnicity weights must be positive and non-empty".into()));
        }
        if !(self.age_sd > 0.0 && self.age_min <= self.age_max) {
            return Err(Error::Domain("invalid age distribution".into()));
        }
        Ok(())
    }
}

const DIABETES_CODES: [(&str, &str); 5] = [
    ("25000", "Diabetes mellitus without mention of complication, type II or unspecified type"),
    ("25001", "Diabetes mellitus without mention of complication, type I"),
    ("25002", "Diabetes mellitus without mention of complication, type II or unspecified type, uncontrolled"),
    ("25040", "Diabetes with renal manifestations, type II or unspecified type"),
    ("25060", "Diabetes with neurological manifestations, type II or unspecified type"),
];

const OTHER_CODES: [(&str, &str); 10] = [
    ("4019", "Unspecified essential hypertension"),
    ("4280", "Congestive heart failure, unspecified"),
    ("42731", "Atrial fibrillation"),
    ("41401", "Coronary atherosclerosis of native coronary artery"),
    ("5849", "Acute kidney failure, unspecified"),
    ("2724", "Other and unspecified hyperlipidemia"),
    ("51881", "Acute respiratory failure"),
    ("5990", "Urinary tract infection, site not specified"),
    ("V5861", "Long-term (current) use of anticoagulants"),
    ("2859", "Anemia, unspecified"),
];

/// Shorthand for [`generate_cohort`] with default marginals.
pub fn generate_synthetic_cohort(n: usize, class_ratio: f64, seed: u64) -> Result<MimicTables> {
    generate_cohort(&CohortConfig::new(n, class_ratio, seed))
}

/// Deterministic for a fixed config. Labels are assigned by rank within the
/// retained and the excluded groups separately, so the joined dataset's
/// positive share equals `class_ratio` up to rounding.
pub fn generate_cohort(cfg: &CohortConfig) -> Result<MimicTables> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let age_dist = Normal::new(cfg.age_mean, cfg.age_sd).map_err(|e| Error::Domain(e.to_string()))?;
    let eth_total: f64 = cfg.ethnicities.iter().map(|e| e.1).sum();

    struct Draft {
        age: i32,
        male: bool,
        ethnicity: String,
        family: bool,
        score: f64,
        excluded: bool,
        has_admission: bool,
    }

    let mut drafts = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let age = age_dist.sample(&mut rng).clamp(cfg.age_min, cfg.age_max).round() as i32;
        let male = rng.random::<f64>() < cfg.male_fraction;
        let family = rng.random::<f64>() < cfg.family_history_rate;
        let excluded = rng.random::<f64>() < cfg.missing_ethnicity_rate;
        let (ethnicity, eth_effect) = if excluded {
            (MISSING_ETHNICITIES.choose(&mut rng).expect("non-empty").to_string(), 0.0)
        } else {
            let mut pick = rng.random::<f64>() * eth_total;
            let mut chosen = &cfg.ethnicities[cfg.ethnicities.len() - 1];
            for e in &cfg.ethnicities {
                if pick < e.1 {
                    chosen = e;
                    break;
                }
                pick -= e.1;
            }
            (chosen.0.clone(), chosen.2)
        };
        let u: f64 = rng.random_range(1e-12..1.0 - 1e-12);
        let noise = (u / (1.0 - u)).ln();
        let score = cfg.age_effect_per_year * (f64::from(age) - 60.0)
            + eth_effect
            + if family { cfg.family_history_effect } else { 0.0 }
            + if male { cfg.male_effect } else { 0.0 }
            + noise;
        let has_admission = rng.random::<f64>() >= cfg.no_admission_rate;
        drafts.push(Draft { age, male, ethnicity, family, score, excluded, has_admission });
    }

    let mut positive = vec![false; drafts.len()];
    for group_excluded in [false, true] {
        let mut idx: Vec<usize> = (0..drafts.len())
            .filter(|&i| drafts[i].excluded == group_excluded && drafts[i].has_admission)
            .collect();
        let k = (idx.len() as f64 * cfg.class_ratio).round() as usize;
        idx.sort_by(|&a, &b| drafts[b].score.total_cmp(&drafts[a].score).then(a.cmp(&b)));
        for &i in idx.iter().take(k) {
            positive[i] = true;
        }
    }

    let mut tables = MimicTables::default();
    let mut used_codes: BTreeMap<&str, &str> = BTreeMap::new();
    for (i, d) in drafts.iter().enumerate() {
        let subject_id = 10_000 + i as u64;
        let year = rng.random_range(2101..2200);
        let admit = NaiveDate::from_ymd_opt(year, rng.random_range(1..=12), rng.random_range(1..=28))
            .expect("valid date");
        let back = rng.random_range(0..364u64);
        let anniversary = admit.with_year(admit.year() - d.age).expect("day <= 28 exists every year");
        let dob = anniversary.checked_sub_days(Days::new(back)).expect("date in range");
        tables.patients.push(Patient {
            subject_id,
            gender: if d.male { "M" } else { "F" }.into(),
            dob,
        });
        if d.has_admission {
            let visits = rng.random_range(1..=3);
            for v in 0..visits {
                let later = if v == 0 { 0 } else { rng.random_range(30..2000u64) };
                tables.admissions.push(Admission {
                    subject_id,
                    admit_time: admit.checked_add_days(Days::new(later)).expect("date in range"),
                    ethnicity: d.ethnicity.clone(),
                });
            }
        }
        if positive[i] {
            let (code, title) = *DIABETES_CODES.choose(&mut rng).expect("non-empty");
            used_codes.insert(code, title);
            tables.diagnoses.push(Diagnosis { subject_id, icd9_code: code.into() });
        }
        if d.family {
            used_codes.insert(FAMILY_HISTORY_ICD9, "Family history of diabetes mellitus");
            tables.diagnoses.push(Diagnosis { subject_id, icd9_code: FAMILY_HISTORY_ICD9.into() });
        }
        for _ in 0..rng.random_range(1..=4) {
            let (code, title) = *OTHER_CODES.choose(&mut rng).expect("non-empty");
            used_codes.insert(code, title);
            tables.diagnoses.push(Diagnosis { subject_id, icd9_code: code.into() });
        }
    }
    tables.icd_dictionary = used_codes
        .into_iter()
        .map(|(c, t)| IcdEntry { icd9_code: c.into(), description: t.into() })
        .collect();
    Ok(tables)
}
