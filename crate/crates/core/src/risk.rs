//! Clinical risk-factor rules and the static device catalog.
//!
//! Everything here is a pure function of its inputs. Thresholds are kept in
//! one place so that labeling, flagging and documentation agree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fasting plasma glucose below this is non-diabetic (mg/dl).
pub const FPG_PREDIABETIC_MIN: f64 = 100.0;
/// Fasting plasma glucose above this is diabetic (mg/dl); `[100, 125]` is pre-diabetic.
pub const FPG_DIABETIC_ABOVE: f64 = 125.0;
pub const SYSTOLIC_HYPERTENSIVE: f64 = 140.0;
pub const DIASTOLIC_HYPERTENSIVE: f64 = 90.0;
/// WHO obesity cutoff (kg/m²).
pub const BMI_OBESE: f64 = 30.0;
/// Serum uric acid strictly above this is hyperuricemic (µmol/l).
pub const URIC_ACID_HIGH_ABOVE: f64 = 370.0;
pub const SLEEP_HEALTHY_MIN_HOURS: f64 = 6.0;
pub const SLEEP_HEALTHY_MAX_HOURS: f64 = 8.0;
pub const BDI_DEPRESSED: f64 = 11.0;
pub const CESD_DEPRESSED: f64 = 8.0;
/// Zung SDS strictly above this counts as depressed.
pub const SDS_DEPRESSED_ABOVE: f64 = 39.0;
pub const ACTIVE_SESSIONS_PER_WEEK: u32 = 3;
pub const ACTIVE_MINUTES_PER_SESSION: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GlycemicStatus {
    NonDiabetic,
    PreDiabetic,
    Diabetic,
}

/// Labels a fasting plasma glucose reading (mg/dl).
pub fn classify_glucose(fpg: f64) -> Result<GlycemicStatus> {
    if !fpg.is_finite() || fpg <= 0.0 {
        return Err(Error::Domain(format!("fasting plasma glucose must be positive and finite, got {fpg}")));
    }
    Ok(if fpg < FPG_PREDIABETIC_MIN {
        GlycemicStatus::NonDiabetic
    } else if fpg <= FPG_DIABETIC_ABOVE {
        GlycemicStatus::PreDiabetic
    } else {
        GlycemicStatus::Diabetic
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DepressionScores {
    pub bdi: Option<f64>,
    pub cesd: Option<f64>,
    pub sds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfReported {
    pub age: f64,
    pub gender: Gender,
    pub ethnicity: String,
    pub family_history: bool,
    pub smoking: bool,
    pub alcohol: bool,
}

/// Measured and self-reported risk factors for one person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskFactorProfile {
    /// mg/dl
    pub fasting_glucose: f64,
    /// mmHg
    pub systolic_bp: f64,
    /// mmHg
    pub diastolic_bp: f64,
    /// kg/m²
    pub bmi: f64,
    /// µmol/l
    pub serum_uric_acid: f64,
    /// hours per night
    pub sleep_duration: f64,
    pub exercise_sessions_per_week: u32,
    pub exercise_minutes_per_session: f64,
    #[serde(default)]
    pub depression_scores: Option<DepressionScores>,
    pub self_reported: SelfReported,
}

impl RiskFactorProfile {
    /// Checks the physical-range invariants.
    pub fn validate(&self) -> Result<()> {
        let quantities = [
            ("fasting_glucose", self.fasting_glucose),
            ("systolic_bp", self.systolic_bp),
            ("diastolic_bp", self.diastolic_bp),
            ("bmi", self.bmi),
            ("serum_uric_acid", self.serum_uric_acid),
            ("sleep_duration", self.sleep_duration),
            ("exercise_minutes_per_session", self.exercise_minutes_per_session),
            ("age", self.self_reported.age),
        ];
        for (name, v) in quantities {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.sleep_duration > 24.0 {
            return Err(Error::Domain(format!("sleep_duration cannot exceed 24 hours, got {}", self.sleep_duration)));
        }
        if let Some(scores) = &self.depression_scores {
            for (name, v) in [("bdi", scores.bdi), ("cesd", scores.cesd), ("sds", scores.sds)] {
                if let Some(v) = v {
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::Domain(format!("{name} score must be finite and non-negative, got {v}")));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RiskFlags {
    pub hypertensive: bool,
    pub obese: bool,
    pub hyperuricemic: bool,
    pub abnormal_sleep: bool,
    pub depressed: bool,
    pub physically_inactive: bool,
}

impl RiskFlags {
    pub fn count(&self) -> usize {
        [
            self.hypertensive,
            self.obese,
            self.hyperuricemic,
            self.abnormal_sleep,
            self.depressed,
            self.physically_inactive,
        ]
        .into_iter()
        .filter(|f| *f)
        .count()
    }
}

/// Derives the per-factor flags. Missing depression scores leave `depressed` false.
///
/// Hypertension requires both the systolic and the diastolic threshold.
pub fn assess_risk_flags(p: &RiskFactorProfile) -> RiskFlags {
    let depressed = p.depression_scores.as_ref().is_some_and(|s| {
        s.bdi.is_some_and(|v| v >= BDI_DEPRESSED)
            || s.cesd.is_some_and(|v| v >= CESD_DEPRESSED)
            || s.sds.is_some_and(|v| v > SDS_DEPRESSED_ABOVE)
    });
    let active = p.exercise_sessions_per_week >= ACTIVE_SESSIONS_PER_WEEK
        && p.exercise_minutes_per_session >= ACTIVE_MINUTES_PER_SESSION;
    RiskFlags {
        hypertensive: p.systolic_bp >= SYSTOLIC_HYPERTENSIVE && p.diastolic_bp >= DIASTOLIC_HYPERTENSIVE,
        obese: p.bmi >= BMI_OBESE,
        hyperuricemic: p.serum_uric_acid > URIC_ACID_HIGH_ABOVE,
        abnormal_sleep: p.sleep_duration < SLEEP_HEALTHY_MIN_HOURS || p.sleep_duration > SLEEP_HEALTHY_MAX_HOURS,
        depressed,
        physically_inactive: !active,
    }
}

/// The measurable risk factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RiskFactor {
    Hypertension,
    Obesity,
    Cholesterol,
    Depression,
    SerumUricAcid,
    SleepDuration,
    PhysicalActivity,
    Glucose,
}

impl RiskFactor {
    pub const ALL: [RiskFactor; 8] = [
        RiskFactor::Hypertension,
        RiskFactor::Obesity,
        RiskFactor::Cholesterol,
        RiskFactor::Depression,
        RiskFactor::SerumUricAcid,
        RiskFactor::SleepDuration,
        RiskFactor::PhysicalActivity,
        RiskFactor::Glucose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RiskFactor::Hypertension => "hypertension",
            RiskFactor::Obesity => "obesity",
            RiskFactor::Cholesterol => "cholesterol",
            RiskFactor::Depression => "depression",
            RiskFactor::SerumUricAcid => "serum_uric_acid",
            RiskFactor::SleepDuration => "sleep_duration",
            RiskFactor::PhysicalActivity => "physical_activity",
            RiskFactor::Glucose => "glucose",
        }
    }
}

impl fmt::Display for RiskFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RiskFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        RiskFactor::ALL
            .into_iter()
            .find(|f| f.name() == norm || (norm == "uric_acid" && *f == RiskFactor::SerumUricAcid)
                || (norm == "sleep" && *f == RiskFactor::SleepDuration)
                || (norm == "activity" && *f == RiskFactor::PhysicalActivity))
            .ok_or_else(|| Error::Domain(format!("unknown risk factor '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceCatalogEntry {
    pub risk_factor: RiskFactor,
    pub device_name: &'static str,
    pub performance_note: &'static str,
    /// Lower bound when the source quotes a price range; `None` when no price is known.
    pub approx_cost_usd: Option<f64>,
    /// The price as quoted ("943-2,798", "Not available", "Free", ...).
    pub cost_text: &'static str,
}

const fn entry(
    risk_factor: RiskFactor,
    device_name: &'static str,
    performance_note: &'static str,
    approx_cost_usd: Option<f64>,
    cost_text: &'static str,
) -> DeviceCatalogEntry {
    DeviceCatalogEntry { risk_factor, device_name, performance_note, approx_cost_usd, cost_text }
}

use RiskFactor as F;

static HYPERTENSION: [DeviceCatalogEntry; 4] = [
    entry(F::Hypertension, "Omron Evolv (HEM-7600T-E)",
        "Mean difference vs mercury sphygmomanometer: -0.1 ± 5.0 mmHg systolic, -0.2 ± 4.1 mmHg diastolic",
        Some(136.0), "136"),
    entry(F::Hypertension, "Omron M3 Comfort (HEM-7134-E)",
        "Mean difference vs mercury sphygmomanometer: -0.9 ± 5.4 mmHg systolic, -0.6 ± 4.7 mmHg diastolic",
        Some(63.16), "63.16"),
    entry(F::Hypertension, "Omron (HEM-9210T)",
        "Mean difference vs mercury sphygmomanometer: -2.1 ± 4.7 mmHg systolic, -1.2 ± 4.1 mmHg diastolic",
        None, "Not available"),
    entry(F::Hypertension, "Mobil-O-Graph",
        "Mean difference vs mercury sphygmomanometer: -2.2 ± 7.3 mmHg systolic, -0.4 ± 6.1 mmHg diastolic",
        Some(1365.86), "1365.86"),
];

static OBESITY: [DeviceCatalogEntry; 6] = [
    entry(F::Obesity, "Statistical BMI calculation",
        "Strengths: quick, cost-effective, easy. Weaknesses: not accurate for elderly, muscular and pregnant individuals",
        None, "Not available"),
    entry(F::Obesity, "Skinfold calipers",
        "Strengths: easy to use, portable, cost-effective. Weaknesses: accuracy depends on operator skill",
        None, "Not available"),
    entry(F::Obesity, "Smart weighing scales",
        "Strengths: quick and easy. Weaknesses: depends on hydration state; accurate scales are costly",
        None, "Not available"),
    entry(F::Obesity, "Hydrodensitometry",
        "Strengths: accurate and reliable. Weaknesses: costly; repeated submersion unsuitable for children and elderly",
        None, "Not available"),
    entry(F::Obesity, "Air displacement plethysmography",
        "Strengths: quick, accurate, reliable, any age. Weaknesses: costly",
        None, "Not available"),
    entry(F::Obesity, "Dual energy x-ray absorptiometry",
        "Strengths: quick, precise, reliable. Weaknesses: costly",
        None, "Not available"),
];

static CHOLESTEROL: [DeviceCatalogEntry; 2] = [
    entry(F::Cholesterol, "EasyTouch", "Coefficient of variation not reported", Some(60.0), "60"),
    entry(F::Cholesterol, "BeneCheck Plus", "Coefficient of variation not reported", Some(136.0), "136"),
];

static URIC_ACID: [DeviceCatalogEntry; 6] = [
    entry(F::SerumUricAcid, "Smartphone as electro-chemical analyzer",
        "Average CV: 4.1% low, 2.47% mid, 1.87% high concentration", None, "Not available"),
    entry(F::SerumUricAcid, "EasyTouch", "CV 27.2% (not acceptable)", Some(60.0), "60"),
    entry(F::SerumUricAcid, "UAsure", "CV 25.9% (not acceptable)", Some(64.0), "64"),
    entry(F::SerumUricAcid, "BeneCheck Plus", "CV 9.5% (acceptable)", Some(136.0), "136"),
    entry(F::SerumUricAcid, "HumaSens plus", "CV 11.5% (acceptable)", Some(52.0), "52"),
    entry(F::SerumUricAcid, "Liquid chromatography mass spectrometry", "Average CV 0.01-3.37%", None, "Not available"),
];

static SLEEP: [DeviceCatalogEntry; 12] = [
    entry(F::SleepDuration, "Polysomnography test",
        "Non-invasive; sensitivity 0.957, specificity 0.532, accuracy 0.904, Cohen's kappa 0.495",
        Some(943.0), "943-2,798"),
    entry(F::SleepDuration, "OURA ring", "Wearable; sensitivity 96% (sleep), specificity 48% (wake)",
        Some(299.0), "299-399"),
    entry(F::SleepDuration, "Fitbit Flex", "Wearable; 97.46% accuracy", Some(100.0), "100"),
    entry(F::SleepDuration, "Fitbit Charge HR", "Wearable; overestimates sleep duration", Some(65.39), "65.39"),
    entry(F::SleepDuration, "Polar A370 fitness tracker",
        "Wearable; ages 11±0.8: sens 0.93 spec 0.77 acc 0.91; ages 17.8±1.8: sens 0.91 spec 0.83 acc 0.90",
        Some(163.0), "163"),
    entry(F::SleepDuration, "Actiwatch 2",
        "Wearable; ages 11±0.8: sens 0.93 spec 0.68 acc 0.90; ages 17.8±1.8: sens 0.93 spec 0.58 acc 0.89",
        None, "Not available"),
    entry(F::SleepDuration, "Fitbit Alta HR",
        "Wearable; sensitivity 0.96±0.02, specificity 0.58±0.16, accuracy 0.90±0.04", Some(270.0), "270"),
    entry(F::SleepDuration, "Withings Pulse", "Wearable; 98.1% accuracy", Some(100.0), "100"),
    entry(F::SleepDuration, "Misfit Shine", "Wearable; 96% accuracy", Some(100.0), "100"),
    entry(F::SleepDuration, "Jawbone Up24", "Wearable; 97.23% accuracy", Some(100.0), "100"),
    entry(F::SleepDuration, "EMFIT Quantified Sleep",
        "Non-wearable; overestimates total sleep time, underestimates wake after sleep", None, "Not available"),
    entry(F::SleepDuration, "Sleep Cycle", "Mobile application; not reported", Some(0.0), "Free"),
];

static PHYSICAL_ACTIVITY: [DeviceCatalogEntry; 7] = [
    entry(F::PhysicalActivity, "Fitbit One", "Waist-based; accuracy >90%", Some(70.0), "70"),
    entry(F::PhysicalActivity, "Omron HJ-321", "Waist-based; accuracy >90%", Some(67.25), "67.25"),
    entry(F::PhysicalActivity, "Sportline 340 Strider", "Waist-based; accuracy >90%", Some(22.0), "22"),
    entry(F::PhysicalActivity, "Fitbit Force", "Wrist-based; accuracy <90%", None, "Not available"),
    entry(F::PhysicalActivity, "StepWatch activity monitor",
        "Ankle-based; non-running >95%, running 74.4%", None, "Not available"),
    entry(F::PhysicalActivity, "Apple iPhone 5", "Mobile phone; accuracy <90%", None, "Obsolete"),
    entry(F::PhysicalActivity, "Samsung Galaxy S4", "Mobile phone; accuracy <90%", Some(405.0), "405"),
];

static GLUCOSE: [DeviceCatalogEntry; 4] = [
    entry(F::Glucose, "Wearable-band type visible-near infrared optical",
        "Non-invasive; average correlation with actual glucose 0.86", None, "Not available"),
    entry(F::Glucose, "Triple-pole complementary split ring resonator-based microwave bio-sensor",
        "Non-invasive; sensitivity 6.2 dB/(mg/ml)", None, "Not available"),
    entry(F::Glucose, "EasyTouch", "Invasive; not reported", Some(60.0), "60"),
    entry(F::Glucose, "BeneCheck Plus", "Invasive; not reported", Some(136.0), "136"),
];

/// Catalog rows for a factor, in source order. Depression is measured with
/// rating scales and has no device rows.
pub fn device_catalog_lookup(factor: RiskFactor) -> &'static [DeviceCatalogEntry] {
    match factor {
        RiskFactor::Hypertension => &HYPERTENSION,
        RiskFactor::Obesity => &OBESITY,
        RiskFactor::Cholesterol => &CHOLESTEROL,
        RiskFactor::Depression => &[],
        RiskFactor::SerumUricAcid => &URIC_ACID,
        RiskFactor::SleepDuration => &SLEEP,
        RiskFactor::PhysicalActivity => &PHYSICAL_ACTIVITY,
        RiskFactor::Glucose => &GLUCOSE,
    }
}

/// Looks up a factor by name.
pub fn device_catalog_lookup_by_name(name: &str) -> Result<&'static [DeviceCatalogEntry]> {
    Ok(device_catalog_lookup(name.parse()?))
}

/// Renders catalog rows as a delimiter-separated table with a header
/// (`factor`, `device`, `cost_usd`). Unknown costs are left empty.
pub fn catalog_to_delimited<'a>(
    rows: impl IntoIterator<Item = &'a DeviceCatalogEntry>,
    delimiter: u8,
) -> String {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    w.write_record(["factor", "device", "cost_usd"]).expect("in-memory write");
    for e in rows {
        let cost = e.approx_cost_usd.map(|c| c.to_string()).unwrap_or_default();
        w.write_record([e.risk_factor.name(), e.device_name, cost.as_str()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("catalog text is utf-8")
}

/// Every catalog row, grouped by factor.
pub fn full_catalog() -> impl Iterator<Item = &'static DeviceCatalogEntry> {
    RiskFactor::ALL.into_iter().flat_map(device_catalog_lookup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn healthy() -> RiskFactorProfile {
        RiskFactorProfile {
            fasting_glucose: 90.0,
            systolic_bp: 120.0,
            diastolic_bp: 80.0,
            bmi: 23.0,
            serum_uric_acid: 300.0,
            sleep_duration: 7.0,
            exercise_sessions_per_week: 3,
            exercise_minutes_per_session: 45.0,
            depression_scores: Some(DepressionScores { bdi: Some(4.0), cesd: Some(2.0), sds: Some(30.0) }),
            self_reported: SelfReported {
                age: 40.0,
                gender: Gender::Female,
                ethnicity: "WHITE".into(),
                family_history: false,
                smoking: false,
                alcohol: false,
            },
        }
    }

    #[test]
    fn glucose_bands() {
        assert_eq!(classify_glucose(95.0).unwrap(), GlycemicStatus::NonDiabetic);
        assert_eq!(classify_glucose(110.0).unwrap(), GlycemicStatus::PreDiabetic);
        assert_eq!(classify_glucose(126.0).unwrap(), GlycemicStatus::Diabetic);
        assert_eq!(classify_glucose(100.0).unwrap(), GlycemicStatus::PreDiabetic);
        assert_eq!(classify_glucose(125.0).unwrap(), GlycemicStatus::PreDiabetic);
        assert_eq!(classify_glucose(125.0001).unwrap(), GlycemicStatus::Diabetic);
    }

    #[test]
    fn glucose_rejects_bad_input() {
        for v in [0.0, -3.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(classify_glucose(v), Err(Error::Domain(_))), "{v}");
        }
    }

    #[test]
    fn healthy_profile_has_no_flags() {
        let p = healthy();
        p.validate().unwrap();
        assert_eq!(assess_risk_flags(&p), RiskFlags::default());
    }

    #[test]
    fn hypertension_needs_both_pressures() {
        let mut p = healthy();
        p.systolic_bp = 145.0;
        p.diastolic_bp = 92.0;
        assert!(assess_risk_flags(&p).hypertensive);
        p.diastolic_bp = 85.0;
        assert!(!assess_risk_flags(&p).hypertensive);
    }

    #[test]
    fn uric_acid_is_strict() {
        let mut p = healthy();
        p.serum_uric_acid = 370.0;
        assert!(!assess_risk_flags(&p).hyperuricemic);
        p.serum_uric_acid = 371.0;
        assert!(assess_risk_flags(&p).hyperuricemic);
    }

    #[test]
    fn depression_any_scale() {
        let mut p = healthy();
        p.depression_scores = None;
        assert!(!assess_risk_flags(&p).depressed);
        p.depression_scores = Some(DepressionScores { bdi: None, cesd: Some(8.0), sds: None });
        assert!(assess_risk_flags(&p).depressed);
        p.depression_scores = Some(DepressionScores { bdi: None, cesd: None, sds: Some(39.0) });
        assert!(!assess_risk_flags(&p).depressed);
        p.depression_scores = Some(DepressionScores { bdi: Some(11.0), cesd: None, sds: None });
        assert!(assess_risk_flags(&p).depressed);
    }

    #[test]
    fn activity_meets_or_exceeds() {
        let mut p = healthy();
        p.exercise_sessions_per_week = 6;
        p.exercise_minutes_per_session = 90.0;
        assert!(!assess_risk_flags(&p).physically_inactive);
        p.exercise_sessions_per_week = 2;
        assert!(assess_risk_flags(&p).physically_inactive);
        p.exercise_sessions_per_week = 3;
        p.exercise_minutes_per_session = 29.0;
        assert!(assess_risk_flags(&p).physically_inactive);
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let mut p = healthy();
        p.sleep_duration = 25.0;
        assert!(p.validate().is_err());
        let mut p = healthy();
        p.bmi = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn catalog_rows_match_tables() {
        let h = device_catalog_lookup(RiskFactor::Hypertension);
        assert_eq!(h.len(), 4);
        assert_eq!(h[0].device_name, "Omron Evolv (HEM-7600T-E)");
        assert_eq!(h[0].approx_cost_usd, Some(136.0));
        let c: Vec<_> = device_catalog_lookup(RiskFactor::Cholesterol).iter().map(|e| e.approx_cost_usd).collect();
        assert_eq!(c, vec![Some(60.0), Some(136.0)]);
        assert!(device_catalog_lookup(RiskFactor::Glucose)
            .iter()
            .any(|e| e.device_name == "EasyTouch" && e.approx_cost_usd == Some(60.0)));
        let counts: Vec<usize> = RiskFactor::ALL.iter().map(|f| device_catalog_lookup(*f).len()).collect();
        assert_eq!(counts, vec![4, 6, 2, 0, 6, 12, 7, 4]);
        assert!(full_catalog().all(|e| e.approx_cost_usd.is_none_or(|c| c >= 0.0)));
    }

    #[test]
    fn factor_names_parse() {
        assert_eq!("Hypertension".parse::<RiskFactor>().unwrap(), RiskFactor::Hypertension);
        assert_eq!("serum-uric-acid".parse::<RiskFactor>().unwrap(), RiskFactor::SerumUricAcid);
        assert!(matches!("cholesterol level".parse::<RiskFactor>(), Err(Error::Domain(_))));
        assert!(device_catalog_lookup_by_name("telepathy").is_err());
    }

    #[test]
    fn catalog_export() {
        let text = catalog_to_delimited(device_catalog_lookup(RiskFactor::Cholesterol), b'\t');
        assert_eq!(text, "factor\tdevice\tcost_usd\ncholesterol\tEasyTouch\t60\ncholesterol\tBeneCheck Plus\t136\n");
    }
}
