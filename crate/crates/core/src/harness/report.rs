use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::verify::Findings;
use super::AnalysisParams;
use crate::error::{Result, WfockError};
use crate::quadrature::QuadraturePlan;
use crate::weights::Weight;

/// A real number that survives JSON when it is infinite or NaN: finite
/// values are plain numbers, the rest the strings "inf", "-inf" and "nan".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Num(pub f64);

impl Num {
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        Num(v)
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_nan() {
            f.write_str("nan")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct NumVisitor;

impl<'de> Visitor<'de> for NumVisitor {
    type Value = Num;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Num, E> {
        Ok(Num(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Num, E> {
        Ok(Num(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Num, E> {
        Ok(Num(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Num, E> {
        match v {
            "inf" => Ok(Num(f64::INFINITY)),
            "-inf" => Ok(Num(f64::NEG_INFINITY)),
            "nan" => Ok(Num(f64::NAN)),
            other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        d.deserialize_any(NumVisitor)
    }
}

pub(crate) fn nums(values: &[f64]) -> Vec<Num> {
    values.iter().map(|&v| Num(v)).collect()
}

/// A ratio together with the two values it divides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub name: String,
    pub numerator: Num,
    pub denominator: Num,
    pub value: Num,
}

impl Ratio {
    pub fn new(name: &str, numerator: f64, denominator: f64) -> Self {
        Ratio {
            name: name.to_string(),
            numerator: Num(numerator),
            denominator: Num(denominator),
            value: Num(numerator / denominator),
        }
    }

    /// Both sides zero counts as agreement.
    pub fn within(&self, ceiling: f64) -> bool {
        if self.numerator.0 == 0.0 && self.denominator.0 == 0.0 {
            return true;
        }
        let v = self.value.0;
        v.is_finite() && v >= 1.0 / ceiling && v <= ceiling
    }

    /// max(v, 1/v), or 1 when both sides vanish.
    pub fn spread(&self) -> f64 {
        if self.numerator.0 == 0.0 && self.denominator.0 == 0.0 {
            return 1.0;
        }
        let v = self.value.0;
        if v > 0.0 {
            v.max(1.0 / v)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Unbounded,
    Compact,
    NotCompact,
    InClass,
    NotInClass,
    NotHs,
    Error,
}

impl Verdict {
    /// FAIL and ERROR; the remaining verdicts are consistent findings.
    pub fn is_failure(self) -> bool {
        matches!(self, Verdict::Fail | Verdict::Error)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unbounded => "UNBOUNDED",
            Verdict::Compact => "COMPACT",
            Verdict::NotCompact => "NOT_COMPACT",
            Verdict::InClass => "IN_CLASS",
            Verdict::NotInClass => "NOT_IN_CLASS",
            Verdict::NotHs => "NOT_HS",
            Verdict::Error => "ERROR",
        };
        f.write_str(s)
    }
}

/// One instance under one operation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub label: String,
    pub operation: String,
    pub findings: Option<Findings>,
    pub error: Option<String>,
    pub verdict: Verdict,
}

impl InstanceRecord {
    pub fn key(&self) -> String {
        format!("{}/{}", self.label, self.operation)
    }

    /// The verdict implied by the recorded numbers alone.
    pub fn derive_verdict(&self, params: &ReportParams) -> Verdict {
        match (&self.findings, &self.error) {
            (Some(f), None) => f.verdict(&params.analysis.thresholds),
            _ => Verdict::Error,
        }
    }

    pub(crate) fn from_result(label: &str, operation: &str, result: Result<Findings>, params: &ReportParams) -> Self {
        let mut rec = match result {
            Ok(f) => InstanceRecord {
                label: label.to_string(),
                operation: operation.to_string(),
                findings: Some(f),
                error: None,
                verdict: Verdict::Error,
            },
            Err(e) => InstanceRecord {
                label: label.to_string(),
                operation: operation.to_string(),
                findings: None,
                error: Some(e.to_string()),
                verdict: Verdict::Error,
            },
        };
        rec.verdict = rec.derive_verdict(params);
        rec
    }
}

/// Everything the numbers in a report depend on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub alpha: f64,
    pub weight: Weight,
    pub plan: QuadraturePlan,
    pub analysis: AnalysisParams,
    /// Certified evaluation radius of each ladder model.
    pub eval_radii: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub params: ReportParams,
    pub instances: Vec<InstanceRecord>,
    /// Headline value per "label/operation/criterion".
    pub criteria: BTreeMap<String, Num>,
    /// Cross-criterion ratio per "label/operation/ratio".
    pub ratios: BTreeMap<String, Num>,
    /// Verdict per "label/operation".
    pub verdicts: BTreeMap<String, Verdict>,
    /// Largest cross-criterion ratio spread over the boundedness and
    /// Schatten records that passed (the family-level constant C*).
    pub family_constant: Num,
    /// Notes on what the numbers do and do not establish.
    pub notes: Vec<String>,
    /// SHA-256 of the report with this field and `runtimes` blanked.
    pub determinism_hash: String,
    /// Wall-clock seconds per "label/operation"; excluded from the hash.
    pub runtimes: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub(crate) fn assemble(
        params: ReportParams,
        mut instances: Vec<InstanceRecord>,
        runtimes: BTreeMap<String, f64>,
    ) -> Self {
        instances.sort_by(|a, b| {
            a.label
                .cmp(&b.label)
                .then(op_rank(&a.operation).cmp(&op_rank(&b.operation)))
        });
        let verdicts = instances.iter().map(|r| (r.key(), r.verdict)).collect();
        let mut criteria = BTreeMap::new();
        let mut ratios = BTreeMap::new();
        for r in &instances {
            if let Some(f) = &r.findings {
                for (name, v) in f.criteria() {
                    criteria.insert(format!("{}/{name}", r.key()), Num(v));
                }
                for ratio in f.ratios() {
                    ratios.insert(format!("{}/{}", r.key(), ratio.name), ratio.value);
                }
            }
        }
        let family_constant = instances
            .iter()
            .filter(|r| matches!(r.verdict, Verdict::Pass | Verdict::InClass))
            .filter_map(|r| r.findings.as_ref())
            .flat_map(|f| f.ratios())
            .map(|r| r.spread())
            .fold(1.0, f64::max);
        let mut notes = vec![
            "essential norms are represented only by the ring limsup of the averaging function (a proxy, not a certified value)".to_string(),
            "every spectral value is a truncation value at the stated degree".to_string(),
        ];
        notes.sort();
        let mut report = VerificationReport {
            params,
            instances,
            criteria,
            ratios,
            verdicts,
            family_constant: Num(family_constant),
            notes,
            determinism_hash: String::new(),
            runtimes,
        };
        report.determinism_hash = report.compute_hash();
        report
    }

    /// Concatenates reports over the same family; the first one's params win.
    pub fn merge(reports: Vec<VerificationReport>) -> Result<Self> {
        let mut it = reports.into_iter();
        let first = it.next().ok_or_else(|| WfockError::invalid("nothing to merge"))?;
        let params = first.params.clone();
        let mut instances = first.instances;
        let mut runtimes = first.runtimes;
        for r in it {
            if r.params != params {
                return Err(WfockError::invalid("cannot merge reports with different parameters"));
            }
            instances.extend(r.instances);
            runtimes.extend(r.runtimes);
        }
        Ok(Self::assemble(params, instances, runtimes))
    }

    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.determinism_hash = String::new();
        copy.runtimes = BTreeMap::new();
        let bytes = serde_json::to_vec(&copy).expect("reports always serialize");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| WfockError::Contract(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| WfockError::invalid(format!("report does not parse: {e}")))
    }

    /// Records whose stored verdict differs from the one re-derived from
    /// their numbers, as (key, stored, derived).
    pub fn rederive_verdicts(&self) -> Vec<(String, Verdict, Verdict)> {
        let mut out = Vec::new();
        for r in &self.instances {
            let derived = r.derive_verdict(&self.params);
            if derived != r.verdict {
                out.push((r.key(), r.verdict, derived));
            }
            if self.verdicts.get(&r.key()) != Some(&r.verdict) {
                out.push((
                    r.key(),
                    *self.verdicts.get(&r.key()).unwrap_or(&Verdict::Error),
                    r.verdict,
                ));
            }
        }
        out
    }

    pub fn any_failure(&self) -> bool {
        self.instances.iter().any(|r| r.verdict.is_failure())
    }

    pub fn record(&self, label: &str, operation: &str) -> Option<&InstanceRecord> {
        self.instances
            .iter()
            .find(|r| r.label == label && r.operation == operation)
    }

    pub fn verdict(&self, label: &str, operation: &str) -> Option<Verdict> {
        self.record(label, operation).map(|r| r.verdict)
    }
}

fn op_rank(op: &str) -> (usize, &str) {
    let order = ["boundedness", "compactness", "schatten", "gauge", "volterra", "lemmas"];
    let rank = order.iter().position(|o| op.starts_with(o)).unwrap_or(order.len());
    (rank, op)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_round_trips_non_finite_values() {
        let v = vec![Num(1.5), Num(f64::INFINITY), Num(f64::NEG_INFINITY), Num(0.0)];
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"[1.5,"inf","-inf",0.0]"#);
        let back: Vec<Num> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        let nan: Num = serde_json::from_str("\"nan\"").unwrap();
        assert!(nan.0.is_nan());
        assert!(serde_json::from_str::<Num>("\"big\"").is_err());
        let int: Num = serde_json::from_str("3").unwrap();
        assert_eq!(int, Num(3.0));
    }

    #[test]
    fn ratio_bounds() {
        assert!(Ratio::new("a", 1.0, 50.0).within(100.0));
        assert!(!Ratio::new("a", 1.0, 200.0).within(100.0));
        assert!(Ratio::new("a", 0.0, 0.0).within(100.0));
        assert!(!Ratio::new("a", 1.0, 0.0).within(100.0));
        assert_eq!(Ratio::new("a", 2.0, 1.0).spread(), 2.0);
        assert_eq!(Ratio::new("a", 1.0, 4.0).spread(), 4.0);
    }

    #[test]
    fn verdict_names() {
        assert_eq!(serde_json::to_string(&Verdict::NotCompact).unwrap(), "\"NOT_COMPACT\"");
        assert_eq!(Verdict::NotHs.to_string(), "NOT_HS");
        assert!(Verdict::Fail.is_failure() && Verdict::Error.is_failure());
        assert!(!Verdict::Unbounded.is_failure());
    }
}
