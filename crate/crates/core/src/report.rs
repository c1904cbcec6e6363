//! Structured audit findings.
//!
//! Every check in the crate produces [`AuditEntry`] values. Entries are
//! collected into an [`AuditReport`], which sorts them deterministically and
//! maps the worst status onto a process exit code.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
    Refused,
}

impl Status {
    /// Exit-code severity: pass 0, fail/flagged 1, refused 2.
    pub fn severity(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Flagged => 1,
            Status::Refused => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Flagged => "flagged",
            Status::Refused => "refused",
        }
    }
}

/// A point (list of vectors, as raw coordinates) with the values observed there.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Witness {
    pub point: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_real_map")]
    pub values: BTreeMap<String, f64>,
}

impl Witness {
    pub fn at(point: Vec<Vec<f64>>) -> Self {
        Witness {
            point,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub check_id: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Signed slack of the check; negative when violated.
    #[serde(serialize_with = "ser_real")]
    pub margin: f64,
    pub notes: String,
}

impl AuditEntry {
    pub fn new(check_id: impl Into<String>, status: Status, margin: f64) -> Self {
        AuditEntry {
            check_id: check_id.into(),
            status,
            witness: None,
            margin,
            notes: String::new(),
        }
    }

    pub fn pass(check_id: impl Into<String>, margin: f64) -> Self {
        Self::new(check_id, Status::Pass, margin)
    }

    /// Pass when `ok`, fail otherwise.
    pub fn verdict(check_id: impl Into<String>, ok: bool, margin: f64) -> Self {
        Self::new(check_id, if ok { Status::Pass } else { Status::Fail }, margin)
    }

    pub fn refused(check_id: impl Into<String>, notes: impl Into<String>) -> Self {
        let mut e = Self::new(check_id, Status::Refused, f64::NAN);
        e.notes = notes.into();
        e
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub flagged: usize,
    pub refused: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    entries: Vec<AuditEntry>,
}

impl AuditReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: AuditEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = AuditEntry>) {
        self.entries.extend(entries);
    }

    pub fn entries(&self) -> &[AuditEntry] {
        &self.entries
    }

    pub fn find(&self, check_id: &str) -> Option<&AuditEntry> {
        self.entries.iter().find(|e| e.check_id == check_id)
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        for e in &self.entries {
            match e.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::Flagged => s.flagged += 1,
                Status::Refused => s.refused += 1,
            }
        }
        s
    }

    /// Maximum severity across all entries (0 for an empty report).
    pub fn exit_code(&self) -> i32 {
        self.entries
            .iter()
            .map(|e| e.status.severity())
            .max()
            .unwrap_or(0)
    }

    /// Sorts entries by check id, then by witness point. Stable, so entries
    /// with equal keys keep their insertion order.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            a.check_id.cmp(&b.check_id).then_with(|| {
                let pa = a.witness.as_ref().map(|w| &w.point);
                let pb = b.witness.as_ref().map(|w| &w.point);
                cmp_points(pa, pb)
            })
        });
    }
}

fn cmp_points(a: Option<&Vec<Vec<f64>>>, b: Option<&Vec<Vec<f64>>>) -> std::cmp::Ordering {
    let flat = |p: Option<&Vec<Vec<f64>>>| -> Vec<f64> {
        p.map(|v| v.iter().flatten().copied().collect())
            .unwrap_or_default()
    };
    let (fa, fb) = (flat(a), flat(b));
    for (x, y) in fa.iter().zip(&fb) {
        let o = x.total_cmp(y);
        if o.is_ne() {
            return o;
        }
    }
    fa.len().cmp(&fb.len())
}

impl Serialize for AuditReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("AuditReport", 2)?;
        st.serialize_field("summary", &self.summary())?;
        st.serialize_field("entries", &self.entries)?;
        st.end()
    }
}

/// Serializes finite reals as numbers and non-finite ones as the strings
/// `"inf"`, `"-inf"` and `"nan"` (JSON has no literal for them).
pub fn ser_real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

struct Real(f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ser_real(&self.0, s)
    }
}

fn ser_real_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(k, &Real(*v))?;
    }
    map.end()
}

pub fn ser_real_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Real(*x))?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_is_max_severity() {
        let mut r = AuditReport::new();
        assert_eq!(r.exit_code(), 0);
        r.push(AuditEntry::pass("a", 1.0));
        assert_eq!(r.exit_code(), 0);
        r.push(AuditEntry::new("b", Status::Flagged, -1.0));
        assert_eq!(r.exit_code(), 1);
        r.push(AuditEntry::refused("c", "missing"));
        assert_eq!(r.exit_code(), 2);
        let s = r.summary();
        assert_eq!((s.pass, s.flagged, s.refused, s.fail), (1, 1, 1, 0));
    }

    #[test]
    fn sort_orders_by_id_then_point() {
        let mut r = AuditReport::new();
        r.push(AuditEntry::pass("b", 0.0).with_witness(Witness::at(vec![vec![2.0]])));
        r.push(AuditEntry::pass("b", 0.0).with_witness(Witness::at(vec![vec![-1.0]])));
        r.push(AuditEntry::pass("a", 0.0));
        r.sort();
        let ids: Vec<_> = r.entries().iter().map(|e| e.check_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "b"]);
        assert_eq!(r.entries()[1].witness.as_ref().unwrap().point, vec![vec![-1.0]]);
    }
}
