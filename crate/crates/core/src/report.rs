//! Machine-checkable experiment reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub nu: Option<u64>,
    pub input: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: String,
    pub seed: Option<u64>,
    /// Training length ν1: training occupies cycles `0..ν1`.
    pub training_len: u64,
    /// `(ν0, ν2)`: first training cycle and last examination cycle.
    pub span: Option<(u64, u64)>,
    pub probes: usize,
    pub mismatches: usize,
    pub params: BTreeMap<String, Value>,
    pub records: Vec<ProbeRecord>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(protocol: &str, seed: Option<u64>) -> Self {
        Self {
            protocol: protocol.to_string(),
            seed,
            training_len: 0,
            span: None,
            probes: 0,
            mismatches: 0,
            params: BTreeMap::new(),
            records: Vec::new(),
            pass: true,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.to_string(), value.into());
    }

    pub fn probe(&mut self, nu: Option<u64>, input: String, expected: String, actual: String) -> bool {
        let ok = expected == actual;
        self.probes += 1;
        if !ok {
            self.mismatches += 1;
        }
        self.pass = self.mismatches == 0;
        self.records.push(ProbeRecord {
            nu,
            input,
            expected,
            actual,
            ok,
        });
        ok
    }

    /// Appends another report's probes, e.g. one seed of a batch.
    pub fn absorb(&mut self, other: ExperimentReport) {
        self.probes += other.probes;
        self.mismatches += other.mismatches;
        self.records.extend(other.records);
        self.pass = self.mismatches == 0;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        format!(
            "{}: {} ({} probes, {} mismatches)",
            self.protocol,
            if self.pass { "PASS" } else { "FAIL" },
            self.probes,
            self.mismatches
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_no_mismatch() {
        let mut r = ExperimentReport::new("t", None);
        assert!(r.pass);
        r.probe(Some(0), "x".into(), "a".into(), "a".into());
        assert!(r.pass);
        r.probe(Some(1), "x".into(), "a".into(), "b".into());
        assert!(!r.pass);
        assert_eq!((r.probes, r.mismatches), (2, 1));
        let back: ExperimentReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
