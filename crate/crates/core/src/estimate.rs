use serde::{Deserialize, Serialize};

use crate::algebra::QPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateKind {
    Lower,
    Upper,
    Exact,
    Approximate,
}

/// One rung of a continued-fraction ladder: the value computed at `num/den`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderRung {
    pub num: i64,
    pub den: i64,
    pub value: f64,
}

/// Reproducibility record of a multi-restart ascent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub gradient: String,
    /// Exponent of the smooth surrogate used for `p = ∞`, if any.
    pub surrogate_p: Option<f64>,
    pub grid: usize,
    /// Final objective value of each restart, `None` when discarded.
    pub per_restart: Vec<Option<f64>>,
    pub discarded: usize,
    pub best_restart: usize,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub grid: Option<usize>,
    pub delta: Option<f64>,
    #[serde(default)]
    pub ladder: Vec<LadderRung>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilized: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<QPoly>,
    /// Matrix coefficients of a block witness, `[m, n, k×k entries as [re, im]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_witness: Option<Vec<(i64, i64, Vec<(f64, f64)>)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript: Option<Transcript>,
}

impl NormEstimate {
    pub fn new(value: f64, kind: EstimateKind) -> Self {
        NormEstimate {
            value,
            kind,
            grid: None,
            delta: None,
            ladder: Vec::new(),
            stabilized: None,
            witness: None,
            block_witness: None,
            transcript: None,
        }
    }

    pub fn with_grid(mut self, grid: usize, delta: f64) -> Self {
        self.grid = Some(grid);
        self.delta = Some(delta);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_keys() {
        let e = NormEstimate::new(1.5, EstimateKind::Approximate).with_grid(9, 1e-3);
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        assert_eq!(v["kind"], "approximate");
        assert_eq!(v["grid"], 9);
        assert!(v["ladder"].as_array().unwrap().is_empty());
        assert!(v.get("witness").is_none());
        let back: NormEstimate = serde_json::from_value(v).unwrap();
        assert_eq!(back, e);
    }
}
