use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

/// Seed used whenever none is given. Fixed so runs are reproducible.
pub const DEFAULT_SEED: u64 = 20_240_607;

/// Knobs shared by the stochastic solvers. Fields that do not apply to a
/// solver are ignored by it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Full passes over the variables per read (tabu: `sweeps · n` moves).
    pub sweeps: usize,
    pub reads: usize,
    pub seed: u64,
    /// Starting temperature; `None` picks one giving ≈ 0.8 initial
    /// acceptance of uphill moves.
    pub t_hot: Option<f64>,
    /// Final temperature; `None` means `1e-3 · t_hot`.
    pub t_cold: Option<f64>,
    /// Trotter slices for simulated quantum annealing.
    pub trotter_slices: usize,
    /// Simulation temperature for simulated quantum annealing, relative to
    /// the largest coefficient of the model.
    pub sqa_temperature: f64,
    /// Tabu tenure; `None` means `max(1, min(20, n / 4))`.
    pub tenure: Option<usize>,
    /// Wall-clock budget in seconds for the whole solve.
    pub time_limit: Option<f64>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            reads: 100,
            seed: DEFAULT_SEED,
            t_hot: None,
            t_cold: None,
            trotter_slices: 20,
            sqa_temperature: 0.1,
            tenure: None,
            time_limit: None,
        }
    }
}

impl SolverParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reads(mut self, reads: usize) -> Self {
        self.reads = reads;
        self
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.sweeps == 0 || self.reads == 0 {
            return bad("sweeps and reads must be at least 1".into());
        }
        if let Some(t) = self.t_hot {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t_hot must be positive, got {t}"));
            }
        }
        if let Some(t) = self.t_cold {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t_cold must be positive, got {t}"));
            }
        }
        if let (Some(h), Some(c)) = (self.t_hot, self.t_cold) {
            if h <= c {
                return bad(format!("t_hot ({h}) must exceed t_cold ({c})"));
            }
        }
        if self.trotter_slices < 2 {
            return bad("trotter_slices must be at least 2".into());
        }
        if !(self.sqa_temperature > 0.0 && self.sqa_temperature.is_finite()) {
            return bad(format!(
                "sqa_temperature must be positive, got {}",
                self.sqa_temperature
            ));
        }
        if self.tenure == Some(0) {
            return bad("tenure must be at least 1".into());
        }
        if let Some(t) = self.time_limit {
            if !(t > 0.0) {
                return bad(format!("time_limit must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: SolverParams = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Every default, including the derived ones, as pretty JSON.
pub fn show_params() -> String {
    let d = SolverParams::default();
    let v = json!({
        "sweeps": d.sweeps,
        "reads": d.reads,
        "seed": d.seed,
        "t_hot": "auto: -mean(uphill delta over 100 random flips) / ln(0.8)",
        "t_cold": "1e-3 * t_hot",
        "temperature_schedule": "geometric from t_hot to t_cold over the sweeps",
        "trotter_slices": d.trotter_slices,
        "sqa_temperature": d.sqa_temperature,
        "anneal_schedule": "A(s) = 1 - s, B(s) = s at 64 points",
        "tenure": "max(1, min(20, n / 4))",
        "time_limit": null,
    });
    serde_json::to_string_pretty(&v).expect("json value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let p = SolverParams::default();
        p.validate().unwrap();
        assert_eq!(SolverParams::from_json(&serde_json::to_string(&p).unwrap()).unwrap(), p);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let p = SolverParams::from_json(r#"{"reads": 7, "seed": 3}"#).unwrap();
        assert_eq!(p.reads, 7);
        assert_eq!(p.sweeps, 1000);
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(SolverParams::from_json(r#"{"reads": 0}"#).is_err());
        assert!(SolverParams::from_json(r#"{"t_hot": 1.0, "t_cold": 2.0}"#).is_err());
        assert!(SolverParams::from_json(r#"{"trotter_slices": 1}"#).is_err());
        assert!(SolverParams::from_json(r#"{"unknown": 1}"#).is_err());
    }
}
