use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub s: f64,
    /// Driver (transverse-field) weight.
    pub a: f64,
    /// Problem weight.
    pub b: f64,
}

/// Piecewise-linear `A(s)`, `B(s)` over `s ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SchedulePoint>", into = "Vec<SchedulePoint>")]
pub struct AnnealSchedule {
    points: Vec<SchedulePoint>,
}

impl AnnealSchedule {
    /// Validates the anneal contract: at least two points, `s` strictly
    /// increasing from 0 to 1, `A, B ≥ 0`, the driver dominating at the start
    /// and the problem at the end.
    pub fn new(points: Vec<SchedulePoint>) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidSchedule(m));
        if points.len() < 2 {
            return bad("need at least two points".into());
        }
        for p in &points {
            if !(p.a >= 0.0 && p.b >= 0.0 && p.a.is_finite() && p.b.is_finite()) {
                return bad(format!("A and B must be finite and non-negative at s = {}", p.s));
            }
        }
        if points.windows(2).any(|w| !(w[0].s < w[1].s)) {
            return bad("s must be strictly increasing".into());
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        if first.s != 0.0 || last.s != 1.0 {
            return bad("s must run from 0 to 1".into());
        }
        if first.a < first.b || last.a > last.b {
            return bad("A must dominate B at s = 0 and B must dominate A at s = 1".into());
        }
        Ok(Self { points })
    }

    /// `A(s) = 1 − s`, `B(s) = s` sampled at `n` points.
    pub fn linear(n: usize) -> Self {
        let n = n.max(2);
        let points = (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                SchedulePoint { s, a: 1.0 - s, b: s }
            })
            .collect();
        Self::new(points).expect("linear schedule is valid")
    }

    pub fn points(&self) -> &[SchedulePoint] {
        &self.points
    }

    /// `(A(s), B(s))` by linear interpolation; `s` is clamped to `[0, 1]`.
    pub fn at(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, 1.0);
        let k = self.points.partition_point(|p| p.s <= s);
        if k == self.points.len() {
            let p = self.points[k - 1];
            return (p.a, p.b);
        }
        let (p, q) = (self.points[k - 1], self.points[k]);
        let t = (s - p.s) / (q.s - p.s);
        (p.a + t * (q.a - p.a), p.b + t * (q.b - p.b))
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self::linear(64)
    }
}

impl TryFrom<Vec<SchedulePoint>> for AnnealSchedule {
    type Error = Error;

    fn try_from(points: Vec<SchedulePoint>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<AnnealSchedule> for Vec<SchedulePoint> {
    fn from(s: AnnealSchedule) -> Self {
        s.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolates() {
        let s = AnnealSchedule::default();
        let (a, b) = s.at(0.3);
        assert!((a - 0.7).abs() < 1e-12 && (b - 0.3).abs() < 1e-12);
        assert_eq!(s.at(1.0), (0.0, 1.0));
        assert_eq!(s.at(0.0), (1.0, 0.0));
    }

    #[test]
    fn negative_weight_is_invalid() {
        let pts = vec![
            SchedulePoint { s: 0.0, a: 1.0, b: -0.1 },
            SchedulePoint { s: 1.0, a: 0.0, b: 1.0 },
        ];
        assert!(matches!(AnnealSchedule::new(pts), Err(Error::InvalidSchedule(_))));
    }

    #[test]
    fn endpoint_dominance_is_enforced() {
        let pts = vec![
            SchedulePoint { s: 0.0, a: 0.0, b: 1.0 },
            SchedulePoint { s: 1.0, a: 0.0, b: 1.0 },
        ];
        assert!(AnnealSchedule::new(pts).is_err());
    }
}
