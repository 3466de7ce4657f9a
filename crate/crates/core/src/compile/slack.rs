use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Constraint, QuadraticExpr, Sense};

/// Largest slack range accepted; keeps every partial sum exact in `f64`.
const MAX_RANGE: f64 = (1u64 << 52) as f64;

/// Binary slack variables turning one inequality into an equality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlackEncoding {
    pub label: String,
    pub slack_ids: Vec<String>,
    pub weights: Vec<u64>,
    /// The slack sum covers exactly `0..=range`.
    pub range: u64,
}

impl SlackEncoding {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Log encoding of `0..=range`: `1, 2, 4, …` and a final residual weight so
/// the weights sum to `range` exactly. `⌈log2(range + 1)⌉` weights.
pub fn log_weights(range: u64) -> Vec<u64> {
    if range == 0 {
        return Vec::new();
    }
    let count = 64 - range.leading_zeros() as usize;
    let mut w: Vec<u64> = (0..count - 1).map(|j| 1u64 << j).collect();
    w.push(range - ((1u64 << (count - 1)) - 1));
    w
}

/// Rewrites a linear inequality over binaries with integral coefficients as
/// an equality with binary slacks.
///
/// `lhs ≤ rhs` becomes `lhs + Σ w_j y_j = rhs` and `lhs ≥ rhs` becomes
/// `lhs − Σ w_j y_j = rhs`; slack ids are `"{label}::slack{j}"`. An equality
/// passes through unchanged with no slacks.
///
/// ```
/// use cqmkit::compile::encode_inequality;
/// use cqmkit::model::{Constraint, QuadraticExpr, Sense};
///
/// let lhs = QuadraticExpr::linear_sum((1..=5).map(|i| (format!("x{i}"), 1.0)));
/// let (eq, enc) = encode_inequality(&Constraint::new("cap", lhs, Sense::Le, 3.0)).unwrap();
/// assert_eq!(eq.sense, Sense::Eq);
/// assert_eq!(enc.weights, vec![1, 2]);
/// ```
pub fn encode_inequality(c: &Constraint) -> Result<(Constraint, SlackEncoding)> {
    let unsupported = |reason: &str| Error::UnsupportedEncoding {
        label: c.label.clone(),
        reason: reason.to_string(),
    };
    if c.is_quadratic() {
        return Err(unsupported("quadratic constraints are not slack-encoded"));
    }
    if !c.has_integral_coefficients() {
        return Err(unsupported("coefficients and right-hand side must be integral"));
    }
    let (lo, hi) = c.lhs.linear().values().fold((0.0, 0.0), |(lo, hi), &a| {
        if a < 0.0 {
            (lo + a, hi)
        } else {
            (lo, hi + a)
        }
    });
    let (lo, hi) = (lo + c.lhs.offset(), hi + c.lhs.offset());
    let (range, sign) = match c.sense {
        Sense::Eq => {
            let enc = SlackEncoding {
                label: c.label.clone(),
                slack_ids: Vec::new(),
                weights: Vec::new(),
                range: 0,
            };
            return Ok((c.clone(), enc));
        }
        Sense::Le => (c.rhs - lo, 1.0),
        Sense::Ge => (hi - c.rhs, -1.0),
    };
    if range < 0.0 {
        return Err(Error::InfeasibleConstraint {
            label: c.label.clone(),
            range,
        });
    }
    if range > MAX_RANGE {
        return Err(unsupported("slack range too large for exact encoding"));
    }
    let weights = log_weights(range as u64);
    let slack_ids: Vec<String> = (0..weights.len())
        .map(|j| format!("{}::slack{j}", c.label))
        .collect();
    let mut lhs: QuadraticExpr = c.lhs.clone();
    for (id, &w) in slack_ids.iter().zip(&weights) {
        lhs.add_linear(id, sign * w as f64);
    }
    Ok((
        Constraint::new(c.label.clone(), lhs, Sense::Eq, c.rhs),
        SlackEncoding {
            label: c.label.clone(),
            slack_ids,
            weights,
            range: range as u64,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reachable(w: &[u64]) -> Vec<u64> {
        let mut sums: Vec<u64> = (0u32..1 << w.len())
            .map(|m| (0..w.len()).filter(|&j| m >> j & 1 == 1).map(|j| w[j]).sum())
            .collect();
        sums.sort_unstable();
        sums.dedup();
        sums
    }

    fn sum_le(n: usize, rhs: f64, sense: Sense) -> Constraint {
        let lhs = QuadraticExpr::linear_sum((1..=n).map(|i| (format!("x{i}"), 1.0)));
        Constraint::new("c", lhs, sense, rhs)
    }

    #[test]
    fn weights_for_small_ranges() {
        assert_eq!(log_weights(0), Vec::<u64>::new());
        assert_eq!(log_weights(1), vec![1]);
        assert_eq!(log_weights(2), vec![1, 1]);
        assert_eq!(log_weights(3), vec![1, 2]);
        assert_eq!(log_weights(8), vec![1, 2, 4, 1]);
        for u in 1..=200u64 {
            let w = log_weights(u);
            assert_eq!(w.iter().sum::<u64>(), u);
            assert!(w.len() as u64 <= u);
            assert_eq!(reachable(&w), (0..=u).collect::<Vec<_>>());
        }
    }

    #[test]
    fn at_most_three_of_five() {
        let (eq, enc) = encode_inequality(&sum_le(5, 3.0, Sense::Le)).unwrap();
        assert_eq!(enc.range, 3);
        assert_eq!(enc.weights, vec![1, 2]);
        assert_eq!(eq.lhs.linear()["c::slack1"], 2.0);
        assert_eq!(reachable(&enc.weights), vec![0, 1, 2, 3]);
    }

    #[test]
    fn single_variable_at_most_one() {
        let (_, enc) = encode_inequality(&sum_le(1, 1.0, Sense::Le)).unwrap();
        assert_eq!(enc.range, 1);
        assert_eq!(enc.weights, vec![1]);
    }

    #[test]
    fn at_least_two_of_four() {
        let (eq, enc) = encode_inequality(&sum_le(4, 2.0, Sense::Ge)).unwrap();
        assert_eq!(enc.range, 2);
        assert_eq!(reachable(&enc.weights), vec![0, 1, 2]);
        assert_eq!(eq.lhs.linear()["c::slack0"], -1.0);
    }

    #[test]
    fn rejects_fractional_and_impossible() {
        let mut c = sum_le(3, 1.5, Sense::Le);
        assert!(matches!(
            encode_inequality(&c),
            Err(Error::UnsupportedEncoding { .. })
        ));
        c.rhs = -1.0;
        assert!(matches!(
            encode_inequality(&c),
            Err(Error::InfeasibleConstraint { .. })
        ));
    }
}
