use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Assignment;

/// One candidate solution with its energy and feasibility verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Assignment,
    pub energy: f64,
    pub feasible: bool,
    #[serde(default)]
    pub violations: BTreeMap<String, f64>,
}

impl Sample {
    /// A sample of an unconstrained model: always feasible.
    pub fn unconstrained(assignment: Assignment, energy: f64) -> Self {
        Self {
            assignment,
            energy,
            feasible: true,
            violations: BTreeMap::new(),
        }
    }
}

fn sample_order(a: &Sample, b: &Sample) -> Ordering {
    a.energy.total_cmp(&b.energy).then_with(|| {
        for (x, y) in a.assignment.values().iter().zip(b.assignment.values()) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        a.assignment.len().cmp(&b.assignment.len())
    })
}

/// Samples kept in ascending energy order (ties: lexicographically smaller
/// assignment first), plus provenance of the solve that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
    pub solver: String,
    pub wall_time: f64,
    pub seed: u64,
}

impl SampleSet {
    pub fn new(solver: impl Into<String>, mut samples: Vec<Sample>, wall_time: f64, seed: u64) -> Self {
        samples.sort_by(sample_order);
        Self {
            samples,
            solver: solver.into(),
            wall_time: wall_time.max(0.0),
            seed,
        }
    }

    pub fn empty(solver: impl Into<String>, seed: u64) -> Self {
        Self::new(solver, Vec::new(), 0.0, seed)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn push(&mut self, sample: Sample) {
        let at = self
            .samples
            .partition_point(|s| sample_order(s, &sample) != Ordering::Greater);
        self.samples.insert(at, sample);
    }

    pub fn feasible_count(&self) -> usize {
        self.samples.iter().filter(|s| s.feasible).count()
    }

    /// Lowest-energy feasible sample. `None` is an ordinary outcome.
    pub fn best_feasible(&self) -> Option<&Sample> {
        self.samples.iter().find(|s| s.feasible)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sampleset serializes")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        let mut ss: SampleSet = serde_json::from_str(text)?;
        ss.samples.sort_by(sample_order);
        Ok(ss)
    }
}
