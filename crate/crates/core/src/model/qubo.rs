use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn canonical_pair(n: usize, i: usize, j: usize) -> (usize, usize) {
    assert!(i < n && j < n, "pair ({i}, {j}) out of range for n = {n}");
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn add_pair(map: &mut BTreeMap<(usize, usize), f64>, key: (usize, usize), coeff: f64) {
    if coeff == 0.0 {
        return;
    }
    let e = map.entry(key).or_insert(0.0);
    *e += coeff;
    if *e == 0.0 {
        map.remove(&key);
    }
}

fn adjacency_of(n: usize, pairs: &BTreeMap<(usize, usize), f64>) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for (&(i, j), &c) in pairs {
        adj[i].push((j, c));
        adj[j].push((i, c));
    }
    adj
}

/// `offset + Σ h_i x_i + Σ_{i<j} Q_ij x_i x_j` over `x ∈ {0,1}^n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct QuboModel {
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    labels: Option<Vec<String>>,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        Self {
            linear: vec![0.0; n],
            ..Self::default()
        }
    }

    /// Builds from raw parts; pair indices are canonicalized to `i < j` and a
    /// diagonal pair `(i, i)` folds into `h_i` because `x² = x`.
    pub fn from_parts(
        linear: Vec<f64>,
        quadratic: impl IntoIterator<Item = ((usize, usize), f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = linear.len();
        let mut q = Self {
            linear,
            quadratic: BTreeMap::new(),
            offset,
            labels: None,
        };
        for ((i, j), c) in quadratic {
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "quadratic index ({i}, {j}) out of range for n = {n}"
                )));
            }
            q.add_quadratic(i, j, c);
        }
        Ok(q)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Validation(format!(
                "{} labels for {} variables",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn add_linear(&mut self, i: usize, c: f64) {
        self.linear[i] += c;
    }

    /// Accumulates `c · x_i x_j`; panics on out-of-range indices.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) {
        let n = self.n();
        if i == j {
            assert!(i < n, "index {i} out of range for n = {n}");
            self.linear[i] += c;
        } else {
            add_pair(&mut self.quadratic, canonical_pair(n, i, j), c);
        }
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("x{i}"),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n()).map(|i| self.label(i)).collect()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn energy(&self, x: &[u8]) -> f64 {
        debug_assert_eq!(x.len(), self.n());
        let mut e = self.offset;
        for (h, &xi) in self.linear.iter().zip(x) {
            if xi != 0 {
                e += h;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if x[i] != 0 && x[j] != 0 {
                e += c;
            }
        }
        e
    }

    /// Symmetric neighbour lists `(j, Q_ij)`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        adjacency_of(self.n(), &self.quadratic)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.linear
            .iter()
            .chain(self.quadratic.values())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&QuboDoc::from(self)).expect("qubo serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: QuboDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

/// `offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j` over `s ∈ {-1,+1}^n`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IsingModel {
    h: Vec<f64>,
    j: BTreeMap<(usize, usize), f64>,
    offset: f64,
    labels: Option<Vec<String>>,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self {
            h: vec![0.0; n],
            ..Self::default()
        }
    }

    /// Builds from raw parts. A diagonal coupling `(i, i)` is a constant
    /// (`s² = 1`) and goes to the offset.
    pub fn from_parts(
        h: Vec<f64>,
        j: impl IntoIterator<Item = ((usize, usize), f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = h.len();
        let mut m = Self {
            h,
            j: BTreeMap::new(),
            offset,
            labels: None,
        };
        for ((a, b), c) in j {
            if a >= n || b >= n {
                return Err(Error::Validation(format!(
                    "coupling index ({a}, {b}) out of range for n = {n}"
                )));
            }
            m.add_coupling(a, b, c);
        }
        Ok(m)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Validation(format!(
                "{} labels for {} spins",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub(crate) fn labels_opt(&self) -> Option<&Vec<String>> {
        self.labels.as_ref()
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.j
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn add_field(&mut self, i: usize, c: f64) {
        self.h[i] += c;
    }

    pub fn add_coupling(&mut self, a: usize, b: usize, c: f64) {
        let n = self.n();
        if a == b {
            assert!(a < n, "index {a} out of range for n = {n}");
            self.offset += c;
        } else {
            add_pair(&mut self.j, canonical_pair(n, a, b), c);
        }
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format!("s{i}"),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n()).map(|i| self.label(i)).collect()
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        debug_assert_eq!(s.len(), self.n());
        let mut e = self.offset;
        for (h, &si) in self.h.iter().zip(s) {
            e += h * si as f64;
        }
        for (&(a, b), &c) in &self.j {
            e += c * (s[a] * s[b]) as f64;
        }
        e
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        adjacency_of(self.n(), &self.j)
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.h
            .iter()
            .chain(self.j.values())
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }
}

#[derive(Serialize, Deserialize)]
struct QuboDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    linear: Vec<f64>,
    quadratic: Vec<(usize, usize, f64)>,
    #[serde(default)]
    offset: f64,
}

impl From<&QuboModel> for QuboDoc {
    fn from(q: &QuboModel) -> Self {
        QuboDoc {
            n: q.n(),
            labels: q.labels.clone(),
            linear: q.linear.clone(),
            quadratic: q.quadratic.iter().map(|(&(i, j), &c)| (i, j, c)).collect(),
            offset: q.offset,
        }
    }
}

impl TryFrom<QuboDoc> for QuboModel {
    type Error = Error;

    fn try_from(d: QuboDoc) -> Result<Self> {
        if d.linear.len() != d.n {
            return Err(Error::Validation(format!(
                "linear has {} entries, n = {}",
                d.linear.len(),
                d.n
            )));
        }
        let q = QuboModel::from_parts(
            d.linear,
            d.quadratic.into_iter().map(|(i, j, c)| ((i, j), c)),
            d.offset,
        )?;
        match d.labels {
            Some(l) => q.with_labels(l),
            None => Ok(q),
        }
    }
}
