use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::de::{Deserialize, Deserializer};
use serde::ser::{Serialize, SerializeMap, Serializer};

/// Ordered variable labels with a reverse lookup table.
#[derive(Debug, PartialEq)]
pub struct VarIndex {
    labels: Vec<String>,
    pos: HashMap<String, usize>,
}

impl VarIndex {
    /// Builds an index; later duplicates shadow earlier ones in lookups.
    pub fn new(labels: Vec<String>) -> Self {
        let pos = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Self { labels, pos }
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.pos.get(id).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Anything that can resolve a variable id to a value.
pub trait Lookup {
    fn lookup(&self, id: &str) -> Option<f64>;
}

impl Lookup for BTreeMap<String, f64> {
    fn lookup(&self, id: &str) -> Option<f64> {
        self.get(id).copied()
    }
}

impl Lookup for HashMap<String, f64> {
    fn lookup(&self, id: &str) -> Option<f64> {
        self.get(id).copied()
    }
}

/// A value per variable, stored densely against a shared label index.
///
/// Samples produced by one solve share a single [`VarIndex`], so a sampleset
/// of a hundred 10k-variable assignments costs a hundred value vectors, not a
/// hundred string maps.
#[derive(Clone)]
pub struct Assignment {
    index: Arc<VarIndex>,
    values: Vec<f64>,
}

impl Assignment {
    pub fn new(index: Arc<VarIndex>, values: Vec<f64>) -> Self {
        assert_eq!(index.len(), values.len(), "one value per indexed label");
        Self { index, values }
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (k, v) in pairs {
            let k = k.into();
            match seen.get(&k) {
                Some(&i) => values[i] = v,
                None => {
                    seen.insert(k.clone(), labels.len());
                    labels.push(k);
                    values.push(v);
                }
            }
        }
        Self {
            index: Arc::new(VarIndex { labels, pos: seen }),
            values,
        }
    }

    pub fn empty() -> Self {
        Self::from_pairs(std::iter::empty::<(String, f64)>())
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.index.get(id).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        self.index.labels()
    }

    pub fn index(&self) -> &Arc<VarIndex> {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.index
            .labels()
            .iter()
            .map(String::as_str)
            .zip(self.values.iter().copied())
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl Lookup for Assignment {
    fn lookup(&self, id: &str) -> Option<f64> {
        self.get(id)
    }
}

impl PartialEq for Assignment {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
            && (Arc::ptr_eq(&self.index, &other.index) || self.labels() == other.labels())
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

impl Serialize for Assignment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.len()))?;
        for (k, v) in self.iter() {
            map.serialize_entry(k, &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, f64>::deserialize(deserializer)?;
        Ok(Assignment::from_pairs(map))
    }
}
