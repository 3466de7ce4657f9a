//! Pegasus hardware graphs, random qubit defects and a greedy clique
//! embedder.
//!
//! Qubits use Pegasus coordinates `(u, w, k, z)`: orientation `u ∈ {0, 1}`,
//! perpendicular offset `w ∈ 0..m`, track `k ∈ 0..12` and parallel offset
//! `z ∈ 0..m−1`, numbered `((u·m + w)·12 + k)·(m − 1) + z`. Couplers are the
//! external ones (`z ↔ z + 1`), the odd ones (`k = 2j ↔ 2j + 1`) and the
//! internal ones between perpendicular qubits, placed by the standard
//! vertical and horizontal track offsets.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::index::sample;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::stream_rng;

const VERTICAL_OFFSETS: [usize; 12] = [2, 2, 2, 2, 10, 10, 10, 10, 6, 6, 6, 6];
const HORIZONTAL_OFFSETS: [usize; 12] = [6, 6, 6, 6, 2, 2, 2, 2, 10, 10, 10, 10];

/// Couplers per qubit in a defect-free Pegasus graph, at most.
pub const MAX_DEGREE: usize = 15;

/// `24 · m · (m − 1)`.
pub fn pegasus_node_count(m: usize) -> usize {
    24 * m * (m - 1)
}

/// `24·m·(m−2)` external + `12·m·(m−1)` odd + `144·(m−1)²` internal.
pub fn pegasus_edge_count(m: usize) -> usize {
    24 * m * (m - 2) + 12 * m * (m - 1) + 144 * (m - 1) * (m - 1)
}

#[derive(Clone, Debug)]
pub struct HardwareGraph {
    m: usize,
    adjacency: Vec<Vec<usize>>,
    active: Vec<bool>,
    defects: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphStats {
    pub family: &'static str,
    pub m: usize,
    pub nodes: usize,
    pub edges: usize,
    pub defects: usize,
    pub active_nodes: usize,
    pub active_edges: usize,
    pub max_degree: usize,
}

/// Builds the Pegasus graph `P_m` and disables `round(rate · nodes)` qubits
/// drawn without replacement from the seeded stream.
pub fn build_pegasus(m: usize, defect_rate: f64, seed: u64) -> Result<HardwareGraph> {
    if m < 2 {
        return Err(Error::InvalidParams(format!("Pegasus needs m ≥ 2, got {m}")));
    }
    if !(0.0..1.0).contains(&defect_rate) {
        return Err(Error::InvalidParams(format!(
            "defect rate must be in [0, 1), got {defect_rate}"
        )));
    }
    let n = pegasus_node_count(m);
    let index = |u: usize, w: usize, k: usize, z: usize| ((u * m + w) * 12 + k) * (m - 1) + z;
    let mut adjacency = vec![Vec::new(); n];
    let mut link = |a: usize, b: usize| {
        adjacency[a].push(b);
        adjacency[b].push(a);
    };
    for u in 0..2 {
        for w in 0..m {
            for k in 0..12 {
                for z in 0..m - 1 {
                    if z + 1 < m - 1 {
                        link(index(u, w, k, z), index(u, w, k, z + 1));
                    }
                    if k % 2 == 0 {
                        link(index(u, w, k, z), index(u, w, k + 1, z));
                    }
                }
            }
        }
    }
    for w in 0..m {
        for kk in 0..12 {
            let oh = HORIZONTAL_OFFSETS[kk];
            let ks = if w == 0 { oh..12 } else if w == m - 1 { 0..oh } else { 0..12 };
            for k in ks {
                for z in 0..m - 1 {
                    let hw = z + usize::from(kk < VERTICAL_OFFSETS[k]);
                    let hz = w - usize::from(k < oh);
                    link(index(0, w, k, z), index(1, hw, kk, hz));
                }
            }
        }
    }
    for nbrs in &mut adjacency {
        nbrs.sort_unstable();
    }
    let count = (defect_rate * n as f64).round() as usize;
    let mut rng = stream_rng(seed, 0);
    let defects: BTreeSet<usize> = sample(&mut rng, n, count).into_iter().collect();
    let mut active = vec![true; n];
    for &d in &defects {
        active[d] = false;
    }
    Ok(HardwareGraph {
        m,
        adjacency,
        active,
        defects,
    })
}

impl HardwareGraph {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Qubits including defective ones.
    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn defects(&self) -> &BTreeSet<usize> {
        &self.defects
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active.get(q).copied().unwrap_or(false)
    }

    pub fn num_active(&self) -> usize {
        self.num_nodes() - self.defects.len()
    }

    /// Working neighbours of a qubit.
    pub fn neighbors(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[q].iter().copied().filter(|&j| self.active[j])
    }

    pub fn degree(&self, q: usize) -> usize {
        if self.active[q] {
            self.neighbors(q).count()
        } else {
            0
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.is_active(a) && self.is_active(b) && self.adjacency[a].binary_search(&b).is_ok()
    }

    /// `(u, w, k, z)` of a qubit.
    pub fn coordinates(&self, q: usize) -> (usize, usize, usize, usize) {
        let m = self.m;
        let z = q % (m - 1);
        let k = q / (m - 1) % 12;
        let w = q / (12 * (m - 1)) % m;
        let u = q / (12 * m * (m - 1));
        (u, w, k, z)
    }

    /// Couplers of the full lattice, every pair once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
    }

    pub fn stats(&self) -> GraphStats {
        let edges = self.edges().count();
        let active_edges = self.edges().filter(|&(a, b)| self.active[a] && self.active[b]).count();
        GraphStats {
            family: "pegasus",
            m: self.m,
            nodes: self.num_nodes(),
            edges,
            defects: self.defects.len(),
            active_nodes: self.num_active(),
            active_edges,
            max_degree: (0..self.num_nodes()).map(|q| self.degree(q)).max().unwrap_or(0),
        }
    }
}

/// Chains of physical qubits, one per logical variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Embedding {
    pub chains: Vec<Vec<usize>>,
    pub chain_strength: f64,
}

/// `1.5 · max |coefficient|` of the model being embedded.
pub fn default_chain_strength(max_abs_coefficient: f64) -> f64 {
    1.5 * max_abs_coefficient
}

/// Shortest path from `chain` through free qubits to a qubit adjacent to
/// `target`; the returned qubits exclude the chain itself.
fn path_to(graph: &HardwareGraph, chain: &[usize], target: &[bool], used: &[bool]) -> Option<Vec<usize>> {
    let n = graph.num_nodes();
    let mut prev = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &q in chain {
        seen[q] = true;
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        if graph.neighbors(q).any(|j| target[j]) {
            let mut path = Vec::new();
            let mut c = q;
            while prev[c] != usize::MAX {
                path.push(c);
                c = prev[c];
            }
            return Some(path);
        }
        for j in graph.neighbors(q) {
            if !seen[j] && !used[j] {
                seen[j] = true;
                prev[j] = q;
                queue.push_back(j);
            }
        }
    }
    None
}

/// Hop distance from `chain` to every qubit through free qubits
/// (`usize::MAX` where unreachable).
fn free_distances(graph: &HardwareGraph, chain: &[usize], owner: &[usize]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.num_nodes()];
    let mut queue = VecDeque::new();
    for &q in chain {
        dist[q] = 0;
        queue.push_back(q);
    }
    while let Some(q) = queue.pop_front() {
        for j in graph.neighbors(q) {
            if dist[j] == usize::MAX && owner[j] == usize::MAX {
                dist[j] = dist[q] + 1;
                queue.push_back(j);
            }
        }
    }
    dist
}

/// Embeds `K_k`, trying greedy chain growth first and falling back to
/// pairing whole lines of qubits. `None` when both fail; every returned
/// embedding has passed [`verify_embedding`].
pub fn embed_clique(k: usize, graph: &HardwareGraph) -> Option<Embedding> {
    let chains = grow_chains(k, graph).or_else(|| line_chains(k, graph))?;
    let emb = Embedding {
        chains,
        chain_strength: default_chain_strength(1.0),
    };
    let edges: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    verify_embedding(&emb, graph, &edges).ok().map(|_| emb)
}

/// Every interior vertical line `(0, w, k, ·)` couples to every interior
/// horizontal line `(1, w', k', ·)`, so intact line pairs form a clique of
/// up to `12·(m − 2)` chains of `2·(m − 1)` qubits.
fn line_chains(k: usize, graph: &HardwareGraph) -> Option<Vec<Vec<usize>>> {
    let m = graph.m();
    let intact = |u: usize| -> Vec<Vec<usize>> {
        (1..m.saturating_sub(1))
            .flat_map(|w| (0..12).map(move |t| (w, t)))
            .map(|(w, t)| (0..m - 1).map(|z| ((u * m + w) * 12 + t) * (m - 1) + z).collect::<Vec<_>>())
            .filter(|line| line.iter().all(|&q| graph.is_active(q)))
            .collect()
    };
    let (vertical, horizontal) = (intact(0), intact(1));
    if vertical.len().min(horizontal.len()) < k {
        return None;
    }
    Some(
        vertical
            .into_iter()
            .zip(horizontal)
            .take(k)
            .map(|(mut v, h)| {
                v.extend(h);
                v.sort_unstable();
                v
            })
            .collect(),
    )
}

/// Each new chain starts at the free qubit closest in total to the existing
/// chains and grows along shortest free paths until it touches every one of
/// them, nearest first.
fn grow_chains(k: usize, graph: &HardwareGraph) -> Option<Vec<Vec<usize>>> {
    let n = graph.num_nodes();
    let mut owner = vec![usize::MAX; n];
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(k);
    for v in 0..k {
        let dists: Vec<Vec<usize>> = chains.iter().map(|c| free_distances(graph, c, &owner)).collect();
        let cost = |q: usize| {
            dists.iter().try_fold(0usize, |acc, d| {
                (d[q] != usize::MAX).then(|| acc + d[q])
            })
        };
        let root = (0..n)
            .filter(|&q| graph.is_active(q) && owner[q] == usize::MAX)
            .filter_map(|q| cost(q).map(|c| (c, std::cmp::Reverse(graph.degree(q)), q)))
            .min()?
            .2;
        let mut chain = vec![root];
        owner[root] = v;
        let mut order: Vec<usize> = (0..v).collect();
        order.sort_by_key(|&c| (dists[c][root], c));
        for c in order {
            if chain.iter().any(|&q| graph.neighbors(q).any(|j| owner[j] == c)) {
                continue;
            }
            let target: Vec<bool> = owner.iter().map(|&o| o == c).collect();
            let used: Vec<bool> = owner.iter().map(|&o| o != usize::MAX).collect();
            for q in path_to(graph, &chain, &target, &used)? {
                owner[q] = v;
                chain.push(q);
            }
        }
        chain.sort_unstable();
        chains.push(chain);
    }
    Some(chains)
}

/// Checks that chains are non-empty, use working qubits, are pairwise
/// disjoint and connected, and that every logical edge has a coupler
/// between its two chains.
pub fn verify_embedding(emb: &Embedding, graph: &HardwareGraph, edges: &[(usize, usize)]) -> Result<()> {
    let bad = |m: String| Err(Error::Validation(m));
    let mut owner = vec![usize::MAX; graph.num_nodes()];
    for (v, chain) in emb.chains.iter().enumerate() {
        if chain.is_empty() {
            return bad(format!("chain {v} is empty"));
        }
        for &q in chain {
            if !graph.is_active(q) {
                return bad(format!("chain {v} uses missing or defective qubit {q}"));
            }
            if owner[q] != usize::MAX {
                return bad(format!("qubit {q} is in chains {} and {v}", owner[q]));
            }
            owner[q] = v;
        }
        let mut seen = vec![chain[0]];
        let mut stack = vec![chain[0]];
        while let Some(q) = stack.pop() {
            for j in graph.neighbors(q) {
                if owner[j] == v && !seen.contains(&j) {
                    seen.push(j);
                    stack.push(j);
                }
            }
        }
        if seen.len() != chain.len() {
            return bad(format!("chain {v} is not connected"));
        }
    }
    for &(a, b) in edges {
        let (Some(ca), Some(_)) = (emb.chains.get(a), emb.chains.get(b)) else {
            return bad(format!("edge ({a}, {b}) names a variable without a chain"));
        };
        if !ca.iter().any(|&q| graph.neighbors(q).any(|j| owner[j] == b)) {
            return bad(format!("no coupler between chains {a} and {b}"));
        }
    }
    Ok(())
}
