use rand::Rng;

use crate::model::{IsingModel, QuboModel};
use crate::solvers::stream_rng;

/// QUBO with coefficients uniform on `[-1, 1]`, each pair present with
/// probability `density`, and an offset in the same range.
pub fn random_qubo(n: usize, density: f64, seed: u64) -> QuboModel {
    let mut rng = stream_rng(seed, 0);
    let linear = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < density {
                pairs.push(((i, j), rng.random_range(-1.0..=1.0)));
            }
        }
    }
    let offset = rng.random_range(-1.0..=1.0);
    QuboModel::from_parts(linear, pairs, offset).expect("indices are in range")
}

/// Fully connected spin glass with couplings uniform on `[-1, 1]` and no
/// fields.
pub fn random_spin_glass(n: usize, seed: u64) -> IsingModel {
    let mut rng = stream_rng(seed, 0);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(((i, j), rng.random_range(-1.0..=1.0)));
        }
    }
    IsingModel::from_parts(vec![0.0; n], pairs, 0.0).expect("indices are in range")
}

/// Open chain `−Σ s_i s_{i+1}`, ground energy `−(n − 1)`.
pub fn ferromagnetic_chain(n: usize) -> IsingModel {
    let pairs = (1..n).map(|i| ((i - 1, i), -1.0));
    IsingModel::from_parts(vec![0.0; n], pairs, 0.0).expect("indices are in range")
}
