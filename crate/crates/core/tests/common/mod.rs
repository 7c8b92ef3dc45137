//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code, unused_imports)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segmarket_core::panel::{FeProblem, Groups};

mod markets;
pub use markets::*;
mod checks;
pub use checks::*;

/// Least squares with explicit dummy columns for every fixed-effect group,
/// solved by SVD pseudo-inverse. Returns the coefficients of the named
/// regressors.
pub fn dummy_variable_ls(y: &[f64], regressors: &[(String, Vec<f64>)], fixed_effects: &[Vec<usize>]) -> Vec<f64> {
    let n = y.len();
    let mut cols: Vec<Vec<f64>> = regressors.iter().map(|(_, c)| c.clone()).collect();
    for ids in fixed_effects {
        let groups = ids.iter().max().map_or(0, |m| m + 1);
        for g in 0..groups {
            cols.push(ids.iter().map(|&i| if i == g { 1.0 } else { 0.0 }).collect());
        }
    }
    let x = DMatrix::from_fn(n, cols.len(), |r, c| cols[c][r]);
    let yv = DVector::from_column_slice(y);
    let svd = x.svd(true, true);
    let b = svd.solve(&yv, 1e-10).expect("svd solve");
    b.iter().take(regressors.len()).copied().collect()
}

/// Small unbalanced panel: units nested in areas, some unit-years missing.
pub struct SmallPanel {
    pub problem: FeProblem,
    pub unit_ids: Vec<usize>,
    pub cell_ids: Vec<usize>,
}

pub fn small_panel(seed: u64) -> SmallPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let areas = rng.random_range(3..=5usize);
    let per_area = rng.random_range(3..=5usize);
    let years = rng.random_range(4..=7usize);
    let mut units = Vec::new();
    let mut cells = Vec::new();
    let mut area_of = Vec::new();
    let mut x1 = Vec::new();
    let mut x2 = Vec::new();
    let mut y = Vec::new();
    let mu: Vec<f64> = (0..areas * per_area).map(|_| rng.random_range(-2.0..2.0)).collect();
    let eta: Vec<f64> = (0..areas * years).map(|_| rng.random_range(-1.0..1.0)).collect();
    for a in 0..areas {
        for k in 0..per_area {
            let u = a * per_area + k;
            for t in 0..years {
                if rng.random_bool(0.15) {
                    continue;
                }
                let a1: f64 = rng.random_range(-1.0..1.0) + 0.3 * mu[u];
                let a2: f64 = if rng.random_bool(0.4) { 1.0 } else { 0.0 };
                units.push(u as u32);
                cells.push((a * years + t) as u32);
                area_of.push(a as u32);
                x1.push(a1);
                x2.push(a2);
                y.push(1.5 * a1 - 0.7 * a2 + mu[u] + eta[a * years + t] + rng.random_range(-0.3..0.3));
            }
        }
    }
    let gu = Groups::from_keys(&units);
    let gc = Groups::from_keys(&cells);
    SmallPanel {
        unit_ids: gu.ids().to_vec(),
        cell_ids: gc.ids().to_vec(),
        problem: FeProblem {
            y,
            regressors: vec![("x1".into(), x1), ("x2".into(), x2)],
            fixed_effects: vec![gu, gc],
            clusters: Groups::from_keys(&area_of),
        },
    }
}
