use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::qr::PivotedQr;
use crate::error::{Error, Result};

/// Sup-norm change at which alternating demeaning stops, relative to
/// `max(1, sup|column|)`.
pub const DEMEAN_TOLERANCE: f64 = 1e-10;
/// Columns whose remaining within-variation falls below this fraction of
/// their raw norm are dropped as collinear.
pub const PIVOT_TOLERANCE: f64 = 1e-12;
pub const MAX_DEMEAN_SWEEPS: usize = 100_000;

/// Dense group labels for one fixed-effect family.
#[derive(Debug, Clone)]
pub struct Groups {
    ids: Vec<usize>,
    count: usize,
}

impl Groups {
    pub fn from_keys<K: Eq + Hash + Copy>(keys: &[K]) -> Self {
        let mut index: HashMap<K, usize> = HashMap::new();
        let ids = keys
            .iter()
            .map(|k| {
                let next = index.len();
                *index.entry(*k).or_insert(next)
            })
            .collect();
        Self {
            ids,
            count: index.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.count
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }
}

/// A least-squares problem with absorbed fixed effects and clustered errors.
#[derive(Debug, Clone)]
pub struct FeProblem {
    pub y: Vec<f64>,
    pub regressors: Vec<(String, Vec<f64>)>,
    /// Absorbed one at a time in this order on every sweep.
    pub fixed_effects: Vec<Groups>,
    pub clusters: Groups,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermEstimate {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionResult {
    /// Retained terms, in the order they were supplied.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Cluster-robust covariance of the retained coefficients.
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided, from a t distribution with `clusters - 1` degrees of freedom.
    pub p_values: Vec<f64>,
    pub clusters: usize,
    pub n_obs: usize,
    /// 1 - SSR / TSS around the raw mean of the outcome.
    pub r_squared: f64,
    /// 1 - SSR / TSS of the demeaned outcome.
    pub within_r_squared: f64,
    /// Terms without usable within variation.
    pub dropped: Vec<String>,
    pub demean_sweeps: usize,
}

impl RegressionResult {
    pub fn position(&self, term: &str) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn term(&self, term: &str) -> Option<TermEstimate> {
        self.position(term).map(|i| TermEstimate {
            term: term.to_string(),
            estimate: self.coefficients[i],
            std_error: self.std_errors[i],
            t_stat: self.t_stats[i],
            p_value: self.p_values[i],
        })
    }

    pub fn estimates(&self) -> Vec<TermEstimate> {
        self.terms.iter().filter_map(|t| self.term(t)).collect()
    }

    pub fn degrees_of_freedom(&self) -> f64 {
        (self.clusters - 1) as f64
    }

    /// Two-sided critical value at `level` (e.g. 0.95).
    pub fn critical_value(&self, level: f64) -> f64 {
        let t = StudentsT::new(0.0, 1.0, self.degrees_of_freedom()).expect("at least two clusters");
        t.inverse_cdf(0.5 + level / 2.0)
    }

    pub fn confidence_interval(&self, term: &str, level: f64) -> Option<(f64, f64)> {
        let e = self.term(term)?;
        let half = self.critical_value(level) * e.std_error;
        Some((e.estimate - half, e.estimate + half))
    }
}

/// Subtracts group means family by family until a full sweep moves no entry
/// by more than the tolerance. Returns the number of sweeps.
pub fn demean(column: &mut [f64], fixed_effects: &[Groups]) -> Result<usize> {
    if fixed_effects.is_empty() {
        return Ok(0);
    }
    let scale = column.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = DEMEAN_TOLERANCE * scale;
    let mut sums: Vec<Vec<f64>> = fixed_effects.iter().map(|g| vec![0.0; g.count]).collect();
    let counts: Vec<Vec<f64>> = fixed_effects
        .iter()
        .map(|g| {
            let mut c = vec![0.0; g.count];
            g.ids.iter().for_each(|&i| c[i] += 1.0);
            c
        })
        .collect();
    for sweep in 1..=MAX_DEMEAN_SWEEPS {
        let mut change = 0.0f64;
        for (f, g) in fixed_effects.iter().enumerate() {
            let s = &mut sums[f];
            s.iter_mut().for_each(|x| *x = 0.0);
            for (v, &i) in column.iter().zip(&g.ids) {
                s[i] += v;
            }
            for (x, c) in s.iter_mut().zip(&counts[f]) {
                *x /= c;
                change = change.max(x.abs());
            }
            for (v, &i) in column.iter_mut().zip(&g.ids) {
                *v -= s[i];
            }
        }
        if change <= tol {
            return Ok(sweep);
        }
    }
    Err(Error::Estimation(format!(
        "alternating demeaning did not converge in {MAX_DEMEAN_SWEEPS} sweeps"
    )))
}

/// Least squares on the within-transformed data with CR1 cluster-robust
/// covariance `G/(G-1) (n-1)/(n-k)`.
pub fn fe_regress(problem: &FeProblem) -> Result<RegressionResult> {
    let n = problem.y.len();
    if problem.fixed_effects.iter().any(|g| g.len() != n)
        || problem.clusters.len() != n
        || problem.regressors.iter().any(|(_, x)| x.len() != n)
    {
        return Err(Error::Estimation("every column needs one entry per observation".into()));
    }
    let g = problem.clusters.num_groups();
    if g < 2 {
        return Err(Error::Estimation(format!("need at least two clusters, have {g}")));
    }
    if problem.regressors.is_empty() {
        return Err(Error::Estimation("no regressors".into()));
    }

    let mut y = problem.y.clone();
    let mut sweeps = demean(&mut y, &problem.fixed_effects)?;
    let mut columns = Vec::with_capacity(problem.regressors.len());
    let mut raw_norms = Vec::with_capacity(problem.regressors.len());
    for (_, x) in &problem.regressors {
        let raw = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut c = x.clone();
        sweeps = sweeps.max(demean(&mut c, &problem.fixed_effects)?);
        // unit raw norm, so the pivot tolerance reads as a variation share
        let s = if raw > 0.0 { raw } else { 1.0 };
        c.iter_mut().for_each(|v| *v /= s);
        columns.push(c);
        raw_norms.push(s);
    }
    let scaled = columns.clone();
    let qr = PivotedQr::new(columns, y.clone(), PIVOT_TOLERANCE);
    let k = qr.rank;
    if n <= k {
        return Err(Error::Estimation(format!("{n} observations for {k} coefficients")));
    }
    let mut kept: Vec<usize> = qr.order[..k].to_vec();
    let mut dropped_idx: Vec<usize> = qr.order[k..].to_vec();
    dropped_idx.sort_unstable();

    // coefficients in pivot order, on the scaled columns
    let b_piv = qr.solve();
    let gram_piv = qr.gram_inverse();
    // reorder to supplied order
    let mut perm: Vec<usize> = (0..k).collect();
    perm.sort_by_key(|&p| kept[p]);
    kept.sort_unstable();
    let b_scaled: Vec<f64> = perm.iter().map(|&p| b_piv[p]).collect();
    let bread: Vec<Vec<f64>> = perm
        .iter()
        .map(|&a| perm.iter().map(|&b| gram_piv[a][b]).collect())
        .collect();

    let mut resid = y.clone();
    for (pos, &j) in kept.iter().enumerate() {
        let b = b_scaled[pos];
        resid.iter_mut().zip(&scaled[j]).for_each(|(r, x)| *r -= b * x);
    }

    // cluster scores on the scaled columns
    let mut scores = vec![vec![0.0; k]; g];
    for (row, &cl) in problem.clusters.ids.iter().enumerate() {
        let u = resid[row];
        for (pos, &j) in kept.iter().enumerate() {
            scores[cl][pos] += scaled[j][row] * u;
        }
    }
    let mut meat = vec![vec![0.0; k]; k];
    for s in &scores {
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += s[a] * s[b];
            }
        }
    }
    let (gf, nf, kf) = (g as f64, n as f64, k as f64);
    let factor = gf / (gf - 1.0) * (nf - 1.0) / (nf - kf);
    let half = matmul(&bread, &meat);
    let v_scaled = matmul(&half, &bread);

    let mut coefficients = Vec::with_capacity(k);
    let mut covariance = vec![vec![0.0; k]; k];
    for a in 0..k {
        let sa = raw_norms[kept[a]];
        coefficients.push(b_scaled[a] / sa);
        for b in 0..k {
            let sb = raw_norms[kept[b]];
            covariance[a][b] = factor * v_scaled[a][b] / (sa * sb);
        }
    }
    // exact symmetry
    for a in 0..k {
        for b in 0..a {
            let m = 0.5 * (covariance[a][b] + covariance[b][a]);
            covariance[a][b] = m;
            covariance[b][a] = m;
        }
    }
    let std_errors: Vec<f64> = (0..k).map(|a| covariance[a][a].max(0.0).sqrt()).collect();
    let t_stats: Vec<f64> = coefficients
        .iter()
        .zip(&std_errors)
        .map(|(&b, &se)| if se > 0.0 { b / se } else if b == 0.0 { 0.0 } else { b.signum() * f64::INFINITY })
        .collect();
    let dist = StudentsT::new(0.0, 1.0, gf - 1.0).map_err(|e| Error::Estimation(e.to_string()))?;
    let p_values = t_stats.iter().map(|t| 2.0 * (1.0 - dist.cdf(t.abs()))).collect();

    let ssr: f64 = resid.iter().map(|r| r * r).sum();
    let mean = problem.y.iter().sum::<f64>() / nf;
    let tss: f64 = problem.y.iter().map(|v| (v - mean).powi(2)).sum();
    let within_tss: f64 = y.iter().map(|v| v * v).sum();
    let share = |ss: f64| if ss > 0.0 { 1.0 - ssr / ss } else { 1.0 };

    Ok(RegressionResult {
        terms: kept.iter().map(|&j| problem.regressors[j].0.clone()).collect(),
        coefficients,
        covariance,
        std_errors,
        t_stats,
        p_values,
        clusters: g,
        n_obs: n,
        r_squared: share(tss),
        within_r_squared: share(within_tss),
        dropped: dropped_idx.iter().map(|&j| problem.regressors[j].0.clone()).collect(),
        demean_sweeps: sweeps,
    })
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..k).map(|j| row.iter().zip(b).map(|(x, brow)| x * brow[j]).sum()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn problem(y: Vec<f64>, regs: Vec<(&str, Vec<f64>)>, fe: Vec<Groups>, clusters: &[u32]) -> FeProblem {
        FeProblem {
            y,
            regressors: regs.into_iter().map(|(n, v)| (n.to_string(), v)).collect(),
            fixed_effects: fe,
            clusters: Groups::from_keys(clusters),
        }
    }

    #[test]
    fn exact_fit_without_fixed_effects() {
        let x: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.5 - 3.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let cl: Vec<u32> = (0..20).map(|i| i % 4).collect();
        let r = fe_regress(&problem(y, vec![("x", x)], vec![], &cl)).unwrap();
        assert!((r.coefficients[0] - 3.0).abs() < 1e-14);
        assert!(r.std_errors[0] < 1e-12);
        assert!(r.dropped.is_empty());
    }

    #[test]
    fn single_cluster_is_an_error() {
        let r = fe_regress(&problem(vec![1.0, 2.0, 3.0], vec![("x", vec![1.0, 0.0, 2.0])], vec![], &[0, 0, 0]));
        assert!(matches!(r, Err(Error::Estimation(_))));
    }

    #[test]
    fn unit_invariant_regressor_is_dropped() {
        let units: Vec<u32> = (0..30).map(|i| i / 3).collect();
        let x: Vec<f64> = (0..30).map(|i| f64::from(i % 5)).collect();
        let z: Vec<f64> = units.iter().map(|&u| f64::from(u * u)).collect();
        let y: Vec<f64> = x.iter().zip(&units).map(|(x, &u)| 2.0 * x + f64::from(u)).collect();
        let p = problem(y, vec![("z", z), ("x", x)], vec![Groups::from_keys(&units)], &units);
        let r = fe_regress(&p).unwrap();
        assert_eq!(r.dropped, vec!["z".to_string()]);
        assert_eq!(r.terms, vec!["x".to_string()]);
        assert!((r.coefficients[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn two_way_recovers_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let (units, years) = (200u32, 7u32);
        let mu: Vec<f64> = (0..units).map(|_| noise.sample(&mut rng) * 10.0).collect();
        let eta: Vec<f64> = (0..years).map(|_| noise.sample(&mut rng) * 10.0).collect();
        let (mut y, mut x, mut uid, mut tid) = (vec![], vec![], vec![], vec![]);
        for i in 0..units {
            for t in 0..years {
                let xv = noise.sample(&mut rng) * 10.0 + mu[i as usize];
                x.push(xv);
                y.push(2.0 * xv + mu[i as usize] + eta[t as usize] + noise.sample(&mut rng));
                uid.push(i);
                tid.push(t);
            }
        }
        let fe = vec![Groups::from_keys(&uid), Groups::from_keys(&tid)];
        let r = fe_regress(&problem(y, vec![("x", x)], fe, &uid)).unwrap();
        let e = r.term("x").unwrap();
        assert!((e.estimate - 2.0).abs() < 3.0 * e.std_error, "{e:?}");
        assert!(e.std_error > 0.0);
    }

    #[test]
    fn singleton_clusters_give_hc1() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = 40;
        let x1: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let x2: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| x1[i] - 0.5 * x2[i] + normal.sample(&mut rng) * (1.0 + x1[i].abs()))
            .collect();
        let ids: Vec<u32> = (0..n as u32).collect();
        let r = fe_regress(&problem(y.clone(), vec![("a", x1.clone()), ("b", x2.clone())], vec![], &ids)).unwrap();
        // HC1 by hand: (X'X)^-1 X' diag(u^2) X (X'X)^-1 * n/(n-k)
        let xtx = [
            [dot(&x1, &x1), dot(&x1, &x2)],
            [dot(&x2, &x1), dot(&x2, &x2)],
        ];
        let det = xtx[0][0] * xtx[1][1] - xtx[0][1] * xtx[1][0];
        let inv = [[xtx[1][1] / det, -xtx[0][1] / det], [-xtx[1][0] / det, xtx[0][0] / det]];
        let xty = [dot(&x1, &y), dot(&x2, &y)];
        let b = [
            inv[0][0] * xty[0] + inv[0][1] * xty[1],
            inv[1][0] * xty[0] + inv[1][1] * xty[1],
        ];
        let mut meat = [[0.0; 2]; 2];
        for i in 0..n {
            let u = y[i] - b[0] * x1[i] - b[1] * x2[i];
            let xi = [x1[i], x2[i]];
            for a in 0..2 {
                for c in 0..2 {
                    meat[a][c] += xi[a] * xi[c] * u * u;
                }
            }
        }
        let nf = n as f64;
        for a in 0..2 {
            for c in 0..2 {
                let mut v = 0.0;
                for p in 0..2 {
                    for q in 0..2 {
                        v += inv[a][p] * meat[p][q] * inv[q][c];
                    }
                }
                v *= nf / (nf - 2.0);
                assert!((v - r.covariance[a][c]).abs() < 1e-12 * v.abs().max(1e-3), "{a}{c}");
            }
        }
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}
