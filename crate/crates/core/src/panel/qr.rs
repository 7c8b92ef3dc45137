//! Householder QR with column pivoting on the largest remaining column norm.

/// Least-squares factorisation of a column-major design.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// Column order chosen by the pivoting; the first `rank` are retained.
    pub order: Vec<usize>,
    pub rank: usize,
    /// Upper-triangular `rank x rank` block, row-major.
    pub r: Vec<Vec<f64>>,
    /// First `rank` entries of `Q' y`.
    pub qty: Vec<f64>,
}

impl PivotedQr {
    /// Factorises `columns` (each of equal length) and applies the
    /// reflections to `y`. A column is dropped once the largest remaining
    /// residual norm falls to `tol` times the largest original column norm.
    pub fn new(mut columns: Vec<Vec<f64>>, mut y: Vec<f64>, tol: f64) -> Self {
        let k = columns.len();
        let n = y.len();
        let mut order: Vec<usize> = (0..k).collect();
        let scale = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let mut rank = 0;
        for i in 0..k.min(n) {
            let (best, best_norm) = (i..k)
                .map(|j| (j, norm(&columns[j][i..])))
                .fold((i, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best_norm > tol * scale) {
                break;
            }
            columns.swap(i, best);
            order.swap(i, best);

            let col = &mut columns[i];
            let alpha = if col[i] > 0.0 { -best_norm } else { best_norm };
            let mut v: Vec<f64> = col[i..].to_vec();
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            col[i] = alpha;
            col[i + 1..].iter_mut().for_each(|x| *x = 0.0);
            if vnorm2 > 0.0 {
                let reflect = |target: &mut [f64]| {
                    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
                    let f = 2.0 * dot / vnorm2;
                    target.iter_mut().zip(&v).for_each(|(t, a)| *t -= f * a);
                };
                for col in columns.iter_mut().skip(i + 1) {
                    reflect(&mut col[i..]);
                }
                reflect(&mut y[i..]);
            }
            rank = i + 1;
        }
        let r = (0..rank).map(|row| (0..rank).map(|c| columns[c][row]).collect()).collect();
        y.truncate(rank);
        Self { order, rank, r, qty: y }
    }

    /// Coefficients of the retained columns, in pivot order.
    pub fn solve(&self) -> Vec<f64> {
        back_substitute(&self.r, &self.qty)
    }

    /// `(R' R)^{-1}` for the retained columns, in pivot order.
    pub fn gram_inverse(&self) -> Vec<Vec<f64>> {
        let k = self.rank;
        // columns of R^{-1}
        let rinv: Vec<Vec<f64>> = (0..k)
            .map(|j| {
                let mut e = vec![0.0; k];
                e[j] = 1.0;
                back_substitute(&self.r, &e)
            })
            .collect();
        let mut out = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in 0..k {
                // (R^{-1} R^{-T})_{ab} = sum_j R^{-1}_{aj} R^{-1}_{bj}
                out[a][b] = (0..k).map(|j| rinv[j][a] * rinv[j][b]).sum();
            }
        }
        out
    }
}

fn back_substitute(r: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let k = b.len();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / r[i][i];
    }
    x
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
