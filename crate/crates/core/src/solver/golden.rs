//! Bounded one-dimensional maximisation.
//!
//! A coarse scan locates the best cell, golden-section search refines inside
//! the neighbouring bracket, and the endpoints are compared at the end so that
//! corner optima are returned exactly.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[lo, hi]` until the bracket
/// is narrower than `tol`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        // ties move left so that flat regions resolve to the lower concession
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximises `f` on `[lo, hi]`.
///
/// `scan` grid cells are evaluated first; golden-section then refines around
/// the best grid point. Among equal values the smallest argument wins.
pub fn maximize_bounded<F>(mut f: F, lo: f64, hi: f64, tol: f64, scan: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    if hi <= lo {
        return (lo, f(lo));
    }
    let cells = scan.max(2);
    let step = (hi - lo) / cells as f64;
    let grid: Vec<f64> = (0..=cells)
        .map(|k| if k == cells { hi } else { lo + step * k as f64 })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(cells)];
    let (x, fx) = golden_section_max(&mut f, a, b, tol);

    let mut winner = (grid[best], values[best]);
    if fx > winner.1 || (fx == winner.1 && x < winner.0) {
        winner = (x, fx);
    }
    polish(&mut f, winner, lo, hi)
}

/// Newton steps on a Richardson-refined central difference.
///
/// Comparing function values cannot place a smooth maximum more precisely
/// than about `sqrt(eps)` relative; the derivative root can be found to near
/// machine precision. Steps are capped at the difference width and kept only
/// when the value does not drop beyond rounding.
fn polish<F>(f: &mut F, start: (f64, f64), lo: f64, hi: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let h = 1e-4 * (hi - lo);
    let (mut x, mut fx) = start;
    for _ in 0..6 {
        if x - h < lo || x + h > hi {
            break;
        }
        let (fp, fm) = (f(x + h), f(x - h));
        let (fp2, fm2) = (f(x + 0.5 * h), f(x - 0.5 * h));
        let d_h = (fp - fm) / (2.0 * h);
        let d_half = (fp2 - fm2) / h;
        let slope = (4.0 * d_half - d_h) / 3.0;
        let curvature = (fp2 - 2.0 * fx + fm2) / (0.25 * h * h);
        if !(curvature < 0.0) {
            break;
        }
        let step = (-slope / curvature).clamp(-h, h);
        let next = x + step;
        let f_next = f(next);
        if f_next < fx - 8.0 * f64::EPSILON * fx.abs().max(1.0) {
            break;
        }
        x = next;
        fx = f_next;
        if step.abs() <= 1e-13 * (hi - lo) {
            break;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let (x, fx) = golden_section_max(|x| -(x - 1.3).powi(2), 0.0, 4.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-6);
        assert!(fx <= 0.0 && fx > -1e-11);
    }

    #[test]
    fn corner_maxima_are_exact() {
        let (x, _) = maximize_bounded(|x| -x, 0.0, 5.0, 1e-9, 16);
        assert_eq!(x, 0.0);
        let (x, _) = maximize_bounded(|x| x, 0.0, 5.0, 1e-9, 16);
        assert_eq!(x, 5.0);
    }

    #[test]
    fn scan_escapes_local_maxima() {
        // local max at 1, global max at 8
        let f = |x: f64| -(x - 1.0).powi(2) * (x - 8.0).powi(2) + x;
        let (x, _) = maximize_bounded(f, 0.0, 10.0, 1e-10, 16);
        assert!((x - 8.0).abs() < 0.1, "{x}");
    }

    #[test]
    fn flat_function_prefers_lower_bound() {
        let (x, _) = maximize_bounded(|_| 1.0, 0.0, 3.0, 1e-9, 8);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn degenerate_interval() {
        assert_eq!(maximize_bounded(|x| x * 2.0, 1.0, 1.0, 1e-9, 8), (1.0, 2.0));
    }
}
