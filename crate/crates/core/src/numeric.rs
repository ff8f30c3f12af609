//! Small numerical helpers shared by the fitters.

/// Golden-section minimisation of a unimodal function on `[lo, hi]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Grid scan followed by golden-section refinement around the best node.
///
/// Returns the minimiser; `grid` must be sorted ascending with at least two
/// nodes.
pub fn scan_then_refine<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], tol: f64) -> f64 {
    debug_assert!(grid.len() >= 2);
    let (best, _) = grid
        .iter()
        .map(|&x| f(x))
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let x = golden_min(&mut f, lo, hi, tol);
    // golden search never evaluates the endpoints; keep the grid node unless
    // refinement strictly improves on it
    if f(grid[best]) <= f(x) {
        grid[best]
    } else {
        x
    }
}

/// Generalised Laguerre polynomial `L_n^{(alpha)}(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
