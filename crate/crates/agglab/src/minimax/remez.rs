//! Discrete Remez exchange on the integer grid.
//!
//! Maintains a working set of `d + 1` grid points, solves for the degree-`d`
//! polynomial that equioscillates on them subject to `p(0) = 1`, and swaps in
//! the grid point where `|p|` overshoots the working level. The level
//! strictly increases at every exchange and is bounded by the discrete
//! optimum, so the iteration terminates; in practice the rounded continuous
//! extrema start close enough that a handful of exchanges suffice.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::minimax::poly::{chebyshev_extrema, chebyshev_t, grid_map, ChebGridPoly};

const MAX_EXCHANGES: usize = 200;

/// Solves the grid problem and returns the optimal level and polynomial.
pub(crate) fn solve(n: usize, d: usize) -> Result<(f64, ChebGridPoly)> {
    assert!(n >= 2 && d >= 1 && d < n, "caller validates ranges");
    let mut pts = initial_points(n, d);
    for _ in 0..MAX_EXCHANGES {
        let (coeffs, h) = leveled_interpolant(n, d, &pts)?;
        let poly = ChebGridPoly::new(n, coeffs)?;
        let (max_abs, t_star) = poly.grid_max();
        if max_abs <= h.abs() * (1.0 + 1e-12) + 1e-15 || pts.contains(&t_star) {
            // Equioscillation reached (to solver precision): optimal.
            return Ok((max_abs, poly));
        }
        let s_star = poly.eval(t_star as f64).signum();
        // Working-set signs: p(t_i) = (-1)^i h.
        let sign_at = |i: usize| if i.is_multiple_of(2) { h.signum() } else { -h.signum() };
        if t_star < pts[0] {
            if s_star == sign_at(0) {
                pts[0] = t_star;
            } else {
                pts.insert(0, t_star);
                pts.pop();
            }
        } else if t_star > pts[d] {
            if s_star == sign_at(d) {
                pts[d] = t_star;
            } else {
                pts.push(t_star);
                pts.remove(0);
            }
        } else {
            // First index with pts[i] > t_star; the overshoot replaces the
            // neighbor carrying its own sign, preserving alternation.
            let i = pts.partition_point(|&p| p < t_star);
            if s_star == sign_at(i - 1) {
                pts[i - 1] = t_star;
            } else {
                pts[i] = t_star;
            }
        }
    }
    Err(Error::Solver(format!(
        "remez exchange did not converge within {MAX_EXCHANGES} iterations (n={n}, d={d})"
    )))
}

/// Rounded continuous extrema, repaired to strictly increasing integers in
/// `[1, n]`. Needs `d + 1 <= n`, which the range check guarantees.
fn initial_points(n: usize, d: usize) -> Vec<usize> {
    let mut pts: Vec<i64> = chebyshev_extrema(n, d)
        .iter()
        .map(|x| (x.round() as i64).clamp(1, n as i64))
        .collect();
    for i in 1..pts.len() {
        if pts[i] <= pts[i - 1] {
            pts[i] = pts[i - 1] + 1;
        }
    }
    for i in (0..pts.len()).rev() {
        let cap = n as i64 - (d - i) as i64;
        if pts[i] > cap {
            pts[i] = cap;
        }
    }
    pts.into_iter().map(|p| p as usize).collect()
}

/// Coefficients (in the grid Chebyshev basis) and level `h` of the unique
/// degree-`d` polynomial with `p(0) = 1` and `p(t_i) = (-1)^i h`. One
/// iterative-refinement pass keeps the solution accurate when the basis
/// values grow large.
fn leveled_interpolant(n: usize, d: usize, pts: &[usize]) -> Result<(Vec<f64>, f64)> {
    let m = d + 2;
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (i, &t) in pts.iter().enumerate() {
        let u = grid_map(n, t as f64);
        for (j, slot) in a[i][..=d].iter_mut().enumerate() {
            *slot = chebyshev_t(j, u);
        }
        a[i][d + 1] = if i % 2 == 0 { -1.0 } else { 1.0 };
    }
    let m0 = grid_map(n, 0.0);
    for (j, slot) in a[d + 1][..=d].iter_mut().enumerate() {
        *slot = chebyshev_t(j, m0);
    }
    b[d + 1] = 1.0;

    let mut a1: Vec<Vec<f64>> = a.clone();
    let mut b1 = b.clone();
    let x0 = solve_dense(&mut a1, &mut b1)?;
    let mut residual = vec![0.0; m];
    for (i, r) in residual.iter_mut().enumerate() {
        let mut acc = b[i];
        for (j, &x) in x0.iter().enumerate() {
            acc -= a[i][j] * x;
        }
        *r = acc;
    }
    let mut a2 = a;
    let dx = solve_dense(&mut a2, &mut residual)?;
    let x: Vec<f64> = x0.iter().zip(&dx).map(|(v, e)| v + e).collect();
    Ok((x[..=d].to_vec(), x[d + 1]))
}
