//! Dense primal simplex for the level-error linear program.
//!
//! The problem: minimize `e` subject to `|p(t)| <= e` for `t = 1..n`, over
//! degree-`d` polynomials with `p(0) = 1`. The equality constraint is
//! substituted out by writing `p(t) = 1 + t * s(t)` with `s` a free
//! degree-`d-1` polynomial in the Chebyshev basis on the mapped grid:
//! the factor `t` makes `p(0) = 1` hold by construction. The columns
//! `phi_k(t) = t * T_k(m(t))` stay bounded by `n` and oscillate, unlike the
//! shifted columns `T_j(m(t)) - T_j(m(0))`, whose common `T_j(m(0))` offset
//! grows like `cosh(j * arccosh((n+1)/(n-1)))` and wrecks the tableau's
//! conditioning at high degree. Variables are the `b_k` (split into
//! nonnegative pairs), the level `e`, and one slack per inequality row;
//! columns are normalized to unit max magnitude so fixed tolerances are
//! meaningful at any degree.
//!
//! The all-slack basis is infeasible (half the right-hand sides are -1), but
//! one pivot bringing `e` into the basis at such a row makes every
//! right-hand side nonnegative, so no phase-1 is needed.

use crate::error::{Error, Result};
use crate::minimax::poly::{chebyshev_t, grid_map, ChebGridPoly};

/// Entering-column selection. Dantzig is fast; Bland cannot cycle.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PivotRule {
    Dantzig,
    Bland,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule
/// for the remainder of the solve.
const DEGENERATE_STREAK_LIMIT: usize = 64;

const ENTER_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-10;

/// Solves the level LP and returns the optimal level and polynomial.
pub(crate) fn solve(n: usize, d: usize, rule: PivotRule) -> Result<(f64, ChebGridPoly)> {
    assert!(n >= 2 && d >= 1 && d < n, "caller validates ranges");
    let rows = 2 * n;
    let structural = 2 * d + 1; // split b_k pairs, then e
    let cols = structural + rows; // plus one slack per row
    let eps_col = 2 * d;

    // phi columns and their normalization factors.
    let mut phi = vec![vec![0.0; n]; d];
    for t in 1..=n {
        let u = grid_map(n, t as f64);
        for (k, col) in phi.iter_mut().enumerate() {
            col[t - 1] = t as f64 * chebyshev_t(k, u);
        }
    }
    let col_scale: Vec<f64> = (0..d)
        .map(|k| phi[k].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300))
        .collect();

    // Tableau rows: [coefficients | rhs]. Row 2(t-1) is p(t) <= e, written
    // sum_k b_k phi_k(t) - e + s = -1; row 2(t-1)+1 is -p(t) <= e.
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for t in 1..=n {
        let mut lo = vec![0.0; cols + 1];
        let mut hi = vec![0.0; cols + 1];
        for k in 0..d {
            let v = phi[k][t - 1] / col_scale[k];
            lo[2 * k] = v;
            lo[2 * k + 1] = -v;
            hi[2 * k] = -v;
            hi[2 * k + 1] = v;
        }
        lo[eps_col] = -1.0;
        hi[eps_col] = -1.0;
        lo[structural + 2 * (t - 1)] = 1.0;
        hi[structural + 2 * (t - 1) + 1] = 1.0;
        lo[cols] = -1.0;
        hi[cols] = 1.0;
        tab.push(lo);
        tab.push(hi);
    }

    // Maximize -e: reduced-cost row and objective value.
    let mut obj = vec![0.0; cols];
    obj[eps_col] = -1.0;
    let mut z = 0.0;
    let mut basis: Vec<usize> = (0..rows).map(|r| structural + r).collect();

    // Feasibility pivot: bring e in at the first negative right-hand side.
    pivot(&mut tab, &mut obj, &mut z, &mut basis, 0, eps_col);

    let max_iters = 1_000 + 2 * rows;
    let mut active_rule = rule;
    let mut degenerate_streak = 0usize;
    for _ in 0..max_iters {
        let entering = match active_rule {
            PivotRule::Dantzig => {
                let mut best: Option<(usize, f64)> = None;
                for (j, &c) in obj.iter().enumerate() {
                    if c > ENTER_TOL && best.is_none_or(|(_, b)| c > b) {
                        best = Some((j, c));
                    }
                }
                best.map(|(j, _)| j)
            }
            PivotRule::Bland => obj.iter().position(|&c| c > ENTER_TOL),
        };
        let Some(e) = entering else {
            // Optimal: objective was -e, so the level is -z.
            return extract(n, d, &tab, &basis, &col_scale, -z);
        };

        // Ratio test; ties go to the smallest basis variable (Bland-safe).
        let mut leave: Option<(usize, f64)> = None;
        for (r, row) in tab.iter().enumerate() {
            let a = row[e];
            if a > PIVOT_TOL {
                let ratio = row[cols] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lv)) => {
                        ratio < lv - 1e-12 || (ratio < lv + 1e-12 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Solver("level LP is unbounded".into()));
        };

        let z_before = z;
        pivot(&mut tab, &mut obj, &mut z, &mut basis, r, e);
        if (z - z_before).abs() <= 1e-14 {
            degenerate_streak += 1;
            if degenerate_streak > DEGENERATE_STREAK_LIMIT {
                active_rule = PivotRule::Bland;
            }
        } else {
            degenerate_streak = 0;
        }
    }
    Err(Error::Solver(format!(
        "simplex did not converge within {max_iters} iterations (n={n}, d={d})"
    )))
}

fn pivot(
    tab: &mut [Vec<f64>],
    obj: &mut [f64],
    z: &mut f64,
    basis: &mut [usize],
    r: usize,
    e: usize,
) {
    let cols = obj.len();
    let inv = 1.0 / tab[r][e];
    for v in tab[r].iter_mut() {
        *v *= inv;
    }
    let pivot_row = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let factor = row[e];
        if factor != 0.0 {
            for (v, &p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[e] = 0.0; // exact, avoids residue
        }
    }
    let factor = obj[e];
    if factor != 0.0 {
        for (v, &p) in obj.iter_mut().zip(&pivot_row) {
            *v -= factor * p;
        }
        obj[e] = 0.0;
        *z += factor * pivot_row[cols];
    }
    basis[r] = e;
}

fn extract(
    n: usize,
    d: usize,
    tab: &[Vec<f64>],
    basis: &[usize],
    col_scale: &[f64],
    level: f64,
) -> Result<(f64, ChebGridPoly)> {
    let cols = tab[0].len() - 1;
    let mut values = vec![0.0; cols];
    for (r, &b) in basis.iter().enumerate() {
        values[b] = tab[r][cols];
    }
    // p(t) = 1 + t * sum_k b_k T_k(m(t)) with t = a m + b affine on the grid.
    // m T_0 = T_1 and m T_k = (T_{k+1} + T_{k-1}) / 2 turn each product term
    // into an exact three-term Chebyshev expansion.
    let a = (n as f64 - 1.0) / 2.0;
    let b = (n as f64 + 1.0) / 2.0;
    let mut coeffs = vec![0.0; d + 1];
    coeffs[0] = 1.0;
    for k in 0..d {
        let bk = (values[2 * k] - values[2 * k + 1]) / col_scale[k];
        if k == 0 {
            coeffs[1] += a * bk;
            coeffs[0] += b * bk;
        } else {
            coeffs[k + 1] += 0.5 * a * bk;
            coeffs[k - 1] += 0.5 * a * bk;
            coeffs[k] += b * bk;
        }
    }
    let poly = ChebGridPoly::new(n, coeffs)?;
    Ok((level, poly))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minimax::poly::closed_form_value;

    #[test]
    fn matches_closed_form_in_exact_cases() {
        // d=1 always; d=2 with odd n; d=3 with n = 1 mod 4.
        for (n, d) in [(9usize, 1usize), (25, 1), (9, 2), (15, 2), (13, 3), (29, 3)] {
            let (level, poly) = solve(n, d, PivotRule::Dantzig).unwrap();
            let want = closed_form_value(n, d).unwrap();
            assert!((level - want).abs() < 1e-9, "(n,d)=({n},{d}): {level} vs {want}");
            assert!((poly.eval(0.0) - 1.0).abs() < 1e-10);
            let (gm, _) = poly.grid_max();
            assert!((gm - level).abs() < 1e-9);
        }
    }

    #[test]
    fn undercuts_closed_form_when_grid_misses_extrema() {
        // The grid is a subset of the interval, so relaxing to integer points
        // can only help. At (8,2) the optimum is 3/7: leveled interpolation
        // on {1,4,8} gives h(32/21 + 2/3 + 1/7) = 1.
        let (level, _) = solve(8, 2, PivotRule::Dantzig).unwrap();
        let cont = closed_form_value(8, 2).unwrap();
        assert!(level < cont - 1e-9, "discrete {level} must undercut continuous {cont}");
        assert!((level - 3.0 / 7.0).abs() < 1e-10, "frozen optimum 3/7, got {level}");
    }

    #[test]
    fn full_alternation_degree_gives_inverse_power() {
        // At d = n-1 the optimum levels every grid point: 1/(2^n - 1).
        for n in [3usize, 5, 8, 10] {
            let (level, poly) = solve(n, n - 1, PivotRule::Dantzig).unwrap();
            let want = 1.0 / ((1u64 << n) - 1) as f64;
            assert!((level - want).abs() < 1e-11, "n={n}: {level} vs {want}");
            for t in 1..=n {
                assert!((poly.eval(t as f64).abs() - level).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn pivot_rules_agree() {
        for (n, d) in [(9usize, 2usize), (8, 2), (20, 4), (40, 6), (13, 12)] {
            let (a, pa) = solve(n, d, PivotRule::Dantzig).unwrap();
            let (b, pb) = solve(n, d, PivotRule::Bland).unwrap();
            assert!((a - b).abs() < 1e-9, "(n,d)=({n},{d})");
            for t in 1..=n {
                let x = t as f64;
                assert!((pa.eval(x) - pb.eval(x)).abs() < 1e-8, "(n,d)=({n},{d}) t={t}");
            }
        }
    }
}
