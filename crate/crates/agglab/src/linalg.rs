//! Dense Gaussian elimination for the small square systems that appear in the
//! exchange solver and the exact complexity search. Systems here are at most a
//! few dozen unknowns, so a partial-pivot tableau is plenty.

use crate::error::{Error, Result};

/// Solves `a x = b` in place; `a` is row-major square.
pub(crate) fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<Vec<f64>> {
    let m = b.len();
    debug_assert!(a.len() == m && a.iter().all(|row| row.len() == m));
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-14 {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let (pivot_rows, elim_rows) = a.split_at_mut(col + 1);
        let pivot = &pivot_rows[col];
        let (b_done, b_elim) = b.split_at_mut(col + 1);
        let b_pivot = b_done[col];
        for (row, bv) in elim_rows.iter_mut().zip(b_elim) {
            let f = row[col] / pivot[col];
            if f == 0.0 {
                continue;
            }
            for (x, &p) in row.iter_mut().zip(pivot).skip(col) {
                *x -= f * p;
            }
            *bv -= f * b_pivot;
        }
    }
    let mut x = vec![0.0; m];
    for col in (0..m).rev() {
        let mut s = b[col];
        for k in col + 1..m {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let mut b = vec![3.0, 5.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b).is_err());
    }

    #[test]
    fn permuted_identity() {
        let mut a = vec![
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ];
        let mut b = vec![3.0, 1.0, 2.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }
}
