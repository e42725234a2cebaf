//! Grid and local-move helpers shared by the searches. Stochastic matrices
//! are flat row-major `Vec<f64>`.

use crate::prob::{lattice_resolution, simplex_count, simplex_points};
use crate::{Error, Result};

/// Largest grid any search will enumerate.
pub(crate) const MAX_GRID: usize = 2_000_000;

/// Every `rows x cols` stochastic matrix whose rows lie on the simplex
/// lattice of spacing `step`, in lexicographic order of the row indices.
pub(crate) fn stochastic_grid(rows: usize, cols: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    let n = lattice_resolution(step)?;
    let per_row = simplex_count(cols, n);
    let total = (per_row as f64).powi(rows as i32);
    if total > MAX_GRID as f64 {
        return Err(Error::Guard(format!(
            "{rows}x{cols} stochastic grid at step {step} has {total:.3e} points (limit {MAX_GRID}); use a coarser step"
        )));
    }
    let pts = simplex_points(cols, n);
    let mut out = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; rows];
    loop {
        out.push(idx.iter().flat_map(|&i| pts[i].iter().copied()).collect());
        let mut k = rows;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pts.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// True when the columns are in nonincreasing lexicographic order, which
/// picks one representative per relabelling of the output alphabet.
pub(crate) fn columns_canonical(m: &[f64], rows: usize, cols: usize) -> bool {
    let col = |j: usize| (0..rows).map(move |r| m[r * cols + j]);
    (1..cols).all(|j| {
        for (a, b) in col(j - 1).zip(col(j)) {
            if a > b {
                return true;
            }
            if a < b {
                return false;
            }
        }
        true
    })
}

/// Matrices obtained by moving `delta` of mass between two entries of one row.
pub(crate) fn row_moves(m: &[f64], rows: usize, cols: usize, delta: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for r in 0..rows {
        for a in 0..cols {
            let from = m[r * cols + a];
            if from <= 0.0 {
                continue;
            }
            for b in 0..cols {
                if a == b {
                    continue;
                }
                let d = delta.min(from);
                let mut c = m.to_vec();
                c[r * cols + a] -= d;
                c[r * cols + b] += d;
                out.push(c);
            }
        }
    }
    out
}

/// Golden-section maximisation of `f` on `[lo, hi]`.
pub(crate) fn golden_max(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(stochastic_grid(2, 2, 0.5).unwrap().len(), 9);
        assert_eq!(stochastic_grid(2, 3, 0.05).unwrap().len(), 231 * 231);
        assert!(matches!(stochastic_grid(3, 4, 0.05), Err(Error::Guard(_))));
    }

    #[test]
    fn canonical_representatives() {
        let g = stochastic_grid(2, 2, 0.5).unwrap();
        let canon: Vec<_> = g.iter().filter(|m| columns_canonical(m, 2, 2)).collect();
        // 9 matrices; swapping columns pairs them up except the one with equal columns
        assert_eq!(canon.len(), 5);
    }

    #[test]
    fn moves_preserve_rows() {
        let m = vec![0.5, 0.5, 0.0, 1.0];
        for c in row_moves(&m, 2, 2, 0.1) {
            assert!((c[0] + c[1] - 1.0).abs() < 1e-15);
            assert!((c[2] + c[3] - 1.0).abs() < 1e-15);
            assert!(c.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn golden_finds_peak() {
        let (x, _) = golden_max(0.0, 3.0, 80, |x| -(x - 1.3) * (x - 1.3));
        assert!((x - 1.3).abs() < 1e-8);
    }
}
