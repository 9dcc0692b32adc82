//! Dense kernels: pivoted determinant and SVD-based nullspace extraction.

use nalgebra::{DMatrix, DVector, SVD};

const SMALL_PIVOT: f64 = 1e-13;

/// Determinant by Gaussian elimination with row pivoting. When the best
/// pivot in the current column falls below `1e-13` (relative to the largest
/// entry of the matrix) the search widens to the whole trailing block.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut a = m.clone();
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut det = 1.0;
    for k in 0..n {
        let (mut pr, mut pc) = (k, k);
        let mut best = a[(k, k)].abs();
        for r in k + 1..n {
            if a[(r, k)].abs() > best {
                best = a[(r, k)].abs();
                pr = r;
            }
        }
        if best < SMALL_PIVOT * scale {
            for c in k..n {
                for r in k..n {
                    if a[(r, c)].abs() > best {
                        best = a[(r, c)].abs();
                        pr = r;
                        pc = c;
                    }
                }
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pr != k {
            a.swap_rows(pr, k);
            det = -det;
        }
        if pc != k {
            a.swap_columns(pc, k);
            det = -det;
        }
        let pivot = a[(k, k)];
        det *= pivot;
        for r in k + 1..n {
            let f = a[(r, k)] / pivot;
            if f != 0.0 {
                for c in k + 1..n {
                    let sub = f * a[(k, c)];
                    a[(r, c)] -= sub;
                }
            }
        }
    }
    det
}

#[derive(Clone, Debug)]
pub struct Nullspace {
    /// Singular values in descending order.
    pub singular_values: Vec<f64>,
    /// Orthonormal right singular vectors for the singular values below threshold.
    pub basis: Vec<DVector<f64>>,
}

impl Nullspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Smallest singular value divided by the largest.
    pub fn smallest_relative(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&max), Some(&min)) if max > 0.0 => min / max,
            _ => 0.0,
        }
    }
}

/// Right singular vectors whose singular value is below `rel_threshold × σ_max`.
pub fn nullspace(m: &DMatrix<f64>, rel_threshold: f64) -> Nullspace {
    let svd = SVD::new(m.clone(), false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let vt = svd.v_t.expect("right singular vectors requested");
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = rel_threshold * smax;
    let basis = sv
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < cut || smax == 0.0)
        .map(|(i, _)| vt.row(i).transpose())
        .collect();
    Nullspace {
        singular_values: sv,
        basis,
    }
}

/// `σ_min(M) / σ_max(M)`.
pub fn relative_smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}
