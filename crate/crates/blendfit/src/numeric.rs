//! Shared numerical helpers: weighted least squares with a ridge fallback,
//! small symmetric eigen-decompositions and frame construction.

use nalgebra::{DMatrix, Matrix3, Unit, Vector3};

/// Relative singular-value cutoff used for rank detection.
const RANK_TOL: f64 = 1e-12;

/// Solution of a (weighted) least-squares system.
pub struct LsqSolution {
    /// One column per right-hand side.
    pub coeffs: DMatrix<f64>,
    /// True when the design was rank deficient and a fallback was used.
    pub ridged: bool,
}

/// Solves `min ||W^(1/2) (A x - b)||` column-wise for multiple right-hand sides.
///
/// A full-rank system is solved through the SVD. When the design is rank
/// deficient the solve falls back to Tikhonov regularization with
/// `lambda = ridge_rel * trace(A' W A)` (or a pseudo-inverse when
/// `ridge_rel == 0`) and the result is flagged.
pub fn weighted_lsq(
    design: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    weights: Option<&[f64]>,
    ridge_rel: f64,
) -> LsqSolution {
    let ncols = design.ncols();
    let (mut a, mut b) = (design.clone(), rhs.clone());
    if let Some(w) = weights {
        for (i, wi) in w.iter().enumerate() {
            let s = wi.max(0.0).sqrt();
            a.row_mut(i).scale_mut(s);
            b.row_mut(i).scale_mut(s);
        }
    }

    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = sigma_max * RANK_TOL;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();

    if rank == ncols && sigma_max > 0.0 {
        if let Ok(x) = svd.solve(&b, cutoff) {
            return LsqSolution {
                coeffs: x,
                ridged: false,
            };
        }
    }

    // Rank-deficient (or solve failure): regularized normal equations.
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    if ridge_rel > 0.0 {
        let lambda = ridge_rel * ata.trace().max(f64::MIN_POSITIVE);
        let mut m = ata;
        for i in 0..ncols {
            m[(i, i)] += lambda;
        }
        let x = m
            .lu()
            .solve(&atb)
            .unwrap_or_else(|| DMatrix::zeros(ncols, rhs.ncols()));
        LsqSolution {
            coeffs: x,
            ridged: true,
        }
    } else {
        // Minimum-norm solution through the truncated SVD.
        let x = svd
            .solve(&b, cutoff)
            .unwrap_or_else(|_| DMatrix::zeros(ncols, rhs.ncols()));
        LsqSolution {
            coeffs: x,
            ridged: true,
        }
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix with eigenvalues in
/// ascending order. Eigenvector signs are made deterministic by forcing the
/// largest-magnitude component positive.
pub fn sym3_eigen_ascending(m: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let eig = m.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = [0.0; 3];
    let mut vectors = [Vector3::zeros(); 3];
    for (slot, &src) in order.iter().enumerate() {
        values[slot] = eig.eigenvalues[src];
        let mut v: Vector3<f64> = eig.eigenvectors.column(src).into();
        let lead = v.iter().cloned().fold(0.0f64, |acc, x| {
            if x.abs() > acc.abs() {
                x
            } else {
                acc
            }
        });
        if lead < 0.0 {
            v = -v;
        }
        vectors[slot] = v;
    }
    (values, vectors)
}

/// Completes a unit normal to a right-handed orthonormal frame `(t1, t2, n)`.
pub fn orthonormal_tangents(n: &Unit<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vector3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t1 = (axis - n.into_inner() * axis.dot(n)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lsq_recovers_exact_line() {
        let design = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let rhs = DMatrix::from_column_slice(4, 1, &[1.0, 3.0, 5.0, 7.0]);
        let sol = weighted_lsq(&design, &rhs, None, 1e-10);
        assert!(!sol.ridged);
        assert_relative_eq!(sol.coeffs[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(sol.coeffs[(1, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lsq_flags_rank_deficiency() {
        // Two identical columns.
        let design = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let rhs = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let sol = weighted_lsq(&design, &rhs, None, 1e-10);
        assert!(sol.ridged);
        // Regularized solution still reproduces the data closely.
        let fit = &design * &sol.coeffs;
        assert_relative_eq!(fit[(2, 0)], 3.0, epsilon = 1e-4);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = Matrix3::from_diagonal(&Vector3::new(3.0, 1.0, 2.0));
        let (vals, vecs) = sym3_eigen_ascending(&m);
        assert_relative_eq!(vals[0], 1.0);
        assert_relative_eq!(vals[2], 3.0);
        assert_relative_eq!(vecs[0].y.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tangent_frame_is_orthonormal() {
        let n = Unit::new_normalize(Vector3::new(0.3, -0.4, 0.86));
        let (t1, t2) = orthonormal_tangents(&n);
        assert_relative_eq!(t1.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t2.norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(t1.dot(&n), 0.0, epsilon = 1e-12);
        assert_relative_eq!(t2.dot(&n), 0.0, epsilon = 1e-12);
        assert_relative_eq!(t1.cross(&t2).dot(&n), 1.0, epsilon = 1e-12);
    }
}
