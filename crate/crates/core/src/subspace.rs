//! Subspace arithmetic on orthonormal column bases.
//!
//! Every function here takes and returns matrices whose columns are an
//! orthonormal basis of the subspace in question; a matrix with zero columns
//! is the zero subspace.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Thin SVD by one-sided Jacobi (Hestenes) rotations: a = u diag(sigma) v^T
/// with sigma descending and min(nrows, ncols) columns in u and v. Columns of
/// u paired with a zero singular value are left as zero vectors.
///
/// nalgebra's Golub-Kahan SVD can return badly wrong singular subspaces on
/// innocuous inputs (observed: backward error 1.6e-2 on a 4x6 rank-2 matrix
/// with singular values near 1, the reported kernel nowhere near the kernel),
/// and every rank and subspace decision in this crate sits on top of those
/// subspaces. One-sided Jacobi is slower but its convergence is unconditional
/// and its accuracy is easy to certify, so all such decisions route through
/// this function.
pub(crate) fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if m < n {
        let (v, sigma, u) = jacobi_svd(&a.transpose());
        return (u, sigma, v);
    }
    if n == 0 || m == 0 {
        return (DMatrix::zeros(m, n), DVector::zeros(n), DMatrix::zeros(n, n));
    }
    let mut cols: Vec<DVector<f64>> = (0..n).map(|j| a.column(j).into_owned()).collect();
    let mut vcols: Vec<DVector<f64>> = (0..n)
        .map(|j| {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            e
        })
        .collect();
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = cols[p].norm_squared();
                let beta = cols[q].norm_squared();
                let gamma = cols[p].dot(&cols[q]);
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s);
                let (lo, hi) = vcols.split_at_mut(q);
                rotate_pair(&mut lo[p], &mut hi[0], c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));
    let mut u = DMatrix::zeros(m, n);
    let mut sigma = DVector::zeros(n);
    let mut v = DMatrix::zeros(n, n);
    for (slot, &j) in order.iter().enumerate() {
        sigma[slot] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(slot, &cols[j].unscale(norms[j]));
        }
        v.set_column(slot, &vcols[j]);
    }
    (u, sigma, v)
}

fn rotate_pair(x: &mut DVector<f64>, y: &mut DVector<f64>, c: f64, s: f64) {
    for i in 0..x.len() {
        let xi = x[i];
        let yi = y[i];
        x[i] = c * xi - s * yi;
        y[i] = s * xi + c * yi;
    }
}

/// Orthonormal basis of the column space of `m`, via SVD with a relative
/// singular-value cutoff.
pub(crate) fn col_space(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, sigma, _) = jacobi_svd(m);
    let smax = sigma.max();
    let r = sigma.iter().filter(|s| **s > rank_tol * smax).count();
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the null space of `m` (as an operator on R^ncols).
pub fn null_space(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    // V columns beyond the rank span the kernel, but nalgebra's SVD is thin;
    // go through the row space and complement it instead, which works for
    // every shape.
    let row_space = col_space(&m.transpose(), rank_tol);
    orthonormal_complement(&row_space, n)
}

/// Orthonormal basis of the orthogonal complement of span(basis) in R^ambient.
///
/// Greedy Gram-Schmidt completion against standard basis vectors; SVD of the
/// complementary projector is not reliable here because its spectrum is a
/// degenerate {0, 1} cluster.
pub fn orthonormal_complement(basis: &DMatrix<f64>, ambient: usize) -> DMatrix<f64> {
    assert!(basis.ncols() == 0 || basis.nrows() == ambient, "basis rows must match ambient dim");
    let k = basis.ncols();
    if k == 0 {
        return DMatrix::identity(ambient, ambient);
    }
    if k >= ambient {
        return DMatrix::zeros(ambient, 0);
    }
    let mut cols: Vec<DVector<f64>> = (0..k).map(|j| basis.column(j).into_owned()).collect();
    let mut used = vec![false; ambient];
    while cols.len() < ambient {
        // Orthogonalize every unused axis vector (twice, for stability) and
        // keep the one with the largest residual.
        let mut best: Option<(usize, DVector<f64>, f64)> = None;
        for i in 0..ambient {
            if used[i] {
                continue;
            }
            let mut v = DVector::zeros(ambient);
            v[i] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    let d = c.dot(&v);
                    v.axpy(-d, c, 1.0);
                }
            }
            let norm = v.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| norm > *bn) {
                best = Some((i, v, norm));
            }
        }
        let (i, v, norm) = best.expect("unused axis remains while span is proper");
        used[i] = true;
        cols.push(v.unscale(norm));
    }
    DMatrix::from_columns(&cols[k..])
}

/// sigma_max((I - B B^T) A): how far span(A) sticks out of span(B).
/// Zero when span(A) is contained in span(B); an empty A is trivially
/// contained.
pub fn containment_defect(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = if b.ncols() == 0 { a.clone() } else { a - b * (b.transpose() * a) };
    if resid.nrows() == 0 {
        return 0.0;
    }
    let (_, sigma, _) = jacobi_svd(&resid);
    sigma.max()
}

/// Both containments hold up to `tol`.
pub fn subspaces_equal(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    containment_defect(a, b) < tol && containment_defect(b, a) < tol
}

/// Orthonormal basis of span(a) intersect span(b), obtained from the null
/// space of the stacked system [a, -b].
pub fn intersect_spans(a: &DMatrix<f64>, b: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "ambient dims must agree");
    let n = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let mut stacked = DMatrix::zeros(n, a.ncols() + b.ncols());
    stacked.columns_mut(0, a.ncols()).copy_from(a);
    stacked.columns_mut(a.ncols(), b.ncols()).copy_from(&(-b));
    let ns = null_space(&stacked, rank_tol);
    if ns.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    // Map the kernel coefficients back into the ambient space through a.
    let reps = a * ns.rows(0, a.ncols());
    col_space(&reps, rank_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, 1);
        m[(i, 0)] = 1.0;
        m
    }

    #[test]
    fn complement_of_axis() {
        let c = orthonormal_complement(&e(3, 0), 3);
        assert_eq!(c.ncols(), 2);
        assert!(containment_defect(&c, &DMatrix::from_columns(&[e(3, 1).column(0).into_owned(), e(3, 2).column(0).into_owned()])) < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        // 1x3 row (1, 1, 0): kernel is 2-dimensional even though the thin SVD
        // only sees one singular vector.
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
    }

    #[test]
    fn intersection_of_planes() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let i = intersect_spans(&a, &b, 1e-10);
        assert_eq!(i.ncols(), 1);
        assert!(containment_defect(&i, &e(3, 0)) < 1e-10);
    }

    #[test]
    fn jacobi_svd_reconstructs_and_is_orthonormal() {
        // deterministic fill, both orientations, full and deficient rank
        for &(m, n) in &[(5usize, 3usize), (3, 5), (6, 6), (4, 6)] {
            for deficient in [false, true] {
                let mut a = DMatrix::from_fn(m, n, |i, j| ((3 * i + 7 * j + 1) as f64).sin());
                if deficient && n >= 2 {
                    let dup = a.column(0).into_owned();
                    a.set_column(n - 1, &dup);
                }
                let (u, sigma, v) = jacobi_svd(&a);
                let k = m.min(n);
                assert_eq!((u.shape(), sigma.len(), v.shape()), ((m, k), k, (n, k)));
                let rebuilt = &u * DMatrix::from_diagonal(&sigma) * v.transpose();
                assert!((&rebuilt - &a).norm() < 1e-12 * a.norm().max(1.0), "backward error at {m}x{n}");
                assert!(sigma.iter().zip(sigma.iter().skip(1)).all(|(a, b)| a >= b), "descending");
                let r = sigma.iter().filter(|s| **s > 1e-12 * sigma.max()).count();
                let ur = u.columns(0, r).into_owned();
                let vr = v.columns(0, r).into_owned();
                assert!((ur.transpose() * &ur - DMatrix::identity(r, r)).norm() < 1e-13);
                assert!((vr.transpose() * &vr - DMatrix::identity(r, r)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn defect_detects_escape() {
        let a = e(2, 0);
        let b = e(2, 1);
        assert!((containment_defect(&a, &b) - 1.0).abs() < 1e-12);
        assert!(containment_defect(&DMatrix::zeros(2, 0), &b) == 0.0);
    }
}
