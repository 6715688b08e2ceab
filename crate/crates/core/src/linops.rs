//! Rank factorizations, generalized inverses and their block-extension
//! criterion, Fredholm indices, parametrized operator families, and the
//! discretized Neumann boundary-value problem with its Green operator.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::subspace::{self, containment_defect};
use crate::TolerancePolicy;

#[derive(Debug, Clone, PartialEq)]
pub enum LinopsError {
    /// Input contains NaN or infinity.
    NonFinite,
    /// Dimensions do not line up for the requested operation.
    ShapeMismatch(String),
    /// The block extension is numerically singular and cannot certify anything.
    SingularExtension,
    /// Schur recovery needs an invertible lower-right block.
    SingularB22,
    /// The boundary stencils need at least 8 grid points.
    GridTooCoarse,
}

impl fmt::Display for LinopsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite => write!(f, "input contains non-finite entries"),
            Self::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            Self::SingularExtension => write!(f, "block extension is singular"),
            Self::SingularB22 => write!(f, "lower-right block is singular"),
            Self::GridTooCoarse => write!(f, "grid too coarse: need n >= 8"),
        }
    }
}

impl core::error::Error for LinopsError {}

fn check_finite(m: &DMatrix<f64>) -> Result<(), LinopsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(LinopsError::NonFinite)
    }
}

/// T = P . blockdiag(0, core) . Q with P, Q orthogonal, core the invertible
/// diagonal of nonzero singular values. Column blocks of P are
/// [coker_basis | im_basis]; row blocks of Q are [ker_basis | coim_basis]^T.
#[derive(Debug, Clone)]
pub struct RankFactorization {
    pub rank: usize,
    pub nrows: usize,
    pub ncols: usize,
    pub singular_values: Vec<f64>,
    /// n x (n - r), orthonormal.
    pub ker_basis: DMatrix<f64>,
    /// n x r, orthonormal.
    pub coim_basis: DMatrix<f64>,
    /// m x r, orthonormal.
    pub im_basis: DMatrix<f64>,
    /// m x (m - r), orthonormal.
    pub coker_basis: DMatrix<f64>,
    /// r x r compression im^T . T . coim. Recomputed from T rather than taken
    /// as diag(sigma): the singular subspace spans are stable under clustered
    /// singular values, but the u/v pairing is not.
    pub core: DMatrix<f64>,
}

impl RankFactorization {
    /// m x m orthogonal left factor [coker | im].
    pub fn p(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.nrows, self.nrows);
        p.columns_mut(0, self.nrows - self.rank).copy_from(&self.coker_basis);
        p.columns_mut(self.nrows - self.rank, self.rank).copy_from(&self.im_basis);
        p
    }

    /// n x n orthogonal right factor [ker | coim]^T.
    pub fn q(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.ncols, self.ncols);
        q.rows_mut(0, self.ncols - self.rank).copy_from(&self.ker_basis.transpose());
        q.rows_mut(self.ncols - self.rank, self.rank).copy_from(&self.coim_basis.transpose());
        q
    }

    /// m x n middle factor blockdiag(0, core).
    pub fn middle(&self) -> DMatrix<f64> {
        let (m, n, r) = (self.nrows, self.ncols, self.rank);
        let mut mid = DMatrix::zeros(m, n);
        mid.view_mut((m - r, n - r), (r, r)).copy_from(&self.core);
        mid
    }

    /// Orthogonal projector onto the image.
    pub fn pr_im(&self) -> DMatrix<f64> {
        &self.im_basis * self.im_basis.transpose()
    }

    /// Orthogonal projector onto the coimage.
    pub fn pr_coim(&self) -> DMatrix<f64> {
        &self.coim_basis * self.coim_basis.transpose()
    }

    /// Orthogonal projector onto the cokernel.
    pub fn pr_coker(&self) -> DMatrix<f64> {
        &self.coker_basis * self.coker_basis.transpose()
    }
}

/// Factor `t` through its image: SVD-based, with singular values below
/// `rank_tol * sigma_max` treated as zero.
pub fn rank_factorize(t: &DMatrix<f64>, tol: &TolerancePolicy) -> Result<RankFactorization, LinopsError> {
    check_finite(t)?;
    let (m, n) = t.shape();
    let (u, sigma, v) = subspace::jacobi_svd(t);
    let smax = if sigma.len() == 0 { 0.0 } else { sigma.max() };
    let rank = sigma.iter().filter(|s| **s > tol.rank_tol * smax).count();

    let im_basis = u.columns(0, rank).into_owned();
    let coim_basis = v.columns(0, rank).into_owned();
    let coker_basis = subspace::orthonormal_complement(&im_basis, m);
    let ker_basis = subspace::orthonormal_complement(&coim_basis, n);
    let core = im_basis.transpose() * t * &coim_basis;

    Ok(RankFactorization {
        rank,
        nrows: m,
        ncols: n,
        singular_values: sigma.iter().copied().collect(),
        ker_basis,
        coim_basis,
        im_basis,
        coker_basis,
        core,
    })
}

/// Moore-Penrose inverse from the factorization: S = coim . core^-1 . im^T.
/// Satisfies T S T = T, S T S = S, and makes T S, S T the orthogonal
/// projectors onto the image and coimage.
pub fn generalized_inverse(f: &RankFactorization) -> DMatrix<f64> {
    if f.rank == 0 {
        return DMatrix::zeros(f.ncols, f.nrows);
    }
    let core_inv = f.core.clone().try_inverse().expect("core is invertible by construction");
    &f.coim_basis * core_inv * f.im_basis.transpose()
}

/// The square extension [[T, T+], [T-, 0]] of size (m + n - r), where T+
/// injects the cokernel and T- projects onto a kernel complement, together
/// with its inverse [[S, S-], [S+, 0]]. A vanishing lower-right block of the
/// inverse certifies that the recovered S is a reflexive generalized inverse.
#[derive(Debug, Clone)]
pub struct ExtendedBlock {
    pub extended: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// n x m block recovered from the inverse; equals the Moore-Penrose
    /// inverse when `f` came from `rank_factorize(t)`.
    pub s: DMatrix<f64>,
    /// n x (n - r) block; columns span the kernel.
    pub s_minus: DMatrix<f64>,
    /// (m - r) x m block; rows span the cokernel.
    pub s_plus: DMatrix<f64>,
    /// Frobenius norm of the (m - r) x (n - r) lower-right block of the
    /// inverse; ~0 iff the extension certifies reflexivity.
    pub lower_right_norm: f64,
}

/// Build and invert the extension of `t` using the bases from `f`. Passing a
/// factorization of a different matrix is allowed (that is how the negative
/// control works) as long as the shapes agree.
pub fn extend_block(t: &DMatrix<f64>, f: &RankFactorization, tol: &TolerancePolicy) -> Result<ExtendedBlock, LinopsError> {
    check_finite(t)?;
    let (m, n, r) = (f.nrows, f.ncols, f.rank);
    if t.shape() != (m, n) {
        return Err(LinopsError::ShapeMismatch(format!(
            "matrix is {}x{}, factorization is {}x{}",
            t.nrows(),
            t.ncols(),
            m,
            n
        )));
    }
    let size = m + n - r;
    let mut ext = DMatrix::zeros(size, size);
    ext.view_mut((0, 0), (m, n)).copy_from(t);
    ext.view_mut((0, n), (m, m - r)).copy_from(&f.coker_basis);
    ext.view_mut((m, 0), (n - r, n)).copy_from(&f.ker_basis.transpose());

    let inverse = ext.clone().try_inverse().ok_or(LinopsError::SingularExtension)?;
    // LU "succeeds" on numerically singular inputs by producing enormous
    // entries; a residual certificate is cheaper and sharper than a
    // singular-value precheck.
    let resid = (&ext * &inverse - DMatrix::identity(size, size)).amax();
    if !resid.is_finite() || resid > (100.0 * tol.rank_tol).max(1e-12) {
        return Err(LinopsError::SingularExtension);
    }

    let s = inverse.view((0, 0), (n, m)).into_owned();
    let s_minus = inverse.view((0, m), (n, n - r)).into_owned();
    let s_plus = inverse.view((n, 0), (m - r, m)).into_owned();
    let lower_right_norm = inverse.view((n, m), (m - r, n - r)).norm();

    Ok(ExtendedBlock { extended: ext, inverse, s, s_minus, s_plus, lower_right_norm })
}

/// Recover the inverse of the leading block from the inverse of the whole:
/// given B = A^-1 partitioned at `split`, A11^-1 = B11 - B12 B22^-1 B21.
pub fn schur_recover(b: &DMatrix<f64>, split: usize, tol: &TolerancePolicy) -> Result<DMatrix<f64>, LinopsError> {
    check_finite(b)?;
    let k = b.nrows();
    if b.ncols() != k || split == 0 || split >= k {
        return Err(LinopsError::ShapeMismatch(format!("need square matrix with 0 < split < {k}")));
    }
    let b11 = b.view((0, 0), (split, split));
    let b12 = b.view((0, split), (split, k - split));
    let b21 = b.view((split, 0), (k - split, split));
    let b22 = b.view((split, split), (k - split, k - split)).into_owned();

    let b22_inv = b22.clone().try_inverse().ok_or(LinopsError::SingularB22)?;
    let resid = (&b22 * &b22_inv - DMatrix::identity(k - split, k - split)).amax();
    if !resid.is_finite() || resid > (100.0 * tol.rank_tol).max(1e-12) {
        return Err(LinopsError::SingularB22);
    }
    Ok(b11.into_owned() - b12 * b22_inv * b21)
}

/// dim Ker - dim Coker = n - m; depends only on the shape in finite
/// dimensions, which is exactly the content of index stability.
pub fn fredholm_index(f: &RankFactorization) -> i64 {
    (f.ncols - f.rank) as i64 - (f.nrows - f.rank) as i64
}

/// A one-parameter family of operators with a distinguished base parameter.
pub struct OperatorFamily {
    pub base: f64,
    eval: Box<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
}

impl OperatorFamily {
    pub fn new(base: f64, eval: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { base, eval: Box::new(eval) }
    }

    pub fn eval(&self, p: f64) -> DMatrix<f64> {
        (self.eval)(p)
    }
}

/// L_r(g) = g - r x g' on polynomial coefficients up to `degree`: exactly the
/// diagonal matrix diag(1 - r n), so the kernel at r = 1/n is the monomial
/// x^n and everything about this family is exact.
pub fn monomial_derivative_family(degree: usize) -> OperatorFamily {
    OperatorFamily::new(0.0, move |r| {
        DMatrix::from_diagonal(&DVector::from_iterator(
            degree + 1,
            (0..=degree).map(|k| 1.0 - r * k as f64),
        ))
    })
}

/// Per-parameter diagnostics for a family relative to its base factorization.
#[derive(Debug, Clone)]
pub struct RegularityPoint {
    pub param: f64,
    /// Condition number of the compressed operator pr_Im0 . T_p |_Coim0;
    /// infinite when singular.
    pub core_condition: f64,
    pub invertible: bool,
    /// Ker T_p contained in Ker T_0 (upper semicontinuity of kernels).
    pub ker_contained: bool,
    /// Im T_p contains Im T_0 (lower semicontinuity of images).
    pub im_contains: bool,
    /// Ambient-space basis of the compressed operator's kernel, present when
    /// the compression is singular.
    pub tilde_kernel: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub base_rank: usize,
    /// The compressed operator is invertible at every grid parameter.
    pub uniformly_regular: bool,
    pub points: Vec<RegularityPoint>,
}

/// Uniform regularity of a family at its base point: compress each T_p
/// between the base coimage and image and test invertibility. The kernel and
/// image containments are reported as diagnostics per point; they are
/// consequences one expects of a uniformly regular family, not extra inputs.
pub fn family_uniform_regular(
    family: &OperatorFamily,
    grid: &[f64],
    tol: &TolerancePolicy,
) -> Result<RegularityReport, LinopsError> {
    let base = family.eval(family.base);
    check_finite(&base)?;
    let f0 = rank_factorize(&base, tol)?;
    let r = f0.rank;

    let mut points = Vec::with_capacity(grid.len());
    let mut uniformly_regular = true;
    for &p in grid {
        let tp = family.eval(p);
        check_finite(&tp)?;
        if tp.shape() != (f0.nrows, f0.ncols) {
            return Err(LinopsError::ShapeMismatch(format!("family changes shape at p = {p}")));
        }
        let tilde = f0.im_basis.transpose() * &tp * &f0.coim_basis;
        let (invertible, core_condition, tilde_kernel) = if r == 0 {
            (true, 1.0, None)
        } else {
            let (_, sigma, _) = subspace::jacobi_svd(&tilde);
            let smax = sigma.max();
            let smin = sigma.min();
            if smin > tol.rank_tol * smax && smax > 0.0 {
                (true, smax / smin, None)
            } else {
                let ns = subspace::null_space(&tilde, tol.rank_tol);
                (false, f64::INFINITY, Some(&f0.coim_basis * ns))
            }
        };
        uniformly_regular &= invertible;

        let fp = rank_factorize(&tp, tol)?;
        let ker_contained = containment_defect(&fp.ker_basis, &f0.ker_basis) < tol.residual_tol;
        let im_contains = containment_defect(&f0.im_basis, &fp.im_basis) < tol.residual_tol;

        points.push(RegularityPoint { param: p, core_condition, invertible, ker_contained, im_contains, tilde_kernel });
    }

    Ok(RegularityReport { base_rank: r, uniformly_regular, points })
}

#[derive(Debug, Clone)]
pub struct IndexStabilityReport {
    pub indices: Vec<(f64, i64)>,
    pub constant: bool,
}

/// The Fredholm index across the grid; constant for any family of fixed
/// shape, which the report certifies.
pub fn index_stability(family: &OperatorFamily, grid: &[f64], tol: &TolerancePolicy) -> Result<IndexStabilityReport, LinopsError> {
    let mut indices = Vec::with_capacity(grid.len());
    for &p in grid {
        let tp = family.eval(p);
        check_finite(&tp)?;
        let f = rank_factorize(&tp, tol)?;
        indices.push((p, fredholm_index(&f)));
    }
    let constant = indices.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(IndexStabilityReport { indices, constant })
}

/// Discretization of u'' on [0, 1] under Neumann conditions u'(0) = u'(1) = 0,
/// together with the quadrature Green operator
///   S(f)(x) = x I[0,x](f) - I[0,x](y f) - (x^2 + 1)/2 I[0,1](f) + I[0,1](y f).
/// Both identities S T u = u - u(1) (for constrained u) and
/// T S f = f - I[0,1](f) hold with sup error O(h^2).
#[derive(Debug, Clone)]
pub struct BvpDiscretization {
    pub n: usize,
    pub h: f64,
    t_disc: DMatrix<f64>,
    s_disc: DMatrix<f64>,
    /// 2 x n one-sided first-derivative stencils encoding the Neumann
    /// constraint.
    constraint: DMatrix<f64>,
}

impl BvpDiscretization {
    pub fn grid(&self) -> Vec<f64> {
        (0..self.n).map(|i| i as f64 * self.h).collect()
    }

    pub fn t_matrix(&self) -> &DMatrix<f64> {
        &self.t_disc
    }

    pub fn s_matrix(&self) -> &DMatrix<f64> {
        &self.s_disc
    }

    pub fn apply_t(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.t_disc * u
    }

    pub fn apply_s(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.s_disc * f
    }

    /// Euclidean projection onto the discrete Neumann-constrained subspace;
    /// inputs violating u'(0) = u'(1) = 0 must pass through here before the
    /// S T identity applies.
    pub fn project_constrained(&self, u: &DVector<f64>) -> DVector<f64> {
        let b = &self.constraint;
        let gram = b * b.transpose();
        let coeff = gram.lu().solve(&(b * u)).expect("2x2 Gram of independent stencils");
        u - b.transpose() * coeff
    }

    /// Residual of the Neumann constraint at both endpoints.
    pub fn constraint_residual(&self, u: &DVector<f64>) -> f64 {
        (&self.constraint * u).norm()
    }
}

/// Build the discretization on n uniformly spaced points (h = 1/(n-1)).
pub fn bvp_green(n: usize) -> Result<BvpDiscretization, LinopsError> {
    if n < 8 {
        return Err(LinopsError::GridTooCoarse);
    }
    let h = 1.0 / (n - 1) as f64;
    let h2 = h * h;

    // Second difference in the interior, second-order one-sided stencils at
    // the ends so T is O(h^2) on any smooth function.
    let mut t = DMatrix::zeros(n, n);
    for i in 1..n - 1 {
        t[(i, i - 1)] = 1.0 / h2;
        t[(i, i)] = -2.0 / h2;
        t[(i, i + 1)] = 1.0 / h2;
    }
    t[(0, 0)] = 2.0 / h2;
    t[(0, 1)] = -5.0 / h2;
    t[(0, 2)] = 4.0 / h2;
    t[(0, 3)] = -1.0 / h2;
    t[(n - 1, n - 1)] = 2.0 / h2;
    t[(n - 1, n - 2)] = -5.0 / h2;
    t[(n - 1, n - 3)] = 4.0 / h2;
    t[(n - 1, n - 4)] = -1.0 / h2;

    // Composite trapezoid weights: full-interval row and one cumulative row
    // per node. Exact on linear integrands, which makes S(1) vanish exactly.
    let full: Vec<f64> = (0..n).map(|j| if j == 0 || j == n - 1 { h / 2.0 } else { h }).collect();
    debug_assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let x = |i: usize| i as f64 * h;
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = x(i);
        for j in 0..n {
            let cum = if i == 0 || j > i {
                0.0
            } else if j == 0 || j == i {
                h / 2.0
            } else {
                h
            };
            s[(i, j)] = xi * cum - cum * x(j) - 0.5 * (xi * xi + 1.0) * full[j] + full[j] * x(j);
        }
    }

    let mut constraint = DMatrix::zeros(2, n);
    constraint[(0, 0)] = -3.0 / (2.0 * h);
    constraint[(0, 1)] = 4.0 / (2.0 * h);
    constraint[(0, 2)] = -1.0 / (2.0 * h);
    constraint[(1, n - 1)] = 3.0 / (2.0 * h);
    constraint[(1, n - 2)] = -4.0 / (2.0 * h);
    constraint[(1, n - 3)] = 1.0 / (2.0 * h);

    Ok(BvpDiscretization { n, h, t_disc: t, s_disc: s, constraint })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn pseudoinverse_of_diagonal() {
        let t = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let f = rank_factorize(&t, &tol()).unwrap();
        assert_eq!(f.rank, 1);
        let s = generalized_inverse(&f);
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((s - expect).norm() < 1e-12);
    }

    #[test]
    fn pseudoinverse_of_ones() {
        let t = DMatrix::from_element(2, 2, 1.0);
        let f = rank_factorize(&t, &tol()).unwrap();
        assert_eq!(f.rank, 1);
        let s = generalized_inverse(&f);
        assert!((s - DMatrix::from_element(2, 2, 0.25)).norm() < 1e-12);
        // image is the diagonal direction
        let d = DMatrix::from_column_slice(2, 1, &[1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        assert!(containment_defect(&f.im_basis, &d) < 1e-12);
    }

    #[test]
    fn factorization_reassembles() {
        let t = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0, 0.0, 1.0, 0.0, -1.0]);
        let f = rank_factorize(&t, &tol()).unwrap();
        let rebuilt = f.p() * f.middle() * f.q();
        assert!((&rebuilt - &t).norm() < 1e-10);
        // projector identities T S = pr_im, S T = pr_coim
        let s = generalized_inverse(&f);
        assert!(((&t * &s) - f.pr_im()).norm() < 1e-10);
        assert!(((&s * &t) - f.pr_coim()).norm() < 1e-10);
    }

    #[test]
    fn zero_matrix_edge_case() {
        let t = DMatrix::zeros(3, 2);
        let f = rank_factorize(&t, &tol()).unwrap();
        assert_eq!(f.rank, 0);
        assert_eq!(generalized_inverse(&f), DMatrix::zeros(2, 3));
        assert_eq!(fredholm_index(&f), -1);
    }

    #[test]
    fn extension_of_diag_3_0() {
        let t = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let f = rank_factorize(&t, &tol()).unwrap();
        let ext = extend_block(&t, &f, &tol()).unwrap();
        assert_eq!(ext.extended.nrows(), 3);
        assert!(ext.lower_right_norm < 1e-12);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0 / 3.0, 0.0, 0.0, 0.0]);
        assert!((&ext.s - &expect).norm() < 1e-12);
        // recovered side blocks span kernel and cokernel
        assert!(containment_defect(&ext.s_minus, &f.ker_basis) < 1e-12);
        assert!(containment_defect(&ext.s_plus.transpose(), &f.coker_basis) < 1e-12);
    }

    #[test]
    fn extension_negative_control() {
        // Perturb the matrix in the coker x ker direction but keep the old
        // bases: the inverse's lower-right block becomes order epsilon.
        let t = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0]);
        let f = rank_factorize(&t, &tol()).unwrap();
        let mut t_pert = t.clone();
        t_pert[(1, 1)] = 1e-3;
        let ext = extend_block(&t_pert, &f, &tol()).unwrap();
        assert!(ext.lower_right_norm > 1e-10, "lower right = {}", ext.lower_right_norm);
    }

    #[test]
    fn non_finite_rejected() {
        let t = DMatrix::from_row_slice(1, 2, &[f64::NAN, 1.0]);
        assert_eq!(rank_factorize(&t, &tol()).unwrap_err(), LinopsError::NonFinite);
    }

    #[test]
    fn schur_recovers_leading_inverse() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 1.0]);
        let b = a.clone().try_inverse().unwrap();
        let a11_inv = schur_recover(&b, 2, &tol()).unwrap();
        let expect = a.view((0, 0), (2, 2)).into_owned().try_inverse().unwrap();
        assert!((&a11_inv - &expect).norm() < 1e-12);
        assert!((expect - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).norm() < 1e-12);
    }

    #[test]
    fn schur_rejects_singular_b22() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(schur_recover(&b, 1, &tol()).unwrap_err(), LinopsError::SingularB22);
    }

    #[test]
    fn diag_one_p_family_is_uniformly_regular() {
        // 2x2 hand computation: T_p = diag(1, p) at base 0. The compression
        // onto the base coimage/image is the 1x1 matrix [1] for every p, so
        // the family is uniformly regular, and both containment diagnostics
        // hold at every parameter.
        let fam = OperatorFamily::new(0.0, |p| DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, p]));
        let grid: Vec<f64> = (-5..=5).map(|k| k as f64 / 5.0).collect();
        let rep = family_uniform_regular(&fam, &grid, &tol()).unwrap();
        assert_eq!(rep.base_rank, 1);
        assert!(rep.uniformly_regular);
        for pt in &rep.points {
            assert!(pt.invertible);
            assert!((pt.core_condition - 1.0).abs() < 1e-12);
            assert!(pt.ker_contained, "kernel containment at p = {}", pt.param);
            assert!(pt.im_contains, "image containment at p = {}", pt.param);
        }
    }

    #[test]
    fn containment_diagnostics_can_fail_independently() {
        // T_p = [[1, p], [0, 0]]: the compression stays [1] (invertible) but
        // the kernel rotates out of the base kernel for p != 0, so the
        // containment flags really are independent diagnostics.
        let fam = OperatorFamily::new(0.0, |p| DMatrix::from_row_slice(2, 2, &[1.0, p, 0.0, 0.0]));
        let rep = family_uniform_regular(&fam, &[0.0, 0.5], &tol()).unwrap();
        assert!(rep.uniformly_regular);
        assert!(rep.points[0].ker_contained);
        assert!(!rep.points[1].ker_contained);
    }

    #[test]
    fn monomial_family_singularities() {
        let deg = 10;
        let fam = monomial_derivative_family(deg);
        for n in 1..=deg {
            let r = 1.0 / n as f64;
            let rep = family_uniform_regular(&fam, &[r], &tol()).unwrap();
            let pt = &rep.points[0];
            assert!(!pt.invertible, "expected singular compression at r = 1/{n}");
            let kern = pt.tilde_kernel.as_ref().unwrap();
            assert_eq!(kern.ncols(), 1);
            // kernel vector is the monomial x^n up to sign
            let mut expect = DMatrix::zeros(deg + 1, 1);
            expect[(n, 0)] = 1.0;
            let dot: f64 = kern.column(0).dot(&expect.column(0));
            assert!((dot.abs() - 1.0).abs() < 1e-10);
        }
        // away from the reciprocals the family is regular
        let rep = family_uniform_regular(&fam, &[0.05, -0.3, 0.123], &tol()).unwrap();
        assert!(rep.uniformly_regular);
    }

    #[test]
    fn index_is_stable() {
        let fam = OperatorFamily::new(0.0, |p| DMatrix::from_row_slice(2, 3, &[1.0, 0.0, p, 0.0, p, 0.0]));
        let rep = index_stability(&fam, &[-1.0, 0.0, 0.5, 2.0], &tol()).unwrap();
        assert!(rep.constant);
        assert!(rep.indices.iter().all(|&(_, i)| i == 1));
    }

    #[test]
    fn bvp_rejects_coarse_grid() {
        assert_eq!(bvp_green(4).unwrap_err(), LinopsError::GridTooCoarse);
    }

    #[test]
    fn bvp_s_annihilates_constants() {
        let d = bvp_green(64).unwrap();
        let ones = DVector::from_element(64, 1.0);
        assert!(d.apply_s(&ones).amax() < 1e-12);
    }

    #[test]
    fn bvp_green_matches_closed_form() {
        // u'' = cos(pi x) with Neumann data and u(1) = 0 has
        // u = -(cos(pi x) + 1)/pi^2.
        let n = 128;
        let d = bvp_green(n).unwrap();
        let pi = core::f64::consts::PI;
        let f = DVector::from_iterator(n, d.grid().iter().map(|x| (pi * x).cos()));
        let u = d.apply_s(&f);
        let h = d.h;
        let max_err = d
            .grid()
            .iter()
            .zip(u.iter())
            .map(|(x, ui)| (ui - (-((pi * x).cos() + 1.0) / (pi * pi))).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 5.0 * h * h, "err {max_err} vs bound {}", 5.0 * h * h);
    }

    #[test]
    fn bvp_projection_enforces_constraint() {
        let n = 64;
        let d = bvp_green(n).unwrap();
        // u = (x-1)^2 violates u'(0) = 0
        let u = DVector::from_iterator(n, d.grid().iter().map(|x| (x - 1.0) * (x - 1.0)));
        assert!(d.constraint_residual(&u) > 1.0);
        let v = d.project_constrained(&u);
        assert!(d.constraint_residual(&v) < 1e-10);
    }
}
