//! Momentum maps for linear symplectic actions of compact groups and the
//! pointwise machinery of singular reduction: symplectic orthogonals, fixed
//! point subspaces, bifurcation-lemma identities, Witt-Artin splittings, the
//! quadratic singular momentum model on the slice, and orbit-type strata of
//! the zero level set.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

pub use crate::group::{matrix_exp, CompactGroupSpec, GroupKind, GroupSample};
use crate::linops;
use crate::sample::rng_from_seed;
use crate::subspace::{col_space, intersect_spans, null_space, orthonormal_complement, subspaces_equal};
use crate::TolerancePolicy;

/// Residual target for Newton projection onto the zero level set.
pub const ZERO_LEVEL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum SymredError {
    DimMismatch(String),
    /// The restriction of omega to a subspace that should be symplectic is
    /// singular.
    DegenerateRestriction,
    /// No sample point could be projected onto the zero level set.
    NoSamplesFound,
}

impl fmt::Display for SymredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimMismatch(s) => write!(f, "dimension mismatch: {s}"),
            Self::DegenerateRestriction => write!(f, "restricted symplectic form is degenerate"),
            Self::NoSamplesFound => write!(f, "no sample converged onto the zero level set"),
        }
    }
}

impl core::error::Error for SymredError {}

/// A linear symplectic G-space: a form omega on R^dim, infinitesimal
/// generators of the action, structure constants c^c_{ab} (one k x k matrix
/// per upper index), an inner product kappa on the Lie algebra, and the
/// group description used for Haar averages and orbit sampling.
pub struct LinearSymplecticSystem {
    pub dim: usize,
    pub omega: DMatrix<f64>,
    pub generators: Vec<DMatrix<f64>>,
    pub structure: Vec<DMatrix<f64>>,
    pub kappa: DMatrix<f64>,
    pub group: CompactGroupSpec,
}

/// Defects of the structural identities a system is supposed to satisfy.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub omega_antisymmetry: f64,
    pub omega_invertible: bool,
    pub infinitesimally_symplectic: f64,
    pub commutator_defect: f64,
    pub kappa_symmetry: f64,
}

impl ValidationReport {
    pub fn ok(&self, tol: &TolerancePolicy) -> bool {
        self.omega_invertible
            && self.omega_antisymmetry <= tol.residual_tol
            && self.infinitesimally_symplectic <= tol.residual_tol
            && self.commutator_defect <= tol.residual_tol
            && self.kappa_symmetry <= tol.residual_tol
    }
}

impl LinearSymplecticSystem {
    pub fn algebra_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn validate(&self) -> Result<ValidationReport, SymredError> {
        let n = self.dim;
        if self.omega.shape() != (n, n) {
            return Err(SymredError::DimMismatch(format!("omega is {}x{}", self.omega.nrows(), self.omega.ncols())));
        }
        let k = self.algebra_dim();
        if self.structure.len() != k || self.kappa.shape() != (k, k) {
            return Err(SymredError::DimMismatch("structure constants or kappa do not match algebra dimension".into()));
        }
        for xi in &self.generators {
            if xi.shape() != (n, n) {
                return Err(SymredError::DimMismatch("generator shape".into()));
            }
        }
        let omega_antisymmetry = (&self.omega + self.omega.transpose()).norm();
        let omega_invertible = self.omega.clone().try_inverse().is_some();
        let mut infsym: f64 = 0.0;
        for xi in &self.generators {
            infsym = infsym.max((xi.transpose() * &self.omega + &self.omega * xi).norm());
        }
        let mut comm: f64 = 0.0;
        for a in 0..k {
            for b in 0..k {
                let bracket = &self.generators[a] * &self.generators[b] - &self.generators[b] * &self.generators[a];
                let mut rhs = DMatrix::zeros(n, n);
                for c in 0..k {
                    rhs += self.generators[c].scale(self.structure[c][(a, b)]);
                }
                comm = comm.max((bracket - rhs).norm());
            }
        }
        let kappa_symmetry = (&self.kappa - self.kappa.transpose()).norm();
        Ok(ValidationReport {
            omega_antisymmetry,
            omega_invertible,
            infinitesimally_symplectic: infsym,
            commutator_defect: comm,
            kappa_symmetry,
        })
    }

    /// Quadratic momentum component: J_a(x) = (1/2) x^T omega xi_a x.
    pub fn momentum(&self, a: usize, x: &DVector<f64>) -> f64 {
        0.5 * (x.transpose() * &self.omega * (&self.generators[a] * x))[(0, 0)]
    }

    pub fn momentum_vector(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.algebra_dim(), (0..self.algebra_dim()).map(|a| self.momentum(a, x)))
    }

    /// Row a is the gradient of J_a at x, which is omega xi_a x.
    pub fn momentum_jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let k = self.algebra_dim();
        let mut dj = DMatrix::zeros(k, self.dim);
        for a in 0..k {
            dj.set_row(a, &(&self.omega * (&self.generators[a] * x)).transpose());
        }
        dj
    }

    /// Columns are the orbit directions xi_a x.
    pub fn orbit_map(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let k = self.algebra_dim();
        let mut g = DMatrix::zeros(self.dim, k);
        for a in 0..k {
            g.set_column(a, &(&self.generators[a] * x));
        }
        g
    }

    /// Max defect of omega(xi x, v) + <grad J_xi(x), v> = 0 over random
    /// sample pairs; zero up to roundoff for any antisymmetric omega.
    pub fn momentum_relation_defect(&self, n_samples: usize, seed: u64) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_samples {
            let x = DVector::from_fn(self.dim, |_, _| rng.gen_range(-1.0..1.0));
            let v = DVector::from_fn(self.dim, |_, _| rng.gen_range(-1.0..1.0));
            for a in 0..self.algebra_dim() {
                let xix = &self.generators[a] * &x;
                let pairing = (xix.transpose() * &self.omega * &v)[(0, 0)];
                let grad = &self.omega * (&self.generators[a] * &x);
                worst = worst.max((pairing + grad.dot(&v)).abs());
            }
        }
        worst
    }
}

/// Symplectic orthogonal V^omega = { w : omega(v, w) = 0 for all v in V },
/// returned as an orthonormal basis.
pub fn symplectic_orthogonal(omega: &DMatrix<f64>, v_basis: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    null_space(&(v_basis.transpose() * omega), rank_tol)
}

/// Fixed point subspace of the action with the restricted form, which must
/// be nondegenerate.
pub struct FixedPointData {
    pub basis: DMatrix<f64>,
    pub restricted_omega: DMatrix<f64>,
}

pub fn fixed_point_decomposition(sys: &LinearSymplecticSystem, tol: &TolerancePolicy) -> Result<FixedPointData, SymredError> {
    let basis = sys.group.fixed_space(tol.rank_tol);
    let restricted = basis.transpose() * &sys.omega * &basis;
    if basis.ncols() > 0 {
        let (_, sigma, _) = crate::subspace::jacobi_svd(&restricted);
        let smax = sigma.max();
        let smin = sigma.min();
        if smax <= 0.0 || smin <= tol.rank_tol * smax {
            return Err(SymredError::DegenerateRestriction);
        }
    }
    Ok(FixedPointData { basis, restricted_omega: restricted })
}

/// The pointwise identities behind the bifurcation lemma, each reported as a
/// boolean with its numeric defect left to the bases involved.
#[derive(Debug)]
pub struct BifurcationReport {
    pub momentum_value: DVector<f64>,
    pub ker_dj: DMatrix<f64>,
    pub orbit_omega_perp: DMatrix<f64>,
    pub stabilizer_algebra: DMatrix<f64>,
    pub g_mu_basis: DMatrix<f64>,
    /// Ker DJ(m) equals the omega-orthogonal of the orbit direction space.
    pub kernel_identity: bool,
    /// The stabilizer algebra annihilates exactly the image of DJ(m).
    pub image_identity: bool,
    /// Ker DJ(m) meets its own omega-orthogonal in the g_mu orbit directions.
    pub degeneracy_identity: bool,
}

impl BifurcationReport {
    pub fn all_hold(&self) -> bool {
        self.kernel_identity && self.image_identity && self.degeneracy_identity
    }
}

/// Basis of the coadjoint stabilizer algebra g_mu at mu.
pub fn coadjoint_stabilizer(structure: &[DMatrix<f64>], mu: &DVector<f64>, rank_tol: f64) -> DMatrix<f64> {
    let k = structure.len();
    if k == 0 {
        return DMatrix::identity(0, 0);
    }
    let mut m = DMatrix::zeros(k, k);
    for b in 0..k {
        for a in 0..k {
            let mut s = 0.0;
            for c in 0..k {
                s += structure[c][(a, b)] * mu[c];
            }
            m[(b, a)] = s;
        }
    }
    null_space(&m, rank_tol)
}

pub fn bifurcation_check(sys: &LinearSymplecticSystem, m: &DVector<f64>, tol: &TolerancePolicy) -> Result<BifurcationReport, SymredError> {
    if m.len() != sys.dim {
        return Err(SymredError::DimMismatch("point dimension".into()));
    }
    let dj = sys.momentum_jacobian(m);
    let ker_dj = null_space(&dj, tol.rank_tol);
    let orbit = sys.orbit_map(m);
    let orbit_basis = col_space(&orbit, tol.rank_tol);
    let orbit_omega_perp = symplectic_orthogonal(&sys.omega, &orbit_basis, tol.rank_tol);
    let kernel_identity = subspaces_equal(&ker_dj, &orbit_omega_perp, tol.residual_tol);

    let stabilizer_algebra = null_space(&orbit, tol.rank_tol);
    let im_perp = null_space(&dj.transpose(), tol.rank_tol);
    let image_identity = subspaces_equal(&stabilizer_algebra, &im_perp, tol.residual_tol);

    let mu = sys.momentum_vector(m);
    let g_mu_basis = coadjoint_stabilizer(&sys.structure, &mu, tol.rank_tol);
    let gmu_orbit = col_space(&(&orbit * &g_mu_basis), tol.rank_tol);
    let ker_cap = intersect_spans(&ker_dj, &symplectic_orthogonal(&sys.omega, &ker_dj, tol.rank_tol), tol.rank_tol);
    let degeneracy_identity = subspaces_equal(&ker_cap, &gmu_orbit, tol.residual_tol);

    Ok(BifurcationReport {
        momentum_value: mu,
        ker_dj,
        orbit_omega_perp,
        stabilizer_algebra,
        g_mu_basis,
        kernel_identity,
        image_identity,
        degeneracy_identity,
    })
}

/// Witt-Artin style splitting at a point: the slice T_mS orthogonal to the
/// g_mu orbit direction, the symplectic subspace E inside it, the projected
/// residual orbit directions, and a complement F.
#[derive(Debug)]
pub struct WittArtinData {
    pub gmu_orbit: DMatrix<f64>,
    pub slice_basis: DMatrix<f64>,
    pub e_basis: DMatrix<f64>,
    pub q_orbit: DMatrix<f64>,
    pub f_basis: DMatrix<f64>,
    pub stabilizer_dim: usize,
}

impl WittArtinData {
    /// (dim q-orbit part, dim g_mu orbit, dim E, dim F).
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.q_orbit.ncols(), self.gmu_orbit.ncols(), self.e_basis.ncols(), self.f_basis.ncols())
    }

    /// E carries a symplectic form, so its dimension is even.
    pub fn parity_ok(&self) -> bool {
        self.e_basis.ncols() % 2 == 0
    }
}

pub fn witt_artin(sys: &LinearSymplecticSystem, m: &DVector<f64>, tol: &TolerancePolicy) -> Result<WittArtinData, SymredError> {
    if m.len() != sys.dim {
        return Err(SymredError::DimMismatch("point dimension".into()));
    }
    let orbit = sys.orbit_map(m);
    let stabilizer_algebra = null_space(&orbit, tol.rank_tol);
    let mu = sys.momentum_vector(m);
    let g_mu = coadjoint_stabilizer(&sys.structure, &mu, tol.rank_tol);
    let gmu_orbit = col_space(&(&orbit * &g_mu), tol.rank_tol);
    let slice_basis = orthonormal_complement(&gmu_orbit, sys.dim);

    let dj = sys.momentum_jacobian(m);
    let ker_dj = null_space(&dj, tol.rank_tol);
    let e_basis = intersect_spans(&slice_basis, &ker_dj, tol.rank_tol);

    // kappa-orthogonal complement q of g_mu inside g, pushed to orbit
    // directions and projected into the slice.
    let k = sys.algebra_dim();
    let q_alg = if g_mu.ncols() == 0 {
        DMatrix::identity(k, k)
    } else {
        null_space(&(g_mu.transpose() * &sys.kappa), tol.rank_tol)
    };
    let q_dirs = &orbit * &q_alg;
    let projected = &q_dirs - &gmu_orbit * (gmu_orbit.transpose() * &q_dirs);
    let q_orbit = col_space(&projected, tol.rank_tol);

    // complement of E + q-orbit inside the slice, computed in slice
    // coordinates
    let s = slice_basis.ncols();
    let mut joined = DMatrix::zeros(s, e_basis.ncols() + q_orbit.ncols());
    joined.columns_mut(0, e_basis.ncols()).copy_from(&(slice_basis.transpose() * &e_basis));
    joined
        .columns_mut(e_basis.ncols(), q_orbit.ncols())
        .copy_from(&(slice_basis.transpose() * &q_orbit));
    let joined_basis = col_space(&joined, tol.rank_tol);
    let f_in_slice = orthonormal_complement(&joined_basis, s);
    let f_basis = &slice_basis * f_in_slice;

    Ok(WittArtinData {
        gmu_orbit,
        slice_basis,
        e_basis,
        q_orbit,
        f_basis,
        stabilizer_dim: stabilizer_algebra.ncols(),
    })
}

/// Quadratic singular momentum model on the symplectic slice piece E:
/// J_sing(e)_a = (1/2) e^T (omega_bar xi_bar_a) e in E-coordinates.
pub struct SliceMomentumModel {
    pub e_basis: DMatrix<f64>,
    pub omega_bar: DMatrix<f64>,
    pub xi_bar: Vec<DMatrix<f64>>,
}

impl SliceMomentumModel {
    pub fn j_sing(&self, e_coords: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.xi_bar.len(),
            self.xi_bar
                .iter()
                .map(|xb| 0.5 * (e_coords.transpose() * &self.omega_bar * (xb * e_coords))[(0, 0)]),
        )
    }
}

pub fn mgs_at(sys: &LinearSymplecticSystem, m: &DVector<f64>, tol: &TolerancePolicy) -> Result<SliceMomentumModel, SymredError> {
    let wa = witt_artin(sys, m, tol)?;
    let eb = wa.e_basis;
    let omega_bar = eb.transpose() * &sys.omega * &eb;
    let xi_bar = sys.generators.iter().map(|xi| eb.transpose() * xi * &eb).collect();
    Ok(SliceMomentumModel { e_basis: eb, omega_bar, xi_bar })
}

/// One point of the zero level set with its orbit-type label.
#[derive(Debug, Clone)]
pub struct OrbitTypeSample {
    pub point: DVector<f64>,
    /// (dimension of the stabilizer algebra, number of sampled group
    /// elements fixing the point).
    pub label: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct StratumSummary {
    pub label: (usize, usize),
    pub count: usize,
    /// omega restricted to the stabilizer-fixed part of the slice piece E at
    /// a representative point.
    pub reduced_form: DMatrix<f64>,
    pub reduced_dim: usize,
}

pub struct ReducedSpace {
    pub samples: Vec<OrbitTypeSample>,
    pub strata: Vec<StratumSummary>,
}

/// Project random seeds onto { J = 0 } by Newton with the pseudoinverse of
/// DJ, label every converged point by orbit type, and compute the reduced
/// form on each stratum.
pub fn reduce_zero_level(
    sys: &LinearSymplecticSystem,
    n_samples: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<ReducedSpace, SymredError> {
    let k = sys.algebra_dim();
    let mut rng = rng_from_seed(seed);
    let mut candidates: Vec<DVector<f64>> = vec![DVector::zeros(sys.dim)];
    for _ in 0..n_samples {
        candidates.push(DVector::from_fn(sys.dim, |_, _| rng.gen_range(-1.5..1.5)));
    }

    let group_samples = sys.group.sampled_elements();
    let mut samples = Vec::new();
    for mut x in candidates {
        let mut converged = k == 0;
        if !converged {
            for _ in 0..100 {
                let j = sys.momentum_vector(&x);
                if j.norm() < ZERO_LEVEL_TOL {
                    converged = true;
                    break;
                }
                let dj = sys.momentum_jacobian(&x);
                let Ok(fact) = linops::rank_factorize(&dj, tol) else { break };
                x -= linops::generalized_inverse(&fact) * j;
            }
        }
        if !converged {
            continue;
        }
        let alg_dim = if k == 0 { 0 } else { null_space(&sys.orbit_map(&x), tol.rank_tol).ncols() };
        let fix_count = group_samples
            .iter()
            .filter(|s| (&s.dom * &x - &x).norm() <= 1e-8 * (1.0 + x.norm()))
            .count();
        samples.push(OrbitTypeSample { point: x, label: (alg_dim, fix_count) });
    }
    if samples.is_empty() {
        return Err(SymredError::NoSamplesFound);
    }

    let mut labels: Vec<(usize, usize)> = samples.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    labels.dedup();

    let mut strata = Vec::new();
    for label in labels {
        let rep = samples.iter().find(|s| s.label == label).expect("label came from samples");
        let count = samples.iter().filter(|s| s.label == label).count();
        let wa = witt_artin(sys, &rep.point, tol)?;
        let fixed = stabilizer_fixed_subspace(sys, &rep.point, &wa.e_basis, &group_samples, tol);
        let reduced_form = fixed.transpose() * &sys.omega * &fixed;
        let reduced_dim = fixed.ncols();
        strata.push(StratumSummary { label, count, reduced_form, reduced_dim });
    }
    Ok(ReducedSpace { samples, strata })
}

/// Subspace of E fixed by the stabilizer of x: kernel of the stabilizer
/// algebra directions plus the fixing sampled elements, intersected with E.
fn stabilizer_fixed_subspace(
    sys: &LinearSymplecticSystem,
    x: &DVector<f64>,
    e_basis: &DMatrix<f64>,
    group_samples: &[GroupSample],
    tol: &TolerancePolicy,
) -> DMatrix<f64> {
    let n = sys.dim;
    let mut rows: Vec<DMatrix<f64>> = Vec::new();
    if sys.algebra_dim() > 0 {
        let stab_alg = null_space(&sys.orbit_map(x), tol.rank_tol);
        for i in 0..stab_alg.ncols() {
            let mut gen = DMatrix::zeros(n, n);
            for a in 0..sys.algebra_dim() {
                gen += sys.generators[a].scale(stab_alg[(a, i)]);
            }
            rows.push(gen);
        }
    }
    for s in group_samples {
        if (&s.dom * x - x).norm() <= 1e-8 * (1.0 + x.norm()) {
            rows.push(&s.dom - DMatrix::identity(n, n));
        }
    }
    if rows.is_empty() {
        return e_basis.clone();
    }
    let mut stacked = DMatrix::zeros(rows.len() * n, n);
    for (i, r) in rows.iter().enumerate() {
        stacked.rows_mut(i * n, n).copy_from(r);
    }
    let fixed_ambient = null_space(&stacked, tol.rank_tol);
    intersect_spans(e_basis, &fixed_ambient, tol.rank_tol)
}

/// Momentum of the cotangent lift of a linear action on the base: the a-th
/// component at (q, p) is <p, A_a q>.
pub fn cotangent_lift_momentum(base_generators: &[DMatrix<f64>], q: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(base_generators.len(), base_generators.iter().map(|a| p.dot(&(a * q))))
}

/// Canonical form on R^{2n} in (q, p) block ordering.
pub fn canonical_omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        w[(i, n + i)] = 1.0;
        w[(n + i, i)] = -1.0;
    }
    w
}

/// Planar harmonic oscillator phase space with the diagonal circle action;
/// the lifted generator is chosen so the momentum is the angular momentum
/// q1 p2 - q2 p1.
pub fn oscillator_system() -> LinearSymplecticSystem {
    let rot_cw = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let mut xi = DMatrix::zeros(4, 4);
    xi.view_mut((0, 0), (2, 2)).copy_from(&rot_cw);
    xi.view_mut((2, 2), (2, 2)).copy_from(&rot_cw);
    LinearSymplecticSystem {
        dim: 4,
        omega: canonical_omega(2),
        generators: vec![xi.clone()],
        structure: vec![DMatrix::zeros(1, 1)],
        kappa: DMatrix::identity(1, 1),
        group: CompactGroupSpec::circle(xi),
    }
}

/// Realified C^2 with the standard SU(2) action; generators are the
/// realifications of i sigma_a / 2 and satisfy [t_a, t_b] = -eps_abc t_c.
pub fn su2_system() -> LinearSymplecticSystem {
    let t1 = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, 0.0, -0.5,
        0.0, 0.0, -0.5, 0.0,
        0.0, 0.5, 0.0, 0.0,
        0.5, 0.0, 0.0, 0.0,
    ]);
    let t2 = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.5, 0.0, 0.0,
        -0.5, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.5,
        0.0, 0.0, -0.5, 0.0,
    ]);
    let t3 = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, -0.5, 0.0,
        0.0, 0.0, 0.0, 0.5,
        0.5, 0.0, 0.0, 0.0,
        0.0, -0.5, 0.0, 0.0,
    ]);
    let gens = [t1.clone(), t2.clone(), t3.clone()];
    let mut structure = vec![DMatrix::zeros(3, 3); 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                structure[c][(a, b)] = -levi_civita(a, b, c);
            }
        }
    }
    LinearSymplecticSystem {
        dim: 4,
        omega: canonical_omega(2),
        generators: gens.to_vec(),
        structure,
        kappa: DMatrix::identity(3, 3),
        group: CompactGroupSpec::su2([t1, t2, t3]),
    }
}

fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn symplectic_orthogonal_of_coordinate_line() {
        let omega = canonical_omega(2);
        let v = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]);
        let perp = symplectic_orthogonal(&omega, &v, 1e-10);
        assert_eq!(perp.ncols(), 3);
        let expected = DMatrix::from_column_slice(
            4,
            3,
            &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert!(subspaces_equal(&perp, &expected, 1e-10));
    }

    #[test]
    fn oscillator_momentum_is_angular_momentum() {
        let sys = oscillator_system();
        assert!(sys.validate().unwrap().ok(&tol()));
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]);
        assert!((sys.momentum(0, &x) - 1.0).abs() < 1e-14);
        let y = DVector::from_column_slice(&[0.3, -0.7, 0.2, 0.9]);
        let expected = 0.3 * 0.9 - (-0.7) * 0.2;
        assert!((sys.momentum(0, &y) - expected).abs() < 1e-14);
        assert!(sys.momentum_relation_defect(100, 7) < 1e-12);
    }

    #[test]
    fn su2_system_is_consistent() {
        let sys = su2_system();
        let rep = sys.validate().unwrap();
        assert!(rep.ok(&tol()), "{rep:?}");
        assert!(sys.momentum_relation_defect(100, 11) < 1e-12);
    }

    #[test]
    fn fixed_space_of_reflection_is_symplectic() {
        let refl = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, -1.0,
        ]);
        let sys = LinearSymplecticSystem {
            dim: 4,
            omega: canonical_omega(2),
            generators: vec![],
            structure: vec![],
            kappa: DMatrix::identity(0, 0),
            group: CompactGroupSpec::finite(vec![DMatrix::identity(4, 4), refl]),
        };
        let fp = fixed_point_decomposition(&sys, &tol()).unwrap();
        let expected = DMatrix::from_column_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(subspaces_equal(&fp.basis, &expected, 1e-10));
        let w = &fp.restricted_omega;
        assert!((w[(0, 1)] - 1.0).abs() < 1e-12 && (w[(1, 0)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_restriction_is_detected() {
        let refl = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
        ]);
        let sys = LinearSymplecticSystem {
            dim: 4,
            omega: canonical_omega(2),
            generators: vec![],
            structure: vec![],
            kappa: DMatrix::identity(0, 0),
            group: CompactGroupSpec::finite(vec![DMatrix::identity(4, 4), refl]),
        };
        assert!(matches!(fixed_point_decomposition(&sys, &tol()), Err(SymredError::DegenerateRestriction)));
    }

    #[test]
    fn bifurcation_identities_hold_for_oscillator() {
        let sys = oscillator_system();
        for x in [
            DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]),
            DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[0.4, -0.3, 0.8, 0.1]),
        ] {
            let rep = bifurcation_check(&sys, &x, &tol()).unwrap();
            assert!(rep.all_hold(), "at {x:?}: {rep:?}");
        }
    }

    #[test]
    fn bifurcation_identities_hold_for_su2() {
        let sys = su2_system();
        for x in [
            DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]),
            DVector::from_column_slice(&[0.4, -0.3, 0.8, 0.1]),
        ] {
            let rep = bifurcation_check(&sys, &x, &tol()).unwrap();
            assert!(rep.all_hold(), "at {x:?}: {rep:?}");
        }
    }

    #[test]
    fn witt_artin_dims_on_the_cone() {
        let sys = oscillator_system();
        let wa = witt_artin(&sys, &DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]), &tol()).unwrap();
        assert_eq!(wa.dims(), (0, 1, 2, 1));
        assert!(wa.parity_ok());
        assert_eq!(wa.stabilizer_dim, 0);

        let origin = witt_artin(&sys, &DVector::zeros(4), &tol()).unwrap();
        assert_eq!(origin.dims(), (0, 0, 4, 0));
        assert_eq!(origin.stabilizer_dim, 1);
        assert!(origin.parity_ok());
    }

    #[test]
    fn slice_momentum_scales_quadratically() {
        let sys = oscillator_system();
        let model = mgs_at(&sys, &DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]), &tol()).unwrap();
        let e = DVector::from_column_slice(&[0.3, -0.8]);
        let j1 = model.j_sing(&e);
        let j2 = model.j_sing(&e.scale(3.0));
        assert!((j2 - j1.scale(9.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_level_strata_of_the_oscillator() {
        let sys = oscillator_system();
        let red = reduce_zero_level(&sys, 60, 42, &tol()).unwrap();
        let labels: Vec<_> = red.strata.iter().map(|s| s.label).collect();
        assert!(labels.contains(&(0, 1)), "generic cone stratum, got {labels:?}");
        assert!(labels.contains(&(1, 64)), "vertex stratum, got {labels:?}");
        for s in &red.strata {
            match s.label {
                (0, 1) => {
                    assert_eq!(s.reduced_dim, 2);
                    assert!(s.reduced_form[(0, 1)].abs() > 1e-6, "reduced form nondegenerate");
                }
                (1, 64) => assert_eq!(s.reduced_dim, 0),
                other => panic!("unexpected stratum {other:?}"),
            }
        }
        for smp in &red.samples {
            assert!(sys.momentum_vector(&smp.point).norm() < 1e-9);
        }
    }

    #[test]
    fn cotangent_lift_of_rotation() {
        let ccw = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let q = DVector::from_column_slice(&[0.7, 0.2]);
        let p = DVector::from_column_slice(&[-0.4, 1.1]);
        let j = cotangent_lift_momentum(&[ccw], &q, &p);
        assert!((j[0] - (0.7 * 1.1 - 0.2 * (-0.4))).abs() < 1e-14);
    }
}
