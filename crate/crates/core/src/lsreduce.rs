//! Lyapunov-Schmidt style normal forms for smooth maps between
//! finite-dimensional spaces: chart construction around a point, point
//! classification, the reduced (singular) equation on the kernel, equivariant
//! variants with invariant complements, and Kuranishi charts with their
//! virtual dimension.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::group::CompactGroupSpec;
use crate::linops::{self, LinopsError, RankFactorization};
use crate::sample::Halton;
use crate::TolerancePolicy;

/// Newton solves inside charts: iteration and damping budgets, the absolute
/// residual target, and the smallest chart radius worth certifying.
pub const NEWTON_MAX_ITERS: usize = 50;
pub const NEWTON_MAX_HALVINGS: usize = 30;
pub const NEWTON_TOL: f64 = 1e-12;
pub const MIN_BOX_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum ReduceError {
    /// A chart Newton solve failed to converge even after shrinking the box.
    NewtonDivergence,
    /// The reduced equation lives on a kernel of dimension > 4.
    KerTooLarge(usize),
    /// The map or base point fails the equivariance pre-check.
    NotEquivariant(String),
    /// Group representations or points have inconsistent dimensions.
    DimMismatch(String),
    Linops(LinopsError),
}

impl fmt::Display for ReduceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NewtonDivergence => write!(f, "chart Newton iteration diverged"),
            Self::KerTooLarge(k) => write!(f, "kernel dimension {k} exceeds grid limit 4"),
            Self::NotEquivariant(s) => write!(f, "equivariance pre-check failed: {s}"),
            Self::DimMismatch(s) => write!(f, "dimension mismatch: {s}"),
            Self::Linops(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ReduceError {}

impl From<LinopsError> for ReduceError {
    fn from(e: LinopsError) -> Self {
        Self::Linops(e)
    }
}

type MapFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A smooth map R^dom -> R^codom given by a closure, with an optional
/// analytic Jacobian. Without one, a fourth-order central difference is used.
#[derive(Clone)]
pub struct SmoothMap {
    pub dom: usize,
    pub codom: usize,
    f: Arc<MapFn>,
    jac: Option<Arc<JacFn>>,
}

impl SmoothMap {
    pub fn new(dom: usize, codom: usize, f: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self { dom, codom, f: Arc::new(f), jac: None }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        if let Some(j) = &self.jac {
            return j(x);
        }
        let mut jac = DMatrix::zeros(self.codom, self.dom);
        let mut xp = x.clone();
        for j in 0..self.dom {
            let h = 1e-4 * (1.0 + x[j].abs());
            let x0 = x[j];
            let mut stencil = DVector::zeros(self.codom);
            for (c, dx) in [(1.0, 2.0 * h), (-8.0, h), (8.0, -h), (-1.0, -2.0 * h)] {
                xp[j] = x0 - dx;
                stencil += self.eval(&xp).scale(c);
            }
            xp[j] = x0;
            jac.set_column(j, &stencil.scale(1.0 / (12.0 * h)));
        }
        jac
    }
}

/// A local normal-form chart at a base point: the splitting bases, the
/// invertible compression, and everything needed to evaluate psi, phi, and
/// the singular part. Domain chart coordinates are (z1, z2) in the
/// (kernel, coimage) blocks; codomain chart coordinates are (y1, y2) in the
/// (cokernel, image) blocks.
pub struct NormalFormChart {
    map: SmoothMap,
    pub base_point: DVector<f64>,
    pub base_value: DVector<f64>,
    pub factorization: RankFactorization,
    pub box_radius: f64,
    pub tol: TolerancePolicy,
    /// Maximal observed defect of psi/f_sing commuting with the group;
    /// present only for the equivariant constructor.
    pub equivariance_defect: Option<f64>,
    dom_basis: DMatrix<f64>,
    dom_coords: DMatrix<f64>,
    cod_basis: DMatrix<f64>,
    cod_coords: DMatrix<f64>,
    t_hat: DMatrix<f64>,
    t_hat_inv: DMatrix<f64>,
}

impl NormalFormChart {
    pub fn dim_dom(&self) -> usize {
        self.map.dom
    }

    pub fn dim_codom(&self) -> usize {
        self.map.codom
    }

    pub fn rank(&self) -> usize {
        self.factorization.rank
    }

    pub fn dim_ker(&self) -> usize {
        self.map.dom - self.factorization.rank
    }

    pub fn dim_coker(&self) -> usize {
        self.map.codom - self.factorization.rank
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    /// Kernel-complement basis actually used by the chart (equals the
    /// factorization's coimage only in the non-equivariant case).
    pub fn coim_basis(&self) -> DMatrix<f64> {
        self.dom_basis.columns(self.dim_ker(), self.rank()).into_owned()
    }

    pub fn ker_basis(&self) -> DMatrix<f64> {
        self.dom_basis.columns(0, self.dim_ker()).into_owned()
    }

    fn local(&self, xi: &DVector<f64>) -> DVector<f64> {
        self.map.eval(&(&self.base_point + xi)) - &self.base_value
    }

    fn im_coords_of(&self, w: &DVector<f64>) -> DVector<f64> {
        let r = self.rank();
        (self.cod_coords.rows(self.map.codom - r, r) * w).into_owned()
    }

    fn coker_coords_of(&self, w: &DVector<f64>) -> DVector<f64> {
        (self.cod_coords.rows(0, self.dim_coker()) * w).into_owned()
    }

    /// psi in chart coordinates: xi -> (z1, z2).
    pub fn psi(&self, xi: &DVector<f64>) -> DVector<f64> {
        let k = self.dim_ker();
        let z1 = self.dom_coords.rows(0, k) * xi;
        let z2 = &self.t_hat_inv * self.im_coords_of(&self.local(xi));
        stack(&z1.into_owned(), &z2)
    }

    /// psi composed with reconstruction: the straightening map as a map of
    /// the ambient domain into Ker + Coim.
    pub fn psi_ambient(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.dom_basis * self.psi(xi)
    }

    /// Inverse of psi by damped Newton in the coimage coordinates.
    pub fn psi_inv(&self, z: &DVector<f64>) -> Result<DVector<f64>, ReduceError> {
        let k = self.dim_ker();
        let r = self.rank();
        let z1 = z.rows(0, k).into_owned();
        let z2 = z.rows(k, r).into_owned();
        if r == 0 {
            return Ok(self.dom_basis.columns(0, k) * z1);
        }
        let kpart = self.dom_basis.columns(0, k) * z1;
        let c_basis = self.dom_basis.columns(k, r);

        let residual = |c: &DVector<f64>| -> DVector<f64> {
            let xi = &kpart + c_basis * c;
            &self.t_hat_inv * self.im_coords_of(&self.local(&xi)) - &z2
        };

        let mut c = z2.clone();
        let mut res = residual(&c);
        let target = NEWTON_TOL * (1.0 + z2.norm());
        for _ in 0..NEWTON_MAX_ITERS {
            if res.norm() <= target {
                return Ok(&kpart + c_basis * c);
            }
            let xi = &kpart + c_basis * &c;
            let jac_full = self.map.jacobian(&(&self.base_point + xi));
            let jac = &self.t_hat_inv
                * self.cod_coords.rows(self.map.codom - r, r)
                * jac_full
                * c_basis;
            let step = jac.lu().solve(&res).ok_or(ReduceError::NewtonDivergence)?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..NEWTON_MAX_HALVINGS {
                let trial = &c - step.scale(lambda);
                let trial_res = residual(&trial);
                if trial_res.norm() < res.norm() {
                    c = trial;
                    res = trial_res;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(ReduceError::NewtonDivergence);
            }
        }
        if res.norm() <= target { Ok(&kpart + c_basis * c) } else { Err(ReduceError::NewtonDivergence) }
    }

    /// Singular part in chart coordinates: the cokernel component left over
    /// after subtracting the value on the coimage leaf through z2.
    pub fn f_sing(&self, z: &DVector<f64>) -> Result<DVector<f64>, ReduceError> {
        let k = self.dim_ker();
        let r = self.rank();
        let xi = self.psi_inv(z)?;
        let mut z_leaf = DVector::zeros(k + r);
        z_leaf.rows_mut(k, r).copy_from(&z.rows(k, r));
        let xi_leaf = self.psi_inv(&z_leaf)?;
        Ok(self.coker_coords_of(&(self.local(&xi) - self.local(&xi_leaf))))
    }

    /// The normal form itself: z -> (f_sing(z), T_hat z2) in codomain chart
    /// coordinates.
    pub fn f_nf(&self, z: &DVector<f64>) -> Result<DVector<f64>, ReduceError> {
        let k = self.dim_ker();
        let r = self.rank();
        let y1 = self.f_sing(z)?;
        let y2 = &self.t_hat * z.rows(k, r).into_owned();
        Ok(stack(&y1, &y2))
    }

    /// phi in codomain chart coordinates.
    pub fn phi(&self, y: &DVector<f64>) -> Result<DVector<f64>, ReduceError> {
        let k = self.dim_ker();
        let r = self.rank();
        let mc = self.dim_coker();
        let y1 = y.rows(0, mc).into_owned();
        let y2 = y.rows(mc, r).into_owned();
        let mut z_leaf = DVector::zeros(k + r);
        z_leaf.rows_mut(k, r).copy_from(&(&self.t_hat_inv * &y2));
        let xi_leaf = self.psi_inv(&z_leaf)?;
        let shift = self.coker_coords_of(&self.local(&xi_leaf));
        Ok(stack(&(y1 + shift), &y2))
    }

    /// phi as a map of the ambient codomain: chart coordinates are peeled
    /// off, phi applied, and the result re-anchored at f(m).
    pub fn phi_ambient(&self, y_ambient: &DVector<f64>) -> Result<DVector<f64>, ReduceError> {
        let y = &self.cod_coords * y_ambient;
        Ok(&self.base_value + &self.cod_basis * self.phi(&y)?)
    }

    /// Relative defect of the commuting diagram phi(f_nf(psi(xi))) = f(m + xi)
    /// at one offset.
    pub fn diagram_defect(&self, xi: &DVector<f64>) -> Result<f64, ReduceError> {
        let z = self.psi(xi);
        let y = self.f_nf(&z)?;
        let lhs = &self.base_value + &self.cod_basis * self.phi(&y)?;
        let rhs = self.map.eval(&(&self.base_point + xi));
        Ok((lhs - &rhs).norm() / (1.0 + rhs.norm()))
    }

    /// Max relative diagram defect over a deterministic sample of the box.
    pub fn validate(&self, n_samples: usize, seed: u64) -> Result<f64, ReduceError> {
        let mut halton = Halton::new(self.map.dom.min(8), seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_samples {
            let xi = self.sample_point(&mut halton);
            worst = worst.max(self.diagram_defect(&xi)?);
        }
        Ok(worst)
    }

    fn sample_point(&self, halton: &mut Halton) -> DVector<f64> {
        let pt = halton.next_point();
        let mut xi = DVector::zeros(self.map.dom);
        for (i, v) in pt.iter().enumerate() {
            xi[i % self.map.dom] = *v * self.box_radius;
        }
        xi
    }
}

fn stack(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// Chart construction around `m` with Euclidean complements.
pub fn build_normal_form(f: &SmoothMap, m: &DVector<f64>, tol: &TolerancePolicy) -> Result<NormalFormChart, ReduceError> {
    if m.len() != f.dom {
        return Err(ReduceError::DimMismatch(format!("base point has dim {}, map domain is {}", m.len(), f.dom)));
    }
    let fact = linops::rank_factorize(&f.jacobian(m), tol)?;
    let k_basis = fact.ker_basis.clone();
    let c_basis = fact.coim_basis.clone();
    let ck_basis = fact.coker_basis.clone();
    let i_basis = fact.im_basis.clone();
    chart_from_bases(f, m, fact, k_basis, c_basis, ck_basis, i_basis, tol, None)
}

#[allow(clippy::too_many_arguments)]
fn chart_from_bases(
    f: &SmoothMap,
    m: &DVector<f64>,
    fact: RankFactorization,
    k_basis: DMatrix<f64>,
    c_basis: DMatrix<f64>,
    ck_basis: DMatrix<f64>,
    i_basis: DMatrix<f64>,
    tol: &TolerancePolicy,
    equivariance_defect: Option<f64>,
) -> Result<NormalFormChart, ReduceError> {
    let (n, mdim, r) = (f.dom, f.codom, fact.rank);
    let mut dom_basis = DMatrix::zeros(n, n);
    dom_basis.columns_mut(0, n - r).copy_from(&k_basis);
    dom_basis.columns_mut(n - r, r).copy_from(&c_basis);
    let dom_coords = dom_basis.clone().try_inverse().ok_or(ReduceError::NewtonDivergence)?;

    let mut cod_basis = DMatrix::zeros(mdim, mdim);
    cod_basis.columns_mut(0, mdim - r).copy_from(&ck_basis);
    cod_basis.columns_mut(mdim - r, r).copy_from(&i_basis);
    let cod_coords = cod_basis.clone().try_inverse().ok_or(ReduceError::NewtonDivergence)?;

    let t = f.jacobian(m);
    let t_hat = (cod_coords.rows(mdim - r, r) * &t * &c_basis).into_owned();
    let t_hat_inv = if r == 0 {
        DMatrix::zeros(0, 0)
    } else {
        t_hat.clone().try_inverse().ok_or(ReduceError::NewtonDivergence)?
    };

    let mut chart = NormalFormChart {
        map: f.clone(),
        base_point: m.clone(),
        base_value: f.eval(m),
        factorization: fact,
        box_radius: 1.0,
        tol: *tol,
        equivariance_defect,
        dom_basis,
        dom_coords,
        cod_basis,
        cod_coords,
        t_hat,
        t_hat_inv,
    };

    // Certify a box: psi must invert (round trip back to the same point) and
    // the diagram must commute on deterministic probes; halve until it does.
    loop {
        if chart.box_certified() {
            return Ok(chart);
        }
        chart.box_radius *= 0.5;
        if chart.box_radius < MIN_BOX_RADIUS {
            return Err(ReduceError::NewtonDivergence);
        }
    }
}

impl NormalFormChart {
    fn box_certified(&self) -> bool {
        let n = self.map.dom;
        let mut probes: Vec<DVector<f64>> = Vec::new();
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = self.box_radius;
            probes.push(e.clone());
            probes.push(-e);
        }
        let mut halton = Halton::new(n.min(8), 0xC0FFEE);
        for _ in 0..8 {
            probes.push(self.sample_point(&mut halton));
        }
        for xi in &probes {
            let z = self.psi(xi);
            let Ok(back) = self.psi_inv(&z) else { return false };
            if (&back - xi).norm() > 1e-8 * (1.0 + xi.norm()) {
                return false;
            }
            let Ok(defect) = self.diagram_defect(xi) else { return false };
            if defect > self.tol.residual_tol {
                return false;
            }
        }
        true
    }
}

/// Chart construction with H-invariant complements: the kernel and image are
/// canonical; their complements are taken orthogonal in the Haar-averaged
/// inner products, which makes them invariant and the chart maps equivariant.
pub fn equivariant_normal_form(
    f: &SmoothMap,
    m: &DVector<f64>,
    group: &CompactGroupSpec,
    tol: &TolerancePolicy,
) -> Result<NormalFormChart, ReduceError> {
    let samples = group.sampled_elements();
    let n = f.dom;
    let mdim = f.codom;
    for s in &samples {
        if s.dom.shape() != (n, n) || s.codom.shape() != (mdim, mdim) {
            return Err(ReduceError::DimMismatch(format!(
                "group acts by {}x{} / {}x{}, map is {}->{}",
                s.dom.nrows(),
                s.dom.ncols(),
                s.codom.nrows(),
                s.codom.ncols(),
                n,
                mdim
            )));
        }
    }

    // Pre-check: the base point is fixed and f intertwines the two actions.
    let mut halton = Halton::new(n.min(8), 0xE9);
    let check_pts: Vec<DVector<f64>> = (0..8)
        .map(|_| {
            let p = halton.next_point();
            let mut xi = DVector::zeros(n);
            for (i, v) in p.iter().enumerate() {
                xi[i % n] = 0.5 * *v;
            }
            m + xi
        })
        .collect();
    let stride = (samples.len() / 16).max(1);
    for s in samples.iter().step_by(stride) {
        if (&s.dom * m - m).norm() > tol.residual_tol * (1.0 + m.norm()) {
            return Err(ReduceError::NotEquivariant("base point is not fixed by the group".into()));
        }
        for x in &check_pts {
            let lhs = f.eval(&(&s.dom * x));
            let rhs = &s.codom * f.eval(x);
            if (lhs - &rhs).norm() > tol.residual_tol * (1.0 + rhs.norm()) {
                return Err(ReduceError::NotEquivariant("f(h x) != h f(x) at a sampled pair".into()));
            }
        }
    }

    // Haar-averaged Gram matrices; their orthogonal complements of Ker and
    // Im are invariant.
    let mut gram_dom = DMatrix::zeros(n, n);
    let mut gram_cod = DMatrix::zeros(mdim, mdim);
    for s in &samples {
        gram_dom += (s.dom.transpose() * &s.dom).scale(s.weight);
        gram_cod += (s.codom.transpose() * &s.codom).scale(s.weight);
    }

    let fact = linops::rank_factorize(&f.jacobian(m), tol)?;
    let k_basis = fact.ker_basis.clone();
    let i_basis = fact.im_basis.clone();
    let c_basis = crate::subspace::null_space(&(k_basis.transpose() * &gram_dom), tol.rank_tol);
    let ck_basis = crate::subspace::null_space(&(i_basis.transpose() * &gram_cod), tol.rank_tol);
    if c_basis.ncols() != fact.rank || ck_basis.ncols() != mdim - fact.rank {
        return Err(ReduceError::DimMismatch("invariant complement has wrong dimension".into()));
    }

    let mut chart = chart_from_bases(f, m, fact, k_basis, c_basis, ck_basis, i_basis, tol, None)?;

    // Measure how well f_sing commutes with the induced block actions.
    let mut worst: f64 = 0.0;
    let k = chart.dim_ker();
    let r = chart.rank();
    let mut halton = Halton::new((k + r).min(8).max(1), 0xEA);
    let z_samples: Vec<DVector<f64>> = (0..6)
        .map(|_| {
            let p = halton.next_point();
            let mut z = DVector::zeros(k + r);
            for (i, v) in p.iter().enumerate() {
                z[i % (k + r).max(1)] = 0.4 * chart.box_radius * *v;
            }
            z
        })
        .collect();
    for s in samples.iter().step_by(stride) {
        let rho_k = chart.dom_coords.rows(0, k) * &s.dom * chart.dom_basis.columns(0, k);
        let rho_c = chart.dom_coords.rows(k, r) * &s.dom * chart.dom_basis.columns(k, r);
        let rho_f = chart.cod_coords.rows(0, mdim - r) * &s.codom * chart.cod_basis.columns(0, mdim - r);
        for z in &z_samples {
            let z1 = z.rows(0, k).into_owned();
            let z2 = z.rows(k, r).into_owned();
            let zh = stack(&(&rho_k * z1), &(&rho_c * z2));
            let lhs = chart.f_sing(&zh)?;
            let rhs = &rho_f * chart.f_sing(z)?;
            worst = worst.max((lhs - rhs).norm());
        }
    }
    chart.equivariance_defect = Some(worst);
    Ok(chart)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Submersion,
    Immersion,
    Subimmersion,
    Singular,
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Submersion => "SUBMERSION",
            Self::Immersion => "IMMERSION",
            Self::Subimmersion => "SUBIMMERSION",
            Self::Singular => "SINGULAR",
        };
        write!(f, "{s}")
    }
}

/// Classify `m`: full rank onto the codomain or from the domain first; then
/// constant rank with vanishing singular part on a sampled box; else
/// genuinely singular.
pub fn classify_point(f: &SmoothMap, m: &DVector<f64>, tol: &TolerancePolicy) -> Result<PointClass, ReduceError> {
    let fact = linops::rank_factorize(&f.jacobian(m), tol)?;
    if fact.rank == f.codom {
        return Ok(PointClass::Submersion);
    }
    if fact.rank == f.dom {
        return Ok(PointClass::Immersion);
    }
    let chart = build_normal_form(f, m, tol)?;
    let mut halton = Halton::new(f.dom.min(8), 0xC1A55);
    for _ in 0..16 {
        let xi = chart.sample_point(&mut halton);
        let jac = f.jacobian(&(m + &xi));
        let pf = linops::rank_factorize(&jac, tol)?;
        if pf.rank != fact.rank {
            return Ok(PointClass::Singular);
        }
        let z = chart.psi(&xi);
        if chart.f_sing(&z)?.norm() > tol.residual_tol {
            return Ok(PointClass::Singular);
        }
    }
    Ok(PointClass::Subimmersion)
}

/// Solve f_sing(z1, 0) = 0 on a grid over the kernel box, Newton-polishing
/// every grid node and keeping deduplicated converged roots. A vanishing
/// singular part returns the full grid.
pub fn reduced_equation_solve(chart: &NormalFormChart, grid_res: usize) -> Result<Vec<DVector<f64>>, ReduceError> {
    let k = chart.dim_ker();
    if k > 4 {
        return Err(ReduceError::KerTooLarge(k));
    }
    let r = chart.rank();
    let rho = chart.box_radius;
    let res = grid_res.max(2);

    let s_of = |z1: &DVector<f64>| -> Result<DVector<f64>, ReduceError> {
        let mut z = DVector::zeros(k + r);
        z.rows_mut(0, k).copy_from(z1);
        chart.f_sing(&z)
    };

    if k == 0 {
        let origin = DVector::zeros(0);
        return Ok(if s_of(&origin)?.norm() <= chart.tol.residual_tol { vec![origin] } else { Vec::new() });
    }

    let mut roots: Vec<DVector<f64>> = Vec::new();
    let total = res.pow(k as u32);
    // Wide enough to merge both flanks of a double root, which Newton can
    // only locate to sqrt(residual_tol).
    let dedupe = (1e-3 * rho).max(1e-7);
    'grid: for flat in 0..total {
        let mut idx = flat;
        let mut z1 = DVector::zeros(k);
        for a in 0..k {
            let i = idx % res;
            idx /= res;
            z1[a] = -rho + 2.0 * rho * i as f64 / (res - 1) as f64;
        }
        // Newton-polish with a pseudoinverse step.
        let mut val = s_of(&z1)?;
        for _ in 0..25 {
            if val.norm() <= chart.tol.residual_tol {
                break;
            }
            let h = 1e-5 * rho;
            let mut jac = DMatrix::zeros(val.len(), k);
            for j in 0..k {
                let mut zp = z1.clone();
                zp[j] += h;
                let mut zm = z1.clone();
                zm[j] -= h;
                let (Ok(fp), Ok(fm)) = (s_of(&zp), s_of(&zm)) else { continue 'grid };
                jac.set_column(j, &((fp - fm) / (2.0 * h)));
            }
            let pinv = linops::generalized_inverse(&linops::rank_factorize(&jac, &chart.tol)?);
            let step = pinv * &val;
            if !step.iter().all(|v| v.is_finite()) {
                continue 'grid;
            }
            let trial = &z1 - &step;
            let Ok(tv) = s_of(&trial) else { continue 'grid };
            if tv.norm() >= val.norm() && val.norm() > chart.tol.residual_tol {
                continue 'grid;
            }
            z1 = trial;
            val = tv;
        }
        if val.norm() <= chart.tol.residual_tol
            && z1.amax() <= 1.05 * rho
            && !roots.iter().any(|rt| (rt - &z1).norm() < dedupe)
        {
            roots.push(z1);
        }
    }
    Ok(roots)
}

/// Finite-dimensional Kuranishi chart data at a point: the box in the
/// kernel, the obstruction s = f_sing(. , 0), solved chart points, and a
/// certification that nearby level-set samples land in the chart model.
pub struct KuranishiChart {
    pub nf: NormalFormChart,
    pub dim_v: usize,
    pub dim_f: usize,
    pub dim_h: usize,
    pub virtual_dim: i64,
    pub chart_points: Vec<DVector<f64>>,
    /// Level-set samples (ambient domain points with f(x) = f(m)).
    pub level_samples: Vec<DVector<f64>>,
    /// Max coimage coordinate of the pulled-back samples; the chart model
    /// asserts this is below 10 * residual_tol.
    pub max_coim_defect: f64,
}

pub fn kuranishi_chart(
    f: &SmoothMap,
    m: &DVector<f64>,
    group: &CompactGroupSpec,
    tol: &TolerancePolicy,
) -> Result<KuranishiChart, ReduceError> {
    let nf = equivariant_normal_form(f, m, group, tol)?;
    let chart_points = reduced_equation_solve(&nf, 7)?;
    let dim_v = nf.dim_ker();
    let dim_f = nf.dim_coker();
    let dim_h = group.group_dim();
    let virtual_dim = virtual_dimension(dim_v, dim_f, dim_h);

    // Project random nearby points onto the level set of f(m) and pull them
    // through psi: they must land on (z2 = 0).
    let fm = f.eval(m);
    let mut halton = Halton::new(f.dom.min(8), 0x1EE7);
    let mut level_samples = Vec::new();
    let mut max_coim_defect: f64 = 0.0;
    let k = nf.dim_ker();
    let r = nf.rank();
    for _ in 0..40 {
        let xi0 = nf.sample_point(&mut halton).scale(0.7);
        let mut x = m + xi0;
        let mut ok = false;
        for _ in 0..50 {
            let resid = f.eval(&x) - &fm;
            if resid.norm() <= tol.residual_tol * (1.0 + fm.norm()) {
                ok = true;
                break;
            }
            let jac = f.jacobian(&x);
            let pinv = linops::generalized_inverse(&linops::rank_factorize(&jac, tol)?);
            x -= pinv * resid;
        }
        if !ok || (&x - m).norm() > nf.box_radius {
            continue;
        }
        let z = nf.psi(&(&x - m));
        let z2 = z.rows(k, r);
        max_coim_defect = max_coim_defect.max(z2.amax());
        level_samples.push(x);
    }

    Ok(KuranishiChart { nf, dim_v, dim_f, dim_h, virtual_dim, chart_points, level_samples, max_coim_defect })
}

/// dim E - dim F - dim H.
pub fn virtual_dimension(dim_e: usize, dim_f: usize, dim_h: usize) -> i64 {
    dim_e as i64 - dim_f as i64 - dim_h as i64
}
