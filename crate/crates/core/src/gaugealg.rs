//! Desk-scale gauge algebra for SU(2) x U(1): centralizer tables and their
//! Goursat-style generator classification, the broken-phase electroweak
//! field changes and stabilizer logic, pointwise Hamiltonian and Gauss
//! constraint identities on the singular stratum, anti-self-dual virtual
//! dimension arithmetic, and surface-group representation varieties with the
//! abelian intersection form.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};
use core::fmt;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::sample::rng_from_seed;
use crate::subspace::null_space;

/// Metric weight of the Hamiltonian density; the case study fixes the scale
/// factor to one.
pub const DENSITY_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeError {
    /// Couplings must be strictly positive.
    BadCouplings,
    /// A point claimed to lie on the singular stratum violates W+- = D+- =
    /// Pi_1 = 0.
    OffStratum(String),
    /// The tuple does not satisfy the relator equation at the queried level.
    OffVariety,
    /// An element fails the unit-determinant requirement.
    NotInGroup,
}

impl fmt::Display for GaugeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadCouplings => write!(f, "coupling constants must be positive"),
            Self::OffStratum(s) => write!(f, "point is off the singular stratum: {s}"),
            Self::OffVariety => write!(f, "tuple does not satisfy the relator equation"),
            Self::NotInGroup => write!(f, "matrix is not in the group within tolerance"),
        }
    }
}

impl core::error::Error for GaugeError {}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// ---------------------------------------------------------------------------
// SU(2) elements

/// An SU(2) element (alpha, beta), i.e. the matrix [[a, -conj(b)], [b,
/// conj(a)]] with |a|^2 + |b|^2 = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SU2Elem {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl SU2Elem {
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self, GaugeError> {
        let det = alpha.norm_sqr() + beta.norm_sqr();
        if (det - 1.0).abs() > 1e-12 {
            return Err(GaugeError::NotInGroup);
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity() -> Self {
        Self { alpha: c(1.0, 0.0), beta: c(0.0, 0.0) }
    }

    pub fn minus_identity() -> Self {
        Self { alpha: c(-1.0, 0.0), beta: c(0.0, 0.0) }
    }

    /// Diagonal torus element diag(e^{i phi}, e^{-i phi}).
    pub fn torus(phi: f64) -> Self {
        Self { alpha: Complex64::from_polar(1.0, phi), beta: c(0.0, 0.0) }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            alpha: self.alpha * other.alpha - self.beta.conj() * other.beta,
            beta: self.beta * other.alpha + self.alpha.conj() * other.beta,
        }
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: self.alpha.conj(), beta: -self.beta }
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.alpha, -self.beta.conj(), self.beta, self.alpha.conj())
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self.matrix() - other.matrix()).norm()
    }

    /// exp(sum_a theta_a (i sigma_a / 2)).
    pub fn exp_coords(theta: &[f64; 3]) -> Self {
        let r = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
        if r < 1e-300 {
            return Self::identity();
        }
        let (s, w) = ((r / 2.0).sin(), (r / 2.0).cos());
        let n = [theta[0] / r, theta[1] / r, theta[2] / r];
        // quaternion (w, s n) with alpha = w + i s n3, beta = -s n2 + i s n1
        Self { alpha: c(w, s * n[2]), beta: c(-s * n[1], s * n[0]) }
    }

    /// Coordinates wrt (i sigma_a / 2) of the principal logarithm.
    pub fn log_coords(&self) -> [f64; 3] {
        let w = self.alpha.re;
        let v = [self.beta.im, -self.beta.re, self.alpha.im];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r < 1e-300 {
            return [0.0; 3];
        }
        let angle = 2.0 * r.atan2(w);
        [angle * v[0] / r, angle * v[1] / r, angle * v[2] / r]
    }

    /// Haar-uniform sample through a normalized 4D Gaussian quaternion.
    pub fn haar<R: Rng>(rng: &mut R) -> Self {
        loop {
            let q: [f64; 4] = core::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
            let n2: f64 = q.iter().map(|x| x * x).sum();
            if n2 > 1e-12 {
                let n = n2.sqrt();
                return Self { alpha: c(q[0] / n, q[3] / n), beta: c(-q[2] / n, q[1] / n) };
            }
        }
    }
}

/// Frobenius norm of the commutator [a, b] of the 2x2 matrices.
fn commutator_defect(a: &SU2Elem, b: &SU2Elem) -> f64 {
    let (ma, mb) = (a.matrix(), b.matrix());
    (ma * mb - mb * ma).norm()
}

/// Dimension of the su(2) commutant of a set of elements: solve [X, g] = 0
/// for X = sum x_a (i sigma_a / 2) over all samples at once.
pub fn su2_commutant_dim(samples: &[SU2Elem], rank_tol: f64) -> usize {
    if samples.is_empty() {
        return 3;
    }
    let basis = [
        Matrix2::new(c(0.0, 0.0), c(0.0, 0.5), c(0.0, 0.5), c(0.0, 0.0)),
        Matrix2::new(c(0.0, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.0)),
        Matrix2::new(c(0.0, 0.5), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -0.5)),
    ];
    let mut rows = DMatrix::zeros(8 * samples.len(), 3);
    for (si, s) in samples.iter().enumerate() {
        let g = s.matrix();
        for (a, t) in basis.iter().enumerate() {
            let m = t * g - g * t;
            for (ei, entry) in m.iter().enumerate() {
                rows[(8 * si + 2 * ei, a)] = entry.re;
                rows[(8 * si + 2 * ei + 1, a)] = entry.im;
            }
        }
    }
    null_space(&rows, rank_tol).ncols()
}

// ---------------------------------------------------------------------------
// Centralizer table for SU(2)

/// Subgroup classes of SU(2) that occur as holonomy/centralizer entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su2Class {
    TrivialOrCenter,
    Torus,
    Full,
}

impl fmt::Display for Su2Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::TrivialOrCenter => "{e} or Z2",
            Self::Torus => "U(1)",
            Self::Full => "SU(2)",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HoweRecord {
    pub holonomy: Su2Class,
    pub stabilizer: Su2Class,
    pub howe: Su2Class,
}

fn class_samples(class: Su2Class, n: usize, rng: &mut impl Rng) -> Vec<SU2Elem> {
    match class {
        Su2Class::TrivialOrCenter => vec![SU2Elem::identity(), SU2Elem::minus_identity()],
        Su2Class::Torus => (0..n).map(|_| SU2Elem::torus(rng.gen_range(0.0..TAU))).collect(),
        Su2Class::Full => (0..n).map(|_| SU2Elem::haar(rng)).collect(),
    }
}

fn class_of_commutant_dim(dim: usize) -> Su2Class {
    match dim {
        3 => Su2Class::Full,
        1 => Su2Class::Torus,
        _ => Su2Class::TrivialOrCenter,
    }
}

/// The three-row table of holonomy class, its centralizer, and the
/// bicommutant, each recomputed by sampled commutant solves rather than
/// copied.
pub fn su2_centralizer_table() -> Vec<HoweRecord> {
    let mut rng = rng_from_seed(0x7ab1e51);
    let mut out = Vec::new();
    for hol in [Su2Class::TrivialOrCenter, Su2Class::Torus, Su2Class::Full] {
        let samples = class_samples(hol, 200, &mut rng);
        let stabilizer = class_of_commutant_dim(su2_commutant_dim(&samples, 1e-10));
        let stab_samples = class_samples(stabilizer, 200, &mut rng);
        let howe = class_of_commutant_dim(su2_commutant_dim(&stab_samples, 1e-10));
        out.push(HoweRecord { holonomy: hol, stabilizer, howe });
    }
    out
}

/// A centralizer always contains the center, so the dim-zero commutant class
/// prints as Z2 in the stabilizer and howe columns.
fn centralizer_symbol(class: Su2Class) -> &'static str {
    match class {
        Su2Class::TrivialOrCenter => "Z2",
        Su2Class::Torus => "U(1)",
        Su2Class::Full => "SU(2)",
    }
}

pub fn format_centralizer_table(records: &[HoweRecord]) -> String {
    let mut s = String::from("holonomy    stabilizer  howe\n");
    for r in records {
        s.push_str(&format!(
            "{:<12}{:<12}{}\n",
            format!("{}", r.holonomy),
            centralizer_symbol(r.stabilizer),
            centralizer_symbol(r.howe)
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// Howe subgroups of the product and the Goursat generator table

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductHowe {
    FullTimesU1,
    TorusTimesU1,
    CenterTimesU1,
}

impl fmt::Display for ProductHowe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::FullTimesU1 => "SU(2)xU(1)",
            Self::TorusTimesU1 => "U(1)xU(1)",
            Self::CenterTimesU1 => "Z2xU(1)",
        };
        write!(f, "{s}")
    }
}

/// Cross the Howe subgroups of the first factor with the full second factor.
pub fn howe_product_enumerate(su2_howes: &[Su2Class]) -> Result<Vec<ProductHowe>, GaugeError> {
    if su2_howes.is_empty() {
        return Err(GaugeError::NotInGroup);
    }
    let mut out = Vec::new();
    for h in su2_howes {
        let p = match h {
            Su2Class::Full => ProductHowe::FullTimesU1,
            Su2Class::Torus => ProductHowe::TorusTimesU1,
            Su2Class::TrivialOrCenter => ProductHowe::CenterTimesU1,
        };
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

/// The twelve enumerable generator families of the product Howe subgroups;
/// constructor arguments are the integer parameters (p, q, k) where the
/// family uses them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoursatFamilyKind {
    FullByTrivialU1,
    FullByTrivialCyclic,
    FullByTrivialTrivial,
    FullByCenterU1,
    FullByCenterCyclic,
    FullByCenterTrivial,
    FullByGraphZ2,
    TorusByTorusU1,
    TorusByTorusCyclic,
    TorusByTorusTrivial,
    TorusByQuotientGraph,
    TorusByPowerGraph,
}

pub const ALL_GOURSAT_FAMILIES: [GoursatFamilyKind; 12] = [
    GoursatFamilyKind::FullByTrivialU1,
    GoursatFamilyKind::FullByTrivialCyclic,
    GoursatFamilyKind::FullByTrivialTrivial,
    GoursatFamilyKind::FullByCenterU1,
    GoursatFamilyKind::FullByCenterCyclic,
    GoursatFamilyKind::FullByCenterTrivial,
    GoursatFamilyKind::FullByGraphZ2,
    GoursatFamilyKind::TorusByTorusU1,
    GoursatFamilyKind::TorusByTorusCyclic,
    GoursatFamilyKind::TorusByTorusTrivial,
    GoursatFamilyKind::TorusByQuotientGraph,
    GoursatFamilyKind::TorusByPowerGraph,
];

impl GoursatFamilyKind {
    /// (G1, G2, L1, L2, theta) as display symbols with free parameters.
    pub fn symbols(&self) -> (&'static str, &'static str, &'static str, &'static str, &'static str) {
        match self {
            Self::FullByTrivialU1 => ("{e}", "{e}", "U(1)", "U(1)", "trivial"),
            Self::FullByTrivialCyclic => ("{e}", "{e}", "Zp", "Zp", "trivial"),
            Self::FullByTrivialTrivial => ("{e}", "{e}", "{e}", "{e}", "trivial"),
            Self::FullByCenterU1 => ("Z2", "Z2", "U(1)", "U(1)", "trivial"),
            Self::FullByCenterCyclic => ("Z2", "Z2", "Zp", "Zp", "trivial"),
            Self::FullByCenterTrivial => ("Z2", "Z2", "{e}", "{e}", "trivial"),
            Self::FullByGraphZ2 => ("Z2", "{e}", "Z2p", "Zp", "id_Z2"),
            Self::TorusByTorusU1 => ("U(1)", "U(1)", "U(1)", "U(1)", "trivial"),
            Self::TorusByTorusCyclic => ("U(1)", "U(1)", "Zp", "Zp", "trivial"),
            Self::TorusByTorusTrivial => ("U(1)", "U(1)", "{e}", "{e}", "trivial"),
            Self::TorusByQuotientGraph => ("U(1)", "Zq", "U(1)", "Zp", "z->z^(kq/p)"),
            Self::TorusByPowerGraph => ("U(1)", "{e}", "U(1)", "{e}", "z->z^k"),
        }
    }

    pub fn claimed_howe(&self) -> ProductHowe {
        match self {
            Self::FullByTrivialU1
            | Self::FullByTrivialCyclic
            | Self::FullByTrivialTrivial
            | Self::FullByCenterU1
            | Self::FullByCenterCyclic
            | Self::FullByCenterTrivial
            | Self::FullByGraphZ2 => ProductHowe::FullTimesU1,
            _ => ProductHowe::TorusTimesU1,
        }
    }

    pub fn uses_params(&self) -> (bool, bool, bool) {
        match self {
            Self::FullByTrivialCyclic | Self::FullByCenterCyclic | Self::FullByGraphZ2 | Self::TorusByTorusCyclic => {
                (true, false, false)
            }
            Self::TorusByQuotientGraph => (true, true, true),
            Self::TorusByPowerGraph => (false, false, true),
            _ => (false, false, false),
        }
    }
}

/// A concrete Goursat tuple: a family with its integer parameters filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoursatTuple {
    pub kind: GoursatFamilyKind,
    pub p: u32,
    pub q: u32,
    pub k: u32,
}

impl GoursatTuple {
    /// Symbolic sanity of the quintuple: the two quotients exist and theta
    /// matches their common class.
    pub fn symbols_consistent(&self) -> bool {
        use GoursatFamilyKind::*;
        match self.kind {
            // trivial theta: both quotients collapse
            FullByTrivialU1 | FullByTrivialCyclic | FullByTrivialTrivial | FullByCenterU1 | FullByCenterCyclic
            | FullByCenterTrivial | TorusByTorusU1 | TorusByTorusCyclic | TorusByTorusTrivial => true,
            // Z2 graphs need |L1| = 2 |L2|
            FullByGraphZ2 => self.p >= 1,
            // circle graphs need positive parameters
            TorusByQuotientGraph => self.p >= 1 && self.q >= 1 && self.k >= 1,
            TorusByPowerGraph => self.k >= 1,
        }
    }

    /// Sample elements of H' = {(g, l) : theta(g G2) = l L2}.
    pub fn sample_elements(&self, n: usize, rng: &mut impl Rng) -> Vec<(SU2Elem, Complex64)> {
        use GoursatFamilyKind::*;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let pair = match self.kind {
                FullByTrivialU1 => (SU2Elem::identity(), Complex64::from_polar(1.0, rng.gen_range(0.0..TAU))),
                FullByTrivialCyclic => {
                    let j = rng.gen_range(0..self.p);
                    (SU2Elem::identity(), Complex64::from_polar(1.0, TAU * j as f64 / self.p as f64))
                }
                FullByTrivialTrivial => (SU2Elem::identity(), c(1.0, 0.0)),
                FullByCenterU1 => (
                    center_sample(rng),
                    Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
                ),
                FullByCenterCyclic => {
                    let j = rng.gen_range(0..self.p);
                    (center_sample(rng), Complex64::from_polar(1.0, TAU * j as f64 / self.p as f64))
                }
                FullByCenterTrivial => (center_sample(rng), c(1.0, 0.0)),
                FullByGraphZ2 => {
                    // (I, even powers of zeta_2p) and (-I, odd powers)
                    let j = rng.gen_range(0..2 * self.p);
                    let l = Complex64::from_polar(1.0, PI * j as f64 / self.p as f64);
                    let g = if j % 2 == 0 { SU2Elem::identity() } else { SU2Elem::minus_identity() };
                    (g, l)
                }
                TorusByTorusU1 => (
                    SU2Elem::torus(rng.gen_range(0.0..TAU)),
                    Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)),
                ),
                TorusByTorusCyclic => {
                    let j = rng.gen_range(0..self.p);
                    (
                        SU2Elem::torus(rng.gen_range(0.0..TAU)),
                        Complex64::from_polar(1.0, TAU * j as f64 / self.p as f64),
                    )
                }
                TorusByTorusTrivial => (SU2Elem::torus(rng.gen_range(0.0..TAU)), c(1.0, 0.0)),
                TorusByQuotientGraph => {
                    // identity component (e^{i p t}, e^{i k q t}) twisted by
                    // the kernels Z_q x 1 and 1 x Z_p
                    let t = rng.gen_range(0.0..TAU);
                    let m = rng.gen_range(0..self.q);
                    let j = rng.gen_range(0..self.p);
                    let g = SU2Elem::torus(self.p as f64 * t + TAU * m as f64 / self.q as f64);
                    let l = Complex64::from_polar(
                        1.0,
                        self.k as f64 * self.q as f64 * t + TAU * j as f64 / self.p as f64,
                    );
                    (g, l)
                }
                TorusByPowerGraph => {
                    let t = rng.gen_range(0.0..TAU);
                    (SU2Elem::torus(t), Complex64::from_polar(1.0, self.k as f64 * t))
                }
            };
            out.push(pair);
        }
        out
    }
}

fn center_sample(rng: &mut impl Rng) -> SU2Elem {
    if rng.gen_bool(0.5) {
        SU2Elem::identity()
    } else {
        SU2Elem::minus_identity()
    }
}

fn dist_to_howe(a: &SU2Elem, howe: ProductHowe) -> f64 {
    match howe {
        ProductHowe::FullTimesU1 => 0.0,
        ProductHowe::TorusTimesU1 => a.beta.norm(),
        ProductHowe::CenterTimesU1 => a.dist(&SU2Elem::identity()).min(a.dist(&SU2Elem::minus_identity())),
    }
}

fn howe_sample(howe: ProductHowe, rng: &mut impl Rng) -> SU2Elem {
    match howe {
        ProductHowe::FullTimesU1 => SU2Elem::haar(rng),
        ProductHowe::TorusTimesU1 => SU2Elem::torus(rng.gen_range(0.0..TAU)),
        ProductHowe::CenterTimesU1 => center_sample(rng),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CentralizerCheck {
    /// Max commutation defect of claimed-H samples against H' samples.
    pub containment_defect: f64,
    /// Every random element far from H fails to centralize H'.
    pub separation_ok: bool,
    /// Every random element centralizing H' within tolerance is close to H.
    pub implication_ok: bool,
}

impl CentralizerCheck {
    pub fn ok(&self, tol: f64) -> bool {
        self.containment_defect < tol && self.separation_ok && self.implication_ok
    }
}

/// Bidirectional sampling test that the centralizer of the tuple's group is
/// the claimed Howe subgroup. The U(1) factors are central and play no role
/// in commutation, so only the SU(2) parts enter the defects.
pub fn verify_centralizer(tuple: &GoursatTuple, n_samples: usize, seed: u64) -> CentralizerCheck {
    let mut rng = rng_from_seed(seed);
    let howe = tuple.kind.claimed_howe();
    let hprime = tuple.sample_elements(n_samples, &mut rng);

    let mut containment_defect: f64 = 0.0;
    for _ in 0..n_samples {
        let h = howe_sample(howe, &mut rng);
        for (g, _) in &hprime {
            containment_defect = containment_defect.max(commutator_defect(&h, g));
        }
    }

    let mut separation_ok = true;
    let mut implication_ok = true;
    for _ in 0..n_samples {
        let x = SU2Elem::haar(&mut rng);
        let defect = hprime.iter().map(|(g, _)| commutator_defect(&x, g)).fold(0.0f64, f64::max);
        let dist = dist_to_howe(&x, howe);
        if dist > 1e-2 && defect < 1e-8 {
            separation_ok = false;
        }
        if defect < 1e-10 && dist > 1e-8 {
            implication_ok = false;
        }
    }
    CentralizerCheck { containment_defect, separation_ok, implication_ok }
}

/// Instantiate the twelve families with parameters up to `param_bound`.
pub fn goursat_enumerate(param_bound: u32) -> Vec<GoursatTuple> {
    let bound = param_bound.max(1);
    let mut out = Vec::new();
    for kind in ALL_GOURSAT_FAMILIES {
        let (use_p, use_q, use_k) = kind.uses_params();
        let pr = if use_p { 1..=bound } else { 1..=1 };
        for p in pr {
            let qr = if use_q { 1..=bound } else { 1..=1 };
            for q in qr {
                let kr = if use_k { 1..=bound } else { 1..=1 };
                for k in kr {
                    let t = GoursatTuple { kind, p, q, k };
                    debug_assert!(t.symbols_consistent());
                    out.push(t);
                }
            }
        }
    }
    out
}

/// The generator table in paper row order, with the non-enumerable center
/// row as an explicit marker.
pub fn format_goursat_table() -> String {
    let mut s = String::from("H           G1     G2     L1     L2     theta\n");
    for kind in ALL_GOURSAT_FAMILIES {
        let (g1, g2, l1, l2, theta) = kind.symbols();
        s.push_str(&format!(
            "{:<12}{:<7}{:<7}{:<7}{:<7}{}\n",
            format!("{}", kind.claimed_howe()),
            g1,
            g2,
            l1,
            l2,
            theta
        ));
    }
    s.push_str("Z2xU(1)     many choices (UNENUMERATED)\n");
    s
}

// ---------------------------------------------------------------------------
// Residual stabilizer logic after symmetry breaking

/// Conjugation of the K-generator diag(e^{i theta/2}, e^{-i theta/2}) by a,
/// through the closed form; the pair (result, e^{i theta}) lies in K exactly
/// when beta = 0 or e^{i theta} = 1.
pub fn conjugate_k(a: &SU2Elem, theta: f64) -> (Matrix2<Complex64>, bool) {
    let ep = Complex64::from_polar(1.0, theta / 2.0);
    let em = Complex64::from_polar(1.0, -theta / 2.0);
    let (al, be) = (a.alpha, a.beta);
    let m = Matrix2::new(
        al.norm_sqr() * ep + be.norm_sqr() * em,
        -al * be.conj() * (em - ep),
        al.conj() * be * (ep - em),
        al.norm_sqr() * em + be.norm_sqr() * ep,
    );
    let in_k = be.norm() < 1e-12 || (Complex64::from_polar(1.0, theta) - c(1.0, 0.0)).norm() < 1e-12;
    (m, in_k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairStabilizer {
    K,
    Z2,
}

impl fmt::Display for PairStabilizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::K => write!(f, "K"),
            Self::Z2 => write!(f, "Z2"),
        }
    }
}

/// The common stabilizer collapses to the center as soon as one sample has a
/// nonzero off-diagonal coefficient.
pub fn stabilizer_pair(beta_samples: &[Complex64]) -> PairStabilizer {
    if beta_samples.iter().all(|b| b.norm() < 1e-12) {
        PairStabilizer::K
    } else {
        PairStabilizer::Z2
    }
}

// ---------------------------------------------------------------------------
// Electroweak field changes and pointwise identities

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Couplings {
    pub g: f64,
    pub gp: f64,
}

impl Couplings {
    pub fn new(g: f64, gp: f64) -> Result<Self, GaugeError> {
        if g <= 0.0 || gp <= 0.0 || !g.is_finite() || !gp.is_finite() {
            return Err(GaugeError::BadCouplings);
        }
        Ok(Self { g, gp })
    }

    pub fn hypot(&self) -> f64 {
        (self.g * self.g + self.gp * self.gp).sqrt()
    }

    /// Elementary charge g g' / sqrt(g^2 + g'^2).
    pub fn charge(&self) -> f64 {
        self.g * self.gp / self.hypot()
    }

    /// (cos, sin) of the weak mixing angle, tan = g'/g.
    pub fn mixing(&self) -> (f64, f64) {
        let s = self.hypot();
        (self.g / s, self.gp / s)
    }
}

/// Connection components in the (W^1, W^2, W^3, B) gauge basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeFields {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub b: f64,
}

/// Components after the physical change of basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenFields {
    pub w_plus: Complex64,
    pub w_minus: Complex64,
    pub z: f64,
    pub a_gamma: f64,
}

/// W+- = (W^1 -+ i W^2)/sqrt(2); (Z, A_gamma) by the orthogonal rotation
/// with 1/sqrt(g^2+g'^2).
pub fn ew_forward(fields: &GaugeFields, cpl: &Couplings) -> BrokenFields {
    let s = cpl.hypot();
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    BrokenFields {
        w_plus: c(fields.w1, -fields.w2) * inv_sqrt2,
        w_minus: c(fields.w1, fields.w2) * inv_sqrt2,
        z: (cpl.g * fields.w3 - cpl.gp * fields.b) / s,
        a_gamma: (cpl.gp * fields.w3 + cpl.g * fields.b) / s,
    }
}

pub fn ew_inverse(fields: &BrokenFields, cpl: &Couplings) -> GaugeFields {
    let s = cpl.hypot();
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    GaugeFields {
        w1: ((fields.w_plus + fields.w_minus) * inv_sqrt2).re,
        w2: ((fields.w_minus - fields.w_plus) * inv_sqrt2).im,
        w3: (cpl.g * fields.z + cpl.gp * fields.a_gamma) / s,
        b: (-cpl.gp * fields.z + cpl.g * fields.a_gamma) / s,
    }
}

/// Max defect of the bracket relations of the broken basis {t, tbar, t+, t-}
/// inside su(2) + u(1), realized as 3x3 complex blocks, plus the Pauli-basis
/// sanity [t_a, t_b] = -eps_abc t_c.
pub fn ew_commutators_check() -> f64 {
    type M3 = nalgebra::Matrix3<Complex64>;
    let zero = c(0.0, 0.0);
    let half_i = c(0.0, 0.5);
    // t_a = i sigma_a / 2 in the upper block, u(1) generator i in the corner
    let t1 = M3::new(zero, half_i, zero, half_i, zero, zero, zero, zero, zero);
    let t2 = M3::new(zero, c(0.5, 0.0), zero, c(-0.5, 0.0), zero, zero, zero, zero, zero);
    let t3 = M3::new(half_i, zero, zero, zero, -half_i, zero, zero, zero, zero);
    let iu = M3::new(zero, zero, zero, zero, zero, zero, zero, zero, c(0.0, 1.0));
    let isq2 = c(1.0 / 2.0f64.sqrt(), 0.0);
    let t = (t1 + t2 * c(0.0, 1.0)) * isq2;
    let tbar = (t1 - t2 * c(0.0, 1.0)) * isq2;
    let tp = t3 + iu;
    let tm = t3 - iu;
    let br = |a: &M3, b: &M3| a * b - b * a;
    let i = c(0.0, 1.0);

    let mut worst: f64 = 0.0;
    worst = worst.max((br(&t, &tbar) - t3 * i).norm());
    worst = worst.max((br(&t, &tp) + t * i).norm());
    worst = worst.max((br(&t, &tm) + t * i).norm());
    worst = worst.max(br(&tp, &tm).norm());
    worst = worst.max((br(&tbar, &tp) - tbar * i).norm());
    worst = worst.max((br(&tbar, &tm) - tbar * i).norm());
    // Pauli sanity
    let ts = [t1, t2, t3];
    for a in 0..3 {
        for b in 0..3 {
            let mut rhs = M3::zeros();
            for cc in 0..3 {
                rhs += ts[cc] * c(-levi_civita(a, b, cc), 0.0);
            }
            worst = worst.max((br(&ts[a], &ts[b]) - rhs).norm());
        }
    }
    worst
}

fn levi_civita(a: usize, b: usize, cc: usize) -> f64 {
    match (a, b, cc) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// A pointwise sample of all broken-phase fields, momenta, Higgs data, and
/// derivative slots (exterior derivatives enter the identities only as
/// independent values).
#[derive(Debug, Clone, Copy)]
pub struct EWPoint {
    pub couplings: Couplings,
    pub fields: GaugeFields,
    pub mom_plus: Complex64,
    pub mom_minus: Complex64,
    pub mom_z: f64,
    pub mom_gamma: f64,
    pub eta: f64,
    pub pion1: Complex64,
    pub pion2: Complex64,
    pub der_a_gamma: f64,
    pub der_z: f64,
    pub der_eta: f64,
    pub lambda: f64,
    pub vev: f64,
}

impl EWPoint {
    pub fn broken(&self) -> BrokenFields {
        ew_forward(&self.fields, &self.couplings)
    }

    fn stratum_defect(&self) -> f64 {
        let bf = self.broken();
        bf.w_plus
            .norm()
            .max(bf.w_minus.norm())
            .max(self.mom_plus.norm())
            .max(self.mom_minus.norm())
            .max(self.pion1.norm())
    }

    pub fn check_stratum(&self) -> Result<(), GaugeError> {
        let d = self.stratum_defect();
        if d > 1e-12 {
            return Err(GaugeError::OffStratum(format!("defect {d:e}")));
        }
        Ok(())
    }
}

/// Both sides of the singular-stratum Hamiltonian density, with the three
/// component identities it rests on evaluated separately.
#[derive(Debug, Clone, Copy)]
pub struct DensityReport {
    pub general_density: f64,
    pub reduced_density: f64,
    pub momentum_norm_defect: f64,
    pub curvature_norm_defect: f64,
    pub higgs_norm_defect: f64,
}

impl DensityReport {
    pub fn density_defect(&self) -> f64 {
        (self.general_density - self.reduced_density).abs()
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.density_defect() <= tol
            && self.momentum_norm_defect <= tol
            && self.curvature_norm_defect <= tol
            && self.higgs_norm_defect <= tol
    }
}

/// Coefficients of a Lie-algebra-valued slot in the orthogonal basis
/// {t_1, t_2, t_3, i}, assembled from its {t, tbar, t-, t+} expansion.
fn to_orthogonal_basis(
    c_t: Complex64,
    c_tbar: Complex64,
    c_tminus: Complex64,
    c_tplus: Complex64,
) -> [Complex64; 4] {
    let isq2 = 1.0 / 2.0f64.sqrt();
    [
        (c_t + c_tbar) * isq2,
        (c_t - c_tbar) * c(0.0, isq2),
        c_tminus + c_tplus,
        -c_tminus + c_tplus,
    ]
}

fn kappa_inv_norm_sq(coeffs: &[Complex64; 4], cpl: &Couplings) -> f64 {
    let g2 = cpl.g * cpl.g;
    let gp2 = cpl.gp * cpl.gp;
    g2 * (coeffs[0].norm_sqr() + coeffs[1].norm_sqr() + coeffs[2].norm_sqr()) + gp2 * coeffs[3].norm_sqr()
}

fn kappa_norm_sq(coeffs: &[Complex64; 4], cpl: &Couplings) -> f64 {
    let g2 = cpl.g * cpl.g;
    let gp2 = cpl.gp * cpl.gp;
    (coeffs[0].norm_sqr() + coeffs[1].norm_sqr() + coeffs[2].norm_sqr()) / g2 + coeffs[3].norm_sqr() / gp2
}

/// Evaluate the full Hamiltonian density through the general formulas (all
/// coupling-basis conversions and kappa-norms) and the reduced closed form,
/// at a singular-stratum point.
pub fn singular_hamiltonian_identity(pt: &EWPoint) -> Result<DensityReport, GaugeError> {
    pt.check_stratum()?;
    let cpl = &pt.couplings;
    let (g, gp) = (cpl.g, cpl.gp);
    let s = cpl.hypot();
    let e = cpl.charge();
    let (cw, sw) = cpl.mixing();
    let bf = pt.broken();
    let v = pt.vev;

    // momentum slot in the graph basis, then kappa^{-1} norm
    let mom_mix = e / (g * gp) * pt.mom_z - (g * cw - gp * sw) / (2.0 * g * gp) * pt.mom_gamma;
    let d_coeffs = to_orthogonal_basis(
        pt.mom_minus / g,
        pt.mom_plus / g,
        c(mom_mix, 0.0),
        c(pt.mom_gamma / (2.0 * e), 0.0),
    );
    let momentum_general = kappa_inv_norm_sq(&d_coeffs, cpl);
    let momentum_reduced = pt.mom_z * pt.mom_z + pt.mom_gamma * pt.mom_gamma;

    // curvature: the abelian part carries the derivative slots; the
    // W-dependent terms are kept in the formula and vanish on the stratum
    let mix = c(0.0, g * g) * c(sw * bf.a_gamma + cw * bf.z, 0.0);
    let f_t = mix * bf.w_plus;
    let f_tbar = -mix * bf.w_minus;
    let f_t3_extra = c(0.0, g * g) * bf.w_plus * bf.w_minus;
    let f_tplus = c(e * pt.der_a_gamma + (g * cw - gp * sw) / 2.0 * pt.der_z, 0.0);
    let f_tminus = c(g * gp / (2.0 * e) * pt.der_z, 0.0);
    let mut f_coeffs = to_orthogonal_basis(f_t, f_tbar, f_tminus, f_tplus);
    f_coeffs[2] += f_t3_extra;
    let curvature_general = kappa_norm_sq(&f_coeffs, cpl);
    let curvature_reduced = pt.der_a_gamma * pt.der_a_gamma + pt.der_z * pt.der_z;

    // scalar kinetic term through the covariant-derivative components
    let comp1 = c(0.0, g * pt.eta * v / 2.0) * bf.w_plus;
    let comp2 = c(v / 2.0f64.sqrt() * pt.der_eta, -pt.eta * v * s / (2.0 * 2.0f64.sqrt()) * bf.z);
    let higgs_general = comp1.norm_sqr() + comp2.norm_sqr();
    let higgs_reduced =
        v * v / 2.0 * pt.der_eta * pt.der_eta + pt.eta * pt.eta * v * v * s * s / 8.0 * bf.z * bf.z;

    let pion_sq = pt.pion1.norm_sqr() + pt.pion2.norm_sqr();
    let potential = pt.lambda * v * v * (pt.eta * pt.eta - 1.0) * (pt.eta * pt.eta - 1.0);

    let general_density =
        DENSITY_WEIGHT / 2.0 * (momentum_general + curvature_general + pion_sq + higgs_general + potential);
    let reduced_density = DENSITY_WEIGHT / 2.0
        * (pt.mom_gamma * pt.mom_gamma
            + pt.mom_z * pt.mom_z
            + pt.der_a_gamma * pt.der_a_gamma
            + pt.der_z * pt.der_z
            + pt.pion2.norm_sqr()
            + v * v / 2.0 * pt.der_eta * pt.der_eta
            + pt.eta * pt.eta * v * v * s * s / 8.0 * bf.z * bf.z
            + potential);

    Ok(DensityReport {
        general_density,
        reduced_density,
        momentum_norm_defect: (momentum_general - momentum_reduced).abs(),
        curvature_norm_defect: (curvature_general - curvature_reduced).abs(),
        higgs_norm_defect: (higgs_general - higgs_reduced).abs(),
    })
}

/// Algebraic (non-derivative) parts of the four Gauss constraint components
/// at a point, with the pointwise wedge turned into a product.
#[derive(Debug, Clone, Copy)]
pub struct GaussReport {
    pub a_lhs: Complex64,
    pub a_rhs: Complex64,
    pub b_lhs: Complex64,
    pub b_rhs: Complex64,
    pub c_rhs: Complex64,
    /// The reduced source the c-component is supposed to collapse to.
    pub c_source: f64,
    pub d_rhs: Complex64,
}

impl GaussReport {
    /// The system collapses to (c = source, d = 0) with a, b trivial.
    pub fn collapses(&self, tol: f64) -> bool {
        self.a_lhs.norm() <= tol
            && self.a_rhs.norm() <= tol
            && self.b_lhs.norm() <= tol
            && self.b_rhs.norm() <= tol
            && (self.c_rhs - c(self.c_source, 0.0)).norm() <= tol
            && self.d_rhs.norm() <= tol
    }
}

/// Evaluate the Gauss terms without any stratum precondition (used for
/// off-stratum probes as well).
pub fn gauss_constraint_terms(pt: &EWPoint) -> GaussReport {
    let cpl = &pt.couplings;
    let (g, gp) = (cpl.g, cpl.gp);
    let e = cpl.charge();
    let (cw, sw) = cpl.mixing();
    let bf = pt.broken();
    let i = c(0.0, 1.0);
    let neutral = sw * bf.a_gamma + cw * bf.z;
    let mom_neutral = sw * pt.mom_gamma + cw * pt.mom_z;

    let a_lhs = -i * g * neutral * pt.mom_plus;
    let a_rhs = -i * g * bf.w_minus * mom_neutral - i * (pt.eta * pt.vev * g / 4.0) * pt.pion1.conj();
    let b_lhs = i * g * neutral * pt.mom_minus;
    let b_rhs = i * g * bf.w_plus * mom_neutral + i * (pt.eta * pt.vev * g / 4.0) * pt.pion1;
    let w_pair = bf.w_minus * pt.mom_minus - bf.w_plus * pt.mom_plus;
    let c_source = pt.eta * pt.vev * g * gp / (2.0 * 2.0f64.sqrt() * e) * pt.pion2.im;
    let c_rhs = i * g * cw * w_pair + c(c_source, 0.0);
    let d_rhs = i * e * w_pair;
    GaussReport { a_lhs, a_rhs, b_lhs, b_rhs, c_rhs, c_source, d_rhs }
}

pub fn gauss_singular_reduction(pt: &EWPoint) -> Result<GaussReport, GaugeError> {
    pt.check_stratum()?;
    Ok(gauss_constraint_terms(pt))
}

#[derive(Debug, Clone, Copy)]
pub struct MassReport {
    /// eta^2 v^2 (g^2 + g'^2) / 4.
    pub m_z_sq: f64,
    /// Second difference of the reduced density sum in the Z slot.
    pub m_z_sq_extracted: f64,
    /// Second difference in the eta slot, reported without a sign assertion.
    pub eta_sector_coefficient: f64,
}

/// Closed-form Z mass squared against a finite-difference extraction from
/// the reduced density (exact for the quadratic Z dependence).
pub fn masses(pt: &EWPoint) -> MassReport {
    let s2 = pt.couplings.hypot().powi(2);
    let m_z_sq = pt.eta * pt.eta * pt.vev * pt.vev * s2 / 4.0;

    // parenthesized reduced sum as a function of single slots
    let v = pt.vev;
    let sum = |z: f64, eta: f64| -> f64 {
        pt.mom_gamma * pt.mom_gamma
            + pt.mom_z * pt.mom_z
            + pt.der_a_gamma * pt.der_a_gamma
            + pt.der_z * pt.der_z
            + pt.pion2.norm_sqr()
            + v * v / 2.0 * pt.der_eta * pt.der_eta
            + eta * eta * v * v * s2 / 8.0 * z * z
            + pt.lambda * v * v * (eta * eta - 1.0) * (eta * eta - 1.0)
    };
    let bf = pt.broken();
    let h = 0.5;
    let m_z_sq_extracted = (sum(bf.z + h, pt.eta) - 2.0 * sum(bf.z, pt.eta) + sum(bf.z - h, pt.eta)) / (h * h);
    let eta_sector_coefficient =
        (sum(bf.z, pt.eta + h) - 2.0 * sum(bf.z, pt.eta) + sum(bf.z, pt.eta - h)) / (h * h);
    MassReport { m_z_sq, m_z_sq_extracted, eta_sector_coefficient }
}

/// 2 p1 - (chi - sigma) dim(G) / 2.
pub fn asd_virtual_dim(p1: i64, chi_minus_sigma: i64, dim_g: i64) -> f64 {
    2.0 * p1 as f64 - 0.5 * chi_minus_sigma as f64 * dim_g as f64
}

// ---------------------------------------------------------------------------
// Surface-group representation varieties

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepVarElem {
    Su2(SU2Elem),
    U1(Complex64),
}

impl RepVarElem {
    fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Su2(a), Self::Su2(b)) => Self::Su2(a.mul(b)),
            (Self::U1(a), Self::U1(b)) => Self::U1(a * b),
            _ => panic!("mixed group entries"),
        }
    }

    fn inverse(&self) -> Self {
        match self {
            Self::Su2(a) => Self::Su2(a.inverse()),
            Self::U1(a) => Self::U1(a.conj()),
        }
    }

    fn dist_to_identity(&self) -> f64 {
        match self {
            Self::Su2(a) => a.dist(&SU2Elem::identity()),
            Self::U1(a) => (a - c(1.0, 0.0)).norm(),
        }
    }
}

/// A point of Hom(surface group, G): the images of the 2l standard
/// generators, ordered (a1, b1, a2, b2, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct RepVarPoint {
    pub genus: usize,
    pub entries: Vec<RepVarElem>,
}

impl RepVarPoint {
    pub fn su2(genus: usize, entries: Vec<SU2Elem>) -> Self {
        assert_eq!(entries.len(), 2 * genus, "need 2 genus entries");
        Self { genus, entries: entries.into_iter().map(RepVarElem::Su2).collect() }
    }

    pub fn u1(genus: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), 2 * genus, "need 2 genus entries");
        Self { genus, entries: entries.into_iter().map(RepVarElem::U1).collect() }
    }

    fn group_dim(&self) -> usize {
        match self.entries.first() {
            Some(RepVarElem::U1(_)) => 1,
            _ => 3,
        }
    }
}

/// Product of commutators a_i b_i a_i^{-1} b_i^{-1}, left to right.
pub fn relation_map(pt: &RepVarPoint) -> RepVarElem {
    let mut acc = match pt.entries.first() {
        Some(RepVarElem::U1(_)) => RepVarElem::U1(c(1.0, 0.0)),
        _ => RepVarElem::Su2(SU2Elem::identity()),
    };
    for pair in pt.entries.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        acc = acc.mul(a).mul(b).mul(&a.inverse()).mul(&b.inverse());
    }
    acc
}

/// Finite-difference rank of the relator differential in exponential chart
/// coordinates, and the induced local dimension 2l dim(G) - rank.
pub fn repvar_tangent_rank(pt: &RepVarPoint, tol: f64) -> Result<(usize, usize), GaugeError> {
    let r0 = relation_map(pt);
    if r0.dist_to_identity() > tol {
        return Err(GaugeError::OffVariety);
    }
    let dim_g = pt.group_dim();
    let n_cols = 2 * pt.genus * dim_g;
    let eps = 1e-5;

    let log_coords = |e: &RepVarElem| -> Vec<f64> {
        match e {
            RepVarElem::Su2(a) => a.log_coords().to_vec(),
            RepVarElem::U1(z) => vec![z.im.atan2(z.re)],
        }
    };
    let perturb = |entry: &RepVarElem, dir: usize, t: f64| -> RepVarElem {
        match entry {
            RepVarElem::Su2(a) => {
                let mut theta = [0.0; 3];
                theta[dir] = t;
                RepVarElem::Su2(a.mul(&SU2Elem::exp_coords(&theta)))
            }
            RepVarElem::U1(z) => RepVarElem::U1(z * Complex64::from_polar(1.0, t)),
        }
    };

    let r0_inv = r0.inverse();
    let mut jac = DMatrix::zeros(dim_g, n_cols);
    for (j, entry) in pt.entries.iter().enumerate() {
        for dir in 0..dim_g {
            let mut col = vec![0.0; dim_g];
            for (sgn, t) in [(1.0, eps), (-1.0, -eps)] {
                let mut moved = pt.clone();
                moved.entries[j] = perturb(entry, dir, t);
                let r = relation_map(&moved);
                let chart = log_coords(&r0_inv.mul(&r));
                for (i, v) in chart.iter().enumerate() {
                    col[i] += sgn * v / (2.0 * eps);
                }
            }
            for (i, v) in col.iter().enumerate() {
                jac[(i, j * dim_g + dir)] = *v;
            }
        }
    }
    let (_, sigma, _) = crate::subspace::jacobi_svd(&jac);
    let smax = sigma.max();
    let rank = sigma.iter().filter(|s| **s > 1e-7 * (1.0 + smax)).count();
    Ok((rank, n_cols - rank))
}

/// Antisymmetric pairing of two tangent vectors (xi_i, eta_i) at a point of
/// the abelian representation torus.
pub fn sigma_form_u1(a: Complex64, b: Complex64, xi1: f64, eta1: f64, xi2: f64, eta2: f64) -> f64 {
    debug_assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12);
    let _ = (a, b);
    xi1 * eta2 - xi2 * eta1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepVarStabilizer {
    Su2,
    U1,
    Z2,
    FullU1,
}

impl fmt::Display for RepVarStabilizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Su2 => "SU(2)",
            Self::U1 => "U(1)",
            Self::Z2 => "Z2",
            Self::FullU1 => "U(1)",
        };
        write!(f, "{s}")
    }
}

/// Stabilizer of the tuple under diagonal conjugation, from the simultaneous
/// commutant of all entries.
pub fn repvar_orbit_type(pt: &RepVarPoint, rank_tol: f64) -> RepVarStabilizer {
    match pt.entries.first() {
        Some(RepVarElem::U1(_)) | None => RepVarStabilizer::FullU1,
        Some(RepVarElem::Su2(_)) => {
            let samples: Vec<SU2Elem> = pt
                .entries
                .iter()
                .map(|e| match e {
                    RepVarElem::Su2(a) => *a,
                    RepVarElem::U1(_) => unreachable!("mixed tuple"),
                })
                .collect();
            match su2_commutant_dim(&samples, rank_tol) {
                3 => RepVarStabilizer::Su2,
                1 => RepVarStabilizer::U1,
                _ => RepVarStabilizer::Z2,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn su2_element_algebra() {
        let mut rng = rng_from_seed(3);
        for _ in 0..50 {
            let a = SU2Elem::haar(&mut rng);
            let b = SU2Elem::haar(&mut rng);
            // product matches matrix multiplication
            let prod = a.mul(&b).matrix();
            assert!((prod - a.matrix() * b.matrix()).norm() < 1e-14);
            // inverse
            assert!(a.mul(&a.inverse()).dist(&SU2Elem::identity()) < 1e-14);
            // determinant 1
            let m = a.matrix();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            assert!((det - c(1.0, 0.0)).norm() < 1e-14);
        }
        // log/exp round trip
        let theta = [0.3, -0.8, 0.5];
        let g = SU2Elem::exp_coords(&theta);
        let back = g.log_coords();
        for i in 0..3 {
            assert!((back[i] - theta[i]).abs() < 1e-12);
        }
        assert!(SU2Elem::new(c(0.8, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn centralizer_table_rows() {
        let table = su2_centralizer_table();
        assert_eq!(table.len(), 3);
        assert_eq!(
            table[0],
            HoweRecord {
                holonomy: Su2Class::TrivialOrCenter,
                stabilizer: Su2Class::Full,
                howe: Su2Class::TrivialOrCenter
            }
        );
        assert_eq!(
            table[1],
            HoweRecord { holonomy: Su2Class::Torus, stabilizer: Su2Class::Torus, howe: Su2Class::Torus }
        );
        assert_eq!(
            table[2],
            HoweRecord { holonomy: Su2Class::Full, stabilizer: Su2Class::TrivialOrCenter, howe: Su2Class::Full }
        );
        // table text is stable across calls
        assert_eq!(format_centralizer_table(&table), format_centralizer_table(&su2_centralizer_table()));
    }

    #[test]
    fn howe_products() {
        let all = howe_product_enumerate(&[Su2Class::Full, Su2Class::Torus, Su2Class::TrivialOrCenter]).unwrap();
        assert_eq!(all, vec![ProductHowe::FullTimesU1, ProductHowe::TorusTimesU1, ProductHowe::CenterTimesU1]);
        // duplicates collapse
        let dup = howe_product_enumerate(&[Su2Class::Full, Su2Class::Full]).unwrap();
        assert_eq!(dup.len(), 1);
        assert!(howe_product_enumerate(&[]).is_err());
    }

    #[test]
    fn goursat_families_verify() {
        let tuples = goursat_enumerate(2);
        assert!(tuples.len() >= 12);
        for (i, t) in tuples.iter().enumerate() {
            let check = verify_centralizer(t, 60, 0x60a7 + i as u64);
            assert!(check.ok(1e-10), "tuple {t:?} failed: {check:?}");
        }
    }

    #[test]
    fn goursat_table_text_is_stable() {
        let a = format_goursat_table();
        let b = format_goursat_table();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 14);
        assert!(a.contains("UNENUMERATED"));
    }

    #[test]
    fn conjugation_membership_rule() {
        // beta = 0 keeps the conjugate diagonal for any angle
        let diag = SU2Elem::torus(0.7);
        let (m, in_k) = conjugate_k(&diag, 1.3);
        assert!(in_k && m[(0, 1)].norm() < 1e-14);
        // theta = 0 gives the identity
        let mut rng = rng_from_seed(11);
        let a = SU2Elem::haar(&mut rng);
        let (m0, in_k0) = conjugate_k(&a, 0.0);
        assert!(in_k0 && (m0 - Matrix2::identity()).norm() < 1e-14);
        // hand case: beta = 1/sqrt(2), theta = pi has a nonzero off-diagonal
        let h = SU2Elem::new(c(1.0 / 2.0f64.sqrt(), 0.0), c(1.0 / 2.0f64.sqrt(), 0.0)).unwrap();
        let (mh, in_kh) = conjugate_k(&h, PI);
        assert!(!in_kh && mh[(0, 1)].norm() > 0.5);
        // closed form equals direct conjugation on random samples
        for i in 0..200 {
            let a = SU2Elem::haar(&mut rng);
            let theta = rng.gen_range(-6.0..6.0);
            let (m, in_k) = conjugate_k(&a, theta);
            let kgen = SU2Elem::torus(theta / 2.0);
            let direct = a.matrix() * kgen.matrix() * a.inverse().matrix();
            assert!((m - direct).norm() < 1e-12, "sample {i}");
            let rule = a.beta.norm() < 1e-12 || (Complex64::from_polar(1.0, theta) - c(1.0, 0.0)).norm() < 1e-12;
            assert_eq!(in_k, rule);
        }
    }

    #[test]
    fn stabilizer_pair_rule() {
        assert_eq!(stabilizer_pair(&[]), PairStabilizer::K);
        assert_eq!(stabilizer_pair(&[c(0.0, 0.0), c(0.0, 0.0)]), PairStabilizer::K);
        assert_eq!(stabilizer_pair(&[c(0.0, 0.0), c(0.1, 0.0)]), PairStabilizer::Z2);
    }

    #[test]
    fn basis_change_round_trip() {
        let cpl = Couplings::new(0.65, 0.35).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let f = GaugeFields {
                w1: rng.gen_range(-2.0..2.0),
                w2: rng.gen_range(-2.0..2.0),
                w3: rng.gen_range(-2.0..2.0),
                b: rng.gen_range(-2.0..2.0),
            };
            let bf = ew_forward(&f, &cpl);
            let back = ew_inverse(&bf, &cpl);
            assert!((back.w1 - f.w1).abs() < 1e-14);
            assert!((back.w2 - f.w2).abs() < 1e-14);
            assert!((back.w3 - f.w3).abs() < 1e-14);
            assert!((back.b - f.b).abs() < 1e-14);
            // conjugate pair
            assert!((bf.w_plus.conj() - bf.w_minus).norm() < 1e-14);
        }
        // equal couplings: the rotation becomes the diagonal/antidiagonal mix
        let eq = Couplings::new(1.0, 1.0).unwrap();
        let f = GaugeFields { w1: 0.0, w2: 0.0, w3: 0.4, b: -0.9 };
        let bf = ew_forward(&f, &eq);
        assert!((bf.z - (0.4 + 0.9) / 2.0f64.sqrt()).abs() < 1e-14);
        assert!((bf.a_gamma - (0.4 - 0.9) / 2.0f64.sqrt()).abs() < 1e-14);
        assert!(Couplings::new(0.0, 1.0).is_err());
    }

    #[test]
    fn broken_basis_commutators_close() {
        assert!(ew_commutators_check() < 1e-14);
    }

    fn stratum_point(rng: &mut impl Rng) -> EWPoint {
        EWPoint {
            couplings: Couplings::new(rng.gen_range(0.3..1.5), rng.gen_range(0.3..1.5)).unwrap(),
            fields: GaugeFields { w1: 0.0, w2: 0.0, w3: rng.gen_range(-1.0..1.0), b: rng.gen_range(-1.0..1.0) },
            mom_plus: c(0.0, 0.0),
            mom_minus: c(0.0, 0.0),
            mom_z: rng.gen_range(-1.0..1.0),
            mom_gamma: rng.gen_range(-1.0..1.0),
            eta: rng.gen_range(0.2..2.0),
            pion1: c(0.0, 0.0),
            pion2: c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            der_a_gamma: rng.gen_range(-1.0..1.0),
            der_z: rng.gen_range(-1.0..1.0),
            der_eta: rng.gen_range(-1.0..1.0),
            lambda: rng.gen_range(0.1..2.0),
            vev: rng.gen_range(0.5..2.0),
        }
    }

    #[test]
    fn density_identity_on_stratum() {
        let mut rng = rng_from_seed(77);
        for _ in 0..1000 {
            let pt = stratum_point(&mut rng);
            let rep = singular_hamiltonian_identity(&pt).unwrap();
            assert!(rep.holds(1e-12), "{rep:?}");
        }
        // vacuum point has zero density
        let mut pt = stratum_point(&mut rng);
        pt.eta = 1.0;
        pt.mom_z = 0.0;
        pt.mom_gamma = 0.0;
        pt.pion2 = c(0.0, 0.0);
        pt.der_a_gamma = 0.0;
        pt.der_z = 0.0;
        pt.der_eta = 0.0;
        pt.fields.w3 = 0.0;
        pt.fields.b = 0.0;
        let rep = singular_hamiltonian_identity(&pt).unwrap();
        assert!(rep.reduced_density.abs() < 1e-14 && rep.general_density.abs() < 1e-14);
        // only the Z momentum: density = weight/2 * mom_z^2
        let mut pz = pt;
        pz.mom_z = 0.8;
        let rep = singular_hamiltonian_identity(&pz).unwrap();
        assert!((rep.reduced_density - DENSITY_WEIGHT / 2.0 * 0.64).abs() < 1e-14);
        // off stratum rejected
        let mut bad = pt;
        bad.fields.w1 = 0.1;
        assert!(matches!(singular_hamiltonian_identity(&bad), Err(GaugeError::OffStratum(_))));
    }

    #[test]
    fn gauss_constraint_collapses_on_stratum() {
        let mut rng = rng_from_seed(78);
        for _ in 0..200 {
            let pt = stratum_point(&mut rng);
            let rep = gauss_singular_reduction(&pt).unwrap();
            assert!(rep.collapses(1e-14), "{rep:?}");
            // the surviving source follows the pion component
            let expected = pt.eta * pt.vev * pt.couplings.g * pt.couplings.gp
                / (2.0 * 2.0f64.sqrt() * pt.couplings.charge())
                * pt.pion2.im;
            assert!((rep.c_source - expected).abs() < 1e-14);
        }
        // real pion2 kills the source
        let mut pt = stratum_point(&mut rng);
        pt.pion2 = c(0.7, 0.0);
        let rep = gauss_singular_reduction(&pt).unwrap();
        assert!(rep.c_source.abs() < 1e-14);
        // injected W- couples the first component
        let mut off = stratum_point(&mut rng);
        off.fields.w1 = 0.4;
        off.fields.w2 = 0.3;
        off.mom_z = 0.9;
        let raw = gauss_constraint_terms(&off);
        assert!(raw.a_rhs.norm() > 1e-3, "off-stratum coupling detected");
    }

    #[test]
    fn mass_extraction_matches_closed_form() {
        let mut rng = rng_from_seed(79);
        for _ in 0..100 {
            let pt = stratum_point(&mut rng);
            let rep = masses(&pt);
            assert!((rep.m_z_sq - rep.m_z_sq_extracted).abs() < 1e-10, "{rep:?}");
        }
        let mut pt = stratum_point(&mut rng);
        pt.eta = 1.0;
        pt.vev = 2.0;
        pt.couplings = Couplings::new(1.0, 1.0).unwrap();
        let rep = masses(&pt);
        assert!((rep.m_z_sq - 2.0).abs() < 1e-14);
        pt.eta = 0.0;
        assert!(masses(&pt).m_z_sq.abs() < 1e-14);
    }

    #[test]
    fn asd_dimension_arithmetic() {
        assert_eq!(asd_virtual_dim(4, 2, 3), 5.0);
        assert_eq!(asd_virtual_dim(0, 0, 7), 0.0);
        assert_eq!(asd_virtual_dim(4, 1, 3), 6.5);
        assert_eq!(asd_virtual_dim(6, 0, 1), 12.0);
    }

    #[test]
    fn relation_map_against_matrix_oracle() {
        // genus-1 commutator of two explicit rotations, against naive 2x2
        // multiplication
        let a = SU2Elem::exp_coords(&[0.0, 0.0, PI / 2.0]);
        let b = SU2Elem::exp_coords(&[PI / 2.0, 0.0, 0.0]);
        let pt = RepVarPoint::su2(1, vec![a, b]);
        let r = relation_map(&pt);
        let oracle = a.matrix() * b.matrix() * a.inverse().matrix() * b.inverse().matrix();
        match r {
            RepVarElem::Su2(g) => assert!((g.matrix() - oracle).norm() < 1e-13),
            _ => unreachable!(),
        }
        // commuting pair gives the identity
        let pt2 = RepVarPoint::su2(1, vec![SU2Elem::torus(0.4), SU2Elem::torus(1.1)]);
        assert!(relation_map(&pt2).dist_to_identity() < 1e-14);
        // abelian case is always the identity
        let pt3 = RepVarPoint::u1(2, vec![c(0.0, 1.0), c(-1.0, 0.0), c(0.6, 0.8), c(1.0, 0.0)]);
        assert!(relation_map(&pt3).dist_to_identity() < 1e-14);
    }

    #[test]
    fn tangent_ranks() {
        // abelian genus 1: the whole torus, rank 0, dimension 2
        let pt = RepVarPoint::u1(1, vec![c(0.6, 0.8), c(0.0, 1.0)]);
        assert_eq!(repvar_tangent_rank(&pt, 1e-8).unwrap(), (0, 2));
        // commuting generic pair in a common torus: rank 2, local dim 4
        let pt2 = RepVarPoint::su2(1, vec![SU2Elem::torus(0.7), SU2Elem::torus(1.3)]);
        assert_eq!(repvar_tangent_rank(&pt2, 1e-8).unwrap(), (2, 4));
        // the identity tuple is maximally singular
        let pt3 = RepVarPoint::su2(1, vec![SU2Elem::identity(), SU2Elem::identity()]);
        assert_eq!(repvar_tangent_rank(&pt3, 1e-8).unwrap().0, 0);
        // off the variety
        let pt4 = RepVarPoint::su2(
            1,
            vec![SU2Elem::exp_coords(&[0.0, 0.0, PI / 2.0]), SU2Elem::exp_coords(&[PI / 2.0, 0.0, 0.0])],
        );
        assert!(matches!(repvar_tangent_rank(&pt4, 1e-8), Err(GaugeError::OffVariety)));
    }

    #[test]
    fn sigma_form_properties() {
        let a = c(0.6, 0.8);
        let b = c(0.0, 1.0);
        assert_eq!(sigma_form_u1(a, b, 1.0, 0.0, 0.0, 1.0), 1.0);
        assert_eq!(sigma_form_u1(a, b, 0.0, 1.0, 1.0, 0.0), -1.0);
        assert_eq!(sigma_form_u1(a, b, 0.3, 0.3, 0.3, 0.3), 0.0);
        // Gram matrix on the coordinate basis has determinant 1
        let gram = [
            [sigma_form_u1(a, b, 1.0, 0.0, 1.0, 0.0), sigma_form_u1(a, b, 1.0, 0.0, 0.0, 1.0)],
            [sigma_form_u1(a, b, 0.0, 1.0, 1.0, 0.0), sigma_form_u1(a, b, 0.0, 1.0, 0.0, 1.0)],
        ];
        let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0];
        assert!((det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orbit_type_labels() {
        let central = RepVarPoint::su2(1, vec![SU2Elem::identity(), SU2Elem::minus_identity()]);
        assert_eq!(repvar_orbit_type(&central, 1e-10), RepVarStabilizer::Su2);
        let diag = RepVarPoint::su2(1, vec![SU2Elem::torus(0.7), SU2Elem::torus(2.1)]);
        assert_eq!(repvar_orbit_type(&diag, 1e-10), RepVarStabilizer::U1);
        let generic = RepVarPoint::su2(
            1,
            vec![SU2Elem::exp_coords(&[0.0, 0.0, 1.0]), SU2Elem::exp_coords(&[1.0, 0.0, 0.0])],
        );
        assert_eq!(repvar_orbit_type(&generic, 1e-10), RepVarStabilizer::Z2);
        let abelian = RepVarPoint::u1(1, vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(repvar_orbit_type(&abelian, 1e-10), RepVarStabilizer::FullU1);
    }
}
