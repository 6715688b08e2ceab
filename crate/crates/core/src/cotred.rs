//! Cotangent reduction of the planar harmonic oscillator by its circle
//! symmetry: the invariant triple and its Poisson algebra, the seam
//! stratification of the reduced cone, the chart on the top stratum with its
//! finite-time blowup, the flow pushed to the cone, and a symplectic-side
//! integrator to check both against.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DVector, Vector2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

/// Below this, a norm counts as zero for seam classification.
pub const SEAM_TOL: f64 = 1e-9;
/// Half-width of the window around a chart blowup time that gets tagged.
pub const BLOWUP_WINDOW: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CotredError {
    /// The state does not lie on the zero level of the angular momentum.
    OffConstraint(f64),
    /// The chart needs q != 0.
    QZero,
    /// The reduced radial coordinate must be positive.
    NonPositiveQbar,
}

impl fmt::Display for CotredError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OffConstraint(j) => write!(f, "angular momentum {j:e} is not zero"),
            Self::QZero => write!(f, "configuration point is at the origin"),
            Self::NonPositiveQbar => write!(f, "reduced coordinate qbar must be positive"),
        }
    }
}

impl core::error::Error for CotredError {}

/// Phase point of the planar oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscState {
    pub q: Vector2<f64>,
    pub p: Vector2<f64>,
}

impl OscState {
    pub fn new(q1: f64, q2: f64, p1: f64, p2: f64) -> Self {
        Self { q: Vector2::new(q1, q2), p: Vector2::new(p1, p2) }
    }

    /// Phase vector in (q1, q2, p1, p2) ordering.
    pub fn to_phase_vector(self) -> DVector<f64> {
        DVector::from_column_slice(&[self.q[0], self.q[1], self.p[0], self.p[1]])
    }

    pub fn from_phase_vector(x: &DVector<f64>) -> Self {
        Self::new(x[0], x[1], x[2], x[3])
    }
}

/// The invariant triple
/// ( (|p|^2 - |q|^2)/2 , q . p , (|p|^2 + |q|^2)/2 ).
/// Together with the angular momentum these generate the circle-invariant
/// quadratics; the third component is the oscillator Hamiltonian.
pub fn invariants(s: &OscState) -> Vector3<f64> {
    let q2 = s.q.norm_squared();
    let p2 = s.p.norm_squared();
    Vector3::new(0.5 * (p2 - q2), s.q.dot(&s.p), 0.5 * (p2 + q2))
}

pub fn angular_momentum(s: &OscState) -> f64 {
    s.q[0] * s.p[1] - s.q[1] * s.p[0]
}

pub fn energy(s: &OscState) -> f64 {
    invariants(s)[2]
}

/// Canonical bracket {F, G} = grad_p F . grad_q G - grad_q F . grad_p G on
/// R^{2n} split as (q, p), with fourth-order difference gradients (exact for
/// the quadratic invariants).
pub fn poisson_bracket(
    f: &dyn Fn(&DVector<f64>) -> f64,
    g: &dyn Fn(&DVector<f64>) -> f64,
    x: &DVector<f64>,
) -> f64 {
    let n = x.len() / 2;
    let gf = fd_gradient(f, x);
    let gg = fd_gradient(g, x);
    gf.rows(n, n).dot(&gg.rows(0, n)) - gf.rows(0, n).dot(&gg.rows(n, n))
}

fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let mut grad = DVector::zeros(x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = 1e-4 * (1.0 + x[j].abs());
        let x0 = x[j];
        let mut acc = 0.0;
        for (c, dx) in [(1.0, -2.0 * h), (-8.0, -h), (8.0, h), (-1.0, 2.0 * h)] {
            xp[j] = x0 + dx;
            acc += c * f(&xp);
        }
        xp[j] = x0;
        grad[j] = acc / (12.0 * h);
    }
    grad
}

/// Strata of the seam decomposition: the open top stratum, the punctured
/// momentum line over q = 0, and the double point at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SeamStratum {
    Pp,
    Line,
    Top,
}

impl fmt::Display for SeamStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Top => "TOP",
            Self::Line => "LINE",
            Self::Pp => "PP",
        };
        write!(f, "{s}")
    }
}

pub fn seam_classify(s: &OscState, tol: f64) -> SeamStratum {
    let qn = s.q.norm();
    let pn = s.p.norm();
    if qn < tol {
        if pn < tol {
            SeamStratum::Pp
        } else {
            SeamStratum::Line
        }
    } else {
        SeamStratum::Top
    }
}

/// Chart on the top stratum of the zero momentum level:
/// (qbar, pbar) = (|q|^2 / 2, q.p / |q|^2).
pub fn psi_reduce(s: &OscState, tol: f64) -> Result<(f64, f64), CotredError> {
    let j = angular_momentum(s);
    if j.abs() > tol {
        return Err(CotredError::OffConstraint(j));
    }
    let q2 = s.q.norm_squared();
    if q2.sqrt() < SEAM_TOL {
        return Err(CotredError::QZero);
    }
    Ok((0.5 * q2, s.q.dot(&s.p) / q2))
}

/// The invariant triple expressed through the chart:
/// I(qbar, pbar) = ( qbar (pbar^2 - 1), 2 qbar pbar, qbar (pbar^2 + 1) ).
/// Composing with psi_reduce recovers `invariants` on the constraint set.
pub fn invariants_reduced(qbar: f64, pbar: f64) -> Result<Vector3<f64>, CotredError> {
    if qbar <= 0.0 {
        return Err(CotredError::NonPositiveQbar);
    }
    Ok(Vector3::new(qbar * (pbar * pbar - 1.0), 2.0 * qbar * pbar, qbar * (pbar * pbar + 1.0)))
}

/// Flow of the reduced Hamiltonian hbar = qbar (pbar^2 + 1) in the top
/// chart: qbar(t) = h0 cos^2(t + t0), pbar(t) = -tan(t + t0), which blows up
/// whenever t + t0 crosses pi/2 + k pi.
#[derive(Debug, Clone, Copy)]
pub struct TopChartFlow {
    pub h0: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ChartFlowPoint {
    pub t: f64,
    pub qbar: f64,
    pub pbar: f64,
    pub near_blowup: bool,
}

impl TopChartFlow {
    pub fn new(qbar0: f64, pbar0: f64) -> Result<Self, CotredError> {
        if qbar0 <= 0.0 {
            return Err(CotredError::NonPositiveQbar);
        }
        Ok(Self { h0: qbar0 * (pbar0 * pbar0 + 1.0), t0: (-pbar0).atan() })
    }

    /// Distance from t + t0 to the nearest pole of tan.
    pub fn blowup_distance(&self, t: f64) -> f64 {
        let tau = t + self.t0;
        let k = ((tau - core::f64::consts::FRAC_PI_2) / core::f64::consts::PI).round();
        (tau - (core::f64::consts::FRAC_PI_2 + k * core::f64::consts::PI)).abs()
    }

    pub fn at(&self, t: f64) -> ChartFlowPoint {
        let tau = t + self.t0;
        let c = tau.cos();
        ChartFlowPoint {
            t,
            qbar: self.h0 * c * c,
            pbar: -tau.tan(),
            near_blowup: self.blowup_distance(t) < BLOWUP_WINDOW,
        }
    }
}

/// Flow on the invariant cone: rotation by +2t in the (k1, k2) plane with k3
/// conserved; this is what the oscillator flow looks like through the
/// invariants.
pub fn cone_flow(k: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let (c, s) = ((2.0 * t).cos(), (2.0 * t).sin());
    Vector3::new(k[0] * c - k[1] * s, k[0] * s + k[1] * c, k[2])
}

/// Classical RK4 on qdot = p, pdot = -q, recording the whole trajectory and
/// the worst conservation drifts.
pub struct Rk4Run {
    pub states: Vec<(f64, OscState)>,
    pub max_momentum_drift: f64,
    pub max_energy_drift: f64,
}

pub fn oscillator_rk4(initial: OscState, dt: f64, steps: usize) -> Rk4Run {
    let deriv = |s: &OscState| OscState { q: s.p, p: -s.q };
    let add = |a: &OscState, b: &OscState, h: f64| OscState { q: a.q + b.q * h, p: a.p + b.p * h };

    let j0 = angular_momentum(&initial);
    let e0 = energy(&initial);
    let mut states = Vec::with_capacity(steps + 1);
    states.push((0.0, initial));
    let mut s = initial;
    let mut max_j: f64 = 0.0;
    let mut max_e: f64 = 0.0;
    for i in 0..steps {
        let k1 = deriv(&s);
        let k2 = deriv(&add(&s, &k1, dt / 2.0));
        let k3 = deriv(&add(&s, &k2, dt / 2.0));
        let k4 = deriv(&add(&s, &k3, dt));
        s = OscState {
            q: s.q + (k1.q + k2.q * 2.0 + k3.q * 2.0 + k4.q) * (dt / 6.0),
            p: s.p + (k1.p + k2.p * 2.0 + k3.p * 2.0 + k4.p) * (dt / 6.0),
        };
        let t = (i + 1) as f64 * dt;
        states.push((t, s));
        max_j = max_j.max((angular_momentum(&s) - j0).abs());
        max_e = max_e.max((energy(&s) - e0).abs());
    }
    Rk4Run { states, max_momentum_drift: max_j, max_energy_drift: max_e }
}

/// Frontier relations of the seam strata: scaled sequences in a larger
/// stratum converge to a point of the smaller one.
#[derive(Debug, Clone)]
pub struct FrontierReport {
    pub top_to_line: bool,
    pub line_to_pp: bool,
}

pub fn seam_frontier_check(tol: f64) -> FrontierReport {
    // TOP points (eps q0, p0) limit onto the LINE point (0, p0); the
    // sequence stops just above the classification resolution.
    let q0 = Vector2::new(0.6, -0.2);
    let p0 = Vector2::new(3.0, -1.0);
    let mut top_to_line = true;
    let mut eps = 1.0;
    while eps * q0.norm() > 100.0 * tol {
        let s = OscState { q: q0 * eps, p: p0 };
        if seam_classify(&s, tol) != SeamStratum::Top {
            top_to_line = false;
        }
        eps *= 0.25;
    }
    let limit = OscState { q: Vector2::zeros(), p: p0 };
    top_to_line &= seam_classify(&limit, tol) == SeamStratum::Line;

    // LINE points (0, eps p0) limit onto PP.
    let mut line_to_pp = true;
    eps = 1.0;
    while eps * p0.norm() > 100.0 * tol {
        let s = OscState { q: Vector2::zeros(), p: p0 * eps };
        if seam_classify(&s, tol) != SeamStratum::Line {
            line_to_pp = false;
        }
        eps *= 0.25;
    }
    let origin = OscState { q: Vector2::zeros(), p: Vector2::zeros() };
    line_to_pp &= seam_classify(&origin, tol) == SeamStratum::Pp;

    FrontierReport { top_to_line, line_to_pp }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_triple_frozen_values() {
        let s = OscState::new(1.0, 0.0, 1.0, 0.0);
        let k = invariants(&s);
        assert!((k - Vector3::new(0.0, 1.0, 1.0)).norm() < 1e-15);
        assert_eq!(angular_momentum(&s), 0.0);

        let s2 = OscState::new(1.0, 0.0, 0.0, 1.0);
        let k2 = invariants(&s2);
        assert!((k2 - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert_eq!(angular_momentum(&s2), 1.0);
    }

    #[test]
    fn chart_and_its_inverse_triple() {
        let s = OscState::new(1.0, 0.0, 1.0, 0.0);
        let (qbar, pbar) = psi_reduce(&s, 1e-9).unwrap();
        assert!((qbar - 0.5).abs() < 1e-15 && (pbar - 1.0).abs() < 1e-15);

        let i = invariants_reduced(0.5, 1.0).unwrap();
        assert!((i - Vector3::new(0.0, 1.0, 1.0)).norm() < 1e-15);
        let i2 = invariants_reduced(1.0, 0.0).unwrap();
        assert!((i2 - Vector3::new(-1.0, 0.0, 1.0)).norm() < 1e-15);

        assert_eq!(psi_reduce(&OscState::new(0.0, 0.0, 1.0, 0.0), 1e-9), Err(CotredError::QZero));
        assert!(matches!(
            psi_reduce(&OscState::new(1.0, 0.0, 0.0, 1.0), 1e-9),
            Err(CotredError::OffConstraint(_))
        ));
        assert_eq!(invariants_reduced(0.0, 1.0), Err(CotredError::NonPositiveQbar));
    }

    #[test]
    fn chart_composition_recovers_invariants() {
        // On the constraint set (p parallel to q) the chart triple equals the
        // ambient triple exactly.
        for (a, b, lam) in [(0.7, -0.3, 1.4), (1.2, 0.5, -0.6), (0.1, 0.9, 0.0)] {
            let q = Vector2::new(a, b);
            let s = OscState { q, p: q * lam };
            let (qbar, pbar) = psi_reduce(&s, 1e-12).unwrap();
            let lhs = invariants_reduced(qbar, pbar).unwrap();
            let rhs = invariants(&s);
            assert!((lhs - rhs).norm() < 1e-12, "lam = {lam}");
        }
    }

    #[test]
    fn invariant_triple_closes_as_algebra() {
        let e_plus = |x: &DVector<f64>| 0.5 * (x[2] * x[2] + x[3] * x[3] - x[0] * x[0] - x[1] * x[1]);
        let e_minus = |x: &DVector<f64>| x[0] * x[2] + x[1] * x[3];
        let h = |x: &DVector<f64>| 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
        for pt in [[1.0, 0.0, 0.0, 1.0], [0.3, -0.4, 0.8, 0.2], [1.1, 0.7, -0.5, 0.9]] {
            let x = DVector::from_column_slice(&pt);
            let d1 = poisson_bracket(&h, &e_plus, &x) + 2.0 * e_minus(&x);
            let d2 = poisson_bracket(&h, &e_minus, &x) - 2.0 * e_plus(&x);
            let d3 = poisson_bracket(&e_plus, &e_minus, &x) - 2.0 * h(&x);
            assert!(d1.abs() < 1e-9 && d2.abs() < 1e-9 && d3.abs() < 1e-9, "at {pt:?}: {d1:e} {d2:e} {d3:e}");
        }
    }

    #[test]
    fn top_chart_flow_matches_closed_form() {
        let (qbar0, pbar0) = (0.5, 1.0);
        let flow = TopChartFlow::new(qbar0, pbar0).unwrap();
        assert!((flow.h0 - 1.0).abs() < 1e-15);
        // At t = -t0 the momentum coordinate vanishes and qbar peaks at h0.
        let peak = flow.at(-flow.t0);
        assert!((peak.qbar - flow.h0).abs() < 1e-15 && peak.pbar.abs() < 1e-15);
        // hbar is conserved and the triple rotates uniformly.
        for i in 0..50 {
            let t = -0.7 + 0.02 * i as f64;
            let pt = flow.at(t);
            if pt.near_blowup {
                continue;
            }
            let hbar = pt.qbar * (pt.pbar * pt.pbar + 1.0);
            assert!((hbar - flow.h0).abs() < 1e-12);
            if pt.qbar > 0.0 {
                let i3 = invariants_reduced(pt.qbar, pt.pbar).unwrap();
                let tau = t + flow.t0;
                let expected = Vector3::new(
                    -flow.h0 * (2.0 * tau).cos(),
                    -flow.h0 * (2.0 * tau).sin(),
                    flow.h0,
                );
                assert!((i3 - expected).norm() < 1e-12, "t = {t}");
            }
        }
        // Blowup tagging brackets the pole of tan.
        let t_c = core::f64::consts::FRAC_PI_2 - flow.t0;
        assert!(flow.at(t_c - 0.5 * BLOWUP_WINDOW).near_blowup);
        assert!(!flow.at(t_c - 10.0 * BLOWUP_WINDOW).near_blowup);
        assert!(matches!(TopChartFlow::new(-0.1, 0.0), Err(CotredError::NonPositiveQbar)));
    }

    #[test]
    fn integrator_agrees_with_cone_flow() {
        let initial = OscState::new(0.8, -0.1, 0.4, -0.05);
        let dt = 1e-3;
        let steps = 20_000;
        let run = oscillator_rk4(initial, dt, steps);
        assert!(run.max_momentum_drift < 1e-8, "drift {:e}", run.max_momentum_drift);
        assert!(run.max_energy_drift < 1e-8);
        let k0 = invariants(&initial);
        let mut worst: f64 = 0.0;
        for (t, s) in run.states.iter().step_by(500) {
            worst = worst.max((cone_flow(&k0, *t) - invariants(s)).norm());
        }
        assert!(worst < 1e-8, "cone flow defect {worst:e}");
    }

    #[test]
    fn seam_classification_and_frontier() {
        assert_eq!(seam_classify(&OscState::new(1.0, 0.0, 0.0, 0.0), SEAM_TOL), SeamStratum::Top);
        assert_eq!(seam_classify(&OscState::new(0.0, 0.0, 2.0, 0.0), SEAM_TOL), SeamStratum::Line);
        assert_eq!(seam_classify(&OscState::new(0.0, 0.0, 0.0, 0.0), SEAM_TOL), SeamStratum::Pp);
        let rep = seam_frontier_check(SEAM_TOL);
        assert!(rep.top_to_line && rep.line_to_pp);
    }
}
