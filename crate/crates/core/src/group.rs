//! Compact symmetry groups as the artifact sees them: a finite element list,
//! a torus through its infinitesimal generators, or SU(2) through three
//! generators. Each variant can act on a second space in parallel (domain
//! and codomain of an equivariant map); when no codomain action is given the
//! domain action is reused.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::sample::rng_from_seed;
use crate::subspace::null_space;

#[derive(Debug, Clone)]
pub enum GroupKind {
    /// Explicit element matrices, identity included, paired by index with the
    /// optional codomain list.
    Finite { dom: Vec<DMatrix<f64>>, codom: Option<Vec<DMatrix<f64>>> },
    /// exp(sum_a theta_a A_a); one angle per generator.
    Torus { dom: Vec<DMatrix<f64>>, codom: Option<Vec<DMatrix<f64>>> },
    /// exp of the real span of three generators; sampled via Haar-uniform
    /// quaternions (normalized 4D Gaussians) with a fixed seed.
    Su2 { dom: [DMatrix<f64>; 3], codom: Option<[DMatrix<f64>; 3]> },
}

#[derive(Debug, Clone)]
pub struct CompactGroupSpec {
    pub kind: GroupKind,
    /// Quadrature nodes per angle for the continuous kinds.
    pub haar_nodes: usize,
}

pub const DEFAULT_HAAR_NODES: usize = 64;

/// One sampled group element acting on domain and codomain, with its Haar
/// weight. Weights over a sample set sum to 1.
pub struct GroupSample {
    pub dom: DMatrix<f64>,
    pub codom: DMatrix<f64>,
    pub weight: f64,
}

impl CompactGroupSpec {
    pub fn finite(dom: Vec<DMatrix<f64>>) -> Self {
        Self { kind: GroupKind::Finite { dom, codom: None }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn finite_pair(dom: Vec<DMatrix<f64>>, codom: Vec<DMatrix<f64>>) -> Self {
        Self { kind: GroupKind::Finite { dom, codom: Some(codom) }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn circle(generator: DMatrix<f64>) -> Self {
        Self { kind: GroupKind::Torus { dom: vec![generator], codom: None }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn circle_pair(dom: DMatrix<f64>, codom: DMatrix<f64>) -> Self {
        Self { kind: GroupKind::Torus { dom: vec![dom], codom: Some(vec![codom]) }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn torus(generators: Vec<DMatrix<f64>>) -> Self {
        Self { kind: GroupKind::Torus { dom: generators, codom: None }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn su2(generators: [DMatrix<f64>; 3]) -> Self {
        Self { kind: GroupKind::Su2 { dom: generators, codom: None }, haar_nodes: DEFAULT_HAAR_NODES }
    }

    pub fn trivial(dim: usize) -> Self {
        Self::finite(vec![DMatrix::identity(dim, dim)])
    }

    /// Dimension of the space the domain representation acts on.
    pub fn dom_dim(&self) -> usize {
        match &self.kind {
            GroupKind::Finite { dom, .. } | GroupKind::Torus { dom, .. } => dom[0].nrows(),
            GroupKind::Su2 { dom, .. } => dom[0].nrows(),
        }
    }

    /// Dimension of the abstract group (0 for finite).
    pub fn group_dim(&self) -> usize {
        match &self.kind {
            GroupKind::Finite { .. } => 0,
            GroupKind::Torus { dom, .. } => dom.len(),
            GroupKind::Su2 { .. } => 3,
        }
    }

    /// Domain-side infinitesimal generators (empty for finite groups).
    pub fn dom_generators(&self) -> Vec<DMatrix<f64>> {
        match &self.kind {
            GroupKind::Finite { .. } => Vec::new(),
            GroupKind::Torus { dom, .. } => dom.clone(),
            GroupKind::Su2 { dom, .. } => dom.to_vec(),
        }
    }

    /// Haar-weighted sample of elements. Finite groups enumerate exactly;
    /// tori use the periodic trapezoid rule (uniform nodes, exact on the
    /// trigonometric polynomials that linear representations produce); SU(2)
    /// draws seeded Haar-uniform quaternion coefficients.
    pub fn sampled_elements(&self) -> Vec<GroupSample> {
        match &self.kind {
            GroupKind::Finite { dom, codom } => {
                let w = 1.0 / dom.len() as f64;
                dom.iter()
                    .enumerate()
                    .map(|(i, d)| GroupSample {
                        dom: d.clone(),
                        codom: codom.as_ref().map_or_else(|| d.clone(), |c| c[i].clone()),
                        weight: w,
                    })
                    .collect()
            }
            GroupKind::Torus { dom, codom } => {
                let k = dom.len();
                let nodes = self.haar_nodes.max(4);
                // full product grid over k angles
                let total = nodes.pow(k as u32);
                let w = 1.0 / total as f64;
                let mut out = Vec::with_capacity(total);
                for flat in 0..total {
                    let mut rem = flat;
                    let mut gen_dom = DMatrix::zeros(dom[0].nrows(), dom[0].ncols());
                    let mut gen_cod = codom.as_ref().map(|c| DMatrix::zeros(c[0].nrows(), c[0].ncols()));
                    for a in 0..k {
                        let idx = rem % nodes;
                        rem /= nodes;
                        let theta = core::f64::consts::TAU * idx as f64 / nodes as f64;
                        gen_dom += dom[a].scale(theta);
                        if let (Some(g), Some(c)) = (gen_cod.as_mut(), codom.as_ref()) {
                            *g += c[a].scale(theta);
                        }
                    }
                    let d = matrix_exp(&gen_dom);
                    let c = gen_cod.map_or_else(|| d.clone(), |g| matrix_exp(&g));
                    out.push(GroupSample { dom: d, codom: c, weight: w });
                }
                out
            }
            GroupKind::Su2 { dom, codom } => {
                let count = 4 * self.haar_nodes.max(4);
                let w = 1.0 / count as f64;
                let mut rng = rng_from_seed(0x5u64 << 32);
                (0..count)
                    .map(|_| {
                        let ang = haar_su2_angles(&mut rng);
                        let gd = dom[0].scale(ang[0]) + dom[1].scale(ang[1]) + dom[2].scale(ang[2]);
                        let d = matrix_exp(&gd);
                        let c = codom.as_ref().map_or_else(
                            || d.clone(),
                            |cg| matrix_exp(&(cg[0].scale(ang[0]) + cg[1].scale(ang[1]) + cg[2].scale(ang[2]))),
                        );
                        GroupSample { dom: d, codom: c, weight: w }
                    })
                    .collect()
            }
        }
    }

    /// Fixed-point subspace of the domain representation, as an orthonormal
    /// basis. Finite groups use the exact average projector; the connected
    /// kinds use the common kernel of the generators, which equals the fixed
    /// space of the identity component.
    pub fn fixed_space(&self, rank_tol: f64) -> DMatrix<f64> {
        match &self.kind {
            GroupKind::Finite { dom, .. } => {
                let n = dom[0].nrows();
                let mut avg = DMatrix::zeros(n, n);
                for d in dom {
                    avg += d;
                }
                avg /= dom.len() as f64;
                null_space(&(avg - DMatrix::identity(n, n)), rank_tol)
            }
            _ => {
                let gens = self.dom_generators();
                let n = gens[0].nrows();
                let mut stacked = DMatrix::zeros(n * gens.len(), n);
                for (i, g) in gens.iter().enumerate() {
                    stacked.rows_mut(i * n, n).copy_from(g);
                }
                null_space(&stacked, rank_tol)
            }
        }
    }
}

/// exp(theta) in so(3)-free form: scaling and squaring with a Taylor kernel.
/// Accurate to machine precision for the moderate norms the samplers feed it.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a.scale(1.0 / 2f64.powi(squarings as i32));
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=16 {
        term = (&term * &scaled).scale(1.0 / k as f64);
        sum += &term;
    }
    let mut result = sum;
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Angle-axis coefficients whose exponential is Haar-uniform on SU(2):
/// a uniform quaternion (normalized 4D Gaussian) converted to axis * angle,
/// to be contracted with generators normalized as (i/2) sigma_a.
fn haar_su2_angles<R: Rng>(rng: &mut R) -> [f64; 3] {
    let mut q = [0.0f64; 4];
    loop {
        let mut norm2 = 0.0;
        for qi in q.iter_mut() {
            // Box-Muller free: rand_distr's StandardNormal
            *qi = rng.sample::<f64, _>(rand_distr::StandardNormal);
            norm2 += *qi * *qi;
        }
        if norm2 > 1e-12 {
            let norm = norm2.sqrt();
            for qi in q.iter_mut() {
                *qi /= norm;
            }
            break;
        }
    }
    // q = cos(t/2) + sin(t/2)(ux i + uy j + uz k); exp(t * u . (i sigma/2))
    let c = q[0].clamp(-1.0, 1.0);
    let half = c.acos();
    let s = (1.0 - c * c).sqrt();
    if s < 1e-12 {
        return [0.0, 0.0, 0.0];
    }
    let t = 2.0 * half;
    [t * q[1] / s, t * q[2] / s, t * q[3] / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_rotation_generator() {
        let gen = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = matrix_exp(&gen.scale(core::f64::consts::FRAC_PI_2));
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((r - expect).norm() < 1e-12);
    }

    #[test]
    fn circle_weights_sum_to_one() {
        let g = CompactGroupSpec::circle(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        let samples = g.sampled_elements();
        assert_eq!(samples.len(), DEFAULT_HAAR_NODES);
        let total: f64 = samples.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // every sample is a rotation
        for s in &samples {
            assert!((s.dom.transpose() * &s.dom - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
    }

    #[test]
    fn fixed_space_of_reflection() {
        let refl = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let g = CompactGroupSpec::finite(vec![DMatrix::identity(2, 2), refl]);
        let fixed = g.fixed_space(1e-10);
        assert_eq!(fixed.ncols(), 1);
        assert!(fixed[(0, 0)].abs() > 0.99);
    }

    #[test]
    fn fixed_space_of_rotation_is_trivial() {
        let g = CompactGroupSpec::circle(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
        assert_eq!(g.fixed_space(1e-10).ncols(), 0);
    }

    #[test]
    fn su2_samples_are_unitary_on_realified_c2() {
        // realified i sigma_a / 2 on (x1, x2, y1, y2)
        let t1 = DMatrix::from_row_slice(4, 4, &[0.0, 0.0, 0.0, -0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
        let t2 = DMatrix::from_row_slice(4, 4, &[0.0, 0.5, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, -0.5, 0.0]);
        let t3 = DMatrix::from_row_slice(4, 4, &[0.0, 0.0, -0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0]);
        let mut g = CompactGroupSpec::su2([t1, t2, t3]);
        g.haar_nodes = 8;
        for s in g.sampled_elements() {
            assert!((s.dom.transpose() * &s.dom - DMatrix::identity(4, 4)).norm() < 1e-10);
        }
    }
}
