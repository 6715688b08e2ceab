use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use singred_core::rng_from_seed;
use singred_core::symred::{
    bifurcation_check, mgs_at, oscillator_system, reduce_zero_level, su2_system, witt_artin, LinearSymplecticSystem,
};

use super::default_schema;
use crate::artifacts::Artifacts;
use crate::error::CliError;
use crate::jsonio::{check_schema, read_spec, vec_of};
use crate::svg::{SvgDoc, Viewport};
use crate::CommonArgs;

fn shipped_system(name: &str) -> Result<LinearSymplecticSystem, CliError> {
    match name {
        "oscillator" => Ok(oscillator_system()),
        "su2" => Ok(su2_system()),
        other => Err(CliError::validation(format!("unknown system \"{other}\"; expected oscillator or su2"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MomentumSpec {
    schema: u32,
    system: String,
    n_samples: usize,
}

impl Default for MomentumSpec {
    fn default() -> Self {
        Self { schema: default_schema(), system: "oscillator".into(), n_samples: 200 }
    }
}

#[derive(Serialize)]
struct ValidationOut {
    omega_antisymmetry: f64,
    omega_invertible: bool,
    infinitesimally_symplectic: f64,
    commutator_defect: f64,
    kappa_symmetry: f64,
}

#[derive(Serialize)]
struct BifurcationOut {
    point: Vec<f64>,
    momentum_value: Vec<f64>,
    dim_ker_dj: usize,
    dim_stabilizer: usize,
    kernel_identity: bool,
    image_identity: bool,
    degeneracy_identity: bool,
}

#[derive(Serialize)]
struct MomentumReport {
    schema: u32,
    system: String,
    dim: usize,
    algebra_dim: usize,
    validation: ValidationOut,
    /// Worst defect of the defining momentum relation over random samples.
    relation_defect: f64,
    bifurcation: Vec<BifurcationOut>,
}

pub fn momentum(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: MomentumSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.n_samples == 0 {
        return Err(CliError::validation("n_samples must be >= 1"));
    }
    let tol = args.tol_policy();
    let sys = shipped_system(&spec.system)?;
    let v = sys.validate()?;
    let relation_defect = sys.momentum_relation_defect(spec.n_samples, args.seed);

    let mut rng = rng_from_seed(args.seed ^ 0xb1f);
    let generic = DVector::from_fn(sys.dim, |_, _| rng.gen_range(-1.0..1.0));
    let mut bifurcation = Vec::new();
    for point in [DVector::zeros(sys.dim), generic] {
        let rep = bifurcation_check(&sys, &point, &tol)?;
        bifurcation.push(BifurcationOut {
            point: vec_of(&point),
            momentum_value: vec_of(&rep.momentum_value),
            dim_ker_dj: rep.ker_dj.ncols(),
            dim_stabilizer: rep.stabilizer_algebra.ncols(),
            kernel_identity: rep.kernel_identity,
            image_identity: rep.image_identity,
            degeneracy_identity: rep.degeneracy_identity,
        });
    }

    let report = MomentumReport {
        schema: 1,
        system: spec.system,
        dim: sys.dim,
        algebra_dim: sys.algebra_dim(),
        validation: ValidationOut {
            omega_antisymmetry: v.omega_antisymmetry,
            omega_invertible: v.omega_invertible,
            infinitesimally_symplectic: v.infinitesimally_symplectic,
            commutator_defect: v.commutator_defect,
            kappa_symmetry: v.kappa_symmetry,
        },
        relation_defect,
        bifurcation,
    };
    let mut out = Artifacts::new();
    out.push_json("momentum.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MgsSpec {
    schema: u32,
    system: String,
    points: Option<Vec<Vec<f64>>>,
    n_scalings: usize,
}

impl Default for MgsSpec {
    fn default() -> Self {
        Self { schema: default_schema(), system: "oscillator".into(), points: None, n_scalings: 100 }
    }
}

#[derive(Serialize)]
struct MgsPointReport {
    point: Vec<f64>,
    dim_q_orbit: usize,
    dim_gmu_orbit: usize,
    dim_e: usize,
    dim_f: usize,
    stabilizer_dim: usize,
    e_parity_ok: bool,
    /// Worst |J_sing(a x) - a^2 J_sing(x)| over sampled scalings.
    quadratic_defect: f64,
}

#[derive(Serialize)]
struct MgsReport {
    schema: u32,
    system: String,
    points: Vec<MgsPointReport>,
}

fn default_points(sys: &LinearSymplecticSystem, name: &str, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = rng_from_seed(seed ^ 0x395);
    match name {
        // a generic zero-momentum cone point and the most singular point
        "oscillator" => vec![DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]), DVector::zeros(sys.dim)],
        _ => vec![DVector::from_fn(sys.dim, |_, _| rng.gen_range(-1.0..1.0)), DVector::zeros(sys.dim)],
    }
}

pub fn mgs(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: MgsSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.n_scalings == 0 {
        return Err(CliError::validation("n_scalings must be >= 1"));
    }
    let tol = args.tol_policy();
    let sys = shipped_system(&spec.system)?;
    let points: Vec<DVector<f64>> = match &spec.points {
        Some(list) => {
            let mut v = Vec::new();
            for p in list {
                if p.len() != sys.dim {
                    return Err(CliError::validation(format!("point length {} != system dimension {}", p.len(), sys.dim)));
                }
                v.push(DVector::from_column_slice(p));
            }
            v
        }
        None => default_points(&sys, &spec.system, args.seed),
    };

    let mut rng = rng_from_seed(args.seed ^ 0xa11);
    let mut reports = Vec::new();
    for point in points {
        let wa = witt_artin(&sys, &point, &tol)?;
        let model = mgs_at(&sys, &point, &tol)?;
        let (dim_q_orbit, dim_gmu_orbit, dim_e, dim_f) = wa.dims();

        let mut quadratic_defect: f64 = 0.0;
        for _ in 0..spec.n_scalings {
            let x = DVector::from_fn(dim_e, |_, _| rng.gen_range(-1.0..1.0));
            let alpha: f64 = rng.gen_range(-2.0..2.0);
            let lhs = model.j_sing(&(&x * alpha));
            let rhs = model.j_sing(&x) * (alpha * alpha);
            quadratic_defect = quadratic_defect.max((lhs - rhs).amax());
        }

        reports.push(MgsPointReport {
            point: vec_of(&point),
            dim_q_orbit,
            dim_gmu_orbit,
            dim_e,
            dim_f,
            stabilizer_dim: wa.stabilizer_dim,
            e_parity_ok: wa.parity_ok(),
            quadratic_defect,
        });
    }

    let report = MgsReport { schema: 1, system: spec.system, points: reports };
    let mut out = Artifacts::new();
    out.push_json("mgs.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct StrataSpec {
    schema: u32,
    system: String,
    n_samples: usize,
}

impl Default for StrataSpec {
    fn default() -> Self {
        Self { schema: default_schema(), system: "oscillator".into(), n_samples: 64 }
    }
}

#[derive(Serialize)]
struct StratumOut {
    /// (stabilizer algebra dimension, sampled fixing-element count).
    label: [usize; 2],
    count: usize,
    reduced_dim: usize,
}

#[derive(Serialize)]
struct StrataReport {
    schema: u32,
    system: String,
    n_samples: usize,
    n_converged: usize,
    strata: Vec<StratumOut>,
}

pub fn strata(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: StrataSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.n_samples == 0 {
        return Err(CliError::validation("n_samples must be >= 1"));
    }
    let tol = args.tol_policy();
    let sys = shipped_system(&spec.system)?;
    let space = reduce_zero_level(&sys, spec.n_samples, args.seed, &tol)?;

    let report = StrataReport {
        schema: 1,
        system: spec.system,
        n_samples: spec.n_samples,
        n_converged: space.samples.len(),
        strata: space
            .strata
            .iter()
            .map(|s| StratumOut { label: [s.label.0, s.label.1], count: s.count, reduced_dim: s.reduced_dim })
            .collect(),
    };

    let mut out = Artifacts::new();
    if args.plot {
        out.push_text("strata.svg", strata_plot(&space.samples));
    }
    out.push_json("strata.json", &report)?;
    Ok(out)
}

fn strata_plot(samples: &[singred_core::symred::OrbitTypeSample]) -> String {
    let mut doc = SvgDoc::new(420.0, 420.0);
    let vp = Viewport { x0: -2.0, x1: 2.0, y0: -2.0, y1: 2.0, px: 420.0, py: 420.0, margin: 30.0 };
    let (ax0, ay0) = vp.map(-2.0, 0.0);
    let (ax1, ay1) = vp.map(2.0, 0.0);
    doc.line(ax0, ay0, ax1, ay1, "#cccccc");
    let (bx0, by0) = vp.map(0.0, -2.0);
    let (bx1, by1) = vp.map(0.0, 2.0);
    doc.line(bx0, by0, bx1, by1, "#cccccc");
    let palette = ["#225588", "#cc4422", "#338833", "#886699"];
    // color by stabilizer dimension; coordinates are the first two phase
    // components
    for s in samples {
        let color = palette[s.label.0.min(palette.len() - 1)];
        let (x, y) = vp.map(s.point[0], s.point[1]);
        doc.circle(x, y, 2.5, color, "none");
    }
    doc.text(10.0, 15.0, 12.0, "zero-level samples, first two phase coordinates");
    doc.finish()
}
