use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use singred_core::lsreduce::{
    build_normal_form, classify_point, kuranishi_chart, reduced_equation_solve, SmoothMap,
};
use singred_core::symred::CompactGroupSpec;

use super::default_schema;
use crate::artifacts::Artifacts;
use crate::error::CliError;
use crate::jsonio::{check_schema, read_spec};
use crate::CommonArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NfSpec {
    schema: u32,
    example: String,
    n_validation_samples: usize,
}

impl Default for NfSpec {
    fn default() -> Self {
        Self { schema: default_schema(), example: "circle".into(), n_validation_samples: 200 }
    }
}

#[derive(Serialize)]
struct NfReport {
    schema: u32,
    example: String,
    dim_dom: usize,
    dim_codom: usize,
    rank: usize,
    dim_ker: usize,
    dim_coker: usize,
    box_radius: f64,
    /// Worst relative round-trip and diagram defect over the sampled box.
    validation_defect: f64,
    classification: String,
    n_reduced_roots: usize,
}

/// The built-in example maps the chart machinery is demonstrated on.
pub fn example_map(name: &str) -> Result<(SmoothMap, DVector<f64>), CliError> {
    match name {
        "circle" => {
            let f = SmoothMap::new(1, 2, |x: &DVector<f64>| {
                DVector::from_column_slice(&[x[0].cos(), x[0].sin()])
            });
            Ok((f, DVector::zeros(1)))
        }
        "quadratic" => {
            let f = SmoothMap::new(1, 1, |x: &DVector<f64>| DVector::from_column_slice(&[x[0] * x[0]]));
            Ok((f, DVector::zeros(1)))
        }
        "angular_momentum" => {
            let f = SmoothMap::new(4, 1, |x: &DVector<f64>| {
                DVector::from_column_slice(&[x[0] * x[3] - x[1] * x[2]])
            });
            Ok((f, DVector::zeros(4)))
        }
        other => Err(CliError::validation(format!(
            "unknown example \"{other}\"; expected circle, quadratic, or angular_momentum"
        ))),
    }
}

pub fn nf(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: NfSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.n_validation_samples == 0 {
        return Err(CliError::validation("n_validation_samples must be >= 1"));
    }
    let tol = args.tol_policy();
    let (f, m) = example_map(&spec.example)?;

    let chart = build_normal_form(&f, &m, &tol)?;
    let validation_defect = chart.validate(spec.n_validation_samples, args.seed)?;
    let classification = classify_point(&f, &m, &tol)?;
    let roots = reduced_equation_solve(&chart, 5)?;

    let report = NfReport {
        schema: 1,
        example: spec.example,
        dim_dom: chart.dim_dom(),
        dim_codom: chart.dim_codom(),
        rank: chart.rank(),
        dim_ker: chart.dim_ker(),
        dim_coker: chart.dim_coker(),
        box_radius: chart.box_radius,
        validation_defect,
        classification: format!("{classification}"),
        n_reduced_roots: roots.len(),
    };
    let mut out = Artifacts::new();
    out.push_json("nf.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct KuranishiSpec {
    schema: u32,
}

impl Default for KuranishiSpec {
    fn default() -> Self {
        Self { schema: default_schema() }
    }
}

#[derive(Serialize)]
struct KuranishiReport {
    schema: u32,
    dim_v: usize,
    dim_f: usize,
    dim_h: usize,
    virtual_dim: i64,
    n_chart_points: usize,
    n_level_samples: usize,
    max_coim_defect: f64,
    equivariance_defect: Option<f64>,
}

/// Rotation action on (q, p) in R^4: the block diagonal of the standard
/// planar rotation generator. The angular momentum is invariant, so the
/// codomain carries the trivial circle action.
fn planar_rotation_action() -> CompactGroupSpec {
    let mut gen = DMatrix::zeros(4, 4);
    gen[(0, 1)] = -1.0;
    gen[(1, 0)] = 1.0;
    gen[(2, 3)] = -1.0;
    gen[(3, 2)] = 1.0;
    CompactGroupSpec::circle_pair(gen, DMatrix::zeros(1, 1))
}

pub fn kuranishi(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: KuranishiSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    let tol = args.tol_policy();
    let (f, m) = example_map("angular_momentum")?;
    let group = planar_rotation_action();
    let chart = kuranishi_chart(&f, &m, &group, &tol)?;

    let report = KuranishiReport {
        schema: 1,
        dim_v: chart.dim_v,
        dim_f: chart.dim_f,
        dim_h: chart.dim_h,
        virtual_dim: chart.virtual_dim,
        n_chart_points: chart.chart_points.len(),
        n_level_samples: chart.level_samples.len(),
        max_coim_defect: chart.max_coim_defect,
        equivariance_defect: chart.nf.equivariance_defect,
    };
    let mut out = Artifacts::new();
    out.push_json("kuranishi.json", &report)?;
    Ok(out)
}
