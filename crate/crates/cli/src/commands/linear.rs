use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use singred_core::linops::{
    bvp_green, extend_block, family_uniform_regular, fredholm_index, generalized_inverse, monomial_derivative_family,
    rank_factorize,
};
use singred_core::{rng_from_seed, TolerancePolicy};

use super::default_schema;
use crate::artifacts::Artifacts;
use crate::error::CliError;
use crate::jsonio::{check_schema, read_spec, MatrixJson};
use crate::svg::{SvgDoc, Viewport};
use crate::CommonArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct GinvSpec {
    schema: u32,
    matrix: Option<MatrixJson>,
    rank_tol: Option<f64>,
    residual_tol: Option<f64>,
}

impl Default for GinvSpec {
    fn default() -> Self {
        Self { schema: default_schema(), matrix: None, rank_tol: None, residual_tol: None }
    }
}

#[derive(Serialize)]
struct GinvReport {
    schema: u32,
    rows: usize,
    cols: usize,
    rank: usize,
    fredholm_index: i64,
    residual_tst: f64,
    residual_sts: f64,
    projector_im_defect: f64,
    projector_coim_defect: f64,
    lower_right_block_norm: f64,
    pseudoinverse: MatrixJson,
}

fn seeded_low_rank(seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from_seed(seed ^ 0x91fa);
    let a = DMatrix::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
    let b = DMatrix::from_fn(2, 4, |_, _| rng.gen_range(-1.0..1.0));
    a * b
}

pub fn ginv(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: GinvSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    let mut tol = args.tol_policy();
    if let Some(r) = spec.rank_tol {
        tol.rank_tol = r;
    }
    if let Some(r) = spec.residual_tol {
        tol.residual_tol = r;
    }
    let t = match &spec.matrix {
        Some(mj) => mj.to_matrix()?,
        None => seeded_low_rank(args.seed),
    };

    let f = rank_factorize(&t, &tol)?;
    let s = generalized_inverse(&f);
    let ext = extend_block(&t, &f, &tol)?;
    let tnorm = t.norm().max(1e-300);
    let snorm = s.norm().max(1e-300);
    let report = GinvReport {
        schema: 1,
        rows: t.nrows(),
        cols: t.ncols(),
        rank: f.rank,
        fredholm_index: fredholm_index(&f),
        residual_tst: (&t * &s * &t - &t).norm() / tnorm,
        residual_sts: (&s * &t * &s - &s).norm() / snorm,
        projector_im_defect: (&t * &s - f.pr_im()).norm(),
        projector_coim_defect: (&s * &t - f.pr_coim()).norm(),
        lower_right_block_norm: ext.lower_right_norm,
        pseudoinverse: MatrixJson::from_matrix(&s),
    };
    let mut out = Artifacts::new();
    out.push_json("ginv.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BvpSpec {
    schema: u32,
    sizes: Vec<usize>,
}

impl Default for BvpSpec {
    fn default() -> Self {
        Self { schema: default_schema(), sizes: vec![64, 128, 256] }
    }
}

#[derive(Serialize)]
struct BvpRow {
    n: usize,
    h: f64,
    /// sup |S T u - (u - u(1))| for the constrained test function.
    sup_st: f64,
    /// sup |T S f - (f - mean f)| for the source test function.
    sup_ts: f64,
    /// sup |S 1|; the quadrature makes this exactly zero.
    s_of_one: f64,
}

#[derive(Serialize)]
struct BvpReport {
    schema: u32,
    rows: Vec<BvpRow>,
    /// Successive sup_st error ratios; near 4 for an O(h^2) scheme.
    ratios_st: Vec<f64>,
    ratios_ts: Vec<f64>,
}

fn bvp_row(n: usize) -> Result<BvpRow, CliError> {
    let d = bvp_green(n)?;
    let grid = d.grid();
    let pi = std::f64::consts::PI;

    // u satisfies the Neumann conditions with a nonvanishing third derivative
    // at the endpoints, so the identity error is a clean h^2 term; project to
    // the discrete subspace so the S T identity applies exactly as stated.
    let u = DVector::from_iterator(n, grid.iter().map(|x| x * x * (1.0 - x) * (1.0 - x)));
    let u = d.project_constrained(&u);
    let st = d.apply_s(&d.apply_t(&u));
    let u_end = u[n - 1];
    let sup_st = (0..n).map(|i| (st[i] - (u[i] - u_end)).abs()).fold(0.0f64, f64::max);

    // source with a nonzero mean exercises the full-interval correction
    let f = DVector::from_iterator(n, grid.iter().map(|x| (2.0 * pi * x).cos() + x));
    let h = 1.0 / (n - 1) as f64;
    let mean: f64 = (0..n).map(|j| if j == 0 || j == n - 1 { h / 2.0 } else { h } * f[j]).sum();
    let ts = d.apply_t(&d.apply_s(&f));
    let sup_ts = (0..n).map(|i| (ts[i] - (f[i] - mean)).abs()).fold(0.0f64, f64::max);

    let ones = DVector::from_element(n, 1.0);
    let s_of_one = d.apply_s(&ones).amax();

    Ok(BvpRow { n, h, sup_st, sup_ts, s_of_one })
}

pub fn bvp(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: BvpSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.sizes.is_empty() {
        return Err(CliError::validation("sizes must be nonempty"));
    }
    let rows: Vec<BvpRow> = spec.sizes.iter().map(|&n| bvp_row(n)).collect::<Result<_, _>>()?;
    let ratios_st = rows.windows(2).map(|w| w[0].sup_st / w[1].sup_st.max(1e-300)).collect();
    let ratios_ts = rows.windows(2).map(|w| w[0].sup_ts / w[1].sup_ts.max(1e-300)).collect();
    let report = BvpReport { schema: 1, rows, ratios_st, ratios_ts };

    let mut out = Artifacts::new();
    if args.plot {
        out.push_text("bvp.svg", convergence_plot(&report));
    }
    out.push_json("bvp.json", &report)?;
    Ok(out)
}

fn convergence_plot(report: &BvpReport) -> String {
    let pts: Vec<(f64, f64)> =
        report.rows.iter().map(|r| ((r.n as f64).log2(), r.sup_st.max(1e-300).log2())).collect();
    let (x0, x1) = (pts.first().map_or(0.0, |p| p.0) - 0.5, pts.last().map_or(1.0, |p| p.0) + 0.5);
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let y0 = ys.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let y1 = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let vp = Viewport { x0, x1, y0, y1, px: 420.0, py: 320.0, margin: 40.0 };
    let mut doc = SvgDoc::new(420.0, 320.0);
    let mapped: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| vp.map(x, y)).collect();
    doc.polyline(&mapped, "#225588", 1.5);
    for &(x, y) in &mapped {
        doc.circle(x, y, 3.0, "#225588", "#225588");
    }
    doc.text(10.0, 20.0, 12.0, "log2 sup-error of S T identity vs log2 n");
    doc.finish()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FamilySpec {
    schema: u32,
    degree: usize,
    max_denominator: usize,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { schema: default_schema(), degree: 10, max_denominator: 10 }
    }
}

#[derive(Serialize)]
struct FamilyPointReport {
    param: f64,
    invertible: bool,
    /// Absent when the compression is singular (infinite condition).
    core_condition: Option<f64>,
    /// Degree of the monomial the compressed kernel aligns with, when singular.
    kernel_degree: Option<usize>,
    /// |cosine| between the kernel vector and that monomial axis.
    kernel_alignment: Option<f64>,
    /// Residual of the compressed operator on the kernel vector.
    kernel_residual: Option<f64>,
}

#[derive(Serialize)]
struct FamilyReport {
    schema: u32,
    degree: usize,
    base_rank: usize,
    uniformly_regular: bool,
    points: Vec<FamilyPointReport>,
}

pub fn family(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: FamilySpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.degree > 12 {
        return Err(CliError::validation("degree must be <= 12"));
    }
    if spec.max_denominator == 0 {
        return Err(CliError::validation("max_denominator must be >= 1"));
    }
    let tol = args.tol_policy();
    let fam = monomial_derivative_family(spec.degree);
    let grid: Vec<f64> = (1..=spec.max_denominator).map(|n| 1.0 / n as f64).collect();
    let rep = family_uniform_regular(&fam, &grid, &tol)?;

    let f0 = rank_factorize(&fam.eval(fam.base), &TolerancePolicy::default())?;
    let points = rep
        .points
        .iter()
        .map(|p| {
            let (kernel_degree, kernel_alignment, kernel_residual) = match &p.tilde_kernel {
                Some(k) if k.ncols() > 0 => {
                    let v = k.column(0).into_owned();
                    let v = &v / v.norm();
                    let deg = v.iter().map(|x| x.abs()).enumerate().fold((0usize, 0.0f64), |acc, (i, x)| {
                        if x > acc.1 {
                            (i, x)
                        } else {
                            acc
                        }
                    });
                    let resid = (f0.im_basis.transpose() * (fam.eval(p.param) * &v)).norm();
                    (Some(deg.0), Some(deg.1), Some(resid))
                }
                _ => (None, None, None),
            };
            FamilyPointReport {
                param: p.param,
                invertible: p.invertible,
                core_condition: p.core_condition.is_finite().then_some(p.core_condition),
                kernel_degree,
                kernel_alignment,
                kernel_residual,
            }
        })
        .collect();

    let report = FamilyReport {
        schema: 1,
        degree: spec.degree,
        base_rank: rep.base_rank,
        uniformly_regular: rep.uniformly_regular,
        points,
    };
    let mut out = Artifacts::new();
    out.push_json("family.json", &report)?;
    Ok(out)
}
