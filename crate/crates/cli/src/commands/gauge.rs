use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use singred_core::gaugealg::{
    ew_commutators_check, format_centralizer_table, format_goursat_table, gauss_singular_reduction,
    goursat_enumerate, howe_product_enumerate, masses, relation_map, repvar_orbit_type, repvar_tangent_rank,
    sigma_form_u1, singular_hamiltonian_identity, su2_centralizer_table, verify_centralizer, Couplings, EWPoint,
    GaugeFields, RepVarElem, RepVarPoint, SU2Elem,
};
use singred_core::rng_from_seed;

use super::default_schema;
use crate::artifacts::Artifacts;
use crate::error::CliError;
use crate::jsonio::{check_schema, read_spec};
use crate::CommonArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EwSpec {
    schema: u32,
    g: f64,
    gp: f64,
    lambda: f64,
    vev: f64,
    n_samples: usize,
}

impl Default for EwSpec {
    fn default() -> Self {
        Self { schema: default_schema(), g: 0.65, gp: 0.35, lambda: 0.4, vev: 1.0, n_samples: 1000 }
    }
}

#[derive(Serialize)]
struct EwReport {
    schema: u32,
    g: f64,
    gp: f64,
    lambda: f64,
    vev: f64,
    n_samples: usize,
    /// Max bracket defect of the broken generator basis.
    commutator_defect: f64,
    max_density_defect: f64,
    max_momentum_norm_defect: f64,
    max_curvature_norm_defect: f64,
    max_higgs_norm_defect: f64,
    /// Worst deviation of the Gauss components from the collapsed form.
    max_gauss_defect: f64,
    /// Closed form eta^2 v^2 (g^2 + g'^2) / 4 at the reference point eta = 1.
    m_z_sq: f64,
    m_z_sq_extraction_defect: f64,
    /// Curvature of the reduced density in the eta slot at the reference
    /// point; reported, not asserted.
    eta_sector_coefficient: f64,
}

fn random_stratum_point(cpl: Couplings, lambda: f64, vev: f64, rng: &mut impl Rng) -> EWPoint {
    EWPoint {
        couplings: cpl,
        fields: GaugeFields { w1: 0.0, w2: 0.0, w3: rng.gen_range(-1.0..1.0), b: rng.gen_range(-1.0..1.0) },
        mom_plus: Complex64::new(0.0, 0.0),
        mom_minus: Complex64::new(0.0, 0.0),
        mom_z: rng.gen_range(-1.0..1.0),
        mom_gamma: rng.gen_range(-1.0..1.0),
        eta: rng.gen_range(0.2..2.0),
        pion1: Complex64::new(0.0, 0.0),
        pion2: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        der_a_gamma: rng.gen_range(-1.0..1.0),
        der_z: rng.gen_range(-1.0..1.0),
        der_eta: rng.gen_range(-1.0..1.0),
        lambda,
        vev,
    }
}

pub fn ew(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: EwSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.n_samples == 0 {
        return Err(CliError::validation("n_samples must be >= 1"));
    }
    let cpl = Couplings::new(spec.g, spec.gp)?;
    let mut rng = rng_from_seed(args.seed ^ 0xe1ec);

    let mut max_density: f64 = 0.0;
    let mut max_momentum: f64 = 0.0;
    let mut max_curvature: f64 = 0.0;
    let mut max_higgs: f64 = 0.0;
    let mut max_gauss: f64 = 0.0;
    for _ in 0..spec.n_samples {
        let pt = random_stratum_point(cpl, spec.lambda, spec.vev, &mut rng);
        let density = singular_hamiltonian_identity(&pt)?;
        max_density = max_density.max(density.density_defect());
        max_momentum = max_momentum.max(density.momentum_norm_defect);
        max_curvature = max_curvature.max(density.curvature_norm_defect);
        max_higgs = max_higgs.max(density.higgs_norm_defect);

        let gauss = gauss_singular_reduction(&pt)?;
        let defect = gauss
            .a_lhs
            .norm()
            .max(gauss.a_rhs.norm())
            .max(gauss.b_lhs.norm())
            .max(gauss.b_rhs.norm())
            .max((gauss.c_rhs - Complex64::new(gauss.c_source, 0.0)).norm())
            .max(gauss.d_rhs.norm());
        max_gauss = max_gauss.max(defect);
    }

    let mut reference = random_stratum_point(cpl, spec.lambda, spec.vev, &mut rng);
    reference.eta = 1.0;
    let mass = masses(&reference);

    let report = EwReport {
        schema: 1,
        g: spec.g,
        gp: spec.gp,
        lambda: spec.lambda,
        vev: spec.vev,
        n_samples: spec.n_samples,
        commutator_defect: ew_commutators_check(),
        max_density_defect: max_density,
        max_momentum_norm_defect: max_momentum,
        max_curvature_norm_defect: max_curvature,
        max_higgs_norm_defect: max_higgs,
        max_gauss_defect: max_gauss,
        m_z_sq: mass.m_z_sq,
        m_z_sq_extraction_defect: (mass.m_z_sq - mass.m_z_sq_extracted).abs(),
        eta_sector_coefficient: mass.eta_sector_coefficient,
    };
    let mut out = Artifacts::new();
    out.push_json("ew.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct HoweSpec {
    schema: u32,
    param_bound: u32,
    n_samples: usize,
}

impl Default for HoweSpec {
    fn default() -> Self {
        Self { schema: default_schema(), param_bound: 2, n_samples: 200 }
    }
}

#[derive(Serialize)]
struct HoweRecordOut {
    holonomy: String,
    stabilizer: String,
    howe: String,
}

#[derive(Serialize)]
struct GoursatTupleOut {
    howe: String,
    g1: String,
    g2: String,
    l1: String,
    l2: String,
    theta: String,
    p: u32,
    q: u32,
    k: u32,
    containment_defect: f64,
    separation_ok: bool,
    implication_ok: bool,
}

#[derive(Serialize)]
struct HoweReport {
    schema: u32,
    param_bound: u32,
    n_samples: usize,
    records: Vec<HoweRecordOut>,
    products: Vec<String>,
    tuples: Vec<GoursatTupleOut>,
}

pub fn howe(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: HoweSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.param_bound == 0 {
        return Err(CliError::validation("param_bound must be >= 1"));
    }
    if spec.n_samples == 0 {
        return Err(CliError::validation("n_samples must be >= 1"));
    }

    let records = su2_centralizer_table();
    let holonomies: Vec<_> = records.iter().map(|r| r.holonomy).collect();
    let products = howe_product_enumerate(&holonomies)?;

    let tuples = goursat_enumerate(spec.param_bound);
    let mut tuple_reports = Vec::new();
    for (i, t) in tuples.iter().enumerate() {
        let check = verify_centralizer(t, spec.n_samples, args.seed ^ (0x60a7 + i as u64));
        let (g1, g2, l1, l2, theta) = t.kind.symbols();
        tuple_reports.push(GoursatTupleOut {
            howe: format!("{}", t.kind.claimed_howe()),
            g1: g1.into(),
            g2: g2.into(),
            l1: l1.into(),
            l2: l2.into(),
            theta: theta.into(),
            p: t.p,
            q: t.q,
            k: t.k,
            containment_defect: check.containment_defect,
            separation_ok: check.separation_ok,
            implication_ok: check.implication_ok,
        });
    }

    let report = HoweReport {
        schema: 1,
        param_bound: spec.param_bound,
        n_samples: spec.n_samples,
        records: records
            .iter()
            .map(|r| HoweRecordOut {
                holonomy: format!("{}", r.holonomy),
                stabilizer: format!("{}", r.stabilizer),
                howe: format!("{}", r.howe),
            })
            .collect(),
        products: products.iter().map(|p| format!("{p}")).collect(),
        tuples: tuple_reports,
    };

    let mut out = Artifacts::new();
    out.push_text("table51.txt", format_centralizer_table(&records));
    out.push_text("table52.txt", format_goursat_table());
    out.push_json("howe.json", &report)?;
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RepvarSpec {
    schema: u32,
    cases: Vec<String>,
}

impl Default for RepvarSpec {
    fn default() -> Self {
        Self {
            schema: default_schema(),
            cases: vec!["u1_generic".into(), "su2_torus".into(), "su2_central".into()],
        }
    }
}

#[derive(Serialize)]
struct RepvarCaseOut {
    name: String,
    group: String,
    genus: usize,
    relation_defect: f64,
    tangent_rank: usize,
    local_dim: usize,
    orbit_type: String,
    sigma_gram_det: Option<f64>,
}

#[derive(Serialize)]
struct RepvarReport {
    schema: u32,
    cases: Vec<RepvarCaseOut>,
}

fn repvar_case(name: &str, seed: u64) -> Result<RepvarCaseOut, CliError> {
    let mut rng = rng_from_seed(seed ^ 0x9e9);
    let (pt, group) = match name {
        "u1_generic" => {
            let entries = (0..2)
                .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect();
            (RepVarPoint::u1(1, entries), "U(1)")
        }
        "su2_torus" => (RepVarPoint::su2(1, vec![SU2Elem::torus(0.7), SU2Elem::torus(1.3)]), "SU(2)"),
        "su2_central" => {
            (RepVarPoint::su2(1, vec![SU2Elem::identity(), SU2Elem::minus_identity()]), "SU(2)")
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown case \"{other}\"; expected u1_generic, su2_torus, or su2_central"
            )))
        }
    };

    let relation_defect = match relation_map(&pt) {
        RepVarElem::Su2(g) => g.dist(&SU2Elem::identity()),
        RepVarElem::U1(z) => (z - Complex64::new(1.0, 0.0)).norm(),
    };
    let (tangent_rank, local_dim) = repvar_tangent_rank(&pt, 1e-8)?;
    let orbit_type = repvar_orbit_type(&pt, 1e-10);

    let sigma_gram_det = if group == "U(1)" {
        let a = Complex64::from_polar(1.0, 0.4);
        let b = Complex64::from_polar(1.0, 1.9);
        let m00 = sigma_form_u1(a, b, 1.0, 0.0, 1.0, 0.0);
        let m01 = sigma_form_u1(a, b, 1.0, 0.0, 0.0, 1.0);
        let m10 = sigma_form_u1(a, b, 0.0, 1.0, 1.0, 0.0);
        let m11 = sigma_form_u1(a, b, 0.0, 1.0, 0.0, 1.0);
        Some(m00 * m11 - m01 * m10)
    } else {
        None
    };

    Ok(RepvarCaseOut {
        name: name.into(),
        group: group.into(),
        genus: 1,
        relation_defect,
        tangent_rank,
        local_dim,
        orbit_type: format!("{orbit_type}"),
        sigma_gram_det,
    })
}

pub fn repvar(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: RepvarSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if spec.cases.is_empty() {
        return Err(CliError::validation("cases must be nonempty"));
    }
    let cases: Vec<RepvarCaseOut> =
        spec.cases.iter().map(|c| repvar_case(c, args.seed)).collect::<Result<_, _>>()?;
    let report = RepvarReport { schema: 1, cases };
    let mut out = Artifacts::new();
    out.push_json("repvar.json", &report)?;
    Ok(out)
}
