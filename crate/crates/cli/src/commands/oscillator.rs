use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use singred_core::cotred::{
    angular_momentum, cone_flow, energy, invariants, invariants_reduced, oscillator_rk4, psi_reduce,
    seam_classify, seam_frontier_check, OscState, TopChartFlow, SEAM_TOL,
};

use super::default_schema;
use crate::artifacts::Artifacts;
use crate::error::CliError;
use crate::jsonio::{check_schema, read_spec};
use crate::svg::{SvgDoc, Viewport};
use crate::CommonArgs;

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OscSpec {
    schema: u32,
    initial: [f64; 4],
    dt: f64,
    steps: usize,
    csv_stride: usize,
}

impl Default for OscSpec {
    fn default() -> Self {
        // zero angular momentum (q parallel to p) so the trajectory lives on
        // the reduced cone and crosses the line seam twice per period
        Self { schema: default_schema(), initial: [1.0, 0.0, 0.3, 0.0], dt: 1e-3, steps: 20_000, csv_stride: 20 }
    }
}

#[derive(Serialize)]
struct ChartReport {
    qbar0: f64,
    pbar0: f64,
    h0: f64,
    t0: f64,
    /// First two forward blow-up times of the principal-seam chart.
    blowup_times: [f64; 2],
    /// Worst invariant defect of the chart flow against the cone flow,
    /// probed just before and after each blow-up.
    chart_vs_cone_defect: f64,
}

#[derive(Serialize)]
struct SeamsReport {
    schema: u32,
    initial: [f64; 4],
    initial_stratum: String,
    invariants: [f64; 3],
    momentum: f64,
    n_steps: usize,
    dt: f64,
    max_momentum_drift: f64,
    max_energy_drift: f64,
    /// Worst distance between the integrated invariants and the cone flow.
    cone_agreement: f64,
    /// | I(psi(state)) - I_ambient(state) | at the initial state.
    psi_roundtrip_defect: f64,
    chart: ChartReport,
    frontier_top_to_line: bool,
    frontier_line_to_pp: bool,
}

pub fn run(args: &CommonArgs) -> Result<Artifacts, CliError> {
    let spec: OscSpec = read_spec(args.input.as_deref())?;
    check_schema(spec.schema)?;
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(CliError::validation("dt must be positive"));
    }
    if spec.steps == 0 || spec.csv_stride == 0 {
        return Err(CliError::validation("steps and csv_stride must be >= 1"));
    }
    let state0 = OscState::new(spec.initial[0], spec.initial[1], spec.initial[2], spec.initial[3]);
    let stratum = seam_classify(&state0, SEAM_TOL);
    let k0 = invariants(&state0);
    let j0 = angular_momentum(&state0);

    let run = oscillator_rk4(state0, spec.dt, spec.steps);
    let cone_agreement = run
        .states
        .iter()
        .map(|(t, s)| (invariants(s) - cone_flow(&k0, *t)).norm())
        .fold(0.0f64, f64::max);

    // principal-seam chart started from the reduced coordinates of the
    // initial state
    let (qbar0, pbar0) = psi_reduce(&state0, SEAM_TOL)?;
    let chart = TopChartFlow::new(qbar0, pbar0)?;
    let reduced_k0 = invariants_reduced(qbar0, pbar0)?;
    let psi_roundtrip_defect = (reduced_k0 - k0).norm();

    let pi = std::f64::consts::PI;
    let first = pi / 2.0 - chart.t0;
    let first = if first <= 0.0 { first + pi } else { first };
    let blowups = [first, first + pi];
    let mut chart_vs_cone_defect: f64 = 0.0;
    for tc in blowups {
        for t in [tc - 1e-4, tc + 1e-4] {
            let p = chart.at(t);
            let i_chart = invariants_reduced(p.qbar, p.pbar)?;
            let i_cone = cone_flow(&reduced_k0, t);
            chart_vs_cone_defect = chart_vs_cone_defect.max((i_chart - i_cone).norm());
        }
    }

    let frontier = seam_frontier_check(SEAM_TOL);

    let report = SeamsReport {
        schema: 1,
        initial: spec.initial,
        initial_stratum: format!("{stratum}"),
        invariants: [k0[0], k0[1], k0[2]],
        momentum: j0,
        n_steps: spec.steps,
        dt: spec.dt,
        max_momentum_drift: run.max_momentum_drift,
        max_energy_drift: run.max_energy_drift,
        cone_agreement,
        psi_roundtrip_defect,
        chart: ChartReport {
            qbar0,
            pbar0,
            h0: chart.h0,
            t0: chart.t0,
            blowup_times: blowups,
            chart_vs_cone_defect,
        },
        frontier_top_to_line: frontier.top_to_line,
        frontier_line_to_pp: frontier.line_to_pp,
    };

    let mut out = Artifacts::new();
    out.push_text("trajectory.csv", trajectory_csv(&run.states, spec.csv_stride));
    out.push_text("cone.svg", cone_plot(&run.states, &k0, j0, spec.csv_stride));
    out.push_json("seams.json", &report)?;
    Ok(out)
}

fn trajectory_csv(states: &[(f64, OscState)], stride: usize) -> String {
    let mut csv = String::from("t,q1,q2,p1,p2,energy,momentum\n");
    for (i, (t, s)) in states.iter().enumerate() {
        if i % stride != 0 && i != states.len() - 1 {
            continue;
        }
        let _ = writeln!(
            csv,
            "{t:.6},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.q[0],
            s.q[1],
            s.p[0],
            s.p[1],
            energy(s),
            angular_momentum(s)
        );
    }
    csv
}

/// The invariant image of the trajectory: the (k1, k2) circle of radius
/// sqrt(H^2 - J^2) on the cone section, plus the traced samples.
fn cone_plot(states: &[(f64, OscState)], k0: &Vector3<f64>, j0: f64, stride: usize) -> String {
    let h = k0[2];
    let radius = (h * h - j0 * j0).max(0.0).sqrt();
    let window = (radius * 1.3).max(1e-6);
    let vp = Viewport { x0: -window, x1: window, y0: -window, y1: window, px: 420.0, py: 420.0, margin: 30.0 };
    let mut doc = SvgDoc::new(420.0, 420.0);

    let (cx, cy) = vp.map(0.0, 0.0);
    doc.circle(cx, cy, radius * vp.scale(), "#bbbbbb", "none");

    let pts: Vec<(f64, f64)> = states
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0)
        .map(|(_, (_, s))| {
            let k = invariants(s);
            vp.map(k[0], k[1])
        })
        .collect();
    doc.polyline(&pts, "#225588", 1.2);
    if let Some(&(x, y)) = pts.first() {
        doc.circle(x, y, 3.0, "#cc4422", "#cc4422");
    }
    doc.text(10.0, 15.0, 12.0, "invariant cone section (k1, k2); ring = sqrt(H^2 - J^2)");
    doc.finish()
}
