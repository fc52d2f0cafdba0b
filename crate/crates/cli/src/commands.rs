//! One function per subcommand. Each returns its artefacts in memory so the
//! caller can write them in one pass.

use std::path::PathBuf;

use pilotwave::field::nonrel::NonRelField;
use pilotwave::guidance::{
    integrate_nonrel, integrate_rel, integrate_two_particle, EventKind, Hyperplane,
    IntegratorConfig, Record, TraceRequest, Trajectory,
};
use pilotwave::nonrel_lab::{self, MeasurementScenario};
use pilotwave::rel_lab::{self, PredictConfig, ScenarioWindow, SearchConfig, SigmaLabel};
use pilotwave::{Exec, FourVector, RelField};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::{json as to_json, num, opt, Artifacts, Csv, Table};
use crate::scenario::{Physics, RelFieldSpec, RunParams, ScenarioFile, WindowSpec, SCHEMA_VERSION};
use crate::svg::{self, Plot};
use crate::CliError;

/// Flag values that override the scenario's run parameters.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub n: Option<usize>,
    pub bins: Option<usize>,
    pub t: Option<f64>,
    pub span: Option<f64>,
    pub starts: Vec<Vec<f64>>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub warnings: Vec<String>,
    /// Resolved parameters, echoed in the run record.
    pub parameters: Map<String, Value>,
    pub seed: Option<u64>,
}

impl Outcome {
    fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(
            key.into(),
            serde_json::to_value(value).expect("parameter serialises"),
        );
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn seed_of(o: &Options, run: &RunParams) -> u64 {
    o.seed.or(run.seed).unwrap_or(0)
}

fn times(o: &Options, run: &RunParams, default: (f64, f64), default_n: usize) -> Vec<f64> {
    if let Some(t) = o.t {
        return vec![t];
    }
    let [a, b] = run.t_range.unwrap_or([default.0, default.1]);
    linspace(a, b, run.n_t.unwrap_or(default_n))
}

fn unsupported(command: &str, kind: &str) -> CliError {
    CliError::Input(format!(
        "`{command}` does not apply to scenarios of kind {kind}"
    ))
}

// ---------------------------------------------------------------- field

pub fn field(s: &ScenarioFile, o: &Options) -> Result<Outcome, CliError> {
    let digest = s.digest();
    let cfg = s.run.integrator();
    let mut out = Outcome::default();
    match &s.physics {
        Physics::RelField(spec) => {
            let f = spec.build()?;
            let ts = times(o, &s.run, (0.0, 0.0), 1);
            rel_field_dump(
                &mut out,
                &digest,
                &f,
                &ts,
                o.grid.or(s.run.grid).unwrap_or(256),
                &cfg,
            )?;
        }
        Physics::Window(w) => {
            let f = w.field.build()?;
            let ts = times(o, &s.run, (w.t0, w.t1), 2);
            rel_field_dump(
                &mut out,
                &digest,
                &f,
                &ts,
                o.grid.or(s.run.grid).unwrap_or(256),
                &cfg,
            )?;
        }
        Physics::NonrelField(spec) => {
            let f = spec.build()?;
            let ts = times(o, &s.run, (spec.t0, spec.t1), 2);
            nonrel_field_dump(&mut out, &digest, &f, &ts, o.grid.or(s.run.grid), &cfg);
        }
        Physics::Measurement(m) => {
            let sc = m.build()?;
            let ts = times(o, &s.run, (0.0, m.final_time), 2);
            nonrel_field_dump(
                &mut out,
                &digest,
                sc.field(),
                &ts,
                o.grid.or(s.run.grid),
                &cfg,
            );
        }
        Physics::TwoParticle(_) => return Err(unsupported("field", "two_particle")),
    }
    Ok(out)
}

fn rel_field_dump(
    out: &mut Outcome,
    digest: &str,
    f: &RelField,
    ts: &[f64],
    n: usize,
    cfg: &IntegratorConfig,
) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Input("grid must be positive".into()));
    }
    out.param("grid", n);
    out.param("times", ts);
    let l = f.box_length();
    let mut csv = Csv::new(
        digest,
        "field",
        &["t", "x", "re_psi", "im_psi", "j0", "jx", "R", "Q", "meff2"],
    )
    .meta("box_length", num(l))
    .meta("node_threshold", num(cfg.node_threshold));
    for &t in ts {
        for i in 0..n {
            let x = l * i as f64 / n as f64;
            let p = FourVector::tx(t, x);
            let psi = f.psi(&p);
            let j = f.current(&p);
            let polar = f.polar_with_threshold(&p, cfg.node_threshold).ok();
            csv.row(&[
                num(t),
                num(x),
                num(psi.re),
                num(psi.im),
                num(j.t),
                num(j.x[0]),
                num(psi.norm()),
                opt(polar.map(|q| q.q)),
                opt(polar.map(|q| q.meff2)),
            ]);
        }
    }
    out.artifacts.add("field.csv", csv.render());
    if f.spatial_dim() == 1 {
        if n >= rel_lab::min_grid_points(f) {
            let minima = rel_lab::scan_negative_density(f, ts, n)?;
            let mut m = Csv::new(digest, "field", &["t", "x", "j0"]);
            for r in &minima {
                m.row(&[num(r.t), num(r.x), num(r.j0)]);
            }
            out.artifacts.add("negative_minima.csv", m.render());
        } else {
            out.warnings.push(format!(
                "grid of {n} points is too coarse for the negative-density scan (need {})",
                rel_lab::min_grid_points(f)
            ));
        }
    }
    Ok(())
}

fn nonrel_field_dump(
    out: &mut Outcome,
    digest: &str,
    f: &NonRelField,
    ts: &[f64],
    grid: Option<usize>,
    cfg: &IntegratorConfig,
) {
    let dim = f.config_dim();
    let n = grid.unwrap_or(if dim == 1 { 256 } else { 64 }).max(2);
    out.param("grid", n);
    out.param("times", ts);
    let columns: &[&str] = if dim == 1 {
        &["t", "x", "re_psi", "im_psi", "rho", "v", "Q"]
    } else {
        &["t", "x", "y", "re_psi", "im_psi", "rho", "vx", "vy", "Q"]
    };
    let mut csv =
        Csv::new(digest, "field", columns).meta("node_threshold", num(cfg.node_threshold));
    for &t in ts {
        let window = f.envelope(t, nonrel_lab::WINDOW_SIGMAS);
        let axes: Vec<Vec<f64>> = window.iter().map(|&(lo, hi)| linspace(lo, hi, n)).collect();
        let mut emit = |x: &[f64]| {
            let psi = f.psi(x, t);
            let polar = f.polar_with_threshold(x, t, cfg.node_threshold).ok();
            let mut row = vec![num(t)];
            row.extend(x.iter().map(|&v| num(v)));
            row.extend([num(psi.re), num(psi.im), num(psi.norm_sqr())]);
            for k in 0..dim {
                row.push(opt(polar.map(|p| p.velocity[k])));
            }
            row.push(opt(polar.map(|p| p.q)));
            csv.row(&row);
        };
        if dim == 1 {
            for &x in &axes[0] {
                emit(&[x]);
            }
        } else {
            for &x in &axes[0] {
                for &y in &axes[1] {
                    emit(&[x, y]);
                }
            }
        }
    }
    out.artifacts.add("field.csv", csv.render());
}

// ---------------------------------------------------------------- trace

fn event_name(kind: &EventKind) -> String {
    match kind {
        EventKind::HyperplaneCrossing { direction, .. } if *direction > 0 => {
            "crossing_forward".into()
        }
        EventKind::HyperplaneCrossing { .. } => "crossing_backward".into(),
        EventKind::TurningPoint => "turning_point".into(),
        EventKind::NodeProximity => "node_proximity".into(),
    }
}

fn termination_name(t: pilotwave::guidance::Termination) -> &'static str {
    use pilotwave::guidance::Termination as T;
    match t {
        T::ReachedParamLimit => "reached_param_limit",
        T::ReachedHyperplane => "reached_hyperplane",
        T::NodeAbort => "node_abort",
        T::StepLimitExceeded => "step_limit_exceeded",
    }
}

/// Trajectory CSV: points and events merged in traversal order. `time_axis`
/// says whether coordinate 0 is t (relativistic) or the parameter doubles as
/// time (nonrelativistic).
fn trajectory_csv(
    digest: &str,
    traj: &Trajectory,
    names: &[&str],
    relativistic: bool,
    meta: &[(&str, String)],
) -> String {
    let mut columns = vec!["s", "t"];
    columns.extend_from_slice(names);
    columns.extend(["speed_ratio", "event"]);
    let mut csv =
        Csv::new(digest, "trace", &columns).meta("termination", termination_name(traj.termination));
    for (k, v) in meta {
        csv = csv.meta(k, v);
    }
    let backward = traj.end_param < traj.points.first().map(|p| p.param).unwrap_or(0.0);
    let key = |s: f64| if backward { -s } else { s };
    let coords_row = |s: f64, c: &[f64]| -> Vec<String> {
        let mut row = vec![num(s)];
        if relativistic {
            row.extend(c.iter().map(|&v| num(v)));
        } else {
            row.push(num(s));
            row.extend(c.iter().map(|&v| num(v)));
        }
        row
    };
    let mut events = traj.events.iter().peekable();
    for p in &traj.points {
        while let Some(e) = events.next_if(|e| key(e.param) < key(p.param)) {
            let mut row = coords_row(e.param, &e.coords);
            row.extend([String::new(), event_name(&e.kind)]);
            csv.row(&row);
        }
        let mut row = coords_row(p.param, &p.coords);
        row.extend([opt(p.speed_ratio), String::new()]);
        csv.row(&row);
    }
    for e in events {
        let mut row = coords_row(e.param, &e.coords);
        row.extend([String::new(), event_name(&e.kind)]);
        csv.row(&row);
    }
    csv.render()
}

fn events_csv(digest: &str, trajs: &[Trajectory], names: &[&str], relativistic: bool) -> String {
    let mut columns = vec!["trajectory", "kind", "level", "s", "t"];
    columns.extend_from_slice(names);
    let mut csv = Csv::new(digest, "trace", &columns);
    for (i, tr) in trajs.iter().enumerate() {
        for e in &tr.events {
            let level = match e.kind {
                EventKind::HyperplaneCrossing { level, .. } => num(level),
                _ => String::new(),
            };
            let mut row = vec![i.to_string(), event_name(&e.kind), level, num(e.param)];
            if !relativistic {
                row.push(num(e.param));
            }
            row.extend(e.coords.iter().map(|&v| num(v)));
            csv.row(&row);
        }
    }
    csv.render()
}

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn trace(s: &ScenarioFile, o: &Options) -> Result<Outcome, CliError> {
    let digest = s.digest();
    let cfg = s.run.integrator();
    let mut out = Outcome::default();
    let starts: Vec<Vec<f64>> = if o.starts.is_empty() {
        s.run.starts.clone().unwrap_or_default()
    } else {
        o.starts.clone()
    };
    let mut trajs = Vec::new();
    let names: Vec<&str>;
    let relativistic;
    let mut meta: Vec<(&str, String)> = Vec::new();
    match &s.physics {
        Physics::RelField(_) | Physics::Window(_) => {
            let (f, planes) = match &s.physics {
                Physics::RelField(spec) => (spec.build()?, vec![]),
                Physics::Window(w) => {
                    meta.push(("t0", num(w.t0)));
                    meta.push(("t1", num(w.t1)));
                    (w.field.build()?, vec![w.t0, w.t1])
                }
                _ => unreachable!(),
            };
            let dim = f.spatial_dim();
            names = AXES[..dim].to_vec();
            relativistic = true;
            let span = o.span.or(s.run.span).unwrap_or(10.0);
            out.param("span", span);
            let mut req = TraceRequest::span(span)
                .turning_points()
                .record(Record::Steps);
            for level in planes {
                req = req.watch(Hyperplane::any(level));
            }
            for p in &starts {
                if p.len() != dim + 1 {
                    return Err(CliError::Input(format!(
                        "start {p:?} needs {} coordinates (t, x...)",
                        dim + 1
                    )));
                }
                trajs.push(integrate_rel(
                    &f,
                    &FourVector::from_components(p),
                    &cfg,
                    &req,
                )?);
            }
        }
        Physics::NonrelField(_) | Physics::Measurement(_) => {
            let (f, span) = match &s.physics {
                Physics::NonrelField(spec) => (spec.build()?, (spec.t0, spec.t1)),
                Physics::Measurement(m) => (m.build()?.field().clone(), (0.0, m.final_time)),
                _ => unreachable!(),
            };
            names = AXES[..f.config_dim()].to_vec();
            relativistic = false;
            out.param("t_span", [span.0, span.1]);
            for p in &starts {
                trajs.push(integrate_nonrel(&f, p, span, &cfg, Record::Steps)?);
            }
        }
        Physics::TwoParticle(tp) => {
            let f = tp.build()?;
            names = vec!["x"];
            relativistic = true;
            let pair = match starts.as_slice() {
                [] => tp.start_events(),
                [a, b] if a.len() == 2 && b.len() == 2 => {
                    [FourVector::tx(a[0], a[1]), FourVector::tx(b[0], b[1])]
                }
                _ => {
                    return Err(CliError::Input(
                        "two-particle traces need exactly two (t, x) starts".into(),
                    ))
                }
            };
            let span = o.span.or(s.run.span).unwrap_or(10.0);
            out.param("span", span);
            trajs.extend(integrate_two_particle(&f, pair, &cfg, span, Record::Steps)?);
        }
    }
    if trajs.is_empty() {
        out.warnings
            .push("no start points given; nothing traced".into());
        return Ok(out);
    }
    out.param("starts", trajs.len());
    for (i, tr) in trajs.iter().enumerate() {
        out.artifacts.add(
            format!("trajectory_{i:03}.csv"),
            trajectory_csv(&digest, tr, &names, relativistic, &meta),
        );
    }
    out.artifacts.add(
        "events.csv",
        events_csv(&digest, &trajs, &names, relativistic),
    );
    Ok(out)
}

// ---------------------------------------------------------------- classify

#[derive(Serialize)]
struct CountsJson {
    sigma_prime: usize,
    sigma_plus: usize,
    sigma_minus: usize,
    indeterminate: usize,
}

#[derive(Serialize)]
struct DensityCheckJson {
    t: f64,
    min_j0: f64,
    x_at_min: f64,
    tolerance: f64,
    pass: bool,
}

impl From<rel_lab::WindowReport> for DensityCheckJson {
    fn from(r: rel_lab::WindowReport) -> Self {
        Self {
            t: r.t,
            min_j0: r.min_j0,
            x_at_min: r.x_at_min,
            tolerance: r.tolerance,
            pass: r.pass,
        }
    }
}

#[derive(Serialize)]
struct ClassifySummary {
    scenario_digest: String,
    t0: f64,
    t1: f64,
    grid: usize,
    cell_width: f64,
    flux: f64,
    initial_charge: f64,
    flux_tolerance: f64,
    flux_within_tolerance: bool,
    counts: CountsJson,
    preparation_check: DensityCheckJson,
    measurement_slice_check: DensityCheckJson,
    clipped_current_l1: f64,
}

fn window_of(s: &ScenarioFile, command: &str) -> Result<(WindowSpec, ScenarioWindow), CliError> {
    match &s.physics {
        Physics::Window(w) => Ok((w.clone(), w.build()?)),
        other => Err(unsupported(command, other.kind())),
    }
}

pub fn classify(s: &ScenarioFile, o: &Options) -> Result<Outcome, CliError> {
    let digest = s.digest();
    let (_, window) = window_of(s, "classify")?;
    let grid = o.grid.or(s.run.grid).unwrap_or(2000);
    let cfg = PredictConfig {
        integrator: s.run.integrator(),
        exec: Exec::default(),
    };
    let c = rel_lab::predict_density(&window, grid, &cfg)?;
    let mut out = Outcome::default();
    out.param("grid", grid);
    let mut csv = Csv::new(&digest, "classify", &["x", "label", "j0", "rho"])
        .meta("t0", num(window.t0()))
        .meta("t1", num(window.t1()))
        .meta("box_length", num(c.box_length));
    for ((x, cell), rho) in c.x.iter().zip(&c.cells).zip(&c.density) {
        let label = cell
            .label
            .map(SigmaLabel::as_str)
            .unwrap_or("Indeterminate");
        csv.row(&[num(*x), label.to_string(), num(cell.j0), num(*rho)]);
    }
    let counts = c.counts();
    if counts.indeterminate > 0 {
        out.warnings.push(format!(
            "{} cells are indeterminate and excluded from the density",
            counts.indeterminate
        ));
    }
    let clipped = c.clipped_current_density();
    let summary = ClassifySummary {
        scenario_digest: digest,
        t0: window.t0(),
        t1: window.t1(),
        grid,
        cell_width: c.cell_width,
        flux: c.flux,
        initial_charge: c.initial_charge,
        flux_tolerance: rel_lab::FLUX_TOLERANCE,
        flux_within_tolerance: (c.flux - c.initial_charge).abs() <= rel_lab::FLUX_TOLERANCE,
        counts: CountsJson {
            sigma_prime: counts.sigma_prime,
            sigma_plus: counts.sigma_plus,
            sigma_minus: counts.sigma_minus,
            indeterminate: counts.indeterminate,
        },
        preparation_check: rel_lab::verify_window(&window).into(),
        measurement_slice_check: rel_lab::verify_density_at(window.field(), window.t1()).into(),
        clipped_current_l1: c.l1_mass(&clipped, &c.density),
    };
    out.artifacts.add("classification.csv", csv.render());
    out.artifacts.add("summary.json", to_json(&summary));
    Ok(out)
}

// ---------------------------------------------------------------- ensemble

pub const EQUIVARIANCE_TOLERANCE: f64 = 0.03;
pub const FIRST_CROSSING_TOLERANCE: f64 = 0.05;
pub const EXCLUDED_MASS_TOLERANCE: f64 = 0.005;

#[derive(Serialize)]
struct FirstCrossingComparison {
    scenario_digest: String,
    n: usize,
    seed: u64,
    bins: usize,
    grid: usize,
    l1: f64,
    l1_tolerance: f64,
    excluded_mass: f64,
    excluded_mass_tolerance: f64,
    predicted_flux: f64,
    node_aborts: usize,
    unfinished: usize,
    pass: bool,
}

#[derive(Serialize)]
struct EquivarianceComparison {
    scenario_digest: String,
    n: usize,
    seed: u64,
    bins: usize,
    t0: f64,
    t1: f64,
    window: [f64; 2],
    l1: f64,
    l1_tolerance: f64,
    node_aborts: usize,
    pass: bool,
}

pub fn ensemble(s: &ScenarioFile, o: &Options) -> Result<Outcome, CliError> {
    let digest = s.digest();
    let seed = seed_of(o, &s.run);
    let cfg = s.run.integrator();
    let mut out = Outcome {
        seed: Some(seed),
        ..Outcome::default()
    };
    match &s.physics {
        Physics::Window(w) => {
            let window = w.build()?;
            let n = o.n.or(s.run.n).unwrap_or(100_000);
            let bins = o.bins.or(s.run.bins).unwrap_or(50);
            let grid = o.grid.or(s.run.grid).unwrap_or(2000);
            if bins == 0 || !grid.is_multiple_of(bins) {
                return Err(CliError::Input(format!(
                    "{bins} bins must divide the {grid}-cell grid"
                )));
            }
            out.param("n", n);
            out.param("bins", bins);
            out.param("grid", grid);
            let pc = PredictConfig {
                integrator: cfg,
                exec: Exec::default(),
            };
            let prediction = rel_lab::predict_density(&window, grid, &pc)?;
            let mc = rel_lab::mc_first_crossing(&window, n, seed, &pc)?;
            let hist = mc.histogram(bins);
            let predicted = prediction.bin_masses(bins)?;
            let masses = hist.masses();
            let edges = hist.edges();
            let mut csv = Csv::new(
                &digest,
                "ensemble",
                &["bin_lo", "bin_hi", "count", "mass", "predicted"],
            )
            .meta("t1", num(window.t1()))
            .meta("seed", seed);
            for b in 0..bins {
                csv.row(&[
                    num(edges[b]),
                    num(edges[b + 1]),
                    hist.counts[b].to_string(),
                    num(masses[b]),
                    num(predicted[b]),
                ]);
            }
            let l1 = pilotwave::numerics::l1_distance(&masses, &predicted);
            let excluded = mc.excluded_fraction(&prediction);
            let cmp = FirstCrossingComparison {
                scenario_digest: digest,
                n,
                seed,
                bins,
                grid,
                l1,
                l1_tolerance: FIRST_CROSSING_TOLERANCE,
                excluded_mass: excluded,
                excluded_mass_tolerance: EXCLUDED_MASS_TOLERANCE,
                predicted_flux: prediction.flux,
                node_aborts: mc.node_aborts,
                unfinished: mc.unfinished,
                pass: l1 <= FIRST_CROSSING_TOLERANCE && excluded <= EXCLUDED_MASS_TOLERANCE,
            };
            out.artifacts.add("histogram.csv", csv.render());
            out.artifacts.add("comparison.json", to_json(&cmp));
        }
        Physics::NonrelField(spec) => {
            let f = spec.build()?;
            let n = o.n.or(s.run.n).unwrap_or(100_000);
            let bins = o.bins.or(s.run.bins).unwrap_or(50);
            out.param("n", n);
            out.param("bins", bins);
            let r = nonrel_lab::equivariance_report(
                &f,
                spec.t0,
                spec.t1,
                n,
                bins,
                seed,
                &cfg,
                Exec::default(),
            )?;
            let masses = r.histogram.masses();
            let edges = r.histogram.edges();
            let mut csv = Csv::new(
                &digest,
                "ensemble",
                &["bin_lo", "bin_hi", "count", "mass", "exact"],
            )
            .meta("t1", num(spec.t1))
            .meta("seed", seed);
            for b in 0..bins {
                csv.row(&[
                    num(edges[b]),
                    num(edges[b + 1]),
                    r.histogram.counts[b].to_string(),
                    num(masses[b]),
                    num(r.exact[b]),
                ]);
            }
            let cmp = EquivarianceComparison {
                scenario_digest: digest,
                n,
                seed,
                bins,
                t0: spec.t0,
                t1: spec.t1,
                window: [r.histogram.lo, r.histogram.hi],
                l1: r.l1,
                l1_tolerance: EQUIVARIANCE_TOLERANCE,
                node_aborts: r.node_aborts,
                pass: r.l1 <= EQUIVARIANCE_TOLERANCE,
            };
            out.artifacts.add("histogram.csv", csv.render());
            out.artifacts.add("comparison.json", to_json(&cmp));
        }
        Physics::Measurement(m) => {
            let sc = m.build()?;
            let n = o.n.or(s.run.n).unwrap_or(10_000);
            out.param("n", n);
            let outcome = nonrel_lab::run_measurement(&sc, n, seed, &cfg, Exec::default())?;
            let mut csv = Csv::new(
                &digest,
                "ensemble",
                &["channel", "count", "frequency", "expected"],
            )
            .meta("seed", seed);
            for (a, ch) in sc.channels().iter().enumerate() {
                csv.row(&[
                    a.to_string(),
                    outcome.counts[a].to_string(),
                    num(outcome.frequencies()[a]),
                    num(ch.coefficient.norm_sqr()),
                ]);
            }
            out.artifacts.add("histogram.csv", csv.render());
            out.artifacts.add(
                "comparison.json",
                to_json(&born_json(&digest, &sc, &outcome, n, seed)),
            );
        }
        other => return Err(unsupported("ensemble", other.kind())),
    }
    Ok(out)
}

// ---------------------------------------------------------------- measure

#[derive(Serialize)]
struct ChannelJsonOut {
    channel: usize,
    expected: f64,
    count: usize,
    frequency: f64,
    three_sigma: f64,
    within_three_sigma: bool,
}

#[derive(Serialize)]
struct BornJson {
    scenario_digest: String,
    n: usize,
    seed: u64,
    separation_time: Option<f64>,
    final_time: f64,
    channels: Vec<ChannelJsonOut>,
    unresolved: usize,
    aborted: usize,
}

fn born_json(
    digest: &str,
    sc: &MeasurementScenario,
    outcome: &nonrel_lab::ChannelOutcome,
    n: usize,
    seed: u64,
) -> BornJson {
    let freqs = outcome.frequencies();
    BornJson {
        scenario_digest: digest.into(),
        n,
        seed,
        separation_time: sc.separation_time(),
        final_time: sc.final_time(),
        channels: sc
            .channels()
            .iter()
            .enumerate()
            .map(|(a, ch)| {
                let p = ch.coefficient.norm_sqr();
                let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
                ChannelJsonOut {
                    channel: a,
                    expected: p,
                    count: outcome.counts[a],
                    frequency: freqs[a],
                    three_sigma: band,
                    within_three_sigma: (freqs[a] - p).abs() <= band,
                }
            })
            .collect(),
        unresolved: outcome.unresolved,
        aborted: outcome.aborted,
    }
}

pub fn measure(s: &ScenarioFile, o: &Options) -> Result<Outcome, CliError> {
    let digest = s.digest();
    let Physics::Measurement(m) = &s.physics else {
        return Err(unsupported("measure", s.physics.kind()));
    };
    let sc = m.build()?;
    let cfg = s.run.integrator();
    let seed = seed_of(o, &s.run);
    let n = o.n.or(s.run.n).unwrap_or(10_000);
    let mut out = Outcome {
        seed: Some(seed),
        ..Outcome::default()
    };
    out.param("n", n);
    let outcome = nonrel_lab::run_measurement(&sc, n, seed, &cfg, Exec::default())?;
    let t_sep = sc
        .separation_time()
        .expect("run_measurement checked separation");
    let t_end = sc.final_time();
    let snapshots = s
        .run
        .snapshots
        .clone()
        .unwrap_or_else(|| linspace(t_sep, t_end, 10));
    let n_ex = n.min(200);
    let trajs = nonrel_lab::measurement_trajectories(
        &sc,
        n_ex,
        seed,
        t_end / 400.0,
        &cfg,
        Exec::default(),
    )?;
    let exclusivity = nonrel_lab::channel_exclusivity_check(&sc, &trajs, &snapshots);
    let collapse_n = s.run.collapse_n.unwrap_or(100);
    let collapse = nonrel_lab::collapse_check(
        &sc,
        collapse_n,
        seed,
        (t_end - t_sep) / 100.0,
        &cfg,
        Exec::default(),
    )?;
    out.param("collapse_n", collapse_n);
    out.param("exclusivity_trajectories", n_ex);
    let mut doc =
        serde_json::to_value(born_json(&digest, &sc, &outcome, n, seed)).expect("serialises");
    doc["exclusivity"] = json!({
        "snapshots": snapshots,
        "checked": exclusivity.checked,
        "violations": exclusivity.violations.len(),
    });
    doc["collapse"] = json!({
        "compared": collapse.compared,
        "skipped": collapse.skipped,
        "max_deviation": collapse.max_deviation,
        "tolerance": 1e-4,
        "pass": collapse.max_deviation <= 1e-4,
    });
    out.artifacts.add("measurement.json", to_json(&doc));
    Ok(out)
}

// ---------------------------------------------------------------- search

pub fn search_scenario(o: &Options) -> Result<(ScenarioFile, Outcome), CliError> {
    let mut cfg = SearchConfig::default();
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    let found = rel_lab::search_prediction_scenario(&cfg)?;
    let window = &found.window;
    let pc = PredictConfig::default();
    let grid = 2000;
    let classification = rel_lab::predict_density(window, grid, &pc)?;
    let s_shape = rel_lab::find_s_shaped(window, &classification, &pc.integrator);
    let mut run = RunParams {
        seed: Some(1),
        n: Some(100_000),
        bins: Some(100),
        grid: Some(grid),
        ..RunParams::default()
    };
    if let Some(h) = &s_shape {
        run.starts = Some(vec![vec![window.t0(), h.x0]]);
        run.span = Some(h.trajectory.end_param);
    }
    let scenario = ScenarioFile {
        schema_version: SCHEMA_VERSION,
        physics: Physics::Window(WindowSpec {
            field: RelFieldSpec::from_modes(cfg.mass, cfg.box_length, &found.modes),
            t0: window.t0(),
            t1: window.t1(),
        }),
        run,
    };
    let mut out = Outcome {
        seed: Some(cfg.seed),
        ..Outcome::default()
    };
    out.param("attempt", found.attempt);
    let report = json!({
        "scenario_digest": scenario.digest(),
        "search_seed": cfg.seed,
        "attempt": found.attempt,
        "modes": found.modes.len(),
        "t0": window.t0(),
        "t1": window.t1(),
        "min_j0_t0": found.min_j0_t0,
        "min_j0_t1": found.min_j0_t1,
        "x_at_min_t1": found.x_at_min_t1,
        "mean_density": window.field().mean_density(),
        "s_shaped_start": s_shape.as_ref().map(|h| h.x0),
        "s_shaped_arrival": s_shape.as_ref().map(|h| h.x1),
    });
    out.artifacts.add("prediction.json", scenario.pretty_json());
    out.artifacts.add("search.json", to_json(&report));
    if s_shape.is_none() {
        out.warnings
            .push("no S-shaped trajectory found on the 2000-cell grid".into());
    }
    Ok((scenario, out))
}

// ---------------------------------------------------------------- plot

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        })
}

fn numeric_column(t: &Table, name: &str) -> Result<Vec<Option<f64>>, CliError> {
    let c = t
        .column(name)
        .ok_or_else(|| CliError::Input(format!("missing column {name}")))?;
    Ok((0..t.rows.len()).map(|r| t.value(r, c)).collect())
}

fn stem(path: &std::path::Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into())
}

fn world_lines(tables: &[(PathBuf, Table)]) -> Result<String, CliError> {
    let mut lines: Vec<(Vec<(f64, f64)>, bool)> = Vec::new();
    let mut all_t = Vec::new();
    let mut all_x = Vec::new();
    let mut planes = Vec::new();
    let mut plot_comments = Vec::new();
    for (path, t) in tables {
        let ts = numeric_column(t, "t")?;
        let xs = numeric_column(t, "x")?;
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .zip(&xs)
            .filter_map(|(t, x)| Some(((*x)?, (*t)?)))
            .collect();
        all_t.extend(pts.iter().map(|p| p.1));
        all_x.extend(pts.iter().map(|p| p.0));
        // Split into runs of constant time direction.
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut dir = None;
        for w in pts.windows(2) {
            let d = w[1].1 >= w[0].1;
            if dir.is_some_and(|prev| prev != d) {
                lines.push((std::mem::take(&mut run), dir.unwrap()));
            }
            if run.is_empty() {
                run.push(w[0]);
            }
            run.push(w[1]);
            dir = Some(d);
        }
        if let Some(d) = dir {
            lines.push((run, d));
        }
        for key in ["t0", "t1"] {
            if let Some(v) = t.meta_value(key).and_then(|v| v.parse::<f64>().ok()) {
                if !planes.contains(&v) {
                    planes.push(v);
                }
            }
        }
        plot_comments.push(format!(
            "{}: scenario_digest {}",
            path.file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            t.meta_value("scenario_digest").unwrap_or("unknown")
        ));
    }
    all_t.extend(planes.iter().copied());
    let mut plot = Plot::new(
        "World lines (red: t decreasing along the curve)",
        "x",
        "t",
        finite_range(all_x.into_iter()),
        finite_range(all_t.into_iter()),
    );
    for c in plot_comments {
        plot.comment(c);
    }
    for p in planes {
        plot.hline(p, svg::NEUTRAL);
    }
    for (pts, forward) in lines {
        plot.line(pts, if forward { svg::FORWARD } else { svg::BACKWARD });
    }
    Ok(plot.render())
}

fn density_plot(path: &std::path::Path, t: &Table) -> Result<String, CliError> {
    let xs = numeric_column(t, "x")?;
    let j0 = numeric_column(t, "j0")?;
    let rho = numeric_column(t, "rho")?;
    let lc = t.column("label").expect("checked by caller");
    let (xlo, xhi) = finite_range(xs.iter().flatten().copied());
    let half = if xs.len() > 1 {
        0.5 * (xhi - xlo) / (xs.len() - 1) as f64
    } else {
        0.5
    };
    let (ylo, yhi) = finite_range(j0.iter().chain(&rho).flatten().copied());
    let mut plot = Plot::new(
        "Predicted density at t1 (shaded: zeroed cells)",
        "x",
        "density",
        (xlo - half, xhi + half),
        (ylo.min(0.0), yhi),
    );
    plot.comment(format!(
        "{}: scenario_digest {}",
        path.display(),
        t.meta_value("scenario_digest").unwrap_or("unknown")
    ));
    let mut band: Option<(f64, f64)> = None;
    for (r, x) in xs.iter().enumerate() {
        let Some(x) = *x else { continue };
        let zeroed = matches!(t.rows[r][lc].as_str(), "SigmaPlus" | "SigmaMinus");
        match (zeroed, band) {
            (true, Some((a, _))) => band = Some((a, x + half)),
            (true, None) => band = Some((x - half, x + half)),
            (false, Some((a, b))) => {
                plot.band(a, b, svg::BAND);
                band = None;
            }
            (false, None) => {}
        }
    }
    if let Some((a, b)) = band {
        plot.band(a, b, svg::BAND);
    }
    plot.hline(0.0, svg::NEUTRAL);
    let pts = |ys: &[Option<f64>]| {
        xs.iter()
            .zip(ys)
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .collect::<Vec<_>>()
    };
    plot.line(pts(&j0), svg::BACKWARD);
    plot.line(pts(&rho), svg::FORWARD);
    Ok(plot.render())
}

fn histogram_plot(path: &std::path::Path, t: &Table, reference: &str) -> Result<String, CliError> {
    let lo = numeric_column(t, "bin_lo")?;
    let hi = numeric_column(t, "bin_hi")?;
    let mass = numeric_column(t, "mass")?;
    let refm = numeric_column(t, reference)?;
    let mut emp = Vec::new();
    let mut exact = Vec::new();
    for r in 0..lo.len() {
        let (Some(a), Some(b)) = (lo[r], hi[r]) else {
            continue;
        };
        let w = b - a;
        for (series, v) in [(&mut emp, mass[r]), (&mut exact, refm[r])] {
            if let Some(v) = v {
                series.push((a, v / w));
                series.push((b, v / w));
            }
        }
    }
    let (xlo, xhi) = finite_range(emp.iter().map(|p| p.0));
    let (_, yhi) = finite_range(emp.iter().chain(&exact).map(|p| p.1));
    let mut plot = Plot::new(
        &format!("Histogram (blue) vs {reference} (red)"),
        "x",
        "density",
        (xlo, xhi),
        (0.0, yhi),
    );
    plot.comment(format!(
        "{}: scenario_digest {}",
        path.display(),
        t.meta_value("scenario_digest").unwrap_or("unknown")
    ));
    plot.line(exact, svg::BACKWARD);
    plot.line(emp, svg::FORWARD);
    Ok(plot.render())
}

fn field_plot(path: &std::path::Path, t: &Table) -> Result<String, CliError> {
    let ts = numeric_column(t, "t")?;
    let xs = numeric_column(t, "x")?;
    let value_col = if t.column("j0").is_some() {
        "j0"
    } else {
        "rho"
    };
    let vs = numeric_column(t, value_col)?;
    let mut slices: Vec<f64> = ts.iter().flatten().copied().collect();
    slices.dedup();
    let (xlo, xhi) = finite_range(xs.iter().flatten().copied());
    let comment = format!(
        "{}: scenario_digest {}",
        path.display(),
        t.meta_value("scenario_digest").unwrap_or("unknown")
    );
    if slices.len() > 2 && t.column("y").is_none() {
        let (tlo, thi) = finite_range(slices.iter().copied());
        let scale = vs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let per = xs.len() / slices.len();
        let dx = (xhi - xlo) / (per.max(2) - 1) as f64;
        let dt = (thi - tlo) / (slices.len() - 1) as f64;
        let mut plot = Plot::new(
            &format!("{value_col}(t, x) (blue: negative)"),
            "x",
            "t",
            (xlo, xhi + dx),
            (tlo - 0.5 * dt, thi + 0.5 * dt),
        );
        plot.comment(comment);
        for r in 0..vs.len() {
            if let (Some(t), Some(x), Some(v)) = (ts[r], xs[r], vs[r]) {
                plot.cell(
                    (x, x + dx),
                    (t - 0.5 * dt, t + 0.5 * dt),
                    svg::diverging(v, scale),
                );
            }
        }
        return Ok(plot.render());
    }
    let (ylo, yhi) = finite_range(vs.iter().flatten().copied());
    let mut plot = Plot::new(
        &format!("{value_col} along x"),
        "x",
        value_col,
        (xlo, xhi),
        (ylo.min(0.0), yhi),
    );
    plot.comment(comment);
    plot.hline(0.0, svg::NEUTRAL);
    let colours = [svg::FORWARD, svg::BACKWARD, svg::NEUTRAL];
    for (k, slice) in slices.iter().enumerate() {
        let pts: Vec<(f64, f64)> = (0..vs.len())
            .filter(|&r| ts[r] == Some(*slice))
            .filter_map(|r| Some((xs[r]?, vs[r]?)))
            .collect();
        plot.line(pts, colours[k % colours.len()]);
    }
    Ok(plot.render())
}

pub fn plot(inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input(
            "plot needs at least one result file".into(),
        ));
    }
    let mut out = Outcome::default();
    let mut trajectories = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let table = Table::parse(&text)?;
        let cols: Vec<&str> = table.columns.iter().map(String::as_str).collect();
        if cols.starts_with(&["s", "t", "x"]) {
            trajectories.push((path.clone(), table));
        } else if cols == ["x", "label", "j0", "rho"] {
            out.artifacts
                .add(format!("{}.svg", stem(path)), density_plot(path, &table)?);
        } else if cols.starts_with(&["bin_lo", "bin_hi", "count", "mass"]) {
            let reference = cols[4].to_string();
            out.artifacts.add(
                format!("{}.svg", stem(path)),
                histogram_plot(path, &table, &reference)?,
            );
        } else if cols.starts_with(&["t", "x"])
            && (table.column("j0").is_some() || table.column("rho").is_some())
        {
            out.artifacts
                .add(format!("{}.svg", stem(path)), field_plot(path, &table)?);
        } else {
            return Err(CliError::Input(format!(
                "{} is not a recognised result table",
                path.display()
            )));
        }
    }
    if !trajectories.is_empty() {
        out.artifacts
            .add("worldlines.svg", world_lines(&trajectories)?);
    }
    out.param("inputs", inputs.len());
    Ok(out)
}
