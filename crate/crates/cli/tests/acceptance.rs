//! Acceptance suite. Every criterion is evaluated on the shipped scenarios
//! and reported on one line; the test fails if any criterion fails.
//!
//! Run with `cargo test -p pilotwave-cli --test acceptance -- --nocapture`.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use pilotwave::error::NodeProximity;
use pilotwave::field::nonrel::NonRelField;
use pilotwave::field::two_particle::TwoParticleField;
use pilotwave::guidance::{
    integrate_curve, integrate_nonrel, integrate_rel, integrate_two_particle, EventKind,
    Hyperplane, IntegratorConfig, Record, RelVelocity, TraceRequest, Trajectory, TrajectoryPoint,
    VectorField,
};
use pilotwave::nonrel_lab::{
    collapse_check, equivariance_report, run_measurement, MeasurementScenario,
};
use pilotwave::rel_lab::{
    mc_first_crossing, predict_density, scan_negative_density, PredictConfig, ScenarioWindow,
};
use pilotwave::{Exec, FourVector, RelField};
use pilotwave_cli::scenario::{Physics, ScenarioFile};

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load(name: &str) -> ScenarioFile {
    ScenarioFile::load(&scenario_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn rel_field(name: &str) -> RelField {
    match load(name).physics {
        Physics::RelField(spec) => spec.build().unwrap(),
        Physics::Window(spec) => spec.field.build().unwrap(),
        other => panic!("{name} is a {} scenario", other.kind()),
    }
}

fn window(name: &str) -> (ScenarioWindow, ScenarioFile) {
    let file = load(name);
    let Physics::Window(spec) = &file.physics else {
        panic!("{name} is not a window scenario")
    };
    (spec.build().unwrap(), file)
}

fn nonrel(name: &str) -> (NonRelField, f64, f64, ScenarioFile) {
    let file = load(name);
    let Physics::NonrelField(spec) = &file.physics else {
        panic!("{name} is not a nonrel scenario")
    };
    (spec.build().unwrap(), spec.t0, spec.t1, file)
}

fn measurement(name: &str) -> (MeasurementScenario, ScenarioFile) {
    let file = load(name);
    let Physics::Measurement(spec) = &file.physics else {
        panic!("{name} is not a measurement scenario")
    };
    (spec.build().unwrap(), file)
}

fn two_particle(name: &str) -> (TwoParticleField, [FourVector; 2], f64) {
    let file = load(name);
    let Physics::TwoParticle(spec) = &file.physics else {
        panic!("{name} is not a two-particle scenario")
    };
    let starts = spec.starts.map(|[t, x]| FourVector::tx(t, x));
    (spec.build().unwrap(), starts, file.run.span.unwrap_or(4.0))
}

/// Low-discrepancy points in [0, 1)^k from additive recurrences.
fn weyl(i: usize, k: usize) -> f64 {
    const ALPHA: [f64; 4] = [
        0.414_213_562_373_095,
        0.732_050_807_568_877,
        0.236_067_977_499_79,
        0.645_751_311_064_59,
    ];
    (0.5 + i as f64 * ALPHA[k]).fract()
}

type Snapshot = Vec<(String, Vec<u8>)>;
type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn equivariance() -> Outcome {
    let (field, t0, t1, file) = nonrel("interference.json");
    let (n, bins, seed) = (
        file.run.n.unwrap(),
        file.run.bins.unwrap(),
        file.run.seed.unwrap(),
    );
    let tau = field.spreading_time();
    let clock = Instant::now();
    let r = equivariance_report(
        &field,
        t0,
        t1,
        n,
        bins,
        seed,
        &IntegratorConfig::default(),
        Exec::default(),
    )
    .unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let pass = r.l1 <= 0.03
        && secs <= 120.0
        && n >= 100_000
        && bins == 50
        && (t1 - t0 - tau).abs() < 1e-12;
    outcome(pass, format!("L1 = {:.4} (≤ 0.03) at t1 = {t1} = τ, n = {n}, {bins} bins, {} node aborts, {secs:.1} s", r.l1, r.node_aborts))
}

fn born_rule() -> Outcome {
    let (s, file) = measurement("measurement.json");
    let n = file.run.n.unwrap();
    let clock = Instant::now();
    let out = run_measurement(
        &s,
        n,
        file.run.seed.unwrap(),
        &IntegratorConfig::default(),
        Exec::default(),
    )
    .unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let p = s.channels()[0].coefficient.norm_sqr();
    let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let f = out.frequencies()[0];
    let pass = (p - 0.7).abs() < 1e-12 && n >= 10_000 && (f - p).abs() <= band && secs <= 120.0;
    outcome(
        pass,
        format!(
            "frequency₁ = {f:.4}, |c₁|² = {p:.3} ± {band:.4}, n = {n}, {} unresolved, {secs:.1} s",
            out.unresolved
        ),
    )
}

fn collapse() -> Outcome {
    let (s, file) = measurement("measurement.json");
    let n = file.run.collapse_n.unwrap_or(100).max(150);
    let r = collapse_check(
        &s,
        n,
        file.run.seed.unwrap(),
        0.01,
        &IntegratorConfig::default(),
        Exec::default(),
    )
    .unwrap();
    let pass = r.compared >= 100 && r.max_deviation <= 1e-4;
    outcome(
        pass,
        format!(
            "max |x_full − x_branch| = {:.2e} (≤ 1e-4) over {} trajectories after t_sep = {:.4}",
            r.max_deviation,
            r.compared,
            s.separation_time().unwrap()
        ),
    )
}

fn single_mode() -> Outcome {
    let f = rel_field("single_mode.json");
    let mode = &f.modes()[0];
    let (w, p) = (mode.frequency(), mode.momentum()[0]);
    let slope = p / w;
    let c2 = (mode.amplitude() * f.normalization()).norm_sqr();
    let mut slope_err = 0.0f64;
    let mut q_max = 0.0f64;
    let mut j_err = 0.0f64;
    for i in 0..10 {
        let start = FourVector::tx(0.0, f.box_length() * weyl(i, 0));
        let traj = integrate_rel(
            &f,
            &start,
            &IntegratorConfig::default(),
            &TraceRequest::span(5.0),
        )
        .unwrap();
        for pt in &traj.points {
            slope_err = slope_err.max((pt.coords[1] - start.x[0] - slope * pt.coords[0]).abs());
            let at = FourVector::tx(pt.coords[0], pt.coords[1]);
            q_max = q_max.max(f.polar(&at).unwrap().q.abs());
            let j = f.current(&at);
            j_err = j_err.max(
                (j.t - 2.0 * c2 * w)
                    .abs()
                    .max((j.x[0] - 2.0 * c2 * p).abs())
                    / (2.0 * c2 * w),
            );
        }
    }
    let pass = slope_err <= 1e-8 && q_max <= 1e-12 * f.mass() && j_err <= 1e-13;
    outcome(pass, format!("|x − x₀ − (p/ω)t| ≤ {slope_err:.1e}, |Q| ≤ {q_max:.1e}, j^μ relative error {j_err:.1e}"))
}

fn negative_density() -> Outcome {
    let file = load("two_mode.json");
    let f = rel_field("two_mode.json");
    let [a, b] = file.run.t_range.unwrap();
    let n_t = file.run.n_t.unwrap();
    let times: Vec<f64> = (0..n_t)
        .map(|i| a + (b - a) * i as f64 / (n_t - 1) as f64)
        .collect();
    let minima = scan_negative_density(&f, &times, file.run.grid.unwrap()).unwrap();
    let worst = minima
        .iter()
        .map(|m| (m.j0 + 4.0).abs())
        .fold(0.0, f64::max);
    let w: Vec<f64> = f.modes().iter().map(|m| m.frequency()).collect();
    let pass = worst <= 1e-6 && (w[0] - 1.0).abs() < 1e-12 && (w[1] - 10.0).abs() < 1e-12;
    outcome(
        pass,
        format!(
            "min j⁰ = {:.9} at every scanned t (|Δ| ≤ {worst:.1e}, ω = {:?})",
            minima[0].j0, w
        ),
    )
}

fn s_history(w: &ScenarioWindow, file: &ScenarioFile, record: Record) -> Trajectory {
    let start = &file.run.starts.as_ref().unwrap()[0];
    integrate_rel(
        w.field(),
        &FourVector::tx(start[0], start[1]),
        &IntegratorConfig::default(),
        &TraceRequest::span(file.run.span.unwrap())
            .watch(Hyperplane::any(w.t1()))
            .turning_points()
            .record(record),
    )
    .unwrap()
}

fn backflow_anatomy() -> Outcome {
    let (w, file) = window("prediction.json");
    let f = w.field();
    let traj = s_history(&w, &file, Record::Every(1e-3));
    let dirs: Vec<i8> = traj
        .crossings()
        .filter_map(|e| e.crossing_direction())
        .collect();
    let tps: Vec<_> = traj.turning_points().collect();
    let tp_worst = tps
        .iter()
        .map(|e| {
            let p = FourVector::tx(e.coords[0], e.coords[1]);
            f.current(&p).t.abs() / (2.0 * f.max_frequency() * f.psi(&p).norm_sqr())
        })
        .fold(0.0, f64::max);
    let m2 = f.mass().powi(2);
    let mut superluminal = 0;
    let mut meff2_max = f64::NEG_INFINITY;
    for p in traj
        .points
        .iter()
        .filter(|p| p.speed_ratio.is_some_and(|v| v > 1.0))
    {
        superluminal += 1;
        meff2_max = meff2_max.max(
            f.polar(&FourVector::tx(p.coords[0], p.coords[1]))
                .unwrap()
                .meff2,
        );
    }
    let pass = dirs == [1, -1, 1]
        && tps.len() >= 2
        && tp_worst <= 1e-8
        && superluminal > 0
        && meff2_max < 1e-6 * m2;
    outcome(
        pass,
        format!(
            "t₁ crossings {dirs:?}, {} turning points (|j⁰|/scale ≤ {tp_worst:.1e}), {superluminal} superluminal samples with max m²_eff = {meff2_max:.3e}",
            tps.len()
        ),
    )
}

fn prediction() -> Outcome {
    let (w, file) = window("prediction.json");
    let (grid, n, bins, seed) = (
        file.run.grid.unwrap(),
        file.run.n.unwrap(),
        file.run.bins.unwrap(),
        file.run.seed.unwrap(),
    );
    let clock = Instant::now();
    let c = predict_density(&w, grid, &PredictConfig::default()).unwrap();
    let mc = mc_first_crossing(&w, n, seed, &PredictConfig::default()).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let l1 = mc.l1_to_prediction(&c, bins).unwrap();
    let excluded = mc.excluded_fraction(&c);
    let pass = grid == 2000
        && n >= 100_000
        && (0.99..=1.01).contains(&c.flux)
        && l1 <= 0.05
        && excluded <= 0.005
        && secs <= 600.0;
    outcome(
        pass,
        format!("flux = {:.6} at N = {grid}; MC L1 = {l1:.4} (n = {n}, {bins} bins); Σ± mass = {excluded:.4}; {secs:.1} s", c.flux),
    )
}

struct Scaled<'a, L> {
    inner: RelVelocity<'a>,
    lambda: L,
}

impl<L: Fn(&[f64; 2]) -> f64 + Sync> VectorField<2> for Scaled<'_, L> {
    fn velocity(&self, s: f64, y: &[f64; 2]) -> Result<[f64; 2], NodeProximity> {
        let u = self.inner.velocity(s, y)?;
        let k = (self.lambda)(y);
        Ok([u[0] * k, u[1] * k])
    }
}

fn reparameterization() -> Outcome {
    let (w, file) = window("prediction.json");
    let f = w.field();
    let start = &file.run.starts.as_ref().unwrap()[0];
    let cfg = IntegratorConfig::default();
    let levels: Vec<f64> = (1..=10)
        .map(|i| w.t0() + (w.t1() - w.t0()) * (i as f64 - 0.5) / 9.5)
        .collect();
    let mut req = TraceRequest::span(100.0)
        .stop_at(Hyperplane::forward(w.t1() + 0.2))
        .record(Record::Nothing);
    for &l in &levels {
        req = req.watch(Hyperplane::any(l));
    }
    let crossings = |lambda: &(dyn Fn(&[f64; 2]) -> f64 + Sync)| -> Vec<(f64, i8, f64)> {
        let v = Scaled {
            inner: RelVelocity::new(f, cfg.node_threshold),
            lambda,
        };
        integrate_curve(&v, 0.0, [start[0], start[1]], &cfg, &req, true)
            .unwrap()
            .events
            .iter()
            .filter_map(|e| match e.kind {
                EventKind::HyperplaneCrossing { level, direction } => {
                    Some((level, direction, e.coords[1]))
                }
                _ => None,
            })
            .collect()
    };
    let base = crossings(&|_| 1.0);
    let l = f.box_length();
    let mut worst = 0.0f64;
    let mut consistent = base.len() >= levels.len();
    for scaled in [
        crossings(&|_| 2.0),
        crossings(&|y| 1.0 + 0.1 * (TAU * y[1] / l).sin()),
    ] {
        consistent &= scaled.len() == base.len();
        for (a, b) in base.iter().zip(&scaled) {
            consistent &= a.0 == b.0 && a.1 == b.1;
            worst = worst.max((a.2 - b.2).abs());
        }
    }
    let pass = consistent && worst <= 1e-6;
    outcome(
        pass,
        format!(
            "λ = 2 and 1 + 0.1 sin(2πx/L): {} crossings of 10 planes agree within {worst:.1e}",
            base.len()
        ),
    )
}

/// Fourth-order central second difference at sample `i`.
fn second_difference(points: &[TrajectoryPoint], i: usize, axis: usize) -> Option<f64> {
    if i < 2 || i + 2 >= points.len() {
        return None;
    }
    let h = points[i + 1].param - points[i].param;
    if (i - 2..i + 2).any(|a| (points[a + 1].param - points[a].param - h).abs() > 1e-9 * h.abs()) {
        return None;
    }
    let c = |a: usize| points[a].coords[axis];
    Some((-c(i + 2) + 16.0 * c(i + 1) - 30.0 * c(i) + 16.0 * c(i - 1) - c(i - 2)) / (12.0 * h * h))
}

fn newton() -> Outcome {
    let (w, file) = window("prediction.json");
    let f = w.field();
    let m = f.mass();
    let traj = s_history(&w, &file, Record::Every(2e-4));
    let d = 1e-5;
    let q = |t: f64, x: f64| f.polar(&FourVector::tx(t, x)).ok().map(|p| p.q);
    let mut rel_worst = 0.0f64;
    for (i, p) in traj.points.iter().enumerate() {
        let (t, x) = (p.coords[0], p.coords[1]);
        let (Some(a), Some(b), Some(c), Some(e)) =
            (q(t + d, x), q(t - d, x), q(t, x + d), q(t, x - d))
        else {
            continue;
        };
        let raised = [(a - b) / (2.0 * d), -(c - e) / (2.0 * d)];
        for mu in 0..2 {
            if let Some(acc) = second_difference(&traj.points, i, mu) {
                let acc = m * acc;
                rel_worst =
                    rel_worst.max((acc - raised[mu]).abs() / (acc.abs() + raised[mu].abs() + m));
            }
        }
    }
    let (field, t0, t1, file) = nonrel("interference.json");
    let m = field.mass();
    let peak = field.density_bound(t0);
    let mut nonrel_worst = 0.0f64;
    for start in file.run.starts.as_ref().unwrap() {
        let traj = integrate_nonrel(
            &field,
            start,
            (t0, t1),
            &IntegratorConfig::default(),
            Record::Every(1e-3),
        )
        .unwrap();
        for (i, p) in traj.points.iter().enumerate() {
            let (t, x) = (p.param, p.coords[0]);
            if field.density(&[x], t) < 1e-6 * peak {
                continue;
            }
            let Some(acc) = second_difference(&traj.points, i, 0) else {
                continue;
            };
            let q = |x: f64| field.polar(&[x], t).unwrap().q;
            let dq = (q(x + d) - q(x - d)) / (2.0 * d);
            nonrel_worst = nonrel_worst.max((m * acc + dq).abs() / (m * acc.abs() + dq.abs() + m));
        }
    }
    let pass = rel_worst <= 1e-3 && nonrel_worst <= 1e-3;
    outcome(
        pass,
        format!("relativistic {rel_worst:.1e}, nonrelativistic {nonrel_worst:.1e} (≤ 1e-3)"),
    )
}

fn pde_residuals() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for name in ["single_mode.json", "two_mode.json", "prediction.json"] {
        let f = rel_field(name);
        let l = f.box_length();
        let pts: Vec<FourVector> = (0..100)
            .map(|i| FourVector::tx(4.0 * weyl(i, 0) - 2.0, l * weyl(i, 1)))
            .collect();
        let max_psi = pts.iter().map(|p| f.psi(p).norm()).fold(0.0, f64::max);
        let (h, mut kg) = (1e-3, 0.0f64);
        let (hc, mut cons) = (1e-4, 0.0f64);
        for p in &pts {
            let at = |dt: f64, dx: f64| FourVector::tx(p.t + dt, p.x[0] + dx);
            let psi = f.psi(p);
            let box_psi = (f.psi(&at(h, 0.0)) - psi * 2.0 + f.psi(&at(-h, 0.0))) / (h * h)
                - (f.psi(&at(0.0, h)) - psi * 2.0 + f.psi(&at(0.0, -h))) / (h * h);
            kg = kg.max((box_psi + psi * f.mass().powi(2)).norm() / max_psi);
            let div = (f.current(&at(hc, 0.0)).t - f.current(&at(-hc, 0.0)).t) / (2.0 * hc)
                + (f.current(&at(0.0, hc)).x[0] - f.current(&at(0.0, -hc)).x[0]) / (2.0 * hc);
            cons = cons.max(div.abs() / (f.current(p).t.abs() + f.mass() * psi.norm_sqr()));
        }
        pass &= kg <= 1e-4 && cons <= 1e-5;
        notes.push(format!("{name}: KG {kg:.1e}, ∂·j {cons:.1e}"));
    }
    let (field, _, _) = two_particle("two_particle.json");
    let mut cons = 0.0f64;
    let hc = 1e-4;
    for i in 0..100 {
        let x = [
            FourVector::tx(4.0 * weyl(i, 0) - 2.0, 6.0 * weyl(i, 1)),
            FourVector::tx(4.0 * weyl(i, 2) - 2.0, 6.0 * weyl(i, 3)),
        ];
        let density = field.psi(&x[0], &x[1]).norm_sqr();
        let base = field.currents(&x[0], &x[1]);
        for a in 0..2 {
            let mut div = 0.0;
            for mu in 0..2 {
                let shifted = |step: f64| {
                    let mut y = x;
                    y[a] = if mu == 0 {
                        FourVector::tx(y[a].t + step, y[a].x[0])
                    } else {
                        FourVector::tx(y[a].t, y[a].x[0] + step)
                    };
                    field.currents(&y[0], &y[1])[a].component(mu)
                };
                div += (shifted(hc) - shifted(-hc)) / (2.0 * hc);
            }
            cons = cons.max(div.abs() / (base[a].t.abs() + field.mass() * density));
        }
    }
    pass &= cons <= 1e-5;
    notes.push(format!("two_particle.json: ∂_a·j_a {cons:.1e}"));
    let mut nonrel_worst = 0.0f64;
    let fields: Vec<NonRelField> = vec![
        nonrel("interference.json").0,
        measurement("measurement.json").0.field().clone(),
    ];
    for f in &fields {
        let dim = f.config_dim();
        for i in 0..100 {
            let t = 3.0 * weyl(i, 0);
            let x: Vec<f64> = (0..dim).map(|k| 12.0 * weyl(i, k + 1) - 6.0).collect();
            let flux = |x: &[f64], k: usize| {
                f.density(x, t) * f.polar(x, t).map(|p| p.velocity[k]).unwrap_or(0.0)
            };
            let mut r = (f.density(&x, t + hc) - f.density(&x, t - hc)) / (2.0 * hc);
            for k in 0..dim {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[k] += hc;
                b[k] -= hc;
                r += (flux(&a, k) - flux(&b, k)) / (2.0 * hc);
            }
            nonrel_worst = nonrel_worst.max(r.abs());
        }
    }
    pass &= nonrel_worst <= 1e-5;
    notes.push(format!("nonrel ∂ρ + ∂(ρv) {nonrel_worst:.1e}"));
    outcome(pass, notes.join("; "))
}

fn particle_one_shift(
    field: &TwoParticleField,
    starts: [FourVector; 2],
    span: f64,
    moved: f64,
) -> f64 {
    let cfg = IntegratorConfig::default();
    let run = |s: [FourVector; 2]| {
        integrate_two_particle(field, s, &cfg, span, Record::Every(0.05)).unwrap()
    };
    let a = run(starts);
    let b = run([starts[0], FourVector::tx(starts[1].t, moved)]);
    a[0].points
        .iter()
        .zip(&b[0].points)
        .map(|(p, q)| {
            (p.coords[0] - q.coords[0])
                .abs()
                .max((p.coords[1] - q.coords[1]).abs())
        })
        .fold(0.0, f64::max)
}

fn nonlocality() -> Outcome {
    let moves = [3.5, 4.5, 5.0];
    let (entangled, starts, span) = two_particle("two_particle.json");
    let shift = moves
        .iter()
        .map(|&m| particle_one_shift(&entangled, starts, span, m))
        .fold(0.0, f64::max);
    let (product, starts, span) = two_particle("two_particle_product.json");
    let control = moves
        .iter()
        .map(|&m| particle_one_shift(&product, starts, span, m))
        .fold(0.0, f64::max);
    outcome(
        shift > 1e-3 && control <= 1e-8,
        format!("entangled shift {shift:.3} (> 1e-3), product shift {control:.1e} (≤ 1e-8)"),
    )
}

fn run_cli(args: &[&str]) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_pilotwave"))
        .args(args)
        .output()
        .unwrap();
    (out.status.success(), out.stdout)
}

fn snapshot(dir: &Path) -> Snapshot {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let s = |name: &str| scenario_path(name).display().to_string();
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "field",
            vec!["field".into(), "--scenario".into(), s("two_mode.json")],
        ),
        (
            "trace",
            vec!["trace".into(), "--scenario".into(), s("prediction.json")],
        ),
        (
            "classify",
            vec![
                "classify".into(),
                "--scenario".into(),
                s("prediction.json"),
                "--grid".into(),
                "500".into(),
            ],
        ),
        (
            "ensemble",
            vec![
                "ensemble".into(),
                "--scenario".into(),
                s("prediction.json"),
                "--n".into(),
                "3000".into(),
                "--grid".into(),
                "500".into(),
            ],
        ),
        (
            "ensemble",
            vec![
                "ensemble".into(),
                "--scenario".into(),
                s("interference.json"),
                "--n".into(),
                "3000".into(),
            ],
        ),
        (
            "measure",
            vec![
                "measure".into(),
                "--scenario".into(),
                s("measurement.json"),
                "--n".into(),
                "1000".into(),
            ],
        ),
        ("search-scenario", vec!["search-scenario".into()]),
    ];
    let mut identical = 0;
    let mut failures = Vec::new();
    for (name, args) in &commands {
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let runs: Vec<(bool, Vec<u8>, Snapshot)> = dirs
            .iter()
            .map(|d| {
                let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
                let out = d.path().display().to_string();
                a.extend(["--out", &out, "--quiet"]);
                let (ok, stdout) = run_cli(&a);
                if *name == "trace" {
                    let csvs: Vec<String> = snapshot(d.path())
                        .into_iter()
                        .filter(|(f, _)| f.starts_with("trajectory_"))
                        .map(|(f, _)| d.path().join(f).display().to_string())
                        .collect();
                    let plot_dir = d.path().join("plots").display().to_string();
                    let mut p = vec!["plot", "--out", &plot_dir, "--quiet"];
                    p.extend(csvs.iter().map(String::as_str));
                    let (plotted, _) = run_cli(&p);
                    let mut files = snapshot(d.path());
                    if plotted {
                        files.extend(snapshot(&d.path().join("plots")));
                    }
                    return (ok && plotted, stdout, files);
                }
                (ok, stdout, snapshot(d.path()))
            })
            .collect();
        let same = runs[0].0 && runs[1].0 && runs[0] == runs[1] && !runs[0].2.is_empty();
        if same {
            identical += 1;
        } else {
            failures.push(*name);
        }
    }
    let pass = failures.is_empty();
    outcome(pass, format!("{identical}/{} invocations byte-identical (field, trace + plot, classify, ensemble ×2, measure, search-scenario){}", commands.len(), if pass { String::new() } else { format!("; differing: {failures:?}") }))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, Criterion); 12] = [
        ("equivariance", equivariance),
        ("Born rule via channels", born_rule),
        ("effective collapse", collapse),
        ("single-mode exactness", single_mode),
        ("negative density exists", negative_density),
        ("backflow trajectory anatomy", backflow_anatomy),
        ("headline prediction self-consistency", prediction),
        ("reparameterization invariance", reparameterization),
        ("quantum Newton residuals", newton),
        ("PDE residuals", pde_residuals),
        ("nonlocality witness", nonlocality),
        ("CLI determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let r = check();
        println!(
            "[{}] {:>2}. {name}: {} ({:.1} s)",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            r.detail,
            clock.elapsed().as_secs_f64()
        );
        if !r.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
