//! Measurable detection density on a hyperplane t = t₁ for Klein-Gordon
//! fields whose j⁰ turns negative after a positive preparation at t₀.
//!
//! Each point of the hyperplane is labelled:
//!
//! * Σ⁻: j⁰(x, t₁) < 0;
//! * Σ⁺: j⁰ ≥ 0, but tracing the trajectory backwards from (t₁, x) returns to
//!   t₁ before reaching t₀, so an earlier crossing of t₁ already happened;
//! * Σ′: every other point, where the backward trace reaches t₀ first.
//!
//! The predicted density is j⁰ on Σ′ and zero on Σ⁺ ∪ Σ⁻.
//! [`mc_first_crossing`] checks the prediction by sampling the t₀ density and
//! recording where each trajectory first meets t₁.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::{FourVector, ModeSpec, Normalization, RelField};
use crate::guidance::{
    integrate_rel, EventKind, Hyperplane, IntegratorConfig, Record, Termination, TraceRequest,
};
use crate::numerics::{self, Histogram};

/// j⁰ may dip below zero by this fraction of its box mean and still count as
/// nonnegative.
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;
/// Allowed deviation of ∫_Σ′ j⁰ dx from the total charge.
pub const FLUX_TOLERANCE: f64 = 0.01;
/// Fraction of samples allowed to end at nodes.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

/// j⁰(t, x) of a 1+1 dimensional field.
pub fn density(field: &RelField, t: f64, x: f64) -> f64 {
    field.current(&FourVector::tx(t, x)).t
}

/// Minimum points per box needed to resolve every mode wavelength eight times.
pub fn min_grid_points(field: &RelField) -> usize {
    let per_box = field.max_momentum() * field.box_length() / TAU;
    (8.0 * per_box).ceil().max(8.0) as usize
}

fn require_1d(field: &RelField) -> Result<()> {
    if field.spatial_dim() != 1 {
        return Err(Error::InvalidInput(format!(
            "hyperplane analysis needs one spatial dimension, field has {}",
            field.spatial_dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMinimum {
    pub t: f64,
    pub x: f64,
    pub j0: f64,
}

// Periodic grid-local minima of j⁰(t, ·), each refined by parabolic search.
fn slice_minima(field: &RelField, t: f64, n_x: usize) -> Vec<DensityMinimum> {
    let l = field.box_length();
    let dx = l / n_x as f64;
    let values: Vec<f64> = (0..n_x).map(|i| density(field, t, i as f64 * dx)).collect();
    let mut out = Vec::new();
    for i in 0..n_x {
        let prev = values[(i + n_x - 1) % n_x];
        let next = values[(i + 1) % n_x];
        if values[i] <= prev && values[i] < next {
            let x = i as f64 * dx;
            let (xm, jm) = numerics::minimize(|x| density(field, t, x), x - dx, x + dx, 1e-12 * l);
            let (xm, jm) = if jm <= values[i] {
                (xm, jm)
            } else {
                (x, values[i])
            };
            out.push(DensityMinimum {
                t,
                x: xm.rem_euclid(l),
                j0: jm,
            });
        }
    }
    out
}

/// Global minimum of j⁰(t, ·) over the box.
pub fn slice_minimum(field: &RelField, t: f64, n_x: usize) -> DensityMinimum {
    slice_minima(field, t, n_x.max(3))
        .into_iter()
        .min_by(|a, b| a.j0.total_cmp(&b.j0))
        .unwrap_or(DensityMinimum {
            t,
            x: 0.0,
            j0: density(field, t, 0.0),
        })
}

/// All spatially local minima of j⁰ with negative value on the given time
/// slices.
pub fn scan_negative_density(
    field: &RelField,
    times: &[f64],
    n_x: usize,
) -> Result<Vec<DensityMinimum>> {
    require_1d(field)?;
    let need = min_grid_points(field);
    if n_x < need {
        return Err(Error::InvalidInput(format!(
            "grid of {n_x} points is too coarse, need at least {need}"
        )));
    }
    Ok(times
        .iter()
        .flat_map(|&t| slice_minima(field, t, n_x))
        .filter(|m| m.j0 < 0.0)
        .collect())
}

/// Preparation time t₀, measurement onset t₁ and the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioWindow {
    field: RelField,
    t0: f64,
    t1: f64,
}

impl ScenarioWindow {
    pub fn new(field: RelField, t0: f64, t1: f64) -> Result<Self> {
        require_1d(&field)?;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::InvalidInput(format!(
                "need t0 < t1, got t0 = {t0}, t1 = {t1}"
            )));
        }
        Ok(Self { field, t0, t1 })
    }

    pub fn field(&self) -> &RelField {
        &self.field
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub t: f64,
    pub min_j0: f64,
    pub x_at_min: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks j⁰(·, t) ≥ −tolerance on a fine grid with refined minima.
pub fn verify_density_at(field: &RelField, t: f64) -> WindowReport {
    let n = (4 * min_grid_points(field)).max(4096);
    let m = slice_minimum(field, t, n);
    let tolerance = POSITIVITY_TOLERANCE * field.mean_density();
    WindowReport {
        t,
        min_j0: m.j0,
        x_at_min: m.x,
        tolerance,
        pass: m.j0 >= -tolerance,
    }
}

/// The prediction's precondition: j⁰(·, t₀) ≥ 0.
pub fn verify_window(window: &ScenarioWindow) -> WindowReport {
    verify_density_at(&window.field, window.t0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SigmaLabel {
    SigmaPrime,
    SigmaPlus,
    SigmaMinus,
}

impl SigmaLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaLabel::SigmaPrime => "SigmaPrime",
            SigmaLabel::SigmaPlus => "SigmaPlus",
            SigmaLabel::SigmaMinus => "SigmaMinus",
        }
    }
}

/// Summary of the backward trace from (t₁, x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub t1_recrossings: usize,
    pub turning_points: usize,
    pub end_t: f64,
    pub end_x: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellClass {
    pub j0: f64,
    /// `None` marks an indeterminate cell (node or step-limit abort).
    pub label: Option<SigmaLabel>,
    /// Absent for Σ⁻ cells, which need no trace.
    pub trace: Option<TraceSummary>,
}

fn backward_request(window: &ScenarioWindow) -> TraceRequest {
    let dt = window.t1 - window.t0;
    TraceRequest::span(-(1e3 * dt + 1e3))
        .stop_at(Hyperplane::any(window.t0))
        .stop_at(Hyperplane::any(window.t1))
        .turning_points()
        .record(Record::Nothing)
}

/// Labels the hyperplane point (t₁, x).
pub fn classify_point(
    window: &ScenarioWindow,
    x: f64,
    cfg: &IntegratorConfig,
) -> Result<CellClass> {
    let j0 = density(&window.field, window.t1, x);
    if j0 < 0.0 {
        return Ok(CellClass {
            j0,
            label: Some(SigmaLabel::SigmaMinus),
            trace: None,
        });
    }
    let start = FourVector::tx(window.t1, x);
    let traj = match integrate_rel(&window.field, &start, cfg, &backward_request(window)) {
        Ok(traj) => traj,
        Err(Error::NodeProximity(_)) => {
            return Ok(CellClass {
                j0,
                label: None,
                trace: None,
            })
        }
        Err(e) => return Err(e),
    };
    let mut t1_recrossings = 0;
    let mut last_level = None;
    for e in &traj.events {
        if let EventKind::HyperplaneCrossing { level, .. } = e.kind {
            if level == window.t1 {
                t1_recrossings += 1;
            }
            last_level = Some(level);
        }
    }
    let label = match (traj.termination, last_level) {
        (Termination::ReachedHyperplane, Some(level)) if level == window.t1 => {
            Some(SigmaLabel::SigmaPlus)
        }
        (Termination::ReachedHyperplane, Some(_)) => Some(SigmaLabel::SigmaPrime),
        _ => None,
    };
    Ok(CellClass {
        j0,
        label,
        trace: Some(TraceSummary {
            t1_recrossings,
            turning_points: traj.turning_points().count(),
            end_t: traj.end_coords[0],
            end_x: traj.end_coords[1],
            termination: traj.termination,
        }),
    })
}

/// Full history of the trajectory through (t₁, x): traced back to t₀, then
/// re-integrated forward from there with every t₁ crossing and turning point
/// recorded, ending shortly after the curve returns to (t₁, x).
pub fn history_through(
    window: &ScenarioWindow,
    x: f64,
    cfg: &IntegratorConfig,
    record: Record,
) -> Result<crate::guidance::Trajectory> {
    let dt = window.t1 - window.t0;
    let back = integrate_rel(
        &window.field,
        &FourVector::tx(window.t1, x),
        cfg,
        &TraceRequest::span(-(1e3 * dt + 1e3))
            .stop_at(Hyperplane::any(window.t0))
            .record(Record::Nothing),
    )?;
    if back.termination != Termination::ReachedHyperplane {
        return Err(Error::InvalidInput(format!(
            "trajectory through x = {x} does not reach t0 ({:?})",
            back.termination
        )));
    }
    let span = 1.02 * back.end_param.abs();
    integrate_rel(
        &window.field,
        &FourVector::tx(window.t0, back.end_coords[1]),
        cfg,
        &TraceRequest::span(span)
            .watch(Hyperplane::any(window.t1))
            .turning_points()
            .record(record),
    )
}

/// A trajectory from t₀ that crosses t₁ forward, backward and forward again.
#[derive(Debug, Clone, PartialEq)]
pub struct SShapedHistory {
    /// Σ⁺ cell centre where the final crossing lands.
    pub x1: f64,
    /// Start position on t₀.
    pub x0: f64,
    pub trajectory: crate::guidance::Trajectory,
}

/// Among the Σ⁺ cells of `classification`, finds the history that starts on
/// t₀, shows crossing directions (+, −, +) with at least two turning points,
/// and dips deepest below t₁ between its last two crossings.
pub fn find_s_shaped(
    window: &ScenarioWindow,
    classification: &SigmaClassification,
    cfg: &IntegratorConfig,
) -> Option<SShapedHistory> {
    let mut best: Option<(f64, SShapedHistory)> = None;
    for (cell, &x) in classification.cells.iter().zip(&classification.x) {
        if cell.label != Some(SigmaLabel::SigmaPlus) {
            continue;
        }
        let Ok(traj) = history_through(window, x, cfg, Record::Steps) else {
            continue;
        };
        let crossings: Vec<&crate::guidance::Event> = traj.crossings().collect();
        let dirs: Vec<i8> = crossings
            .iter()
            .filter_map(|e| e.crossing_direction())
            .collect();
        if !dirs.starts_with(&[1, -1, 1]) || traj.turning_points().count() < 2 {
            continue;
        }
        let (from, to) = (crossings[1].param, crossings[2].param);
        let dip = traj
            .turning_points()
            .filter(|e| e.param > from && e.param < to)
            .map(|e| window.t1 - e.coords[0])
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(d, _)| dip > *d) {
            let x0 = traj.start().map(|p| p.coords[1]).unwrap_or(f64::NAN);
            best = Some((
                dip,
                SShapedHistory {
                    x1: x,
                    x0,
                    trajectory: traj,
                },
            ));
        }
    }
    best.map(|(_, h)| h)
}

/// Labels, currents and predicted density on the cell centres of a uniform
/// grid over the box at t₁.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaClassification {
    pub t1: f64,
    pub box_length: f64,
    pub cell_width: f64,
    pub x: Vec<f64>,
    pub cells: Vec<CellClass>,
    pub density: Vec<f64>,
    /// ∫_Σ′ j⁰ dx.
    pub flux: f64,
    /// ∫_box j⁰(x, t₀) dx.
    pub initial_charge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelCounts {
    pub sigma_prime: usize,
    pub sigma_plus: usize,
    pub sigma_minus: usize,
    pub indeterminate: usize,
}

impl SigmaClassification {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Option<SigmaLabel>> + '_ {
        self.cells.iter().map(|c| c.label)
    }

    pub fn counts(&self) -> LabelCounts {
        let mut c = LabelCounts::default();
        for label in self.labels() {
            match label {
                Some(SigmaLabel::SigmaPrime) => c.sigma_prime += 1,
                Some(SigmaLabel::SigmaPlus) => c.sigma_plus += 1,
                Some(SigmaLabel::SigmaMinus) => c.sigma_minus += 1,
                None => c.indeterminate += 1,
            }
        }
        c
    }

    /// Σ ρ Δx.
    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_width
    }

    /// Cell index containing `x` (taken modulo the box).
    pub fn cell_of(&self, x: f64) -> usize {
        let u = x.rem_euclid(self.box_length) / self.cell_width;
        (u as usize).min(self.len() - 1)
    }

    /// Predicted probability per equal-width bin over the box. `bins` must
    /// divide the number of cells.
    pub fn bin_masses(&self, bins: usize) -> Result<Vec<f64>> {
        if bins == 0 || !self.len().is_multiple_of(bins) {
            return Err(Error::InvalidInput(format!(
                "{bins} bins do not divide {} cells",
                self.len()
            )));
        }
        let per = self.len() / bins;
        Ok(self
            .density
            .chunks(per)
            .map(|c| c.iter().sum::<f64>() * self.cell_width)
            .collect())
    }

    /// The density a conventional reading would offer: j⁰ clipped at zero and
    /// renormalised to unit mass.
    pub fn clipped_current_density(&self) -> Vec<f64> {
        let clipped: Vec<f64> = self.cells.iter().map(|c| c.j0.max(0.0)).collect();
        let mass = clipped.iter().sum::<f64>() * self.cell_width;
        clipped.iter().map(|v| v / mass).collect()
    }

    /// Σ |ρ_a − ρ_b| Δx for two densities on this grid.
    pub fn l1_mass(&self, a: &[f64], b: &[f64]) -> f64 {
        numerics::l1_distance(a, b) * self.cell_width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictConfig {
    pub integrator: IntegratorConfig,
    pub exec: Exec,
}

/// Classifies `n_grid` cell centres and assembles the measurable density.
pub fn predict_density(
    window: &ScenarioWindow,
    n_grid: usize,
    cfg: &PredictConfig,
) -> Result<SigmaClassification> {
    if n_grid == 0 {
        return Err(Error::InvalidInput(
            "grid must have at least one cell".into(),
        ));
    }
    let report = verify_window(window);
    if !report.pass {
        return Err(Error::PreconditionViolated {
            min_j0: report.min_j0,
            x: report.x_at_min,
            tolerance: report.tolerance,
        });
    }
    let l = window.field.box_length();
    let dx = l / n_grid as f64;
    let xs: Vec<f64> = (0..n_grid).map(|i| (i as f64 + 0.5) * dx).collect();
    let cells = cfg
        .exec
        .map_indexed(n_grid, |i| classify_point(window, xs[i], &cfg.integrator))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let density: Vec<f64> = cells
        .iter()
        .map(|c| match c.label {
            Some(SigmaLabel::SigmaPrime) => c.j0,
            _ => 0.0,
        })
        .collect();
    let flux = density.iter().sum::<f64>() * dx;
    Ok(SigmaClassification {
        t1: window.t1,
        box_length: l,
        cell_width: dx,
        x: xs,
        cells,
        density,
        flux,
        initial_charge: window.field.charge(),
    })
}

/// First arrival positions at t₁ of trajectories sampled from j⁰(·, t₀).
#[derive(Debug, Clone, PartialEq)]
pub struct FirstCrossings {
    pub box_length: f64,
    /// Arrival positions reduced to [0, L).
    pub positions: Vec<f64>,
    pub node_aborts: usize,
    pub unfinished: usize,
    pub samples: usize,
}

impl FirstCrossings {
    pub fn histogram(&self, bins: usize) -> Histogram {
        Histogram::from_samples(0.0, self.box_length, bins, self.positions.iter().copied())
    }

    /// Fraction of arrivals landing in Σ⁺ ∪ Σ⁻ cells of `classification`.
    pub fn excluded_fraction(&self, classification: &SigmaClassification) -> f64 {
        let hits = self
            .positions
            .iter()
            .filter(|&&x| {
                matches!(
                    classification.cells[classification.cell_of(x)].label,
                    Some(SigmaLabel::SigmaPlus | SigmaLabel::SigmaMinus)
                )
            })
            .count();
        hits as f64 / self.positions.len().max(1) as f64
    }

    /// L1 distance between the arrival histogram and the predicted bin masses.
    pub fn l1_to_prediction(
        &self,
        classification: &SigmaClassification,
        bins: usize,
    ) -> Result<f64> {
        let predicted = classification.bin_masses(bins)?;
        let observed = self.histogram(bins).masses();
        Ok(numerics::l1_distance(&observed, &predicted))
    }
}

fn sample_stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Rejection sample of x from j⁰(·, t₀) (assumed nonnegative).
pub fn sample_initial_positions(
    window: &ScenarioWindow,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Vec<f64> {
    let field = &window.field;
    let bound = field.density_bound();
    let l = field.box_length();
    exec.map_indexed(n, |i| {
        let mut rng = sample_stream(seed, i);
        loop {
            let x = rng.random::<f64>() * l;
            let u = rng.random::<f64>() * bound;
            if u < density(field, window.t0, x) {
                return x;
            }
        }
    })
}

/// Monte Carlo oracle: sample x₀ ~ j⁰(·, t₀), integrate forward in s and
/// record the position of the first crossing of t₁.
pub fn mc_first_crossing(
    window: &ScenarioWindow,
    n: usize,
    seed: u64,
    cfg: &PredictConfig,
) -> Result<FirstCrossings> {
    let report = verify_window(window);
    if !report.pass {
        return Err(Error::PreconditionViolated {
            min_j0: report.min_j0,
            x: report.x_at_min,
            tolerance: report.tolerance,
        });
    }
    let starts = sample_initial_positions(window, n, seed, cfg.exec);
    let dt = window.t1 - window.t0;
    let req = TraceRequest::span(1e3 * dt + 1e3)
        .stop_at(Hyperplane::any(window.t1))
        .record(Record::Nothing);
    let l = window.field.box_length();
    let outcomes = cfg.exec.map_indexed(n, |i| {
        let start = FourVector::tx(window.t0, starts[i]);
        match integrate_rel(&window.field, &start, &cfg.integrator, &req) {
            Ok(t) if t.termination == Termination::ReachedHyperplane => {
                Ok(t.end_coords[1].rem_euclid(l))
            }
            Ok(t) if t.termination == Termination::NodeAbort => Err(true),
            Err(Error::NodeProximity(_)) => Err(true),
            _ => Err(false),
        }
    });
    let mut out = FirstCrossings {
        box_length: l,
        positions: Vec::with_capacity(n),
        node_aborts: 0,
        unfinished: 0,
        samples: n,
    };
    for o in outcomes {
        match o {
            Ok(x) => out.positions.push(x),
            Err(true) => out.node_aborts += 1,
            Err(false) => out.unfinished += 1,
        }
    }
    if out.node_aborts as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::ExcessNodeAborts {
            aborted: out.node_aborts,
            total: n,
        });
    }
    if out.unfinished as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::StepLimitExceeded {
            failed: out.unfinished,
            total: n,
        });
    }
    Ok(out)
}

/// Parameters of the randomised search for a prediction scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub mass: f64,
    pub box_length: f64,
    pub min_modes: usize,
    pub max_modes: usize,
    pub max_wave_number: i64,
    pub min_amplitude: f64,
    pub t0: f64,
    pub t_max: f64,
    pub n_t: usize,
    /// Required depth of the later negative density, as a fraction of the mean.
    pub backflow_fraction: f64,
    pub max_attempts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            mass: 1.0,
            box_length: TAU,
            min_modes: 3,
            max_modes: 5,
            max_wave_number: 3,
            min_amplitude: 0.2,
            t0: 0.0,
            t_max: 3.0,
            n_t: 120,
            backflow_fraction: 0.1,
            max_attempts: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub modes: Vec<ModeSpec>,
    pub window: ScenarioWindow,
    pub attempt: usize,
    pub min_j0_t0: f64,
    /// Deepest negative density found, which fixes t₁.
    pub min_j0_t1: f64,
    pub x_at_min_t1: f64,
}

fn random_modes(cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Vec<ModeSpec> {
    let count = rng.random_range(cfg.min_modes..=cfg.max_modes);
    let mut ks: Vec<i64> = Vec::with_capacity(count);
    while ks.len() < count {
        let k = rng.random_range(-cfg.max_wave_number..=cfg.max_wave_number);
        if !ks.contains(&k) {
            ks.push(k);
        }
    }
    ks.into_iter()
        .map(|k| {
            let r = rng.random_range(cfg.min_amplitude..=1.0);
            let phase = rng.random::<f64>() * TAU;
            ModeSpec::new(Complex64::from_polar(r, phase), [k, 0, 0])
        })
        .collect()
}

/// Scans random small mode sets for j⁰(·, t₀) ≥ 0 together with a later
/// j⁰ < −fraction·mean. t₁ is the scanned time of deepest negative density.
/// The search is deterministic in `cfg.seed`.
pub fn search_prediction_scenario(cfg: &SearchConfig) -> Result<SearchOutcome> {
    if cfg.min_modes < 1
        || cfg.max_modes < cfg.min_modes
        || cfg.max_wave_number < 1
        || cfg.t_max <= cfg.t0
        || cfg.n_t == 0
    {
        return Err(Error::InvalidInput(
            "inconsistent search configuration".into(),
        ));
    }
    if (2 * cfg.max_wave_number + 1) < cfg.max_modes as i64 {
        return Err(Error::InvalidInput(
            "not enough distinct wave numbers".into(),
        ));
    }
    for attempt in 0..cfg.max_attempts {
        let mut rng = sample_stream(cfg.seed, attempt);
        let modes = random_modes(cfg, &mut rng);
        let field = RelField::new(
            cfg.mass,
            cfg.box_length,
            1,
            &modes,
            Normalization::UnitCharge,
        )?;
        let start = verify_density_at(&field, cfg.t0);
        if !start.pass {
            continue;
        }
        let n_x = (4 * min_grid_points(&field)).max(256);
        let threshold = -cfg.backflow_fraction * field.mean_density();
        let deepest = (1..=cfg.n_t)
            .map(|i| {
                let t = cfg.t0 + (cfg.t_max - cfg.t0) * i as f64 / cfg.n_t as f64;
                slice_minimum(&field, t, n_x)
            })
            .min_by(|a, b| a.j0.total_cmp(&b.j0))
            .expect("n_t > 0");
        if deepest.j0 < threshold {
            let window = ScenarioWindow::new(field, cfg.t0, deepest.t)?;
            return Ok(SearchOutcome {
                modes,
                window,
                attempt,
                min_j0_t0: start.min_j0,
                min_j0_t1: deepest.j0,
                x_at_min_t1: deepest.x,
            });
        }
    }
    Err(Error::SearchExhausted {
        attempts: cfg.max_attempts,
    })
}
