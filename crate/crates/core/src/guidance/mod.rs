//! Bohmian trajectories as integral curves of guidance velocity fields.
//!
//! Relativistic curves are parameterised by the scalar s with
//! dx^μ/ds = j^μ / (2m ψ*ψ); nonrelativistic curves by time with
//! dx/dt = ∇S/m. Both go through the same adaptive solver.

mod solver;

pub use solver::VectorField;

use crate::error::{Error, NodeProximity, Result};
use crate::field::nonrel::NonRelField;
use crate::field::two_particle::TwoParticleField;
use crate::field::{FourVector, RelField, DEFAULT_NODE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    pub max_steps: usize,
    /// Accuracy of located hyperplane crossings in the time coordinate.
    pub crossing_tolerance: f64,
    /// Relative node threshold, see [`DEFAULT_NODE_THRESHOLD`].
    pub node_threshold: f64,
    /// Upper bound on a single step in the curve parameter.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-9,
            abs_tolerance: 1e-11,
            max_steps: 1_000_000,
            crossing_tolerance: 1e-10,
            node_threshold: DEFAULT_NODE_THRESHOLD,
            max_step: f64::INFINITY,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rel: f64, abs: f64) -> Self {
        Self {
            rel_tolerance: rel,
            abs_tolerance: abs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tolerance", self.rel_tolerance),
            ("abs_tolerance", self.abs_tolerance),
            ("crossing_tolerance", self.crossing_tolerance),
            ("node_threshold", self.node_threshold),
            ("max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Which crossings of a constant-time hyperplane count, by the sign of dt/ds
/// at the crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Crossing {
    Any,
    Forward,
    Backward,
}

/// The hyperplane t = `level` (coordinate 0 of the curve).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperplane {
    pub level: f64,
    pub crossing: Crossing,
}

impl Hyperplane {
    pub fn any(level: f64) -> Self {
        Self {
            level,
            crossing: Crossing::Any,
        }
    }

    pub fn forward(level: f64) -> Self {
        Self {
            level,
            crossing: Crossing::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Record {
    /// Every accepted step.
    Steps,
    /// Uniformly spaced parameter values (steps are shortened to land on them).
    Every(f64),
    /// Only events and termination.
    Nothing,
}

/// What to integrate and what to watch for.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRequest {
    /// Signed parameter span; negative traces the curve backwards.
    pub param_span: f64,
    /// Hyperplanes that terminate the integration when crossed.
    pub stop_at: Vec<Hyperplane>,
    /// Hyperplanes whose crossings are recorded without stopping.
    pub watch: Vec<Hyperplane>,
    pub turning_points: bool,
    pub record: Record,
}

impl TraceRequest {
    pub fn span(param_span: f64) -> Self {
        Self {
            param_span,
            stop_at: Vec::new(),
            watch: Vec::new(),
            turning_points: false,
            record: Record::Steps,
        }
    }

    pub fn stop_at(mut self, plane: Hyperplane) -> Self {
        self.stop_at.push(plane);
        self
    }

    pub fn watch(mut self, plane: Hyperplane) -> Self {
        self.watch.push(plane);
        self
    }

    pub fn turning_points(mut self) -> Self {
        self.turning_points = true;
        self
    }

    pub fn record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// `direction` is the sign of dt/ds at the crossing.
    HyperplaneCrossing {
        level: f64,
        direction: i8,
    },
    /// dt/ds changes sign.
    TurningPoint,
    NodeProximity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub param: f64,
    pub coords: Vec<f64>,
}

impl Event {
    pub fn crossing_direction(&self) -> Option<i8> {
        match self.kind {
            EventKind::HyperplaneCrossing { direction, .. } => Some(direction),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedParamLimit,
    ReachedHyperplane,
    NodeAbort,
    StepLimitExceeded,
}

impl Termination {
    pub fn is_normal(self) -> bool {
        matches!(
            self,
            Termination::ReachedParamLimit | Termination::ReachedHyperplane
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub param: f64,
    pub coords: Vec<f64>,
    pub velocity: Vec<f64>,
    /// |dx/dt| for relativistic curves where dt/ds ≠ 0.
    pub speed_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub events: Vec<Event>,
    pub termination: Termination,
    /// Parameter value and coordinates at termination (available even when
    /// points are not recorded).
    pub end_param: f64,
    pub end_coords: Vec<f64>,
}

impl Trajectory {
    pub fn start(&self) -> Option<&TrajectoryPoint> {
        self.points.first()
    }

    pub fn crossings(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::HyperplaneCrossing { .. }))
    }

    pub fn turning_points(&self) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::TurningPoint)
    }
}

fn speed_ratio(v: &[f64]) -> Option<f64> {
    if v[0] == 0.0 {
        return None;
    }
    let spatial: f64 = v[1..].iter().map(|c| c * c).sum::<f64>().sqrt();
    Some(spatial / v[0].abs())
}

fn finish<const N: usize>(raw: solver::RawSolution<N>, relativistic: bool) -> Trajectory {
    let (end_param, end_coords) = (raw.end_param, raw.end.to_vec());
    let points = raw
        .points
        .into_iter()
        .map(|p| TrajectoryPoint {
            param: p.param,
            coords: p.y.to_vec(),
            velocity: p.v.to_vec(),
            speed_ratio: if relativistic {
                speed_ratio(&p.v)
            } else {
                None
            },
        })
        .collect();
    Trajectory {
        points,
        events: raw.events,
        termination: raw.termination,
        end_param,
        end_coords,
    }
}

/// Traces the integral curve of an arbitrary field through `y0`.
pub fn integrate_curve<const N: usize, F: VectorField<N>>(
    field: &F,
    s0: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    req: &TraceRequest,
    relativistic: bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !req.param_span.is_finite() {
        return Err(Error::InvalidInput("parameter span must be finite".into()));
    }
    let raw = solver::solve(field, s0, y0, cfg, req)?;
    let mut traj = finish(raw, relativistic);
    if matches!(req.record, Record::Nothing) {
        traj.points.clear();
    }
    Ok(traj)
}

/// dx^μ/ds = j^μ / (2m ψ*ψ) for a one-particle relativistic field.
#[derive(Debug, Clone, Copy)]
pub struct RelVelocity<'a> {
    field: &'a RelField,
    floor: f64,
}

impl<'a> RelVelocity<'a> {
    pub fn new(field: &'a RelField, node_threshold: f64) -> Self {
        Self {
            field,
            floor: field.node_floor(node_threshold),
        }
    }

    pub fn at(&self, p: &FourVector) -> std::result::Result<FourVector, NodeProximity> {
        let (psi, grad) = self.field.first_jet(p);
        let density = psi.norm_sqr();
        if !(density > self.floor) {
            return Err(NodeProximity {
                density,
                threshold: self.floor,
            });
        }
        let j = crate::field::current_from_jet(psi, &grad);
        Ok(j.scale(1.0 / (2.0 * self.field.mass() * density)))
    }
}

impl<const N: usize> VectorField<N> for RelVelocity<'_> {
    fn velocity(&self, _s: f64, y: &[f64; N]) -> std::result::Result<[f64; N], NodeProximity> {
        debug_assert_eq!(N, self.field.spatial_dim() + 1);
        let u = self.at(&FourVector::from_components(y))?;
        Ok(std::array::from_fn(|mu| u.component(mu)))
    }
}

/// Guidance 4-velocity j^μ / (2m|ψ|²).
pub fn velocity_rel(
    field: &RelField,
    point: &FourVector,
    node_threshold: f64,
) -> std::result::Result<FourVector, NodeProximity> {
    RelVelocity::new(field, node_threshold).at(point)
}

/// Integrates the relativistic guidance equation in s from `start`.
pub fn integrate_rel(
    field: &RelField,
    start: &FourVector,
    cfg: &IntegratorConfig,
    req: &TraceRequest,
) -> Result<Trajectory> {
    let v = RelVelocity::new(field, cfg.node_threshold);
    match field.spatial_dim() {
        1 => integrate_curve::<2, _>(&v, 0.0, [start.t, start.x[0]], cfg, req, true),
        2 => integrate_curve::<3, _>(&v, 0.0, [start.t, start.x[0], start.x[1]], cfg, req, true),
        _ => integrate_curve::<4, _>(
            &v,
            0.0,
            [start.t, start.x[0], start.x[1], start.x[2]],
            cfg,
            req,
            true,
        ),
    }
}

/// dx/dt = ∇S/m for a Schrödinger field; the curve parameter is time.
#[derive(Debug, Clone, Copy)]
pub struct NonRelVelocity<'a> {
    field: &'a NonRelField,
    threshold: f64,
}

impl<'a> NonRelVelocity<'a> {
    pub fn new(field: &'a NonRelField, node_threshold: f64) -> Self {
        Self {
            field,
            threshold: node_threshold,
        }
    }
}

impl<const N: usize> VectorField<N> for NonRelVelocity<'_> {
    fn velocity(&self, t: f64, y: &[f64; N]) -> std::result::Result<[f64; N], NodeProximity> {
        let polar = self.field.polar_with_threshold(y, t, self.threshold)?;
        Ok(std::array::from_fn(|i| polar.velocity[i]))
    }
}

/// Integrates a nonrelativistic trajectory from `x0` at `t_span.0` to `t_span.1`.
pub fn integrate_nonrel(
    field: &NonRelField,
    x0: &[f64],
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    record: Record,
) -> Result<Trajectory> {
    if x0.len() != field.config_dim() {
        return Err(Error::InvalidInput(format!(
            "start point has {} coordinates, field has {}",
            x0.len(),
            field.config_dim()
        )));
    }
    let v = NonRelVelocity::new(field, cfg.node_threshold);
    let req = TraceRequest::span(t_span.1 - t_span.0).record(record);
    match field.config_dim() {
        1 => integrate_curve::<1, _>(&v, t_span.0, [x0[0]], cfg, &req, false),
        _ => integrate_curve::<2, _>(&v, t_span.0, [x0[0], x0[1]], cfg, &req, false),
    }
}

/// Joint guidance of two particles in 1+1 dimensions, state (t₁, x₁, t₂, x₂).
#[derive(Debug, Clone, Copy)]
pub struct TwoParticleVelocity<'a> {
    field: &'a TwoParticleField,
    floor: f64,
}

impl<'a> TwoParticleVelocity<'a> {
    pub fn new(field: &'a TwoParticleField, node_threshold: f64) -> Self {
        Self {
            field,
            floor: field.node_floor(node_threshold),
        }
    }
}

impl VectorField<4> for TwoParticleVelocity<'_> {
    fn velocity(&self, _s: f64, y: &[f64; 4]) -> std::result::Result<[f64; 4], NodeProximity> {
        let (x1, x2) = (FourVector::tx(y[0], y[1]), FourVector::tx(y[2], y[3]));
        let psi = self.field.psi(&x1, &x2);
        let density = psi.norm_sqr();
        if !(density > self.floor) {
            return Err(NodeProximity {
                density,
                threshold: self.floor,
            });
        }
        let [j1, j2] = self.field.currents(&x1, &x2);
        let k = 1.0 / (2.0 * self.field.mass() * density);
        Ok([j1.t * k, j1.x[0] * k, j2.t * k, j2.x[0] * k])
    }
}

/// Integrates both world lines from starts that share the parameter value
/// s = 0 (the synchronisation is the caller's choice).
pub fn integrate_two_particle(
    field: &TwoParticleField,
    starts: [FourVector; 2],
    cfg: &IntegratorConfig,
    s_span: f64,
    record: Record,
) -> Result<[Trajectory; 2]> {
    let v = TwoParticleVelocity::new(field, cfg.node_threshold);
    let y0 = [starts[0].t, starts[0].x[0], starts[1].t, starts[1].x[0]];
    let joint = integrate_curve::<4, _>(
        &v,
        0.0,
        y0,
        cfg,
        &TraceRequest::span(s_span).record(record),
        true,
    )?;
    let split = |a: usize| -> Trajectory {
        let r = 2 * a..2 * a + 2;
        Trajectory {
            points: joint
                .points
                .iter()
                .map(|p| TrajectoryPoint {
                    param: p.param,
                    coords: p.coords[r.clone()].to_vec(),
                    velocity: p.velocity[r.clone()].to_vec(),
                    speed_ratio: speed_ratio(&p.velocity[r.clone()]),
                })
                .collect(),
            events: joint
                .events
                .iter()
                .map(|e| Event {
                    kind: e.kind,
                    param: e.param,
                    coords: e.coords[r.clone()].to_vec(),
                })
                .collect(),
            termination: joint.termination,
            end_param: joint.end_param,
            end_coords: joint.end_coords[r.clone()].to_vec(),
        }
    };
    Ok([split(0), split(1)])
}

/// Re-integrates from the end of `trajectory` with the parameter direction
/// reversed and returns the distance between the returned point and the
/// original start.
pub fn retrace_check<const N: usize, F: VectorField<N>>(
    field: &F,
    trajectory: &Trajectory,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    if !trajectory.termination.is_normal() {
        return Err(Error::InvalidInput(format!(
            "cannot retrace a trajectory that ended with {:?}",
            trajectory.termination
        )));
    }
    let start = trajectory
        .start()
        .ok_or_else(|| Error::InvalidInput("trajectory has no recorded start".into()))?;
    if trajectory.end_coords.len() != N {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let y_end: [f64; N] = std::array::from_fn(|i| trajectory.end_coords[i]);
    let req = TraceRequest::span(start.param - trajectory.end_param).record(Record::Nothing);
    let back = integrate_curve(field, trajectory.end_param, y_end, cfg, &req, false)?;
    if !back.termination.is_normal() {
        return Err(Error::InvalidInput(format!(
            "retrace ended with {:?}",
            back.termination
        )));
    }
    Ok(back
        .end_coords
        .iter()
        .zip(&start.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// [`retrace_check`] for a one-particle relativistic field.
pub fn retrace_check_rel(
    field: &RelField,
    trajectory: &Trajectory,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let v = RelVelocity::new(field, cfg.node_threshold);
    match field.spatial_dim() {
        1 => retrace_check::<2, _>(&v, trajectory, cfg),
        2 => retrace_check::<3, _>(&v, trajectory, cfg),
        _ => retrace_check::<4, _>(&v, trajectory, cfg),
    }
}
