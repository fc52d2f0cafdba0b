//! Ensemble experiments with Schrödinger-Gaussian fields: equilibrium
//! sampling, equivariance of |ψ|² under the guidance flow, and von Neumann
//! measurements whose pointer Gaussians drift apart.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::field::nonrel::{Channel, Gauss1D, NonRelField};
use crate::guidance::{integrate_nonrel, IntegratorConfig, Record, Termination, Trajectory};
use crate::numerics::{self, Histogram};

/// Sampling windows extend this many widths around every component.
pub const WINDOW_SIGMAS: f64 = 8.0;
/// Minimum probability the sampling window must hold.
pub const WINDOW_MASS: f64 = 1.0 - 1e-6;
/// Pointers count as separated once their centres are this many widths apart.
pub const SEPARATION_WIDTHS: f64 = 8.0;
/// Channel support half-width in pointer widths.
pub const SUPPORT_WIDTHS: f64 = 4.0;
pub const DEFAULT_OVERLAP_TOLERANCE: f64 = 1e-8;
pub const MAX_ABORT_FRACTION: f64 = 1e-3;
pub const MAX_UNRESOLVED_FRACTION: f64 = 1e-2;

fn stream(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Unweighted configuration samples at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub positions: Vec<Vec<f64>>,
    pub t: f64,
    pub seed: u64,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Coordinate `axis` of every sample.
    pub fn axis(&self, axis: usize) -> impl Iterator<Item = f64> + '_ {
        self.positions.iter().map(move |p| p[axis])
    }
}

/// Rejection sampling of |ψ(·, t)|² on the ±8σ envelope.
pub fn sample_density(
    field: &NonRelField,
    t: f64,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<Ensemble> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "ensemble size must be at least 1".into(),
        ));
    }
    let window = field.envelope(t, WINDOW_SIGMAS);
    let mass = field.window_mass(t, &window);
    if mass < WINDOW_MASS {
        return Err(Error::WindowTooSmall {
            mass,
            required: WINDOW_MASS,
        });
    }
    let bound = field.density_bound(t);
    let positions = exec.map_indexed(n, |i| {
        let mut rng = stream(seed, i);
        let mut x = vec![0.0; window.len()];
        loop {
            for (xi, &(lo, hi)) in x.iter_mut().zip(&window) {
                *xi = lo + (hi - lo) * rng.random::<f64>();
            }
            if rng.random::<f64>() * bound < field.density(&x, t) {
                return x;
            }
        }
    });
    Ok(Ensemble { positions, t, seed })
}

/// Outcome of pushing an ensemble through the guidance flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    /// Endpoints of trajectories that reached the final time.
    pub endpoints: Vec<Vec<f64>>,
    pub node_aborts: usize,
    pub step_failures: usize,
}

/// Integrates every ensemble member from `ensemble.t` to `t1`.
pub fn propagate(
    field: &NonRelField,
    ensemble: &Ensemble,
    t1: f64,
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<Propagated> {
    cfg.validate()?;
    let results = exec.map_indexed(ensemble.len(), |i| {
        match integrate_nonrel(
            field,
            &ensemble.positions[i],
            (ensemble.t, t1),
            cfg,
            Record::Nothing,
        ) {
            Ok(tr) if tr.termination == Termination::ReachedParamLimit => Ok(tr.end_coords),
            Ok(tr) if tr.termination == Termination::NodeAbort => Err(true),
            Err(Error::NodeProximity(_)) => Err(true),
            _ => Err(false),
        }
    });
    let mut out = Propagated {
        endpoints: Vec::with_capacity(ensemble.len()),
        node_aborts: 0,
        step_failures: 0,
    };
    for r in results {
        match r {
            Ok(x) => out.endpoints.push(x),
            Err(true) => out.node_aborts += 1,
            Err(false) => out.step_failures += 1,
        }
    }
    let n = ensemble.len();
    if out.node_aborts as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::ExcessNodeAborts {
            aborted: out.node_aborts,
            total: n,
        });
    }
    if out.step_failures as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::StepLimitExceeded {
            failed: out.step_failures,
            total: n,
        });
    }
    Ok(out)
}

/// Exact probability of each bin of `[lo, hi)` for a one-dimensional field.
pub fn exact_bin_masses(field: &NonRelField, t: f64, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let w = (hi - lo) / bins as f64;
    let sigma_min = field
        .components()
        .iter()
        .map(|c| c.factors[0].width_at(t, field.mass()))
        .fold(f64::INFINITY, f64::min);
    let k_max = field
        .components()
        .iter()
        .map(|c| (field.mass() * c.factors[0].velocity).abs())
        .fold(0.0, f64::max);
    let panels = ((w / sigma_min) * 4.0 + 2.0 * k_max * w)
        .ceil()
        .clamp(4.0, 4096.0) as usize;
    (0..bins)
        .map(|b| {
            let a = lo + b as f64 * w;
            numerics::integrate(|x| field.density(&[x], t), a, a + w, panels)
        })
        .collect()
}

/// Histogram of propagated endpoints at `t1` against the exact bin masses.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivarianceReport {
    pub histogram: Histogram,
    pub exact: Vec<f64>,
    pub l1: f64,
    pub node_aborts: usize,
    pub samples: usize,
}

/// Samples |ψ(·, t0)|², integrates to `t1` and compares the histogram with
/// |ψ(·, t1)|² on the ±8σ(t1) window. One-dimensional fields only.
#[allow(clippy::too_many_arguments)]
pub fn equivariance_report(
    field: &NonRelField,
    t0: f64,
    t1: f64,
    n: usize,
    bins: usize,
    seed: u64,
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<EquivarianceReport> {
    if field.config_dim() != 1 {
        return Err(Error::InvalidInput(
            "equivariance histograms need a one-dimensional field".into(),
        ));
    }
    if t1 < t0 || bins == 0 {
        return Err(Error::InvalidInput(format!(
            "need t1 ≥ t0 and bins > 0, got t0 = {t0}, t1 = {t1}, bins = {bins}"
        )));
    }
    let ensemble = sample_density(field, t0, n, seed, exec)?;
    let moved = if t1 > t0 {
        propagate(field, &ensemble, t1, cfg, exec)?
    } else {
        Propagated {
            endpoints: ensemble.positions.clone(),
            node_aborts: 0,
            step_failures: 0,
        }
    };
    let (lo, hi) = field.envelope(t1, WINDOW_SIGMAS)[0];
    let histogram = Histogram::from_samples(lo, hi, bins, moved.endpoints.iter().map(|x| x[0]));
    let exact = exact_bin_masses(field, t1, lo, hi, bins);
    let l1 = numerics::l1_distance(&histogram.masses(), &exact);
    Ok(EquivarianceReport {
        histogram,
        exact,
        l1,
        node_aborts: moved.node_aborts,
        samples: n,
    })
}

/// L1 distance between the propagated histogram and |ψ(·, t1)|².
pub fn equivariance_test(
    field: &NonRelField,
    t0: f64,
    t1: f64,
    n: usize,
    bins: usize,
    seed: u64,
) -> Result<f64> {
    Ok(equivariance_report(
        field,
        t0,
        t1,
        n,
        bins,
        seed,
        &IntegratorConfig::default(),
        Exec::default(),
    )?
    .l1)
}

/// ∫|χ_a||χ_b| dy for two free Gaussians at time `t`.
pub fn pointer_overlap(a: &Gauss1D, b: &Gauss1D, t: f64, mass: f64) -> f64 {
    let (sa, sb) = (a.width_at(t, mass), b.width_at(t, mass));
    let d = a.center_at(t) - b.center_at(t);
    let s2 = sa * sa + sb * sb;
    (2.0 * sa * sb / s2).sqrt() * (-d * d / (4.0 * s2)).exp()
}

fn pointers_separated(channels: &[Channel], t: f64, mass: f64, tolerance: f64) -> bool {
    channels.iter().enumerate().all(|(i, a)| {
        channels[i + 1..].iter().all(|b| {
            let (pa, pb) = (&a.pointer, &b.pointer);
            let gap = (pa.center_at(t) - pb.center_at(t)).abs();
            let widths = pa.width_at(t, mass).max(pb.width_at(t, mass));
            gap >= SEPARATION_WIDTHS * widths && pointer_overlap(pa, pb, t, mass) <= tolerance
        })
    })
}

/// System ⊗ pointer channels with drifting pointer Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScenario {
    field: NonRelField,
    final_time: f64,
    overlap_tolerance: f64,
    separation_time: Option<f64>,
}

impl MeasurementScenario {
    pub fn new(mass: f64, channels: Vec<Channel>, final_time: f64) -> Result<Self> {
        Self::with_overlap_tolerance(mass, channels, final_time, DEFAULT_OVERLAP_TOLERANCE)
    }

    pub fn with_overlap_tolerance(
        mass: f64,
        channels: Vec<Channel>,
        final_time: f64,
        overlap_tolerance: f64,
    ) -> Result<Self> {
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let field = NonRelField::measurement(mass, channels)?;
        let separation_time = Self::find_separation(&field, final_time, overlap_tolerance);
        Ok(Self {
            field,
            final_time,
            overlap_tolerance,
            separation_time,
        })
    }

    // Earliest time after which the pointers stay separated up to the final
    // time, located on a scan and refined by bisection.
    fn find_separation(field: &NonRelField, final_time: f64, tolerance: f64) -> Option<f64> {
        let channels = field.channels().expect("measurement field");
        let mass = field.mass();
        let ok = |t: f64| pointers_separated(channels, t, mass, tolerance);
        const SCAN: usize = 4096;
        let mut first = None;
        for i in (0..=SCAN).rev() {
            let t = final_time * i as f64 / SCAN as f64;
            if ok(t) {
                first = Some(i);
            } else {
                break;
            }
        }
        let i = first?;
        if i == 0 {
            return Some(0.0);
        }
        let (mut lo, mut hi) = (
            final_time * (i - 1) as f64 / SCAN as f64,
            final_time * i as f64 / SCAN as f64,
        );
        while hi - lo > 1e-12 * final_time.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }

    pub fn field(&self) -> &NonRelField {
        &self.field
    }

    pub fn channels(&self) -> &[Channel] {
        self.field.channels().expect("measurement field")
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn overlap_tolerance(&self) -> f64 {
        self.overlap_tolerance
    }

    pub fn separation_time(&self) -> Option<f64> {
        self.separation_time
    }

    /// Channels whose pointer support contains `y` at time `t`.
    pub fn channels_containing(&self, y: f64, t: f64) -> Vec<usize> {
        let m = self.field.mass();
        self.channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                (y - c.pointer.center_at(t)).abs() <= SUPPORT_WIDTHS * c.pointer.width_at(t, m)
            })
            .map(|(a, _)| a)
            .collect()
    }

    fn require_separation(&self) -> Result<f64> {
        match self.separation_time {
            Some(t) if t < self.final_time => Ok(t),
            _ => Err(Error::InvalidInput(
                "pointers do not separate before the final time".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelOutcome {
    pub counts: Vec<usize>,
    pub unresolved: usize,
    pub aborted: usize,
    pub total: usize,
}

impl ChannelOutcome {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }
}

/// Samples Ψ(x, y, 0), integrates to the final time and assigns each endpoint
/// to the channel whose pointer support contains y.
pub fn run_measurement(
    scenario: &MeasurementScenario,
    n: usize,
    seed: u64,
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<ChannelOutcome> {
    scenario.require_separation()?;
    let ensemble = sample_density(&scenario.field, 0.0, n, seed, exec)?;
    let t_end = scenario.final_time;
    let results = exec.map_indexed(n, |i| {
        match integrate_nonrel(
            &scenario.field,
            &ensemble.positions[i],
            (0.0, t_end),
            cfg,
            Record::Nothing,
        ) {
            Ok(tr) if tr.termination == Termination::ReachedParamLimit => Some(tr.end_coords[1]),
            _ => None,
        }
    });
    let mut out = ChannelOutcome {
        counts: vec![0; scenario.channels().len()],
        unresolved: 0,
        aborted: 0,
        total: n,
    };
    for r in results {
        match r {
            None => out.aborted += 1,
            Some(y) => match scenario.channels_containing(y, t_end).as_slice() {
                [a] => out.counts[*a] += 1,
                _ => out.unresolved += 1,
            },
        }
    }
    if out.aborted as f64 > MAX_ABORT_FRACTION * n as f64 {
        return Err(Error::ExcessNodeAborts {
            aborted: out.aborted,
            total: n,
        });
    }
    if out.unresolved as f64 > MAX_UNRESOLVED_FRACTION * n as f64 {
        return Err(Error::UnresolvedExcess {
            unresolved: out.unresolved,
            total: n,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusivityViolation {
    pub trajectory: usize,
    pub t: f64,
    pub y: f64,
    pub channels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExclusivityReport {
    pub checked: usize,
    pub violations: Vec<ExclusivityViolation>,
}

impl ExclusivityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

// Linear interpolation of coordinate `axis` at parameter `t`.
fn coord_at(traj: &Trajectory, t: f64, axis: usize) -> Option<f64> {
    let pts = &traj.points;
    let k = pts.partition_point(|p| p.param < t);
    if k < pts.len() && pts[k].param == t {
        return Some(pts[k].coords[axis]);
    }
    if k == 0 || k == pts.len() {
        return None;
    }
    let (a, b) = (&pts[k - 1], &pts[k]);
    let u = (t - a.param) / (b.param - a.param);
    Some(a.coords[axis] + u * (b.coords[axis] - a.coords[axis]))
}

/// Checks that every trajectory's pointer coordinate lies in at most one
/// channel support at each snapshot time after separation.
pub fn channel_exclusivity_check(
    scenario: &MeasurementScenario,
    trajectories: &[Trajectory],
    times: &[f64],
) -> ExclusivityReport {
    let after = scenario.separation_time.unwrap_or(f64::NEG_INFINITY);
    let mut report = ExclusivityReport::default();
    for (i, traj) in trajectories.iter().enumerate() {
        for &t in times.iter().filter(|&&t| t >= after) {
            let Some(y) = coord_at(traj, t, 1) else {
                continue;
            };
            report.checked += 1;
            let channels = scenario.channels_containing(y, t);
            if channels.len() > 1 {
                report.violations.push(ExclusivityViolation {
                    trajectory: i,
                    t,
                    y,
                    channels,
                });
            }
        }
    }
    report
}

/// Trajectories of Ψ sampled at t = 0 and recorded every `dt`.
pub fn measurement_trajectories(
    scenario: &MeasurementScenario,
    n: usize,
    seed: u64,
    dt: f64,
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<Vec<Trajectory>> {
    let ensemble = sample_density(&scenario.field, 0.0, n, seed, exec)?;
    exec.map_indexed(n, |i| {
        integrate_nonrel(
            &scenario.field,
            &ensemble.positions[i],
            (0.0, scenario.final_time),
            cfg,
            Record::Every(dt),
        )
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    /// Trajectories compared (inside exactly one support at separation).
    pub compared: usize,
    pub skipped: usize,
    /// Largest |x_full − x_channel| over all compared trajectories and times.
    pub max_deviation: f64,
}

/// Compares x(t) after separation under the full Ψ with x(t) under the
/// occupied channel's c_a ψ_a χ_a alone, both started from the same
/// configuration at the separation time.
pub fn collapse_check(
    scenario: &MeasurementScenario,
    n: usize,
    seed: u64,
    dt: f64,
    cfg: &IntegratorConfig,
    exec: Exec,
) -> Result<CollapseReport> {
    let t_sep = scenario.require_separation()?;
    let t_end = scenario.final_time;
    let ensemble = sample_density(&scenario.field, 0.0, n, seed, exec)?;
    let singles: Vec<NonRelField> = (0..scenario.channels().len())
        .map(|a| scenario.field.single_channel(a).expect("channel exists"))
        .collect();
    let rows = exec.map_indexed(n, |i| -> Result<Option<f64>> {
        let head = integrate_nonrel(
            &scenario.field,
            &ensemble.positions[i],
            (0.0, t_sep),
            cfg,
            Record::Nothing,
        )?;
        if head.termination != Termination::ReachedParamLimit {
            return Ok(None);
        }
        let y = head.end_coords[1];
        let [a] = scenario.channels_containing(y, t_sep)[..] else {
            return Ok(None);
        };
        let full = integrate_nonrel(
            &scenario.field,
            &head.end_coords,
            (t_sep, t_end),
            cfg,
            Record::Every(dt),
        )?;
        let single = integrate_nonrel(
            &singles[a],
            &head.end_coords,
            (t_sep, t_end),
            cfg,
            Record::Every(dt),
        )?;
        if full.termination != Termination::ReachedParamLimit
            || single.termination != Termination::ReachedParamLimit
        {
            return Ok(None);
        }
        let mut worst = 0.0f64;
        for p in &full.points {
            let Some(x) = coord_at(&single, p.param, 0) else {
                continue;
            };
            worst = worst.max((p.coords[0] - x).abs());
        }
        Ok(Some(worst))
    });
    let mut report = CollapseReport {
        compared: 0,
        skipped: 0,
        max_deviation: 0.0,
    };
    for r in rows {
        match r? {
            Some(d) => {
                report.compared += 1;
                report.max_deviation = report.max_deviation.max(d);
            }
            None => report.skipped += 1,
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::nonrel::GaussComponent;
    use num_complex::Complex64;

    fn gaussian(center: f64, width: f64) -> NonRelField {
        NonRelField::new(
            1.0,
            vec![GaussComponent::one_dim(
                Complex64::new(1.0, 0.0),
                Gauss1D::new(center, 0.0, width),
            )],
        )
        .unwrap()
    }

    fn channels(c1: f64, drift: f64) -> Vec<Channel> {
        let c2 = (1.0 - c1 * c1).sqrt();
        vec![
            Channel {
                coefficient: Complex64::new(c1, 0.0),
                system: Gauss1D::new(-3.0, 0.0, 1.0),
                pointer: Gauss1D::new(0.0, drift, 1.0),
            },
            Channel {
                coefficient: Complex64::new(c2, 0.0),
                system: Gauss1D::new(3.0, 0.0, 1.0),
                pointer: Gauss1D::new(0.0, -drift, 1.0),
            },
        ]
    }

    #[test]
    fn gaussian_sample_moments() {
        let n = 20_000;
        let e = sample_density(&gaussian(1.5, 0.7), 0.0, n, 5, Exec::default()).unwrap();
        let mean = e.axis(0).sum::<f64>() / n as f64;
        let var = e.axis(0).map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.5).abs() < 4.0 * 0.7 / (n as f64).sqrt());
        assert!((var / 0.49 - 1.0).abs() < 0.1);
    }

    #[test]
    fn single_sample_is_reproducible() {
        let f = gaussian(0.0, 1.0);
        let a = sample_density(&f, 0.0, 1, 3, Exec::Sequential).unwrap();
        let b = sample_density(&f, 0.0, 1, 3, Exec::default()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
        assert!(sample_density(&f, 0.0, 0, 3, Exec::Sequential).is_err());
    }

    #[test]
    fn overlap_formula_matches_quadrature() {
        let (a, b) = (Gauss1D::new(0.3, 1.0, 0.8), Gauss1D::new(-0.2, -0.5, 1.1));
        let t = 0.9;
        let direct = numerics::integrate(
            |y| a.eval(y, t, 1.0).0.norm() * b.eval(y, t, 1.0).0.norm(),
            -30.0,
            30.0,
            400,
        );
        assert!((pointer_overlap(&a, &b, t, 1.0) - direct).abs() < 1e-12);
        assert!((pointer_overlap(&a, &a, t, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn separation_time_meets_both_conditions() {
        let s = MeasurementScenario::new(1.0, channels(0.7f64.sqrt(), 5.0), 4.0).unwrap();
        let t = s.separation_time().unwrap();
        let ch = s.channels();
        assert!(pointer_overlap(&ch[0].pointer, &ch[1].pointer, t, 1.0) <= 1e-8 * (1.0 + 1e-9));
        let early = t - 1e-6;
        assert!(!pointers_separated(ch, early, 1.0, 1e-8));
    }

    #[test]
    fn slow_pointers_never_separate() {
        let s = MeasurementScenario::new(1.0, channels(0.7f64.sqrt(), 0.2), 2.0).unwrap();
        assert_eq!(s.separation_time(), None);
        assert!(
            run_measurement(&s, 10, 1, &IntegratorConfig::default(), Exec::Sequential).is_err()
        );
    }

    #[test]
    fn single_channel_takes_everything() {
        let ch = vec![Channel {
            coefficient: Complex64::new(1.0, 0.0),
            system: Gauss1D::new(0.0, 0.0, 1.0),
            pointer: Gauss1D::new(0.0, 3.0, 1.0),
        }];
        let s = MeasurementScenario::new(1.0, ch, 2.0).unwrap();
        let out =
            run_measurement(&s, 200, 2, &IntegratorConfig::default(), Exec::default()).unwrap();
        assert_eq!(out.counts, vec![200]);
        assert_eq!(out.unresolved, 0);
        assert_eq!(out.frequencies(), vec![1.0]);
    }

    #[test]
    fn empty_exclusivity_report() {
        let s = MeasurementScenario::new(1.0, channels(0.7f64.sqrt(), 5.0), 4.0).unwrap();
        let r = channel_exclusivity_check(&s, &[], &[3.0]);
        assert_eq!(r.checked, 0);
        assert!(r.passed());
    }
}
