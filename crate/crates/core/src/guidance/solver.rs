//! Adaptive Dormand-Prince 5(4) integration of autonomous or
//! parameter-dependent vector fields, with event localisation.
//!
//! Events are bracketed on the continuous extension of each accepted step and
//! then refined with the Illinois method on genuine RK sub-steps from the
//! step start, so event coordinates carry the full fifth-order accuracy.

use crate::error::NodeProximity;

use super::{
    Crossing, Event, EventKind, Hyperplane, IntegratorConfig, Record, Termination, TraceRequest,
};

/// A vector field whose integral curves are traced. Implementations must be
/// pure: the same input always yields the same output.
pub trait VectorField<const N: usize>: Sync {
    fn velocity(&self, param: f64, y: &[f64; N]) -> Result<[f64; N], NodeProximity>;
}

impl<const N: usize, F: VectorField<N>> VectorField<N> for &F {
    fn velocity(&self, param: f64, y: &[f64; N]) -> Result<[f64; N], NodeProximity> {
        (**self).velocity(param, y)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer & Wanner, DOPRI5 dense output).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Step<const N: usize> {
    y: [f64; N],
    err: [f64; N],
    // k1..k7; k7 = f(y) (first-same-as-last).
    k: [[f64; N]; 7],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

fn dp_step<const N: usize, F: VectorField<N>>(
    f: &F,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
) -> Result<Step<N>, NodeProximity> {
    let k2 = f.velocity(s + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f.velocity(s + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f.velocity(
        s + C4 * h,
        &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
    )?;
    let k5 = f.velocity(
        s + C5 * h,
        &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = f.velocity(
        s + h,
        &axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ),
    )?;
    let y_new = axpy(
        y,
        h,
        &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
    );
    let k7 = f.velocity(s + h, &y_new)?;
    let mut err = [0.0; N];
    for i in 0..N {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Ok(Step {
        y: y_new,
        err,
        k: [*k1, k2, k3, k4, k5, k6, k7],
    })
}

struct Dense<const N: usize> {
    r: [[f64; N]; 5],
    h: f64,
}

impl<const N: usize> Dense<N> {
    fn new(y0: &[f64; N], step: &Step<N>, h: f64) -> Self {
        let k = &step.k;
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let dy = step.y[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k[6][i] - bspl;
            r[4][i] = h
                * (D1 * k[0][i]
                    + D3 * k[2][i]
                    + D4 * k[3][i]
                    + D5 * k[4][i]
                    + D6 * k[5][i]
                    + D7 * k[6][i]);
        }
        Self { r, h }
    }

    fn value(&self, i: usize, th: f64) -> f64 {
        let r = &self.r;
        let th1 = 1.0 - th;
        r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
    }

    fn derivative(&self, i: usize, th: f64) -> f64 {
        let r = &self.r;
        let th1 = 1.0 - th;
        let a = r[3][i] + th1 * r[4][i];
        let da = -r[4][i];
        let b = r[2][i] + th * a;
        let db = a + th * da;
        let c = r[1][i] + th1 * b;
        let dc = -b + th1 * db;
        (c + th * dc) / self.h
    }
}

fn error_norm<const N: usize>(
    cfg: &IntegratorConfig,
    y0: &[f64; N],
    y1: &[f64; N],
    err: &[f64; N],
) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = cfg.abs_tolerance + cfg.rel_tolerance * y0[i].abs().max(y1[i].abs());
        let e = err[i] / sc;
        acc += e * e;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize, F: VectorField<N>>(
    f: &F,
    cfg: &IntegratorConfig,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    dir: f64,
) -> f64 {
    let scaled = |v: &[f64; N]| {
        let mut acc = 0.0;
        for i in 0..N {
            let sc = cfg.abs_tolerance + cfg.rel_tolerance * y[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let d0 = scaled(y);
    let d1 = scaled(k1);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(cfg.max_step);
    let y1 = axpy(y, dir * h0, &[(1.0, k1)]);
    let Ok(k2) = f.velocity(s + dir * h0, &y1) else {
        return h0 * 1e-3;
    };
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}

#[derive(Clone, Copy)]
enum Watch {
    Plane { plane: Hyperplane, terminal: bool },
    Turning,
}

struct Found<const N: usize> {
    theta: f64,
    y: [f64; N],
    v: [f64; N],
    kind: EventKind,
    terminal: bool,
}

/// Raw integration output before conversion to public trajectory types.
pub(crate) struct RawPoint<const N: usize> {
    pub param: f64,
    pub y: [f64; N],
    pub v: [f64; N],
}

pub(crate) struct RawSolution<const N: usize> {
    pub points: Vec<RawPoint<N>>,
    pub events: Vec<Event>,
    pub termination: Termination,
    pub end_param: f64,
    pub end: [f64; N],
}

pub(crate) fn solve<const N: usize, F: VectorField<N>>(
    f: &F,
    s0: f64,
    y0: [f64; N],
    cfg: &IntegratorConfig,
    req: &TraceRequest,
) -> Result<RawSolution<N>, NodeProximity> {
    let k_start = f.velocity(s0, &y0)?;
    let dir = if req.param_span < 0.0 { -1.0 } else { 1.0 };
    let s_end = s0 + req.param_span;

    let mut watches: Vec<Watch> = req
        .stop_at
        .iter()
        .map(|&plane| Watch::Plane {
            plane,
            terminal: true,
        })
        .collect();
    watches.extend(req.watch.iter().map(|&plane| Watch::Plane {
        plane,
        terminal: false,
    }));
    if req.turning_points {
        watches.push(Watch::Turning);
    }

    let mut out = RawSolution {
        points: Vec::new(),
        events: Vec::new(),
        termination: Termination::ReachedParamLimit,
        end_param: s0,
        end: y0,
    };
    let record_steps = matches!(req.record, Record::Steps);
    let sample_spacing = match req.record {
        Record::Every(ds) if ds > 0.0 => Some(ds),
        _ => None,
    };
    if !matches!(req.record, Record::Nothing) {
        out.points.push(RawPoint {
            param: s0,
            y: y0,
            v: k_start,
        });
    }
    let mut next_sample = 1usize;

    let (mut s, mut y, mut k1) = (s0, y0, k_start);
    let mut h_ctrl = initial_step(f, cfg, s, &y, &k1, dir);
    let mut steps = 0usize;
    let mut rejected_last = false;

    loop {
        let remaining = (s_end - s) * dir;
        if remaining <= 1e-14 * (1.0 + s.abs()) {
            out.termination = Termination::ReachedParamLimit;
            break;
        }
        if steps >= cfg.max_steps {
            out.termination = Termination::StepLimitExceeded;
            break;
        }
        let mut h_abs = h_ctrl.min(cfg.max_step).min(remaining);
        let mut landing_sample = false;
        if let Some(ds) = sample_spacing {
            let target = (s0 + dir * ds * next_sample as f64 - s) * dir;
            if target <= h_abs {
                h_abs = target;
                landing_sample = true;
            }
        }
        let clamped = h_abs < h_ctrl;
        let h = dir * h_abs;

        let step = match dp_step(f, s, &y, &k1, h) {
            Ok(step) => step,
            Err(_) => {
                h_ctrl = h_abs * 0.25;
                rejected_last = true;
                if h_ctrl < 1e-13 * (1.0 + s.abs()) {
                    out.events.push(Event {
                        kind: EventKind::NodeProximity,
                        param: s,
                        coords: y.to_vec(),
                    });
                    out.termination = Termination::NodeAbort;
                    break;
                }
                continue;
            }
        };
        let err = error_norm(cfg, &y, &step.y, &step.err);
        if !(err <= 1.0) {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.2
            };
            h_ctrl = h_abs * fac;
            rejected_last = true;
            if h_ctrl < 1e-13 * (1.0 + s.abs()) {
                out.termination = Termination::StepLimitExceeded;
                break;
            }
            continue;
        }
        steps += 1;

        // Events within the accepted step.
        let dense = Dense::new(&y, &step, h);
        let mut found: Vec<Found<N>> = Vec::new();
        for w in &watches {
            if let Some(ev) = locate(f, cfg, s, &y, &k1, &step, &dense, h, w) {
                found.push(ev);
            }
        }
        found.sort_by(|a, b| a.theta.total_cmp(&b.theta));
        let mut stop_at = None;
        for ev in found {
            let param = s + ev.theta * h;
            out.events.push(Event {
                kind: ev.kind,
                param,
                coords: ev.y.to_vec(),
            });
            if ev.terminal {
                stop_at = Some((param, ev.y, ev.v));
                break;
            }
        }
        if let Some((param, ye, ve)) = stop_at {
            if !matches!(req.record, Record::Nothing) {
                out.points.push(RawPoint {
                    param,
                    y: ye,
                    v: ve,
                });
            }
            out.termination = Termination::ReachedHyperplane;
            out.end_param = param;
            out.end = ye;
            break;
        }

        s += h;
        if landing_sample {
            s = s0 + dir * sample_spacing.unwrap_or(0.0) * next_sample as f64;
            next_sample += 1;
        }
        y = step.y;
        k1 = step.k[6];
        if record_steps || landing_sample {
            out.points.push(RawPoint { param: s, y, v: k1 });
        }

        let mut fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        let proposed = h_abs * fac;
        h_ctrl = if clamped {
            proposed.max(h_ctrl)
        } else {
            proposed
        };
    }
    if out.termination != Termination::ReachedHyperplane {
        out.end_param = s;
        out.end = y;
    }
    let end_recorded = matches!(out.termination, Termination::ReachedHyperplane)
        || matches!(req.record, Record::Nothing)
        || out.points.last().is_some_and(|p| p.param == s);
    if !end_recorded {
        out.points.push(RawPoint { param: s, y, v: k1 });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn locate<const N: usize, F: VectorField<N>>(
    f: &F,
    cfg: &IntegratorConfig,
    s: f64,
    y: &[f64; N],
    k1: &[f64; N],
    step: &Step<N>,
    dense: &Dense<N>,
    h: f64,
    watch: &Watch,
) -> Option<Found<N>> {
    const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
    let g_dense = |th: f64| -> f64 {
        match watch {
            Watch::Plane { plane, .. } => {
                if th == 0.0 {
                    y[0] - plane.level
                } else if th == 1.0 {
                    step.y[0] - plane.level
                } else {
                    dense.value(0, th) - plane.level
                }
            }
            Watch::Turning => {
                if th == 0.0 {
                    k1[0]
                } else if th == 1.0 {
                    step.k[6][0]
                } else {
                    dense.derivative(0, th)
                }
            }
        }
    };
    let changes = |a: f64, b: f64| (a * b < 0.0) || (b == 0.0 && a != 0.0);

    let mut bracket = None;
    let mut prev = g_dense(PROBES[0]);
    for w in PROBES.windows(2) {
        let next = g_dense(w[1]);
        if changes(prev, next) {
            bracket = Some((w[0], w[1]));
            break;
        }
        prev = next;
    }
    let (mut a, mut b) = bracket?;

    // Exact evaluation through a sub-step of length θh from the step start.
    let exact = |th: f64| -> Option<([f64; N], [f64; N], f64)> {
        let (ye, ve) = if th == 0.0 {
            (*y, *k1)
        } else if th == 1.0 {
            (step.y, step.k[6])
        } else {
            let sub = dp_step(f, s, y, k1, th * h).ok()?;
            (sub.y, sub.k[6])
        };
        let g = match watch {
            Watch::Plane { plane, .. } => ye[0] - plane.level,
            Watch::Turning => ve[0],
        };
        Some((ye, ve, g))
    };

    let (mut ya, mut va, mut ga) = exact(a)?;
    let (mut yb, mut vb, mut gb) = exact(b)?;
    if !changes(ga, gb) {
        // Dense bracket disagrees with the exact solution; fall back to the
        // whole step.
        a = 0.0;
        b = 1.0;
        (ya, va, ga) = exact(a)?;
        (yb, vb, gb) = exact(b)?;
        if !changes(ga, gb) {
            return None;
        }
    }
    let (g_tol, width_tol) = match watch {
        Watch::Plane { .. } => (cfg.crossing_tolerance, 1e-15),
        Watch::Turning => {
            let scale = va
                .iter()
                .chain(vb.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            (1e-13 * scale, 1e-15)
        }
    };

    let (mut y_root, mut v_root, mut th_root) = if gb == 0.0 { (yb, vb, b) } else { (ya, va, a) };
    if gb != 0.0 {
        let mut side = 0i8;
        for _ in 0..200 {
            let th = (a * gb - b * ga) / (gb - ga);
            let th = if th > a && th < b { th } else { 0.5 * (a + b) };
            let (yt, vt, gt) = exact(th)?;
            y_root = yt;
            v_root = vt;
            th_root = th;
            if gt.abs() <= g_tol || (b - a) * h.abs() <= width_tol * (1.0 + s.abs()) {
                break;
            }
            if changes(ga, gt) && gt != 0.0 {
                b = th;
                gb = gt;
                if side == -1 {
                    ga *= 0.5;
                }
                side = -1;
            } else if gt == 0.0 {
                break;
            } else {
                a = th;
                ga = gt;
                if side == 1 {
                    gb *= 0.5;
                }
                side = 1;
            }
        }
    }
    // Keep only the root; direction filters use dt/ds at the crossing.
    let (kind, terminal) = match watch {
        Watch::Plane { plane, terminal } => {
            let sign = if v_root[0] > 0.0 {
                1
            } else if v_root[0] < 0.0 {
                -1
            } else if (step.y[0] - y[0]) * h.signum() > 0.0 {
                1
            } else {
                -1
            };
            let accepted = match plane.crossing {
                Crossing::Any => true,
                Crossing::Forward => sign > 0,
                Crossing::Backward => sign < 0,
            };
            if !accepted {
                return None;
            }
            (
                EventKind::HyperplaneCrossing {
                    level: plane.level,
                    direction: sign,
                },
                *terminal,
            )
        }
        Watch::Turning => (EventKind::TurningPoint, false),
    };
    Some(Found {
        theta: th_root,
        y: y_root,
        v: v_root,
        kind,
        terminal,
    })
}
