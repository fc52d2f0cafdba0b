//! Free Schrödinger fields built from Gaussian wave packets with closed-form
//! time evolution, in one or two configuration-space dimensions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, NodeProximity};
use crate::field::DEFAULT_NODE_THRESHOLD;
use crate::numerics;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One-dimensional free Gaussian packet. `width` is the initial standard
/// deviation σ₀ of |ψ|², `velocity` the group velocity, `center` the
/// position at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauss1D {
    pub center: f64,
    pub velocity: f64,
    pub width: f64,
}

impl Gauss1D {
    pub const fn new(center: f64, velocity: f64, width: f64) -> Self {
        Self {
            center,
            velocity,
            width,
        }
    }

    /// Spreading time τ = 2mσ₀².
    pub fn spreading_time(&self, mass: f64) -> f64 {
        2.0 * mass * self.width * self.width
    }

    pub fn center_at(&self, t: f64) -> f64 {
        self.center + self.velocity * t
    }

    /// σ(t) = σ₀ √(1 + (t/τ)²).
    pub fn width_at(&self, t: f64, mass: f64) -> f64 {
        let r = t / self.spreading_time(mass);
        self.width * (1.0 + r * r).sqrt()
    }

    /// Peak of |g(·, t)|.
    pub fn peak_modulus(&self, t: f64, mass: f64) -> f64 {
        let s = self.width_at(t, mass);
        (2.0 * PI * s * s).powf(-0.25)
    }

    /// Value and first two x-derivatives at `(x, t)`.
    ///
    /// g = (2πσ₀²)^{-1/4} a^{-1/2} exp(−ξ²/(4σ₀²a) + imu(x − c) − imu²t/2)
    /// with a = 1 + it/τ and ξ = x − c − ut.
    pub fn eval(&self, x: f64, t: f64, mass: f64) -> (Complex64, Complex64, Complex64) {
        let s2 = self.width * self.width;
        let a = Complex64::new(1.0, t / self.spreading_time(mass));
        let xi = x - self.center - self.velocity * t;
        let mu = mass * self.velocity;
        let pref = (2.0 * PI * s2).powf(-0.25) / a.sqrt();
        let exponent = -(xi * xi) / (4.0 * s2 * a)
            + I * (mu * (x - self.center) - 0.5 * mu * self.velocity * t);
        let value = pref * exponent.exp();
        let inv_two_s2a = (2.0 * s2 * a).inv();
        let log_d = -xi * inv_two_s2a + I * mu;
        (value, value * log_d, value * (log_d * log_d - inv_two_s2a))
    }

    /// ⟨self | other⟩ on the real line. Free evolution with a common mass is
    /// unitary, so the value is time independent; it is computed at t = 0.
    pub fn overlap(&self, other: &Gauss1D, mass: f64) -> Complex64 {
        let (sa, sb) = (self.width * self.width, other.width * other.width);
        let a = 0.25 / sa + 0.25 / sb;
        let b = Complex64::new(
            0.5 * self.center / sa + 0.5 * other.center / sb,
            mass * (other.velocity - self.velocity),
        );
        let c = Complex64::new(
            -0.25 * self.center * self.center / sa - 0.25 * other.center * other.center / sb,
            mass * (self.velocity * self.center - other.velocity * other.center),
        );
        let pref = (2.0 * PI * sa).powf(-0.25) * (2.0 * PI * sb).powf(-0.25) * (PI / a).sqrt();
        (b * b / (4.0 * a) + c).exp() * pref
    }
}

/// Weighted product of per-axis Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussComponent {
    pub weight: Complex64,
    pub factors: Vec<Gauss1D>,
}

impl GaussComponent {
    pub fn new(weight: Complex64, factors: Vec<Gauss1D>) -> Self {
        Self { weight, factors }
    }

    pub fn one_dim(weight: Complex64, g: Gauss1D) -> Self {
        Self::new(weight, vec![g])
    }
}

/// A measurement channel c_a ψ_a(x) χ_a(y, t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub coefficient: Complex64,
    pub system: Gauss1D,
    pub pointer: Gauss1D,
}

/// ψ with configuration-space gradient and Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonRelJet {
    pub psi: Complex64,
    pub grad: [Complex64; 2],
    pub laplacian: Complex64,
    /// Σ |w_a g_a|², the incoherent intensity used for node tests.
    pub incoherent: f64,
}

/// Guidance and polar quantities at a configuration-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonRelPolar {
    pub psi: Complex64,
    /// v = ∇S/m = Im(∇ψ/ψ)/m; unused slots are zero.
    pub velocity: [f64; 2],
    pub r: f64,
    /// Q = −∇²R / (2mR).
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonRelField {
    mass: f64,
    config_dim: usize,
    components: Vec<GaussComponent>,
    channels: Option<Vec<Channel>>,
    norm: f64,
}

impl NonRelField {
    pub fn new(mass: f64, components: Vec<GaussComponent>) -> Result<Self, Error> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidField(format!(
                "mass must be positive, got {mass}"
            )));
        }
        let Some(first) = components.first() else {
            return Err(Error::InvalidField(
                "a field needs at least one component".into(),
            ));
        };
        let config_dim = first.factors.len();
        if !(1..=2).contains(&config_dim) {
            return Err(Error::InvalidField(format!(
                "configuration dimension must be 1 or 2, got {config_dim}"
            )));
        }
        for c in &components {
            if c.factors.len() != config_dim {
                return Err(Error::InvalidField(
                    "components disagree on dimension".into(),
                ));
            }
            if c.factors
                .iter()
                .any(|g| !(g.width.is_finite() && g.width > 0.0))
            {
                return Err(Error::InvalidField(
                    "Gaussian widths must be positive".into(),
                ));
            }
        }
        let mut field = Self {
            mass,
            config_dim,
            components,
            channels: None,
            norm: 1.0,
        };
        let total = field.raw_norm_squared();
        if !(total > 0.0) {
            return Err(Error::InvalidField("field has zero norm".into()));
        }
        field.norm = total.sqrt().recip();
        Ok(field)
    }

    /// Ψ(x, y, t) = Σ_a c_a ψ_a(x, t) χ_a(y, t). Requires Σ|c_a|² = 1.
    pub fn measurement(mass: f64, channels: Vec<Channel>) -> Result<Self, Error> {
        let total: f64 = channels.iter().map(|c| c.coefficient.norm_sqr()).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidField(format!(
                "channel weights sum to {total}, expected 1"
            )));
        }
        let components = channels
            .iter()
            .map(|c| GaussComponent::new(c.coefficient, vec![c.system, c.pointer]))
            .collect();
        let mut field = Self::new(mass, components)?;
        field.channels = Some(channels);
        Ok(field)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn config_dim(&self) -> usize {
        self.config_dim
    }

    pub fn components(&self) -> &[GaussComponent] {
        &self.components
    }

    pub fn channels(&self) -> Option<&[Channel]> {
        self.channels.as_deref()
    }

    /// Field restricted to channel `a` (for effective-collapse comparisons).
    pub fn single_channel(&self, a: usize) -> Option<NonRelField> {
        let ch = self.channels.as_ref()?.get(a)?;
        Self::new(
            self.mass,
            vec![GaussComponent::new(
                ch.coefficient,
                vec![ch.system, ch.pointer],
            )],
        )
        .ok()
    }

    fn raw_norm_squared(&self) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.components {
            for b in &self.components {
                let mut prod = a.weight.conj() * b.weight;
                for (ga, gb) in a.factors.iter().zip(&b.factors) {
                    prod *= ga.overlap(gb, self.mass);
                }
                total += prod;
            }
        }
        total.re
    }

    pub fn jet(&self, x: &[f64], t: f64) -> NonRelJet {
        let zero = Complex64::new(0.0, 0.0);
        let mut out = NonRelJet {
            psi: zero,
            grad: [zero; 2],
            laplacian: zero,
            incoherent: 0.0,
        };
        let d = self.config_dim;
        for comp in &self.components {
            let mut vals = [(zero, zero, zero); 2];
            for i in 0..d {
                vals[i] = comp.factors[i].eval(x[i], t, self.mass);
            }
            let w = comp.weight * self.norm;
            let (value, grad, lap) = if d == 1 {
                (vals[0].0, [vals[0].1, zero], vals[0].2)
            } else {
                (
                    vals[0].0 * vals[1].0,
                    [vals[0].1 * vals[1].0, vals[0].0 * vals[1].1],
                    vals[0].2 * vals[1].0 + vals[0].0 * vals[1].2,
                )
            };
            let wv = w * value;
            out.psi += wv;
            out.incoherent += wv.norm_sqr();
            out.grad[0] += w * grad[0];
            out.grad[1] += w * grad[1];
            out.laplacian += w * lap;
        }
        out
    }

    pub fn psi(&self, x: &[f64], t: f64) -> Complex64 {
        self.jet(x, t).psi
    }

    pub fn density(&self, x: &[f64], t: f64) -> f64 {
        self.psi(x, t).norm_sqr()
    }

    /// ∂_tψ = (i/2m) ∇²ψ for the free Schrödinger equation.
    pub fn time_derivative(&self, x: &[f64], t: f64) -> Complex64 {
        self.jet(x, t).laplacian * I / (2.0 * self.mass)
    }

    /// Guidance velocity, R and Q with the default node threshold.
    pub fn polar(&self, x: &[f64], t: f64) -> Result<NonRelPolar, NodeProximity> {
        self.polar_with_threshold(x, t, DEFAULT_NODE_THRESHOLD)
    }

    pub fn polar_with_threshold(
        &self,
        x: &[f64],
        t: f64,
        threshold: f64,
    ) -> Result<NonRelPolar, NodeProximity> {
        let jet = self.jet(x, t);
        let density = jet.psi.norm_sqr();
        let floor = threshold * jet.incoherent;
        // A point beyond f64 range of every packet carries no defined phase either.
        if !(density > floor) || density == 0.0 {
            return Err(NodeProximity {
                density,
                threshold: floor,
            });
        }
        let r = density.sqrt();
        let conj = jet.psi.conj();
        let mut velocity = [0.0; 2];
        let mut grad_sq = 0.0;
        let mut dr_sq = 0.0;
        for i in 0..self.config_dim {
            let z = conj * jet.grad[i];
            velocity[i] = z.im / (density * self.mass);
            grad_sq += jet.grad[i].norm_sqr();
            let dr = z.re / r;
            dr_sq += dr * dr;
        }
        let lap_r = ((conj * jet.laplacian).re + grad_sq - dr_sq) / r;
        Ok(NonRelPolar {
            psi: jet.psi,
            velocity,
            r,
            q: -lap_r / (2.0 * self.mass * r),
        })
    }

    /// Per-axis window `center ± n_sigma·σ(t)` enveloping every component.
    pub fn envelope(&self, t: f64, n_sigma: f64) -> Vec<(f64, f64)> {
        (0..self.config_dim)
            .map(|i| {
                self.components
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                        let g = &c.factors[i];
                        let (m, s) = (g.center_at(t), g.width_at(t, self.mass));
                        (lo.min(m - n_sigma * s), hi.max(m + n_sigma * s))
                    })
            })
            .collect()
    }

    /// Probability inside the box `window` at time `t` (per-axis quadrature of
    /// every separable cross term).
    pub fn window_mass(&self, t: f64, window: &[(f64, f64)]) -> f64 {
        let mut total = Complex64::new(0.0, 0.0);
        for a in &self.components {
            for b in &self.components {
                let mut prod = a.weight.conj() * b.weight;
                for (i, (ga, gb)) in a.factors.iter().zip(&b.factors).enumerate() {
                    let (lo, hi) = window[i];
                    let panels = (((hi - lo)
                        / ga.width_at(t, self.mass).min(gb.width_at(t, self.mass)))
                        * 8.0
                        + self.mass * (ga.velocity - gb.velocity).abs() * (hi - lo))
                        .ceil()
                        .clamp(64.0, 20_000.0) as usize;
                    prod *= numerics::integrate_complex(
                        |x| ga.eval(x, t, self.mass).0.conj() * gb.eval(x, t, self.mass).0,
                        lo,
                        hi,
                        panels,
                    );
                }
                total += prod;
            }
        }
        total.re * self.norm * self.norm
    }

    /// Upper bound on |ψ|² at time `t`.
    pub fn density_bound(&self, t: f64) -> f64 {
        let s: f64 = self
            .components
            .iter()
            .map(|c| {
                c.weight.norm()
                    * c.factors
                        .iter()
                        .map(|g| g.peak_modulus(t, self.mass))
                        .product::<f64>()
            })
            .sum();
        (s * self.norm).powi(2)
    }

    /// Longest spreading time among the components' factors.
    pub fn spreading_time(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.factors.iter())
            .map(|g| g.spreading_time(self.mass))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn single(width: f64, velocity: f64) -> NonRelField {
        NonRelField::new(
            1.3,
            vec![GaussComponent::one_dim(
                Complex64::new(1.0, 0.0),
                Gauss1D::new(0.4, velocity, width),
            )],
        )
        .unwrap()
    }

    #[test]
    fn overlap_matches_quadrature() {
        let m = 0.8;
        let a = Gauss1D::new(-1.0, 0.5, 0.7);
        let b = Gauss1D::new(0.6, -0.3, 1.1);
        let numeric = numerics::integrate_complex(
            |x| a.eval(x, 0.0, m).0.conj() * b.eval(x, 0.0, m).0,
            -15.0,
            15.0,
            400,
        );
        let exact = a.overlap(&b, m);
        assert!((numeric - exact).norm() < 1e-12, "{numeric} vs {exact}");
        assert_relative_eq!(a.overlap(&a, m).re, 1.0, max_relative = 1e-13);
        // Unitarity: the overlap is the same at a later time.
        let later = numerics::integrate_complex(
            |x| a.eval(x, 2.5, m).0.conj() * b.eval(x, 2.5, m).0,
            -25.0,
            25.0,
            800,
        );
        assert!((later - exact).norm() < 1e-11);
    }

    #[test]
    fn gaussian_solves_free_schrodinger() {
        let m = 1.3;
        let g = Gauss1D::new(0.2, 0.9, 0.6);
        let h = 1e-4;
        for &(x, t) in &[(0.1, 0.0), (1.0, 0.7), (-0.5, 2.0)] {
            let dt = (g.eval(x, t + h, m).0 - g.eval(x, t - h, m).0) / (2.0 * h);
            let (_, _, d2) = g.eval(x, t, m);
            let residual = dt * I + d2 / (2.0 * m);
            assert!(residual.norm() < 1e-7, "residual {residual}");
            let fd2 =
                (g.eval(x + h, t, m).0 - g.eval(x, t, m).0 * 2.0 + g.eval(x - h, t, m).0) / (h * h);
            assert!((fd2 - d2).norm() < 1e-5);
        }
    }

    #[test]
    fn single_gaussian_quantum_potential_at_center() {
        let f = single(0.5, 0.0);
        let q = f.polar(&[0.4], 0.0).unwrap().q;
        assert_relative_eq!(q, 1.0 / (4.0 * 1.3 * 0.25), max_relative = 1e-12);

        let f2 = NonRelField::new(
            1.0,
            vec![GaussComponent::new(
                Complex64::new(1.0, 0.0),
                vec![Gauss1D::new(0.0, 0.0, 0.5), Gauss1D::new(0.0, 0.0, 0.5)],
            )],
        )
        .unwrap();
        assert_relative_eq!(
            f2.polar(&[0.0, 0.0], 0.0).unwrap().q,
            2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn real_stationary_superposition_has_no_velocity() {
        let f = NonRelField::new(
            1.0,
            vec![
                GaussComponent::one_dim(Complex64::new(0.6, 0.0), Gauss1D::new(-2.0, 0.0, 1.0)),
                GaussComponent::one_dim(Complex64::new(0.8, 0.0), Gauss1D::new(1.5, 0.0, 0.7)),
            ],
        )
        .unwrap();
        for x in [-3.0, -0.1, 0.0, 2.2] {
            assert_eq!(f.polar(&[x], 0.0).unwrap().velocity[0], 0.0);
        }
    }

    #[test]
    fn spreading_velocity_field() {
        let f = single(0.5, 0.0);
        let tau = 2.0 * 1.3 * 0.25;
        for &(x, t) in &[(1.0, 0.3), (-0.7, 1.2), (2.5, 4.0)] {
            let v = f.polar(&[x], t).unwrap().velocity[0];
            assert_relative_eq!(v, (x - 0.4) * t / (tau * tau + t * t), max_relative = 1e-12);
        }
    }

    #[test]
    fn normalized_density_integrates_to_one() {
        let f = NonRelField::new(
            1.0,
            vec![
                GaussComponent::one_dim(Complex64::new(1.0, 0.0), Gauss1D::new(-4.0, 2.0, 1.0)),
                GaussComponent::one_dim(Complex64::new(1.0, 0.0), Gauss1D::new(4.0, -2.0, 1.0)),
            ],
        )
        .unwrap();
        let mass = numerics::integrate(|x| f.density(&[x], 2.0), -30.0, 30.0, 600);
        assert_relative_eq!(mass, 1.0, max_relative = 1e-11);
        let w = f.envelope(2.0, 8.0);
        assert!(f.window_mass(2.0, &w) > 1.0 - 1e-9);
    }

    #[test]
    fn measurement_requires_unit_weights() {
        let ch = |c: f64| Channel {
            coefficient: Complex64::new(c, 0.0),
            system: Gauss1D::new(0.0, 0.0, 1.0),
            pointer: Gauss1D::new(0.0, 1.0, 1.0),
        };
        assert!(NonRelField::measurement(1.0, vec![ch(0.5), ch(0.5)]).is_err());
        assert!(NonRelField::measurement(1.0, vec![ch(0.7f64.sqrt()), ch(0.3f64.sqrt())]).is_ok());
    }

    #[test]
    fn density_bound_holds() {
        let f = NonRelField::new(
            1.0,
            vec![
                GaussComponent::one_dim(Complex64::new(1.0, 0.0), Gauss1D::new(-0.3, 1.0, 1.0)),
                GaussComponent::one_dim(Complex64::new(0.0, 1.0), Gauss1D::new(0.3, -1.0, 1.0)),
            ],
        )
        .unwrap();
        let bound = f.density_bound(0.5);
        for i in 0..200 {
            let x = -5.0 + 0.05 * i as f64;
            assert!(f.density(&[x], 0.5) <= bound);
        }
    }
}
