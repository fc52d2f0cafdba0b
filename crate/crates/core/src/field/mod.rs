//! Analytic wave fields.
//!
//! [`RelField`] is a finite superposition of positive-frequency Klein-Gordon
//! plane waves on a periodic box; [`nonrel::NonRelField`] is a superposition
//! of freely spreading Schrödinger Gaussians; [`two_particle::TwoParticleField`]
//! is a (symmetrised) product of two relativistic one-particle fields.
//!
//! All derivatives are analytic. Index placement: gradients returned by
//! [`RelField::jet`] carry lower indices (∂_μ), currents carry upper indices.

pub mod nonrel;
pub mod two_particle;

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, NodeProximity};

/// Default relative node threshold: polar data is invalid where
/// |ψ|² < threshold × (incoherent mode sum of |ψ|²).
pub const DEFAULT_NODE_THRESHOLD: f64 = 1e-10;

/// Four components `(t, x, y, z)`. Unused spatial slots of lower-dimensional
/// fields are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourVector {
    pub t: f64,
    pub x: [f64; 3],
}

impl FourVector {
    pub const fn new(t: f64, x: [f64; 3]) -> Self {
        Self { t, x }
    }

    /// Point in 1+1 dimensions.
    pub const fn tx(t: f64, x: f64) -> Self {
        Self {
            t,
            x: [x, 0.0, 0.0],
        }
    }

    pub fn component(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.t
        } else {
            self.x[mu - 1]
        }
    }

    pub fn from_components(c: &[f64]) -> Self {
        let mut v = Self::default();
        for (mu, &value) in c.iter().enumerate().take(4) {
            if mu == 0 {
                v.t = value;
            } else {
                v.x[mu - 1] = value;
            }
        }
        v
    }

    /// The first `1 + spatial_dim` components.
    pub fn components(&self, spatial_dim: usize) -> Vec<f64> {
        (0..=spatial_dim).map(|mu| self.component(mu)).collect()
    }

    /// Raises or lowers the index: flips the spatial sign under (+,−,−,−).
    pub fn flip_index(&self) -> Self {
        Self {
            t: self.t,
            x: [-self.x[0], -self.x[1], -self.x[2]],
        }
    }

    /// Minkowski product of two vectors with the same index placement.
    pub fn dot(&self, other: &Self) -> f64 {
        self.t * other.t - self.x[0] * other.x[0] - self.x[1] * other.x[1] - self.x[2] * other.x[2]
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            t: self.t * k,
            x: [self.x[0] * k, self.x[1] * k, self.x[2] * k],
        }
    }

    pub fn spatial_norm(&self) -> f64 {
        (self.x[0] * self.x[0] + self.x[1] * self.x[1] + self.x[2] * self.x[2]).sqrt()
    }
}

/// Input description of a mode: amplitude and integer wave numbers; the
/// momentum is `2π k / L`, which keeps the field periodic on the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub amplitude: Complex64,
    pub wave_numbers: [i64; 3],
}

impl ModeSpec {
    pub fn new(amplitude: Complex64, wave_numbers: [i64; 3]) -> Self {
        Self {
            amplitude,
            wave_numbers,
        }
    }

    pub fn one_dim(amplitude: f64, k: i64) -> Self {
        Self::new(Complex64::new(amplitude, 0.0), [k, 0, 0])
    }
}

/// One positive-frequency plane wave `c e^{−i(ωt − p·x)}` with
/// `ω = +√(p² + m²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    amplitude: Complex64,
    momentum: [f64; 3],
    frequency: f64,
    wave_numbers: [i64; 3],
}

impl Mode {
    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn momentum(&self) -> [f64; 3] {
        self.momentum
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn wave_numbers(&self) -> [i64; 3] {
        self.wave_numbers
    }

    /// Covariant wave vector k_μ = (ω, −p).
    fn lower_wave_vector(&self) -> [f64; 4] {
        [
            self.frequency,
            -self.momentum[0],
            -self.momentum[1],
            -self.momentum[2],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Scale the field so that ∫_box j⁰ dᵈx = 1.
    UnitCharge,
    /// Use the amplitudes as given.
    Raw,
}

/// ψ together with its first and second lower-index derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub psi: Complex64,
    pub grad: [Complex64; 4],
    pub hess: [[Complex64; 4]; 4],
}

impl Jet {
    /// d'Alembertian □ψ = ∂_t²ψ − ∇²ψ.
    pub fn dalembertian(&self) -> Complex64 {
        self.hess[0][0] - self.hess[1][1] - self.hess[2][2] - self.hess[3][3]
    }
}

/// Polar decomposition data ψ = R e^{iS}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarData {
    pub r: f64,
    /// ∂_μS with a lower index.
    pub s_gradient: FourVector,
    /// Relativistic quantum potential Q = □R / (2mR).
    pub q: f64,
    /// Effective squared mass m² + □R/R.
    pub meff2: f64,
}

/// Superposition of positive-frequency Klein-Gordon modes on a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct RelField {
    mass: f64,
    box_length: f64,
    spatial_dim: usize,
    modes: Vec<Mode>,
    normalization: f64,
}

impl RelField {
    pub fn new(
        mass: f64,
        box_length: f64,
        spatial_dim: usize,
        modes: &[ModeSpec],
        normalization: Normalization,
    ) -> Result<Self, Error> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidField(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::InvalidField(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        if !(1..=3).contains(&spatial_dim) {
            return Err(Error::InvalidField(format!(
                "spatial dimension must be 1, 2 or 3, got {spatial_dim}"
            )));
        }
        if modes.is_empty() {
            return Err(Error::InvalidField(
                "a field needs at least one mode".into(),
            ));
        }
        let mut built: Vec<Mode> = Vec::with_capacity(modes.len());
        for spec in modes {
            if !(spec.amplitude.re.is_finite() && spec.amplitude.im.is_finite()) {
                return Err(Error::InvalidField("mode amplitude is not finite".into()));
            }
            if spec.wave_numbers[spatial_dim..].iter().any(|&k| k != 0) {
                return Err(Error::InvalidField(format!(
                    "wave numbers {:?} exceed the spatial dimension {spatial_dim}",
                    spec.wave_numbers
                )));
            }
            if built.iter().any(|m| m.wave_numbers == spec.wave_numbers) {
                return Err(Error::InvalidField(format!(
                    "duplicate mode with wave numbers {:?}",
                    spec.wave_numbers
                )));
            }
            let momentum = spec.wave_numbers.map(|k| TAU * k as f64 / box_length);
            let p2: f64 = momentum.iter().map(|p| p * p).sum();
            built.push(Mode {
                amplitude: spec.amplitude,
                momentum,
                frequency: (p2 + mass * mass).sqrt(),
                wave_numbers: spec.wave_numbers,
            });
        }
        let mut field = Self {
            mass,
            box_length,
            spatial_dim,
            modes: built,
            normalization: 1.0,
        };
        if normalization == Normalization::UnitCharge {
            let charge = field.raw_charge();
            if !(charge > 0.0) {
                return Err(Error::InvalidField("field carries no charge".into()));
            }
            field.normalization = charge.sqrt().recip();
        }
        Ok(field)
    }

    /// Single mode in one spatial dimension, normalised to unit charge.
    pub fn single_mode_1d(mass: f64, box_length: f64, k: i64) -> Result<Self, Error> {
        Self::new(
            mass,
            box_length,
            1,
            &[ModeSpec::one_dim(1.0, k)],
            Normalization::UnitCharge,
        )
    }

    // ∫_box j⁰ = 2 Σ |c_k|² ω_k L^d; distinct box modes are orthogonal.
    fn raw_charge(&self) -> f64 {
        let volume = self.box_length.powi(self.spatial_dim as i32);
        2.0 * volume
            * self
                .modes
                .iter()
                .map(|m| m.amplitude.norm_sqr() * m.frequency)
                .sum::<f64>()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Total charge ∫_box j⁰ dᵈx (1 for unit-charge fields).
    pub fn charge(&self) -> f64 {
        self.raw_charge() * self.normalization * self.normalization
    }

    /// Box average of j⁰.
    pub fn mean_density(&self) -> f64 {
        self.charge() / self.box_length.powi(self.spatial_dim as i32)
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.frequency).fold(0.0, f64::max)
    }

    pub fn max_momentum(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.momentum.iter().map(|p| p * p).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Box average of |ψ|², equal to the incoherent mode sum N² Σ |c_k|².
    pub fn mean_intensity(&self) -> f64 {
        self.normalization
            * self.normalization
            * self
                .modes
                .iter()
                .map(|m| m.amplitude.norm_sqr())
                .sum::<f64>()
    }

    /// Node test scale: |ψ|² below `threshold × mean_intensity` is a node.
    pub fn node_floor(&self, threshold: f64) -> f64 {
        threshold * self.mean_intensity()
    }

    /// A rigorous upper bound on j⁰ anywhere: 2 N² (Σ|c|)(Σ|c|ω).
    pub fn density_bound(&self) -> f64 {
        let a: f64 = self.modes.iter().map(|m| m.amplitude.norm()).sum();
        let b: f64 = self
            .modes
            .iter()
            .map(|m| m.amplitude.norm() * m.frequency)
            .sum();
        2.0 * self.normalization * self.normalization * a * b
    }

    #[inline]
    fn mode_value(&self, mode: &Mode, p: &FourVector) -> Complex64 {
        let phase = mode.frequency * p.t
            - mode.momentum[0] * p.x[0]
            - mode.momentum[1] * p.x[1]
            - mode.momentum[2] * p.x[2];
        let (s, c) = phase.sin_cos();
        mode.amplitude * Complex64::new(c, -s) * self.normalization
    }

    /// ψ(t, x) = N Σ_k c_k e^{−i(ω_k t − p_k·x)}.
    pub fn psi(&self, p: &FourVector) -> Complex64 {
        self.modes.iter().map(|m| self.mode_value(m, p)).sum()
    }

    /// ψ and ∂_μψ (lower index).
    pub fn first_jet(&self, p: &FourVector) -> (Complex64, [Complex64; 4]) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut grad = [Complex64::new(0.0, 0.0); 4];
        for mode in &self.modes {
            let v = self.mode_value(mode, p);
            let k = mode.lower_wave_vector();
            // ∂_μ e^{−i k·x} = −i k_μ e^{−i k·x}
            let mi_v = Complex64::new(v.im, -v.re);
            psi += v;
            for mu in 0..=self.spatial_dim {
                grad[mu] += mi_v * k[mu];
            }
        }
        (psi, grad)
    }

    /// ψ with first and second derivatives, all analytic.
    pub fn jet(&self, p: &FourVector) -> Jet {
        let zero = Complex64::new(0.0, 0.0);
        let mut jet = Jet {
            psi: zero,
            grad: [zero; 4],
            hess: [[zero; 4]; 4],
        };
        let d = self.spatial_dim;
        for mode in &self.modes {
            let v = self.mode_value(mode, p);
            let k = mode.lower_wave_vector();
            let mi_v = Complex64::new(v.im, -v.re);
            jet.psi += v;
            for mu in 0..=d {
                jet.grad[mu] += mi_v * k[mu];
                for nu in 0..=d {
                    jet.hess[mu][nu] -= v * (k[mu] * k[nu]);
                }
            }
        }
        jet
    }

    /// Conserved current j^μ = i ψ* ∂↔^μ ψ (upper index).
    pub fn current(&self, p: &FourVector) -> FourVector {
        let (psi, grad) = self.first_jet(p);
        current_from_jet(psi, &grad)
    }

    /// Polar data with the default node threshold.
    pub fn polar(&self, p: &FourVector) -> Result<PolarData, NodeProximity> {
        self.polar_with_threshold(p, DEFAULT_NODE_THRESHOLD)
    }

    pub fn polar_with_threshold(
        &self,
        p: &FourVector,
        threshold: f64,
    ) -> Result<PolarData, NodeProximity> {
        let jet = self.jet(p);
        let floor = self.node_floor(threshold);
        polar_from_jet(&jet, self.mass, self.spatial_dim, floor)
    }
}

/// j^μ from ψ and lower-index ∂_μψ: j_μ = −2 Im(ψ* ∂_μψ), then raise.
pub(crate) fn current_from_jet(psi: Complex64, grad: &[Complex64; 4]) -> FourVector {
    let lower = |mu: usize| -2.0 * (psi.conj() * grad[mu]).im;
    FourVector::new(lower(0), [-lower(1), -lower(2), -lower(3)])
}

/// □R from a jet via R² = ψ*ψ:
/// □R = [Re(ψ*□ψ) + ∂^μψ* ∂_μψ − ∂^μR ∂_μR] / R.
pub(crate) fn dalembertian_r(jet: &Jet, r: f64, dim: usize) -> (f64, [f64; 4]) {
    let psi = jet.psi;
    let mut dr = [0.0; 4];
    for mu in 0..=dim {
        dr[mu] = (psi.conj() * jet.grad[mu]).re / r;
    }
    let sign = |mu: usize| if mu == 0 { 1.0 } else { -1.0 };
    let grad_sq: f64 = (0..=dim).map(|mu| sign(mu) * jet.grad[mu].norm_sqr()).sum();
    let dr_sq: f64 = (0..=dim).map(|mu| sign(mu) * dr[mu] * dr[mu]).sum();
    let box_r = ((psi.conj() * jet.dalembertian()).re + grad_sq - dr_sq) / r;
    (box_r, dr)
}

pub(crate) fn polar_from_jet(
    jet: &Jet,
    mass: f64,
    dim: usize,
    node_floor: f64,
) -> Result<PolarData, NodeProximity> {
    let density = jet.psi.norm_sqr();
    if !(density > node_floor) {
        return Err(NodeProximity {
            density,
            threshold: node_floor,
        });
    }
    let r = density.sqrt();
    let (box_r, _) = dalembertian_r(jet, r, dim);
    let mut ds = [0.0; 4];
    for mu in 0..=dim {
        ds[mu] = (jet.psi.conj() * jet.grad[mu]).im / density;
    }
    Ok(PolarData {
        r,
        s_gradient: FourVector::new(ds[0], [ds[1], ds[2], ds[3]]),
        q: box_r / (2.0 * mass * r),
        meff2: mass * mass + box_r / r,
    })
}
