//! Two-particle relativistic wave functions ψ(x₁, x₂) on a common 1+1
//! dimensional box, built from two one-particle fields f and g.
//!
//! The symmetrised state is [f(x₁)g(x₂) + g(x₁)f(x₂)]/√2; the product state
//! f(x₁)g(x₂) serves as the separable control.

use num_complex::Complex64;

use super::{current_from_jet, dalembertian_r, FourVector, Jet, RelField, DEFAULT_NODE_THRESHOLD};
use crate::error::{Error, NodeProximity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    Symmetrized,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleField {
    f: RelField,
    g: RelField,
    pairing: Pairing,
}

impl TwoParticleField {
    pub fn new(f: RelField, g: RelField, pairing: Pairing) -> Result<Self, Error> {
        if f.spatial_dim() != 1 || g.spatial_dim() != 1 {
            return Err(Error::InvalidField(
                "two-particle fields are supported in 1+1 dimensions only".into(),
            ));
        }
        if f.mass() != g.mass() || f.box_length() != g.box_length() {
            return Err(Error::InvalidField(
                "both factors must share mass and box length".into(),
            ));
        }
        Ok(Self { f, g, pairing })
    }

    pub fn symmetrized(f: RelField, g: RelField) -> Result<Self, Error> {
        Self::new(f, g, Pairing::Symmetrized)
    }

    pub fn product(f: RelField, g: RelField) -> Result<Self, Error> {
        Self::new(f, g, Pairing::Product)
    }

    pub fn mass(&self) -> f64 {
        self.f.mass()
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    pub fn factors(&self) -> (&RelField, &RelField) {
        (&self.f, &self.g)
    }

    pub fn node_floor(&self, threshold: f64) -> f64 {
        threshold * self.f.mean_intensity() * self.g.mean_intensity()
    }

    /// Per-particle jets: entry `a` holds ψ with derivatives in x_a only.
    pub fn jets(&self, x1: &FourVector, x2: &FourVector) -> [Jet; 2] {
        let f1 = self.f.jet(x1);
        let g2 = self.g.jet(x2);
        let (g1, f2, k) = match self.pairing {
            Pairing::Symmetrized => (
                Some(self.g.jet(x1)),
                Some(self.f.jet(x2)),
                std::f64::consts::FRAC_1_SQRT_2,
            ),
            Pairing::Product => (None, None, 1.0),
        };
        let zero = Complex64::new(0.0, 0.0);
        let mut psi = f1.psi * g2.psi;
        if let (Some(g1), Some(f2)) = (&g1, &f2) {
            psi += g1.psi * f2.psi;
        }
        psi *= k;
        let mut out = [Jet {
            psi,
            grad: [zero; 4],
            hess: [[zero; 4]; 4],
        }; 2];
        for mu in 0..2 {
            out[0].grad[mu] = f1.grad[mu] * g2.psi;
            out[1].grad[mu] = f1.psi * g2.grad[mu];
            if let (Some(g1), Some(f2)) = (&g1, &f2) {
                out[0].grad[mu] += g1.grad[mu] * f2.psi;
                out[1].grad[mu] += g1.psi * f2.grad[mu];
            }
            out[0].grad[mu] *= k;
            out[1].grad[mu] *= k;
            for nu in 0..2 {
                out[0].hess[mu][nu] = f1.hess[mu][nu] * g2.psi;
                out[1].hess[mu][nu] = f1.psi * g2.hess[mu][nu];
                if let (Some(g1), Some(f2)) = (&g1, &f2) {
                    out[0].hess[mu][nu] += g1.hess[mu][nu] * f2.psi;
                    out[1].hess[mu][nu] += g1.psi * f2.hess[mu][nu];
                }
                out[0].hess[mu][nu] *= k;
                out[1].hess[mu][nu] *= k;
            }
        }
        out
    }

    pub fn psi(&self, x1: &FourVector, x2: &FourVector) -> Complex64 {
        let base = self.f.psi(x1) * self.g.psi(x2);
        match self.pairing {
            Pairing::Product => base,
            Pairing::Symmetrized => {
                (base + self.g.psi(x1) * self.f.psi(x2)) * std::f64::consts::FRAC_1_SQRT_2
            }
        }
    }

    /// Particle currents j_a^μ = i ψ* ∂↔_a^μ ψ.
    pub fn currents(&self, x1: &FourVector, x2: &FourVector) -> [FourVector; 2] {
        let jets = self.jets(x1, x2);
        [
            current_from_jet(jets[0].psi, &jets[0].grad),
            current_from_jet(jets[1].psi, &jets[1].grad),
        ]
    }

    /// Q = (1/2m) Σ_a □_a R / R.
    pub fn quantum_potential(
        &self,
        x1: &FourVector,
        x2: &FourVector,
    ) -> Result<f64, NodeProximity> {
        self.quantum_potential_with_threshold(x1, x2, DEFAULT_NODE_THRESHOLD)
    }

    pub fn quantum_potential_with_threshold(
        &self,
        x1: &FourVector,
        x2: &FourVector,
        threshold: f64,
    ) -> Result<f64, NodeProximity> {
        let jets = self.jets(x1, x2);
        let density = jets[0].psi.norm_sqr();
        let floor = self.node_floor(threshold);
        if !(density > floor) {
            return Err(NodeProximity {
                density,
                threshold: floor,
            });
        }
        let r = density.sqrt();
        let box_sum: f64 = jets.iter().map(|j| dalembertian_r(j, r, 1).0).sum();
        Ok(box_sum / (2.0 * self.mass() * r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ModeSpec, Normalization};
    use approx::assert_relative_eq;

    fn field(modes: &[(f64, i64)]) -> RelField {
        let specs: Vec<_> = modes
            .iter()
            .map(|&(a, k)| ModeSpec::one_dim(a, k))
            .collect();
        RelField::new(1.0, 6.0, 1, &specs, Normalization::UnitCharge).unwrap()
    }

    #[test]
    fn identical_modes_give_root_two_product() {
        let f = field(&[(1.0, 2)]);
        let two = TwoParticleField::symmetrized(f.clone(), f.clone()).unwrap();
        let (x1, x2) = (FourVector::tx(0.3, 1.1), FourVector::tx(-0.4, 2.7));
        let expected = f.psi(&x1) * f.psi(&x2) * 2f64.sqrt();
        assert!((two.psi(&x1, &x2) - expected).norm() < 1e-15);
        let mode = f.modes()[0];
        for j in two.currents(&x1, &x2) {
            assert_relative_eq!(
                j.x[0] / j.t,
                mode.momentum()[0] / mode.frequency(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn jet_psi_matches_direct_evaluation() {
        let two = TwoParticleField::symmetrized(
            field(&[(1.0, 0), (0.4, 2)]),
            field(&[(0.8, 1), (0.3, -1)]),
        )
        .unwrap();
        let (x1, x2) = (FourVector::tx(0.2, 0.5), FourVector::tx(1.0, 3.1));
        let jets = two.jets(&x1, &x2);
        assert!((jets[0].psi - two.psi(&x1, &x2)).norm() < 1e-15);
        // Two-particle Klein-Gordon: (□₁ + □₂ + 2m²)ψ = 0.
        let kg = jets[0].dalembertian() + jets[1].dalembertian() + jets[0].psi * 2.0;
        assert!(kg.norm() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_factors() {
        let f = field(&[(1.0, 0)]);
        let g = RelField::new(
            2.0,
            6.0,
            1,
            &[ModeSpec::one_dim(1.0, 0)],
            Normalization::UnitCharge,
        )
        .unwrap();
        assert!(TwoParticleField::product(f, g).is_err());
    }
}
