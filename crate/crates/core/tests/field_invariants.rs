//! Property tests of the analytic fields over randomly drawn mode sets.

use num_complex::Complex64;
use pilotwave::field::nonrel::{Gauss1D, GaussComponent, NonRelField};
use pilotwave::field::two_particle::TwoParticleField;
use pilotwave::guidance::velocity_rel;
use pilotwave::{FourVector, ModeSpec, Normalization, RelField};
use proptest::prelude::*;

fn modes(dim: usize) -> impl Strategy<Value = Vec<ModeSpec>> {
    prop::collection::vec(
        (
            (-1.0..1.0f64, -1.0..1.0f64),
            prop::array::uniform3(-3i64..=3),
        ),
        1..5,
    )
    .prop_map(move |v| {
        let mut out: Vec<ModeSpec> = Vec::new();
        for ((re, im), mut k) in v {
            for c in k.iter_mut().skip(dim) {
                *c = 0;
            }
            if out.iter().all(|m| m.wave_numbers != k) {
                // Keep the first amplitude away from zero so the field is never trivial.
                let re = if out.is_empty() {
                    re.signum() * (0.2 + re.abs())
                } else {
                    re
                };
                out.push(ModeSpec::new(Complex64::new(re, im), k));
            }
        }
        out
    })
}

fn rel_field() -> impl Strategy<Value = RelField> {
    (0.3..3.0f64, 1.0..10.0f64, 1usize..=3)
        .prop_flat_map(|(m, l, d)| (Just(m), Just(l), Just(d), modes(d)))
        .prop_map(|(m, l, d, modes)| RelField::new(m, l, d, &modes, Normalization::Raw).unwrap())
}

fn point(d: usize) -> impl Strategy<Value = FourVector> {
    (-5.0..5.0f64, prop::array::uniform3(-10.0..10.0f64)).prop_map(move |(t, mut x)| {
        for c in x.iter_mut().skip(d) {
            *c = 0.0;
        }
        FourVector::new(t, x)
    })
}

fn field_and_point() -> impl Strategy<Value = (RelField, FourVector)> {
    rel_field().prop_flat_map(|f| {
        let d = f.spatial_dim();
        (Just(f), point(d))
    })
}

/// Σ|c|ω², a bound on every term entering □ψ.
fn second_order_scale(f: &RelField) -> f64 {
    f.modes()
        .iter()
        .map(|m| m.amplitude().norm() * m.frequency().powi(2))
        .sum::<f64>()
        * f.normalization()
}

proptest! {
    #[test]
    fn modes_lie_on_the_mass_shell(f in rel_field()) {
        for mode in f.modes() {
            let p2: f64 = mode.momentum().iter().map(|p| p * p).sum();
            let w = mode.frequency();
            prop_assert!(w > 0.0);
            prop_assert!((w * w - p2 - f.mass().powi(2)).abs() <= 1e-14 * w * w);
            for (p, k) in mode.momentum().iter().zip(mode.wave_numbers()) {
                prop_assert!((p - std::f64::consts::TAU * k as f64 / f.box_length()).abs() <= 1e-14 * p.abs().max(1.0));
            }
        }
    }

    #[test]
    fn field_is_periodic_in_every_direction((f, p) in field_and_point()) {
        let scale = f.modes().iter().map(|m| m.amplitude().norm()).sum::<f64>() * f.normalization();
        let psi = f.psi(&p);
        for axis in 0..f.spatial_dim() {
            let mut q = p;
            q.x[axis] += f.box_length();
            prop_assert!((f.psi(&q) - psi).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn analytic_second_derivatives_satisfy_klein_gordon((f, p) in field_and_point()) {
        let jet = f.jet(&p);
        let residual = jet.dalembertian() + jet.psi * f.mass().powi(2);
        prop_assert!(residual.norm() <= 1e-12 * second_order_scale(&f));
    }

    #[test]
    fn polar_data_is_consistent((f, p) in field_and_point()) {
        let psi = f.psi(&p);
        if let Ok(polar) = f.polar(&p) {
            prop_assert!((polar.r * polar.r - psi.norm_sqr()).abs() <= 1e-12 * psi.norm_sqr());
            let m = f.mass();
            prop_assert!((polar.meff2 - m * m - 2.0 * m * polar.q).abs() <= 1e-12 * (polar.meff2.abs() + m * m));
            // j^μ = −2R²∂^μS, so the guidance velocity is −∂^μS/m.
            let u = velocity_rel(&f, &p, 1e-10).unwrap();
            let raised = polar.s_gradient.flip_index();
            let j = f.current(&p);
            for mu in 0..=f.spatial_dim() {
                let scale = u.component(mu).abs().max(1.0);
                prop_assert!((u.component(mu) + raised.component(mu) / m).abs() <= 1e-10 * scale);
                prop_assert!((j.component(mu) + 2.0 * polar.r * polar.r * raised.component(mu)).abs() <= 1e-10 * j.component(mu).abs().max(psi.norm_sqr()));
            }
        }
    }

    #[test]
    fn single_mode_current_is_constant(m in 0.3..3.0f64, l in 1.0..10.0f64, k in -4i64..=4, re in 0.1..2.0f64, im in -2.0..2.0f64, p in point(1)) {
        let c = Complex64::new(re, im);
        let f = RelField::new(m, l, 1, &[ModeSpec::new(c, [k, 0, 0])], Normalization::Raw).unwrap();
        let mode = &f.modes()[0];
        let j = f.current(&p);
        let c2 = c.norm_sqr();
        prop_assert!((j.t - 2.0 * c2 * mode.frequency()).abs() <= 1e-13 * j.t.abs());
        prop_assert!((j.x[0] - 2.0 * c2 * mode.momentum()[0]).abs() <= 1e-13 * j.t.abs());
        let polar = f.polar(&p).unwrap();
        prop_assert!(polar.q.abs() <= 1e-12 * m);
        let u = velocity_rel(&f, &p, 1e-10).unwrap();
        prop_assert!((u.x[0] / u.t - mode.momentum()[0] / mode.frequency()).abs() <= 1e-14);
    }

    #[test]
    fn index_flip_is_an_involution(t in -10.0..10.0f64, x in prop::array::uniform3(-10.0..10.0f64)) {
        let v = FourVector::new(t, x);
        prop_assert_eq!(v.flip_index().flip_index(), v);
        let norm2 = t * t - x.iter().map(|c| c * c).sum::<f64>();
        prop_assert!((v.dot(&v) - norm2).abs() <= 1e-12 * (t * t + 300.0));
    }

    #[test]
    fn nonrel_velocity_is_the_phase_gradient(x in -5.0..5.0f64, t in 0.0..3.0f64, v1 in -2.0..2.0f64, v2 in -2.0..2.0f64, w in 0.5..2.0f64) {
        let f = NonRelField::new(
            1.3,
            vec![
                GaussComponent::one_dim(Complex64::new(1.0, 0.0), Gauss1D::new(-2.0, v1, w)),
                GaussComponent::one_dim(Complex64::new(0.2, 0.6), Gauss1D::new(2.0, v2, w)),
            ],
        )
        .unwrap();
        if let Ok(polar) = f.polar(&[x], t) {
            let h = 1e-6;
            let dphase = (f.psi(&[x + h], t) / f.psi(&[x - h], t)).arg() / (2.0 * h);
            prop_assert!((polar.velocity[0] - dphase / f.mass()).abs() <= 1e-5 * polar.velocity[0].abs().max(1.0));
        }
    }
}

#[test]
fn spatial_derivative_matches_central_difference() {
    let f = RelField::new(
        1.0,
        std::f64::consts::TAU / 99f64.sqrt(),
        1,
        &[ModeSpec::one_dim(1.0, 0), ModeSpec::one_dim(0.5, 1)],
        Normalization::Raw,
    )
    .unwrap();
    let h = 1e-4;
    for i in 0..10 {
        let p = FourVector::tx(0.37 * i as f64, 0.061 * i as f64);
        let (_, grad) = f.first_jet(&p);
        let fd = (f.psi(&FourVector::tx(p.t, p.x[0] + h))
            - f.psi(&FourVector::tx(p.t, p.x[0] - h)))
            / (2.0 * h);
        assert!(
            (fd - grad[1]).norm() <= 1e-6 * grad[1].norm().max(1e-3),
            "{fd} vs {}",
            grad[1]
        );
    }
}

#[test]
fn gaussian_quantum_potential_at_the_peak() {
    for (m, s) in [(1.0, 1.0), (2.0, 0.5), (0.7, 1.8)] {
        let f = NonRelField::new(
            m,
            vec![GaussComponent::one_dim(
                Complex64::new(1.0, 0.0),
                Gauss1D::new(0.0, 0.0, s),
            )],
        )
        .unwrap();
        let q = f.polar(&[0.0], 0.0).unwrap().q;
        assert!((q - 1.0 / (4.0 * m * s * s)).abs() <= 1e-12 * q);
    }
}

fn single(k: i64, amp: f64) -> RelField {
    RelField::new(
        1.0,
        6.0,
        1,
        &[ModeSpec::one_dim(amp, k)],
        Normalization::UnitCharge,
    )
    .unwrap()
}

fn mixed_q_difference(field: &TwoParticleField, t: f64, a: f64, b: f64, h: f64) -> f64 {
    let q = |x1: f64, x2: f64| {
        field
            .quantum_potential(&FourVector::tx(t, x1), &FourVector::tx(t, x2))
            .unwrap()
    };
    (q(a + h, b + h) - q(a + h, b - h) - q(a - h, b + h) + q(a - h, b - h)) / (4.0 * h * h)
}

#[test]
fn product_quantum_potential_separates() {
    let f = RelField::new(
        1.0,
        6.0,
        1,
        &[ModeSpec::one_dim(1.0, 0), ModeSpec::one_dim(0.4, 2)],
        Normalization::UnitCharge,
    )
    .unwrap();
    let g = RelField::new(
        1.0,
        6.0,
        1,
        &[ModeSpec::one_dim(0.8, 1), ModeSpec::one_dim(0.3, -1)],
        Normalization::UnitCharge,
    )
    .unwrap();
    let product = TwoParticleField::product(f.clone(), g.clone()).unwrap();
    let entangled = TwoParticleField::symmetrized(f, g).unwrap();
    let mut strongest = 0.0f64;
    for i in 0..12 {
        for j in 0..12 {
            let (a, b) = (0.5 * i as f64, 0.5 * j as f64);
            let h = 1e-3;
            assert!(mixed_q_difference(&product, 0.3, a, b, h).abs() <= 1e-8);
            if entangled
                .quantum_potential(&FourVector::tx(0.3, a), &FourVector::tx(0.3, b))
                .is_ok()
            {
                strongest = strongest.max(mixed_q_difference(&entangled, 0.3, a, b, h).abs());
            }
        }
    }
    assert!(strongest > 1e-3, "strongest mixed difference {strongest}");
}

#[test]
fn identical_modes_move_both_particles_at_the_group_velocity() {
    let f = single(2, 1.0);
    let field = TwoParticleField::symmetrized(f.clone(), f.clone()).unwrap();
    let mode = &f.modes()[0];
    let slope = mode.momentum()[0] / mode.frequency();
    for (x1, x2) in [(0.1, 2.0), (4.0, 1.5), (3.3, 3.3)] {
        let [j1, j2] = field.currents(&FourVector::tx(0.2, x1), &FourVector::tx(-1.0, x2));
        assert!((j1.x[0] / j1.t - slope).abs() <= 1e-14);
        assert!((j2.x[0] / j2.t - slope).abs() <= 1e-14);
    }
}
