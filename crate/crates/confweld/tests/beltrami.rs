use confweld::beltrami::*;
use confweld::conformal::{pair_q_beltrami, pair_q_vector, schwarzian, MapKind, PowerSeriesMap, QuadDiffFn, VectorFieldSeries};
use confweld::quadrature::{Annulus, QuadOptions};
use num_complex::Complex64 as C;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn circle(n: usize, r: f64) -> Vec<C> {
    (0..n).map(|j| C::from_polar(r, 2.0 * PI * j as f64 / n as f64 + 0.1)).collect()
}

#[test]
fn laurent_mode_transform_on_circle() {
    let mu = BeltramiSpec::<f64>::laurent(2).unwrap();
    let d0 = transform_derivative_at_zero(&mu, QuadOptions::default()).unwrap().value;
    assert!((d0 - c(1.0, 0.0)).norm() < 1e-9, "{d0}");
    for z in circle(8, 1.0) {
        let t = cauchy_transform(&mu, z).unwrap();
        assert!(!t.principal);
        // fixing 0, 1 and infinity adds the affine correction z
        assert!((t.v - (-z * z * z + z)).norm() < 1e-6, "{z}: {}", t.v);
        assert!((t.v - z * d0 + z * z * z).norm() < 1e-6);
    }
}

#[test]
fn transform_vanishes_at_zero_and_one() {
    let mu = BeltramiSpec::laurent(3).unwrap().scaled(c(0.01, 0.02));
    let one = cauchy_transform(&mu, c(1.0, 0.0)).unwrap();
    assert_eq!(one.w, c(0.0, 0.0));
    let near = cauchy_transform(&mu, c(1.0 + 1e-7, 0.0)).unwrap();
    assert!(near.w.norm() < 1e-6);
    let origin = cauchy_transform(&mu, c(0.0, 0.0)).unwrap();
    assert_eq!(origin.v, c(0.0, 0.0));
    let small = cauchy_transform(&mu, c(1e-7, 0.0)).unwrap();
    assert!(small.v.norm() < 1e-6);
}

fn dbar(mu: &BeltramiSpec<f64>, z0: C, h: f64) -> C {
    let v = |z: C| cauchy_transform(mu, z).unwrap().v;
    let dx = (v(z0 + h) - v(z0 - h)) / (2.0 * h);
    let dy = (v(z0 + c(0.0, h)) - v(z0 - c(0.0, h))) / (2.0 * h);
    (dx + c(0.0, 1.0) * dy) * 0.5
}

#[test]
fn dbar_of_transform_recovers_mu() {
    let mu = BeltramiSpec::laurent(2).unwrap();
    for z0 in [C::from_polar(3.0, 0.4), C::from_polar(2.6, 2.0), C::from_polar(4.5, -1.1)] {
        let t = cauchy_transform(&mu, z0).unwrap();
        assert!(t.principal);
        let d = dbar(&mu, z0, 1e-4);
        let m = mu.eval(z0);
        assert!((d - m).norm() / m.norm() < 1e-4, "{z0}: {d} vs {m}");
    }
}

#[test]
fn dbar_inside_a_disc_support() {
    let mu = BeltramiSpec::new(Annulus::disc(0.5), 0.25, |z: C| z * z.conj());
    let z0 = c(0.2, 0.1);
    let d = dbar(&mu, z0, 1e-4);
    assert!((d - mu.eval(z0)).norm() / mu.eval(z0).norm() < 1e-4);
}

#[test]
fn symmetric_flow_preserves_circle_to_second_order() {
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.1, 0.0));
    let spec = FlowSpec::new(Normalization::Fix01Inf, mu, true);
    let mut dev = Vec::new();
    for t in [1e-2, 1e-3] {
        let worst = circle(6, 1.0)
            .into_iter()
            .map(|z| (first_order_flow(&spec, c(t, 0.5 * t), z).unwrap().norm() - 1.0).abs())
            .fold(0.0, f64::max);
        dev.push(worst);
    }
    // at first order the deviation is zero; what is left scales like t^2
    assert!(dev[0] < 1e-3 && dev[1] < 1e-5, "{dev:?}");
}

#[test]
fn derivative_normalized_flow_fixes_origin() {
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.05, 0.0));
    let spec = FlowSpec::new(Normalization::Fix0Deriv0Inf, mu, false);
    let t = c(1e-2, 0.0);
    assert_eq!(first_order_flow(&spec, t, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
    let h = 1e-4;
    let d = (first_order_flow(&spec, t, c(h, 0.0)).unwrap() - first_order_flow(&spec, t, c(-h, 0.0)).unwrap()) / (2.0 * h);
    assert!((d - 1.0).norm() < 1e-6, "{d}");
    let bad = FlowSpec::new(Normalization::Fix0Deriv0Inf, BeltramiSpec::constant(Annulus::disc(0.5), c(0.1, 0.0)), false);
    assert!(matches!(first_order_flow(&bad, t, c(0.3, 0.0)), Err(confweld::ConfError::Configuration(_))));
}

#[test]
fn prepared_flow_matches_pointwise_flow() {
    let mu = BeltramiSpec::laurent(3).unwrap().scaled(c(0.01, 0.0));
    let probes = circle(8, 1.0);
    let t = c(1e-3, -2e-3);
    for (norm, sym) in [(Normalization::Fix01Inf, true), (Normalization::Fix0Deriv0Inf, false)] {
        let spec = FlowSpec::new(norm, mu.clone(), sym);
        let flow = Flow::new(&spec, &probes, QuadOptions::default()).unwrap();
        for z in circle(5, 1.0) {
            let a = flow.apply(t, z).unwrap();
            let b = first_order_flow(&spec, t, z).unwrap();
            assert!((a - b).norm() < 1e-11, "{norm:?}");
        }
    }
    let bounded = FlowSpec::new(Normalization::Fix0InfDerivInf, mu, true);
    assert!(Flow::new(&bounded, &probes, QuadOptions::default()).is_err());
}

#[test]
fn iota_of_laurent_mode() {
    let mu = BeltramiSpec::laurent(2).unwrap();
    let im = iota_pullback(&mu);
    for z in [c(0.1, 0.2), c(-0.3, 0.05), c(0.0, 0.45)] {
        assert!((im.eval(z) - 32.0 * z.norm_sqr()).norm() < 1e-12);
    }
    assert_eq!(im.eval(c(0.6, 0.0)), c(0.0, 0.0));
}

#[test]
fn push_then_pull_is_identity() {
    let f = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.0, 0.0), &[c(0.2, 0.1), c(-0.03, 0.0)]);
    let mu = BeltramiSpec::laurent(2).unwrap();
    let pushed = pushforward_beltrami(&f, &mu, Direction::Push).unwrap();
    let back = pushforward_beltrami(&f, &pushed, Direction::Pull).unwrap();
    for z in [c(2.5, 0.3), c(-3.0, 1.0), c(0.2, -5.0)] {
        assert!((back.eval(z) - mu.eval(z)).norm() < 1e-10 * mu.eval(z).norm());
    }
    let id = PowerSeriesMap::identity(MapKind::Exterior);
    let same = pushforward_beltrami(&id, &mu, Direction::Push).unwrap();
    assert!((same.eval(c(3.0, 1.0)) - mu.eval(c(3.0, 1.0))).norm() < 1e-12);
}

#[test]
fn rotation_preserves_modulus() {
    let th = 0.7;
    let f = PowerSeriesMap::dilation(MapKind::Interior, C::from_polar(1.0, th));
    let mu = BeltramiSpec::new(Annulus::new(0.1, Some(0.6)), 0.3, |z: C| c(0.3, 0.0) * z.norm() * (z / z.conj()));
    let pushed = pushforward_beltrami(&f, &mu, Direction::Push).unwrap();
    for z in [c(0.3, 0.1), c(-0.2, 0.3)] {
        let a = pushed.eval(z).norm();
        let b = mu.eval(z * C::from_polar(1.0, -th)).norm();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn pushforward_matches_first_order_deformation() {
    // H_t = (f + t V) o f^{-1} with dbar V = mu f' has Beltrami coefficient t f_* mu + O(t^2)
    let f = PowerSeriesMap::interior(&[c(0.15, 0.05), c(-0.02, 0.0)]);
    let c0 = c(0.2, 0.1);
    let mu = BeltramiSpec::new(Annulus::disc(0.9), 0.2, move |z: C| c0 * z);
    let pushed = pushforward_beltrami(&f, &mu, Direction::Push).unwrap();
    let t = 1e-6;
    let big_v = |z: C| c0 * z * z.conj() * f.deriv(z).unwrap();
    let h_t = |w: C| {
        let z = f.invert_point(w, None).unwrap();
        f.eval(z).unwrap() + big_v(z) * t
    };
    for w in [c(0.2, 0.1), c(-0.3, 0.25)] {
        let h = 1e-4;
        let dx = (h_t(w + h) - h_t(w - h)) / (2.0 * h);
        let dy = (h_t(w + c(0.0, h)) - h_t(w - c(0.0, h))) / (2.0 * h);
        let dz = (dx - c(0.0, 1.0) * dy) * 0.5;
        let dzb = (dx + c(0.0, 1.0) * dy) * 0.5;
        let coeff = dzb / dz / t;
        assert!((coeff - pushed.eval(w)).norm() < 1e-4 * pushed.eval(w).norm(), "{coeff} vs {}", pushed.eval(w));
    }
}

#[test]
fn laurent_pairings() {
    let mu = BeltramiSpec::laurent(2).unwrap();
    let q = QuadDiffFn::monomial(c(1.0, 0.0), -4);
    let a = pair_q_beltrami(&q, &mu).unwrap().value;
    assert!((a - 1.0).norm() < 1e-9, "{a}");
    // the contour pairing with v_2 = -z^3 carries the opposite sign for an exterior mu
    let b = pair_q_vector(&q, &VectorFieldSeries::basis(2), 1.0).unwrap().value;
    assert!((a + b).norm() < 1e-9);
}

#[test]
fn indicator_pairing_closed_form() {
    let mu = BeltramiSpec::constant(Annulus::new(1.0, Some(2.0)), c(1.0, 0.0));
    // (1/pi) int z^2 over the annulus: the angular integral of e^{2 i theta} vanishes
    let q = QuadDiffFn::monomial(c(1.0, 0.0), 2);
    assert!(pair_q_beltrami(&q, &mu).unwrap().value.norm() < 1e-12);
    let q0 = QuadDiffFn::monomial(c(1.0, 0.0), 0);
    // (1/pi) pi (4 - 1) = 3
    assert!((pair_q_beltrami(&q0, &mu).unwrap().value - 3.0).norm() < 1e-12);
}

#[test]
fn beta_is_linear_and_decays() {
    let g = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.0, 0.0), &[c(0.2, 0.0)]);
    let m2 = BeltramiSpec::laurent(2).unwrap();
    let m3 = BeltramiSpec::laurent(3).unwrap();
    let a = beta_coefficients(&g, &m2, 20).unwrap();
    let b = beta_coefficients(&g, &m3, 20).unwrap();
    let s = beta_coefficients(&g, &m2.scaled(c(0.5, 0.0)).add(&m3.scaled(c(0.0, 2.0))), 20).unwrap();
    for k in 0..a.values.len() {
        let expect = a.values[k] * 0.5 + b.values[k] * c(0.0, 2.0);
        assert!((s.values[k] - expect).norm() < 1e-9);
    }
    // a single Laurent mode only reaches finitely many beta_n
    assert_eq!(a.decay_rate, 0.0);
    let spread = BeltramiSpec::new(Annulus::new(2.0, Some(4.0)), 0.8, |z: C| 0.2 / (1.0 - 1.5 / z.conj()));
    let d = beta_coefficients(&g, &spread, 30).unwrap();
    assert!(d.decay_rate > 0.0 && d.decay_rate < 1.0, "{}", d.decay_rate);
    let q = d.decay_rate;
    let scale = (20..=30).map(|n| d.get(n).norm() / q.powi(n)).fold(0.0, f64::max);
    for n in 20..=30 {
        assert!(d.get(n).norm() <= 1.01 * scale * q.powi(n));
    }
}

#[test]
fn beta_weights_under_dilation_and_translation() {
    let g = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.1, 0.0), &[c(0.2, 0.05)]);
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.3, 0.0));
    let (d_scale, d_shift, b0) = beta_weight_derivatives(&g, &mu, 1e-4).unwrap();
    assert!(d_scale.norm() < 1e-7, "{d_scale}");
    assert!((d_shift - b0).norm() < 1e-6 * (1.0 + b0.norm()), "{d_shift} vs {b0}");
}

fn closed_form_diagonal(psi: &PowerSeriesMap<f64>, z: C) -> (C, C) {
    let (a, s) = schwarzian(psi, z).unwrap();
    (-s * (2.0 / 3.0) + a * a * 0.75, -s * (5.0 / 6.0) - a * a * 1.5)
}

#[test]
fn kernel_diagonal_derivatives() {
    let psi = PowerSeriesMap::interior(&[c(0.1, 0.0)]).with_domain_radius(2.0);
    for k in 0..16 {
        let z = C::from_polar(0.2 + 0.02 * k as f64, 0.4 * k as f64);
        let (fz, fzeta) = kernel_diagonal_fit(&psi, z, 0.05, 64).unwrap();
        let (ez, ezeta) = closed_form_diagonal(&psi, z);
        assert!((fz - ez).norm() < 1e-8 * ez.norm(), "{z}: {fz} vs {ez}");
        assert!((fzeta - ezeta).norm() < 1e-8 * ezeta.norm());
        let s = schwarzian(&psi, z).unwrap().1;
        assert!((fz * 2.0 + fzeta + s * (13.0 / 6.0)).norm() < 1e-8 * s.norm());
    }
}

#[test]
fn kernel_combination_vanishes_for_mobius() {
    let psi = PowerSeriesMap::disc_mobius(c(0.3, 0.1), 80);
    let (fz, fzeta) = kernel_diagonal_fit(&psi, c(0.1, -0.05), 0.05, 64).unwrap();
    assert!((fz * 2.0 + fzeta).norm() < 1e-9, "{}", fz * 2.0 + fzeta);
}

#[test]
fn ghost_sum_identity_is_trivial() {
    let g = PowerSeriesMap::identity(MapKind::Exterior);
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.3, 0.0));
    let r = ghost_sum_check(&g, &mu, 10).unwrap();
    assert!(r.lhs.norm() < 1e-10 && r.rhs.norm() < 1e-10);
}

#[test]
fn ghost_sum_translation() {
    let g = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.1, 0.0), &[]);
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.3, 0.0));
    let r = ghost_sum_check(&g, &mu, 20).unwrap();
    assert!(r.rhs.norm() < 1e-12);
    assert!(r.lhs.norm() < r.truncation_bound + 1e-8, "{} {}", r.lhs, r.truncation_bound);
}

#[test]
fn ghost_sum_matches_schwarzian_pairing() {
    let g = PowerSeriesMap::exterior(c(1.0, 0.0), c(0.0, 0.0), &[c(0.2, 0.0)]);
    let mu = BeltramiSpec::laurent(2).unwrap().scaled(c(0.3, 0.0));
    let r = ghost_sum_check(&g, &mu, 40).unwrap();
    assert!((r.lhs - r.rhs).norm() < 1e-4);
}
