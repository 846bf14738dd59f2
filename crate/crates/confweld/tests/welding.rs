use confweld::beltrami::{iota_pullback, BeltramiSpec};
use confweld::conformal::{Constants, PowerSeriesMap};
use confweld::curve::sample_closed;
use confweld::fields::*;
use confweld::quadrature::{Annulus, QuadOptions};
use confweld::welding::*;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn poly(coeffs: &[C]) -> PowerSeriesMap<f64> {
    PowerSeriesMap::interior(coeffs)
}

fn mobius_homeo(a: C, n: usize) -> CircleHomeo<f64> {
    // e^{i theta} -> (z - a) / (1 - conj(a) z) = e^{i theta} u / conj(u), u = 1 - a e^{-i theta}
    CircleHomeo::from_fn(n, |t: f64| t + 2.0 * (c(1.0, 0.0) - a * C::from_polar(1.0, -t)).arg(), Interpolation::Spectral).unwrap()
}

fn smooth_homeo(n: usize, a: f64, b: f64, interp: Interpolation) -> CircleHomeo<f64> {
    CircleHomeo::from_fn(n, |t: f64| t + a * t.sin() + b * (2.0 * t + 0.3).cos(), interp).unwrap()
}

fn max_dev_from_circle(w: &WeldingTriple<f64>) -> f64 {
    let r = w.curve.points.iter().map(|p| p.norm()).sum::<f64>() / w.curve.len() as f64;
    w.curve.points.iter().map(|p| (p.norm() - r).abs()).fold(0.0, f64::max)
}

#[test]
fn rotation_inverse_and_double_inversion() {
    let r = CircleHomeo::<f64>::rotation(64, 0.7);
    let inv = invert_homeo(&r);
    assert!(inv.sup_distance(&CircleHomeo::rotation(64, -0.7)) < 1e-14);
    for interp in [Interpolation::Linear, Interpolation::MonotoneCubic, Interpolation::Spectral] {
        let h = smooth_homeo(512, 0.4, 0.1, interp);
        let back = invert_homeo(&invert_homeo(&h));
        assert!(back.sup_distance(&h) < 1e-10, "{interp:?}");
    }
}

#[test]
fn monotone_cubic_inverse_composes_to_identity() {
    let h = smooth_homeo(256, 0.6, 0.15, Interpolation::MonotoneCubic);
    let inv = invert_homeo(&h);
    for (&k, &v) in h.knots().iter().zip(h.values()) {
        assert!((inv.eval(v) - k).abs() < 1e-12);
    }
    for j in 0..50 {
        let t = 0.123 * j as f64;
        assert!((h.eval(inv.eval(t)) - t).abs() < 1e-5);
        assert!(h.deriv(t) > 0.0 && inv.deriv(t) > 0.0);
    }
}

#[test]
fn lift_must_increase() {
    assert!(CircleHomeo::from_values(vec![0.0, 1.0, 0.5, 2.0], Interpolation::Linear).is_err());
    assert!(CircleHomeo::from_values(vec![0.0, 1.0, 2.0, 7.0], Interpolation::Linear).is_err());
}

#[test]
fn uniform_measures_give_a_rotation() {
    let m = GmcMeasure::<f64>::uniform(256, 2.0);
    let h = homeo_from_measures(&m, &m, 0.9).unwrap();
    assert!(h.sup_distance(&CircleHomeo::rotation(256, -0.9)) < 1e-12);
    let scaled = GmcMeasure::uniform(256, 7.0);
    let w = sample_field::<f64>(FieldVariant::NeumannDot, 64, 3, ZeroMode::None).unwrap();
    let g = gmc_measure(&w, 0.8, 256, Regularization::Coupled).unwrap();
    let a = homeo_from_measures(&g, &m, 0.2).unwrap();
    let b = homeo_from_measures(&g, &scaled, 0.2).unwrap();
    assert!(a.sup_distance(&b) < 1e-12);
    assert!(homeo_from_measures(&GmcMeasure::uniform(256, 0.0), &m, 0.0).is_err());
    assert!(homeo_from_measures(&GmcMeasure::uniform(128, 1.0), &m, 0.0).is_err());
}

/// Lifted distribution function of a cell measure, written out directly.
fn cdf_lift(m: &GmcMeasure<f64>, x: f64) -> f64 {
    let n = m.weights.len();
    let turns = (x / (2.0 * PI)).floor();
    let u = (x - 2.0 * PI * turns) * n as f64 / (2.0 * PI);
    let i = (u.floor() as usize).min(n - 1);
    let before: f64 = m.weights[..i].iter().sum();
    turns * m.total_mass() + before + m.weights[i] * (u - i as f64)
}

#[test]
fn gmc_pushforward_total_variation() {
    let n = 4096;
    let f1 = sample_field::<f64>(FieldVariant::NeumannDot, 2048, 41, ZeroMode::None).unwrap();
    let f2 = sample_field::<f64>(FieldVariant::NeumannDot, 2048, 42, ZeroMode::None).unwrap();
    let m1 = gmc_measure(&f1, 1.0, n, Regularization::Coupled).unwrap();
    let m2 = gmc_measure(&f2, 1.0, n, Regularization::Coupled).unwrap();
    let alpha = 1.1;
    let h = homeo_from_measures(&m1, &m2, alpha).unwrap();
    assert!((h.eval(0.0) + alpha).abs() < 1e-10);
    let (a, b) = (m1.total_mass(), m2.total_mass());
    let th: Vec<f64> = (0..=n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
    let tv: f64 = (0..n)
        .map(|i| {
            let pulled = (cdf_lift(&m1, h.eval(th[i + 1])) - cdf_lift(&m1, h.eval(th[i]))) / a;
            (pulled - m2.weights[i] / b).abs()
        })
        .sum();
    assert!(tv < 1e-3, "{tv}");
}

#[test]
fn zipper_rotation_is_a_circle() {
    let w = zipper_weld::<f64>(&CircleHomeo::rotation(512, 0.3), 512).unwrap();
    assert!(w.residual < 1e-6, "{}", w.residual);
    assert!(max_dev_from_circle(&w) < 1e-10);
    assert!((w.f.lead() - c(1.0, 0.0)).norm() < 1e-12);
    assert!(zipper_weld::<f64>(&CircleHomeo::rotation(128, 0.3), 128).is_err());
}

#[test]
fn zipper_mobius_is_a_circle() {
    // f = T o M, g = T with M(z) = (z - a) / (1 - conj(a) z) and T(w) = (w + a) / (1 - |a|^2)
    let a = c(0.3, -0.2);
    let w = zipper_weld(&mobius_homeo(a, 1024), 1024).unwrap();
    let lambda = 1.0 / (1.0 - a.norm_sqr());
    let circle = sample_closed(4096, |t: f64| a * lambda + C::from_polar(lambda, t)).unwrap();
    let d = w.curve.hausdorff(&circle);
    assert!(d < 1e-3, "{d}");
    assert!((w.g.lead() - c(lambda, 0.0)).norm() < 1e-3);
}

#[test]
fn riemann_maps_of_circle_and_polynomial_curve() {
    let circle = sample_closed(256, |t: f64| C::from_polar(2.0, t)).unwrap();
    let w = riemann_maps_of_curve(&circle, 256).unwrap();
    assert!((w.f.lead() - c(2.0, 0.0)).norm() < 1e-10);
    assert!((w.g.lead() - c(2.0, 0.0)).norm() < 1e-10);
    assert!(w.h.distance_to_rotation() < 1e-10);

    let f = poly(&[c(0.1, 0.0)]);
    // sampled at a non-uniform parameter so that the correspondence is nontrivial
    let curve = sample_closed(512, |t: f64| {
        let s = t + 0.2 * t.sin();
        let z = C::from_polar(1.0, s);
        z + z * z * 0.1
    })
    .unwrap();
    let w = riemann_maps_of_curve(&curve, 512).unwrap();
    let fc = w.f.coeffs();
    assert!((fc[1] - c(1.0, 0.0)).norm() < 1e-4);
    assert!((fc[2] - c(0.1, 0.0)).norm() < 1e-4, "{:?}", &fc[..3]);
    assert!(fc[3..].iter().all(|a| a.norm() < 1e-4));
    assert!(w.h.values().windows(2).all(|p| p[1] > p[0]));
    assert!(w.residual < 1e-8);
    let direct = welding_of_interior_map(&f, 512).unwrap();
    assert!(direct.h.sup_distance(&w.h) < 1e-8);
}

#[test]
fn riemann_maps_reject_bad_curves() {
    let bow = sample_closed(256, |t: f64| c(t.sin(), (2.0 * t).sin())).unwrap();
    assert!(matches!(riemann_maps_of_curve(&bow, 256), Err(confweld::ConfError::Geometry(_))));
    let off = sample_closed(256, |t: f64| C::from_polar(0.5, t) + c(2.0, 0.0)).unwrap();
    assert!(matches!(riemann_maps_of_curve(&off, 256), Err(confweld::ConfError::Geometry(_))));
}

#[test]
fn welding_roundtrip_through_the_zipper() {
    let n = 2048;
    for coeffs in [vec![c(0.1, 0.0)], vec![c(0.0, 0.15), c(0.05, 0.0)], vec![c(0.1, -0.1), c(0.0, 0.0), c(0.05, 0.0)]] {
        let f = poly(&coeffs);
        let curve = sample_closed(n, |t: f64| f.horner(C::from_polar(1.0, t))[0]).unwrap();
        let w = riemann_maps_of_curve(&curve, n).unwrap();
        let z = zipper_weld(&w.h.clone().with_interpolation(Interpolation::MonotoneCubic), n).unwrap();
        let d = normalized_hausdorff(&z, &w);
        assert!(d < 1e-2, "{coeffs:?}: {d}");
        assert!(z.residual < 1e-4);
    }
}

#[test]
fn spectral_and_zipper_welds_agree() {
    let h = smooth_homeo(1024, 0.3, 0.05, Interpolation::Spectral);
    let s = spectral_weld(&h, WeldOptions { modes: 96, tol: 1e-10 }).unwrap();
    let z = zipper_weld(&h, 1024).unwrap();
    assert!(normalized_hausdorff(&s, &z) < 1e-4);
    assert!(spectral_weld(&h, WeldOptions { modes: 8, tol: 1e-12 }).is_err());
}

#[test]
fn inverse_welds_the_reflected_curve() {
    let f = poly(&[c(0.1, 0.05), c(-0.03, 0.0)]);
    let w = welding_of_interior_map(&f, 512).unwrap();
    let reflected = reflect_curve(&w.curve);
    let r = riemann_maps_of_curve(&reflected, 512).unwrap();
    let inv = invert_homeo(&w.h);
    assert!(inv.sup_distance(&r.h) < 1e-8, "{}", inv.sup_distance(&r.h));
}

#[test]
fn energies_of_a_circle_vanish() {
    let w = zipper_weld::<f64>(&CircleHomeo::rotation(512, 1.0), 512).unwrap();
    let e = welding_energies(&w).unwrap();
    assert!(e.k.abs() < 1e-12 && e.s1.abs() < 1e-12 && e.converged);
}

#[test]
fn s1_mode_sums_match_area_quadrature() {
    let f = poly(&[c(0.05, 0.0)]);
    let opts = QuadOptions::default().with_tol(1e-12, 1e-11);
    let mut values = Vec::new();
    for n in [256, 1024] {
        let w = welding_of_interior_map(&f, n).unwrap();
        let e = welding_energies(&w).unwrap();
        let q = s1_by_quadrature(&w, opts).unwrap();
        assert!(e.s1 > 0.0 && e.converged);
        assert!((e.s1 - q).abs() < 1e-10 * (1.0 + q), "{} vs {q}", e.s1);
        values.push(e.s1);
    }
    assert!((values[0] - values[1]).abs() < 1e-12);
}

#[test]
fn energies_are_rotation_invariant() {
    let f = poly(&[c(0.1, 0.0), c(0.0, 0.04)]);
    let w = welding_of_interior_map(&f, 256).unwrap();
    let base = welding_energies(&w).unwrap();
    let opts = WeldOptions { modes: 64, tol: 1e-10 };
    let h = w.h.clone().with_interpolation(Interpolation::Spectral);
    for j in 0..8 {
        let beta = 0.37 + 0.71 * j as f64;
        for moved in [h.rotated_left(beta), h.rotated_right(beta)] {
            let e = welding_energies(&spectral_weld(&moved, opts).unwrap()).unwrap();
            assert!((e.k - base.k).abs() < 1e-8 && (e.s1 - base.s1).abs() < 1e-8);
        }
    }
}

#[test]
fn omega_basic_properties() {
    let k = Constants::from_kappa(2.0).unwrap();
    let a = welding_of_interior_map(&poly(&[c(0.1, 0.0)]), 256).unwrap();
    let b = welding_of_interior_map(&poly(&[c(0.0, 0.05), c(0.02, 0.0)]), 256).unwrap();
    assert_eq!(omega(&a, &a, &k).unwrap(), 0.0);
    let (ab, ba) = (omega(&a, &b, &k).unwrap(), omega(&b, &a, &k).unwrap());
    assert!(ab != 0.0 && (ab + ba).abs() < 1e-15);
    let rotated = spectral_weld(&a.h.clone().with_interpolation(Interpolation::Spectral).rotated_left(0.8), WeldOptions::default()).unwrap();
    assert!(omega(&rotated, &a, &k).unwrap().abs() < 1e-9);
}

#[test]
fn curve_action_examples() {
    let circle = zipper_weld::<f64>(&CircleHomeo::identity(512), 512).unwrap();
    let q = 2.0;
    assert!(curve_liouville_action(&circle, |_| 0.0, q, 256).unwrap().abs() < 1e-14);
    assert!((curve_liouville_action(&circle, |_| 0.7, q, 256).unwrap() - 4.0 * q * 0.7).abs() < 1e-12);
    // 2 Re z: interior and exterior energies 2 each, zero mean
    assert!((curve_liouville_action(&circle, |z| 2.0 * z.re, q, 256).unwrap() - 4.0).abs() < 1e-10);
    // sin(40 theta) has energy 20 on each side once the grid is refined; a jump never resolves
    let wavy = |z: C| (40.0 * z.arg()).sin();
    assert!((curve_liouville_action(&circle, wavy, q, 64).unwrap() - 40.0).abs() < 1e-8);
    let jump = |z: C| z.im.signum();
    assert!(matches!(curve_liouville_action(&circle, jump, q, 64), Err(confweld::ConfError::Resolution(_))));
}

fn harmonic_field(coeffs: &[C]) -> impl Fn(C) -> f64 + '_ {
    move |w: C| {
        let mut p = c(0.0, 0.0);
        for a in coeffs.iter().rev() {
            p = p * w + a;
        }
        p.re
    }
}

#[test]
fn viklund_wang_identity() {
    let fields: [&[C]; 3] = [&[c(0.0, 0.0), c(2.0, 0.0)], &[c(0.3, 0.0), c(0.2, -0.1), c(0.0, 0.05), c(0.04, 0.0), c(-0.02, 0.03)], &[]];
    let curves: [&[C]; 5] = [&[], &[c(0.1, 0.0)], &[c(0.1, 0.1), c(0.0, -0.05)], &[c(0.0, 0.0), c(0.2, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0)]];
    for coeffs in curves {
        let w = welding_of_interior_map(&poly(coeffs), 512).unwrap();
        for field in fields {
            for q in [1.2, 2.0, 2.5] {
                let v = vw_residual(&w, harmonic_field(field), q, 1024).unwrap();
                let tol = if coeffs.is_empty() { 1e-8 } else { 1e-5 };
                assert!(v.residual() < tol, "{coeffs:?} {field:?} {q}: {v:?}");
            }
        }
    }
    // dilated circle: only the renormalised exterior action balances
    let big = welding_of_interior_map(&poly(&[]).scaled(c(1.7, 0.0)), 256).unwrap();
    assert!(vw_residual(&big, harmonic_field(&[c(0.1, 0.0), c(0.3, 0.2)]), 2.0, 512).unwrap().residual() < 1e-10);
}

fn mu_in(phase: f64) -> BeltramiSpec<f64> {
    iota_pullback(&BeltramiSpec::laurent(2).unwrap().scaled(C::from_polar(0.3, phase)))
}

fn mu_out(phase: f64) -> BeltramiSpec<f64> {
    BeltramiSpec::laurent(2).unwrap().scaled(C::from_polar(0.3, phase))
}

#[test]
fn tt06_variations_both_sides() {
    let k = Constants::from_kappa(2.0).unwrap();
    let opts = WeldOptions { modes: 48, tol: 1e-11 };
    let w = welding_of_interior_map(&poly(&[c(0.1, 0.0)]), 256).unwrap();
    for phase in [0.0, 1.0] {
        let r = tt06_residual(&w, &mu_in(phase), Composition::Right, 1e-4, &k, opts).unwrap();
        assert!(r.residual() < 1e-3 && r.predicted.norm() > 1e-2, "{r:?}");
        let l = tt06_residual(&w, &mu_out(phase), Composition::Left, 1e-4, &k, opts).unwrap();
        assert!(l.residual() < 1e-3 && l.predicted.norm() > 1e-2, "{l:?}");
    }
    let zero = tt06_residual(&w, &BeltramiSpec::zero(), Composition::Right, 1e-4, &k, opts).unwrap();
    assert_eq!(zero.residual(), 0.0);
    assert!(tt06_residual(&w, &mu_in(0.0), Composition::Right, 1e-2, &k, opts).is_err());
    assert!(tt06_residual(&w, &mu_out(0.0), Composition::Right, 1e-4, &k, opts).is_err());
}

#[test]
fn potential_derivative_splits_into_k_and_s1() {
    let opts = WeldOptions { modes: 48, tol: 1e-11 };
    let w = welding_of_interior_map(&poly(&[c(0.1, 0.05)]), 256).unwrap();
    let mu = mu_in(0.4);
    let (theta, varpi) = schwarzian_pairings(&w.f.clone().with_domain_radius(1.0), &mu).unwrap();
    let dk = directional_derivative(&Functional::K, &w, &mu, Composition::Right, 1e-4, opts).unwrap();
    let ds = directional_derivative(&Functional::S1, &w, &mu, Composition::Right, 1e-4, opts).unwrap();
    assert!((dk.holomorphic - varpi / 2.0).norm() < 1e-6, "{dk:?} {varpi}");
    assert!((ds.holomorphic - theta * (2.0 * PI)).norm() < 1e-5, "{ds:?} {theta}");
    // F real, so the antiholomorphic part is the conjugate
    assert!((dk.antiholomorphic - dk.holomorphic.conj()).norm() < 1e-8);
}

#[test]
fn rotation_generator_and_circle_give_zero() {
    let opts = WeldOptions { modes: 32, tol: 1e-11 };
    let w = welding_of_interior_map(&poly(&[c(0.1, 0.0)]), 256).unwrap();
    let rot = BeltramiSpec::new(Annulus::new(0.2, Some(0.6)), 0.5, |z: C| z / z.conj() * 0.5);
    let d = directional_derivative(&Functional::K, &w, &rot, Composition::Right, 1e-4, opts).unwrap();
    assert!(d.holomorphic.norm() < 1e-8, "{d:?}");
    let circle = zipper_weld::<f64>(&CircleHomeo::identity(256), 256).unwrap();
    let s = directional_derivative(&Functional::S1, &circle, &mu_in(0.3), Composition::Right, 1e-4, opts).unwrap();
    assert!(s.holomorphic.norm() < 1e-8 && !s.unreliable, "{s:?}");
    let s = directional_derivative(&Functional::S1, &circle, &mu_out(0.3), Composition::Left, 1e-4, opts).unwrap();
    assert!(s.holomorphic.norm() < 1e-8, "{s:?}");
}

#[test]
fn right_derivative_matches_left_derivative_of_inverse() {
    let opts = WeldOptions { modes: 48, tol: 1e-11 };
    let w = welding_of_interior_map(&poly(&[c(0.08, -0.04), c(0.03, 0.0)]), 256).unwrap();
    let inv_h = invert_homeo(&w.h.clone().with_interpolation(Interpolation::Spectral));
    let winv = spectral_weld(&inv_h, opts).unwrap();
    let mu = mu_in(0.9);
    let right = directional_derivative(&Functional::K, &w, &mu, Composition::Right, 1e-4, opts).unwrap();
    let left = directional_derivative(&Functional::K, &winv, &iota_pullback(&mu), Composition::Left, 1e-4, opts).unwrap();
    assert!(right.holomorphic.norm() > 1e-4);
    // left flow of iota^* mu at t is the symmetric flow of mu at conj(t)
    assert!((right.holomorphic + left.holomorphic.conj()).norm() < 1e-6, "{right:?} {left:?}");
    assert!(right.holomorphic.im.abs() > 1e-4);
}

#[test]
fn beta_functional_derivative_is_finite() {
    let opts = WeldOptions { modes: 32, tol: 1e-11 };
    let w = welding_of_interior_map(&poly(&[c(0.1, 0.0)]), 256).unwrap();
    let beta = Functional::Beta { n: 2, mu: mu_out(0.0) };
    let d = directional_derivative(&beta, &w, &mu_out(0.5), Composition::Left, 1e-4, opts).unwrap();
    assert!(d.holomorphic.norm().is_finite() && !d.unreliable);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inversion_is_an_involution(a in -0.8f64..0.8, b in -0.15f64..0.15, rot in -3.0f64..3.0) {
        let h = CircleHomeo::from_fn(256, |t: f64| t + rot + a * t.sin() + b * (2.0 * t).cos(), Interpolation::MonotoneCubic).unwrap();
        prop_assert!(invert_homeo(&invert_homeo(&h)).sup_distance(&h) < 1e-10);
    }

    #[test]
    fn measure_homeo_anchor_and_monotonicity(seed in 0u64..500, alpha in -3.0f64..3.0) {
        let f1 = sample_field::<f64>(FieldVariant::NeumannDot, 128, seed, ZeroMode::None).unwrap();
        let f2 = sample_field::<f64>(FieldVariant::NeumannDot, 128, seed + 1000, ZeroMode::None).unwrap();
        let m1 = gmc_measure(&f1, 1.2, 256, Regularization::Coupled).unwrap();
        let m2 = gmc_measure(&f2, 1.2, 256, Regularization::Coupled).unwrap();
        let h = homeo_from_measures(&m1, &m2, alpha).unwrap();
        prop_assert!((h.eval(0.0) + alpha).abs() < 1e-10);
        prop_assert!(h.values().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn zipper_fixes_the_gauge(a in -0.3f64..0.3, b in -0.05f64..0.05) {
        let h = CircleHomeo::from_fn(256, |t: f64| t + a * t.sin() + b * (2.0 * t).cos(), Interpolation::MonotoneCubic).unwrap();
        let w = zipper_weld(&h, 256).unwrap();
        prop_assert!((w.f.lead() - c(1.0, 0.0)).norm() < 1e-12);
        prop_assert!(w.f.coeffs()[0].norm() < 1e-15);
        prop_assert!(w.curve.is_simple());
        prop_assert!(w.residual < 1e-3);
    }
}
