use virasoro::checks::*;
use virasoro::ops::Engine;
use virasoro::poly::ModePoly;
use virasoro::verma::{gram_commutator, gram_matrix};
use virasoro::{basis_state_gram, Partition, Scalar};

fn engine() -> Engine {
    Engine::new(12)
}

#[test]
fn witt_commutators_vanish() {
    let r = witt_relations(&engine(), 4, 4);
    assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}

#[test]
fn virasoro_commutators_vanish() {
    let r = virasoro_relations(&engine(), 4, 4);
    assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}

#[test]
fn d_alpha_adjoints_vanish() {
    let r = adjoint_relations(&engine(), 3, 3, 3);
    assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}

#[test]
fn adjoint_examples() {
    let e = engine();
    let a = ModePoly::alpha();
    let one = ModePoly::one();
    let p1 = ModePoly::phi(1);
    assert!(adjoint_residual(&e, 1, &a, &one, &one).unwrap().is_zero());
    assert!(adjoint_residual(&e, 1, &a, &p1, &p1).unwrap().is_zero());
    let p2 = ModePoly::phi(2);
    assert!(adjoint_residual(&e, 2, &a, &p2, &p1.pow(2)).unwrap().is_zero());
}

#[test]
fn printed_sign_of_alpha_term_breaks_adjointness() {
    // With D_{1,alpha}(1) = +(alpha/2) phibar_1 the pairing <D 1, phibar_1> picks up an extra -Q.
    let e = engine();
    let a = ModePoly::alpha();
    let one = ModePoly::one();
    let pb = ModePoly::phibar(1);
    let flipped = e.d_alpha_apply(1, &a.conj(), &one).unwrap().neg();
    let lhs = virasoro::inner(&flipped, &pb, virasoro::WickLaw::NeumannDot).unwrap();
    let dual = ModePoly::q().scale_int(2).sub(&a);
    let g2 = e.d_alpha_apply(-1, &dual.neg(), &pb).unwrap();
    let rhs = virasoro::inner(&one, &g2, virasoro::WickLaw::NeumannDot).unwrap();
    assert!(!lhs.sub(&rhs).is_zero());
}

#[test]
fn gram_constants_agree() {
    let r = gram_consistency(&engine(), 4);
    assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}

#[test]
fn gram_examples() {
    let e = engine();
    let a = ModePoly::alpha();
    let (s, g) = basis_state_gram(&e, &a, &Partition::empty(), &Partition::empty()).unwrap();
    assert_eq!(s, ModePoly::one());
    assert_eq!(g, ModePoly::one());
    let k = Partition::from_parts(&[1]);
    let (_, g) = basis_state_gram(&e, &a, &k, &k).unwrap();
    assert_eq!(g, Engine::delta(&a).scale_int(2));
}

#[test]
fn l2_lm2_on_vacuum() {
    let e = engine();
    let a = ModePoly::alpha();
    let one = ModePoly::one();
    let lhs = e
        .ff_apply(2, &a, &e.ff_apply(-2, &a, &one).unwrap())
        .unwrap()
        .sub(&e.ff_apply(-2, &a, &e.ff_apply(2, &a, &one).unwrap()).unwrap());
    let rhs = Engine::delta(&a)
        .scale_int(4)
        .add(&Engine::central_charge().scale(&Scalar::from_frac(1, 2)));
    assert_eq!(lhs, rhs);
}

#[test]
fn highest_weight_vector() {
    let e = engine();
    let a = ModePoly::alpha();
    for n in 1..=4 {
        assert!(e.ff_apply(n, &a, &ModePoly::one()).unwrap().is_zero());
    }
}

fn kac_roots(gamma: &Scalar, gamma_inv: &Scalar) -> Vec<Scalar> {
    let half = Scalar::from_frac(1, 2);
    let two = Scalar::from_int(2);
    let g2 = &(gamma * &half);
    let tg = &(&two * gamma_inv);
    let mut out = Vec::new();
    for (r, s) in [(1i64, 1i64), (1, 2), (2, 1)] {
        for sign in [-1i64, 1] {
            let a = &g2.scale_int(1 + sign * r) + &tg.scale_int(1 + sign * s);
            out.push(a);
        }
    }
    out
}

#[test]
fn level_two_determinant_roots() {
    let sqrt2 = Scalar::sqrt2();
    let cases = [
        (Scalar::one(), Scalar::one()),
        (sqrt2.clone(), &sqrt2 * &Scalar::from_frac(1, 2)),
        (Scalar::from_frac(2, 3), Scalar::from_frac(3, 2)),
    ];
    for (g, gi) in cases {
        let q = &(&g * &Scalar::from_frac(1, 2)) + &(&gi * &Scalar::from_int(2));
        for root in kac_roots(&g, &gi) {
            assert!(level2_det_at(&q, &root).is_zero(), "root {root}");
        }
        let off = &q + &(&Scalar::i() * &Scalar::from_frac(1, 10));
        assert!(!level2_det_at(&q, &off).is_zero());
    }
}

#[test]
fn level_two_matrix_is_symmetric_in_real_alpha() {
    let a = ModePoly::alpha();
    let (_, m) = gram_matrix(&a, 2);
    assert_eq!(m[0][1], m[1][0]);
    let k = Partition::from_parts(&[2]);
    let k2 = Partition::from_parts(&[1, 1]);
    assert_eq!(gram_commutator(&a, &k, &k2), m[0][1]);
}

#[test]
fn adjoint_restricted_to_holomorphic_is_reflected_ff() {
    let r = coincidence(&engine(), 3, 4);
    assert!(r.passed(), "{:?}", &r.failures[..r.failures.len().min(5)]);
}
