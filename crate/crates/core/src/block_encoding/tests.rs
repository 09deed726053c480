use super::*;
use crate::gates;
use crate::operator::unitarity_defect;
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense one-ancilla encoding `[[D, S], [S, -D]]` with `S = sqrt(1 - D^2)`.
fn diag_be(vals: &[f64], aux: &str) -> BlockEncoding {
    let n = vals.len();
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for (j, &v) in vals.iter().enumerate() {
        let s = (1.0 - v * v).sqrt();
        m[(j, j)] = c(v);
        m[(j, n + j)] = c(s);
        m[(n + j, j)] = c(s);
        m[(n + j, n + j)] = c(-v);
    }
    let sys = n.trailing_zeros() as usize;
    BlockEncoding::new(
        LinearOperator::dense(m).unwrap(),
        RegisterLayout::single(aux, 1),
        RegisterLayout::single("data", sys),
    )
    .unwrap()
    .with_diagonal(true)
}

fn dense_diag(vals: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| c(v)),
    ))
}

fn unitary_be(qubits: usize, seed: u64) -> BlockEncoding {
    let u = LinearOperator::dense(gates::random_unitary(qubits, seed)).unwrap();
    BlockEncoding::of_unitary(u, "data").unwrap()
}

#[test]
fn identity_block_is_identity() {
    let be = BlockEncoding::identity(RegisterLayout::single("data", 2)).unwrap();
    assert_eq!(be.num_aux(), 0);
    assert!(verify(&be, &CMatrix::identity(4, 4)).unwrap() < 1e-14);
}

#[test]
fn product_of_halves_is_quarter() {
    let a = diag_be(&[0.5], "a");
    let b = diag_be(&[0.5], "b");
    let p = product(&a, &b).unwrap();
    assert_eq!(p.num_aux(), 2);
    assert!((extract_block(&p).unwrap()[(0, 0)] - c(0.25)).norm() < 1e-12);
    assert_eq!(p.aux_layout().names(), vec!["b", "a"]);
}

#[test]
fn product_with_identity_keeps_block() {
    let a = diag_be(&[0.3, -0.7], "a");
    let id = BlockEncoding::identity(a.system_layout().clone()).unwrap();
    let p = product(&a, &id).unwrap();
    assert!(verify(&p, &dense_diag(&[0.3, -0.7])).unwrap() < 1e-12);
}

#[test]
fn product_register_collision() {
    let a = diag_be(&[0.5], "a");
    assert!(matches!(product(&a, &a), Err(QkanError::Contract(_))));
}

#[test]
fn product_system_mismatch() {
    let a = diag_be(&[0.5], "a");
    let b = diag_be(&[0.5, 0.5], "b");
    assert!(matches!(product(&a, &b), Err(QkanError::Contract(_))));
}

#[test]
fn weighted_chebyshev_entrywise() {
    // w_p T_2(x_p) built as diag(w) * (2 diag(x)^2 - I) from the product rule
    let x = [0.1, -0.4, 0.9, 0.35];
    let w = [0.2, -0.8, 0.5, 1.0];
    let xa = diag_be(&x, "x1");
    let xb = diag_be(&x, "x2");
    let wb = diag_be(&w, "w");
    let xx = product(&xa, &xb).unwrap();
    let wxx = product(&wb, &xx).unwrap();
    let block = extract_block(&wxx).unwrap();
    for p in 0..4 {
        assert!((block[(p, p)] - c(w[p] * x[p] * x[p])).norm() < 1e-10);
    }
}

#[test]
fn lcu_of_identical_terms() {
    let a = diag_be(&[0.3, -0.7], "a");
    let pair = StatePrepPair::uniform(2).unwrap();
    let be = lcu(&[a.clone(), a], &pair).unwrap();
    assert_eq!(be.num_aux(), 2);
    assert!(verify(&be, &dense_diag(&[0.3, -0.7])).unwrap() < 1e-12);
}

#[test]
fn lcu_of_four_terms_averages() {
    let vals = [[0.1, 0.2], [-0.5, 0.9], [0.3, 0.3], [0.0, -1.0]];
    let bes: Vec<_> = vals.iter().map(|v| diag_be(v, "a")).collect();
    let pair = StatePrepPair::uniform(4).unwrap();
    let be = lcu(&bes, &pair).unwrap();
    let mut expect = CMatrix::zeros(2, 2);
    for v in &vals {
        expect += dense_diag(v) * c(0.25);
    }
    assert!(verify(&be, &expect).unwrap() < 1e-12);
}

#[test]
fn lcu_with_padding_terms() {
    let vals = [[0.1, 0.2], [-0.5, 0.9], [0.3, 0.3]];
    let bes: Vec<_> = vals.iter().map(|v| diag_be(v, "a")).collect();
    let pair = StatePrepPair::uniform(3).unwrap();
    let be = lcu(&bes, &pair).unwrap();
    let mut expect = CMatrix::zeros(2, 2);
    for v in &vals {
        expect += dense_diag(v) * c(1.0 / 3.0);
    }
    assert!(verify(&be, &expect).unwrap() < 1e-12);
}

#[test]
fn lcu_real_part_of_unitary_diagonal() {
    let psi = [C64::new(0.6, 0.3), C64::new(-0.2, 0.5)];
    let u = LinearOperator::diagonal(psi.iter().map(|z| z / z.norm()).collect()).unwrap();
    let be = BlockEncoding::of_unitary(u, "data").unwrap();
    let pair = StatePrepPair::uniform(2).unwrap();
    let re = lcu(&[be.clone(), be.adjoint()], &pair).unwrap();
    let block = extract_block(&re).unwrap();
    for (j, z) in psi.iter().enumerate() {
        assert!((block[(j, j)] - c(z.re / z.norm())).norm() < 1e-12);
    }
}

#[test]
fn lcu_mismatched_systems() {
    let a = diag_be(&[0.5], "a");
    let b = diag_be(&[0.5, 0.1], "a");
    let pair = StatePrepPair::uniform(2).unwrap();
    assert!(matches!(lcu(&[a, b], &pair), Err(QkanError::Contract(_))));
}

#[test]
fn hadamard_product_of_diagonals() {
    let a = diag_be(&[0.3, -0.7], "a");
    let b = diag_be(&[0.5, 0.9], "b");
    let h = hadamard_product(&a, &b).unwrap();
    assert_eq!(h.num_aux(), 3);
    assert!(verify(&h, &dense_diag(&[0.15, -0.63])).unwrap() < 1e-12);
}

#[test]
fn hadamard_product_of_dense_unitaries() {
    let a = unitary_be(2, 1);
    let b = unitary_be(2, 2).with_aux_prefix("b").unwrap();
    // both systems are named "data"; only auxiliaries must be disjoint
    let h = hadamard_product(&a, &b).unwrap();
    let ma = extract_block(&a).unwrap();
    let mb = extract_block(&b).unwrap();
    assert!(verify(&h, &ma.component_mul(&mb)).unwrap() < 1e-12);
}

#[test]
fn offdiagonal_removal_of_hadamard() {
    let hbe = BlockEncoding::of_unitary(gates::h(), "data").unwrap();
    let d = remove_offdiagonal(&hbe).unwrap();
    assert!(d.is_diagonal());
    assert_eq!(d.num_aux(), 1);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let got = extract_diagonal(&d).unwrap();
    assert!((got[0] - c(r)).norm() < 1e-12 && (got[1] - c(-r)).norm() < 1e-12);
    assert!(verify(&d, &dense_diag(&[r, -r])).unwrap() < 1e-12);
}

#[test]
fn offdiagonal_removal_of_random_unitary() {
    let be = unitary_be(2, 7);
    let m = extract_block(&be).unwrap();
    let d = remove_offdiagonal(&be).unwrap();
    let target = CMatrix::from_diagonal(&m.diagonal());
    assert!(verify(&d, &target).unwrap() < 1e-12);
}

#[test]
fn offdiagonal_removal_keeps_diagonal() {
    let a = diag_be(&[0.3, -0.7], "a");
    let d = remove_offdiagonal(&a).unwrap();
    assert!(verify(&d, &dense_diag(&[0.3, -0.7])).unwrap() < 1e-12);
}

#[test]
fn extract_diagonal_needs_flag() {
    let be = unitary_be(1, 3);
    assert!(matches!(extract_diagonal(&be), Err(QkanError::Contract(_))));
}

#[test]
fn dilate_repeats_entries() {
    let a = diag_be(&[0.3, -0.7], "a");
    assert_eq!(dilate(&a, 0).unwrap().system_qubits(), 1);
    let d = dilate(&a, 1).unwrap();
    assert_eq!((d.num_aux(), d.alpha(), d.epsilon()), (1, 1.0, 0.0));
    let got: Vec<f64> = extract_diagonal(&d).unwrap().iter().map(|z| z.re).collect();
    assert_eq!(got.len(), 4);
    for (g, e) in got.iter().zip([0.3, 0.3, -0.7, -0.7]) {
        assert!((g - e).abs() < 1e-12);
    }
    let target = dense_diag(&[0.3, -0.7]).kronecker(&CMatrix::identity(2, 2));
    assert!(verify(&d, &target).unwrap() <= d.epsilon() + 1e-12);
}

#[test]
fn controlled_encoding_switches() {
    let a = diag_be(&[0.3, -0.7], "a");
    let ctl = make_controlled(&a, "ctl").unwrap();
    let u = a.op().to_matrix().unwrap();
    let m = ctl.op().to_matrix().unwrap();
    assert!(max_abs(&(m.view((0, 0), (4, 4)) - CMatrix::identity(4, 4))) < 1e-14);
    assert!(max_abs(&(m.view((4, 4), (4, 4)) - &u)) < 1e-14);
    assert!(matches!(make_controlled(&a, "a"), Err(QkanError::Contract(_))));
}

#[test]
fn perturb_zero_is_identity_op() {
    let be = diag_be(&[0.3, -0.7], "a");
    let p = perturb(&be, 0.0, 3).unwrap();
    let d = max_abs(&(p.op().to_matrix().unwrap() - be.op().to_matrix().unwrap()));
    assert_eq!(d, 0.0);
}

#[test]
fn perturb_hits_requested_distance() {
    let be = diag_be(&[0.3, -0.7], "a");
    let p = perturb(&be, 1e-6, 11).unwrap();
    assert!(unitarity_defect(p.op()).unwrap() <= 1e-10);
    let dist = spectral_norm(&(p.op().to_matrix().unwrap() - be.op().to_matrix().unwrap()));
    assert!((0.9e-6..=1.1e-6).contains(&dist), "{dist}");
    assert!(verify(&p, &dense_diag(&[0.3, -0.7])).unwrap() <= 1e-6 + 1e-10);
    assert_eq!(p.epsilon(), 1e-6);
}

#[test]
fn perturb_keeps_primitive_tag() {
    let be = diag_be(&[0.3], "a").as_primitive(PrimitiveId::Input { layer: 0 });
    let p = perturb(&be, 1e-3, 1).unwrap();
    assert_eq!(p.op().tag(), Some(&PrimitiveId::Input { layer: 0 }));
    assert_eq!(p.ledger().count(&PrimitiveId::Input { layer: 0 }), 1);
    assert!(matches!(perturb(&be, 3.0, 1), Err(QkanError::Domain(_))));
}

#[test]
fn ledger_counts_products_and_adjoints() {
    let id = PrimitiveId::Input { layer: 0 };
    let x = diag_be(&[0.3], "a").as_primitive(id.clone());
    let y = x.adjoint().with_aux_prefix("b").unwrap();
    let p = product(&x, &y).unwrap();
    assert_eq!(p.ledger().count(&id), 2);
    assert_eq!(p.op().tag_counts().get(&id), Some(&2));
}

fn arb_vals(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn product_error_bound(xa in arb_vals(2), xb in arb_vals(2), ea in 0.0f64..1e-3, eb in 0.0f64..1e-3, seed in 0u64..1000) {
        let a = perturb(&diag_be(&xa, "a"), ea, seed).unwrap();
        let b = perturb(&diag_be(&xb, "b"), eb, seed + 1).unwrap();
        let p = product(&a, &b).unwrap();
        let target = dense_diag(&xa) * dense_diag(&xb);
        prop_assert!(verify(&p, &target).unwrap() <= a.alpha() * b.epsilon() + b.alpha() * a.epsilon() + 1e-10);
        prop_assert!((p.epsilon() - (ea + eb)).abs() < 1e-15);
    }

    #[test]
    fn lcu_error_bound(vals in proptest::collection::vec(arb_vals(2), 3), eps in 0.0f64..1e-3, seed in 0u64..1000) {
        let bes: Vec<_> = vals.iter().enumerate()
            .map(|(j, v)| perturb(&diag_be(v, "a"), eps * (j as f64 + 1.0) / 3.0, seed + j as u64).unwrap())
            .collect();
        let pair = StatePrepPair::uniform(3).unwrap();
        let be = lcu(&bes, &pair).unwrap();
        let mut target = CMatrix::zeros(2, 2);
        for v in &vals {
            target += dense_diag(v) * c(1.0 / 3.0);
        }
        prop_assert!(verify(&be, &target).unwrap() <= be.epsilon() + 1e-10);
        let bound = pair.eps_sp + pair.beta * eps;
        prop_assert!((be.epsilon() - bound).abs() < 1e-12);
    }

    #[test]
    fn hadamard_error_bound(xa in arb_vals(2), xb in arb_vals(2), ea in 0.0f64..1e-3, eb in 0.0f64..1e-3, seed in 0u64..1000) {
        let a = perturb(&diag_be(&xa, "a"), ea, seed).unwrap();
        let b = perturb(&diag_be(&xb, "b"), eb, seed + 1).unwrap();
        let h = hadamard_product(&a, &b).unwrap();
        let target = dense_diag(&xa).component_mul(&dense_diag(&xb));
        prop_assert!(verify(&h, &target).unwrap() <= h.epsilon() + 1e-10);
        prop_assert_eq!(h.num_aux(), a.num_aux() + b.num_aux() + 1);
    }

    #[test]
    fn combinators_stay_unitary(xa in arb_vals(2), xb in arb_vals(2)) {
        let a = diag_be(&xa, "a");
        let b = diag_be(&xb, "b");
        prop_assert!(unitarity_defect(product(&a, &b).unwrap().op()).unwrap() <= 1e-10);
        prop_assert!(unitarity_defect(hadamard_product(&a, &b).unwrap().op()).unwrap() <= 1e-10);
        let l = lcu(&[a.clone(), a.adjoint()], &StatePrepPair::uniform(2).unwrap()).unwrap();
        prop_assert!(unitarity_defect(l.op()).unwrap() <= 1e-10);
        prop_assert_eq!(l.num_aux(), l.aux_layout().total_qubits());
    }

    #[test]
    fn lcu_ledger_is_sum(k in 1usize..5) {
        let id = PrimitiveId::Input { layer: 0 };
        let x = diag_be(&[0.4], "a").as_primitive(id.clone());
        let terms: Vec<_> = (0..k).map(|_| x.clone()).collect();
        let be = lcu(&terms, &StatePrepPair::uniform(k).unwrap()).unwrap();
        prop_assert_eq!(be.ledger().count(&id), k as u64);
        prop_assert_eq!(be.op().tag_counts().get(&id).copied(), Some(k as u64));
    }
}
