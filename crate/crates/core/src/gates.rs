//! Fixed one- and two-qubit gates and small dense constructions.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Result};
use crate::operator::{CMatrix, LinearOperator, C64};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn mat2(a: C64, b: C64, cc: C64, d: C64) -> LinearOperator {
    LinearOperator::dense(CMatrix::from_row_slice(2, 2, &[a, b, cc, d])).unwrap()
}

pub fn h() -> LinearOperator {
    let s = c(FRAC_1_SQRT_2);
    mat2(s, s, s, -s)
}

pub fn x() -> LinearOperator {
    mat2(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn z() -> LinearOperator {
    LinearOperator::diagonal(vec![c(1.0), c(-1.0)]).unwrap()
}

pub fn s() -> LinearOperator {
    LinearOperator::diagonal(vec![c(1.0), C64::new(0.0, 1.0)]).unwrap()
}

pub fn ry(theta: f64) -> LinearOperator {
    let (sn, cs) = (theta / 2.0).sin_cos();
    mat2(c(cs), c(-sn), c(sn), c(cs))
}

/// `diag(e^{-i phi}, e^{i phi})`, i.e. `exp(-i phi Z)`.
pub fn rz_half(phi: f64) -> LinearOperator {
    LinearOperator::diagonal(vec![C64::from_polar(1.0, -phi), C64::from_polar(1.0, phi)]).unwrap()
}

/// The reflection `[[x, sqrt(1-x^2)], [sqrt(1-x^2), -x]]`.
pub fn signal_reflection(x: f64) -> Result<LinearOperator> {
    if !(x.abs() <= 1.0) {
        return Err(domain(format!("signal value {x} outside [-1, 1]")));
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    Ok(mat2(c(x), c(s), c(s), c(-x)))
}

/// `H^{(x) n}`.
pub fn hadamard_n(n: usize) -> Result<LinearOperator> {
    let mut op = LinearOperator::identity(0)?;
    for _ in 0..n {
        op = LinearOperator::kron(&op, &h())?;
    }
    Ok(op)
}

/// `|i>|j> -> |i>|i xor j>` on two `n`-qubit registers laid out consecutively
/// inside a `total`-qubit space.
pub fn xor_copy(
    control: &[usize],
    target: &[usize],
    total: usize,
) -> Result<LinearOperator> {
    let cnot = LinearOperator::controlled(&x(), 1, 1)?;
    let gates = control
        .iter()
        .zip(target)
        .map(|(&ci, &ti)| LinearOperator::embed(&cnot, &[ci, ti], total))
        .collect::<Result<Vec<_>>>()?;
    if gates.is_empty() {
        return LinearOperator::identity(total);
    }
    LinearOperator::product(gates)
}

/// A unitary whose first column is the unit vector `psi`.
///
/// Built from one Householder reflection times a phase, so every column is
/// explicit and the result is exactly unitary up to rounding.
pub fn unitary_with_first_column(psi: &[C64]) -> Result<CMatrix> {
    let n = psi.len();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(domain(format!("state has norm {norm}, expected 1")));
    }
    let phase = if psi[0].norm() > 0.0 {
        psi[0] / psi[0].norm()
    } else {
        c(1.0)
    };
    // e = phase * e_0 and psi share a real inner product, so the reflection swaps them.
    let mut w = DVector::from_iterator(n, psi.iter().map(|z| -*z));
    w[0] += phase;
    let wn = w.norm();
    let mut u = if wn < 1e-14 {
        CMatrix::identity(n, n)
    } else {
        w /= C64::new(wn, 0.0);
        CMatrix::identity(n, n) - (&w * w.adjoint()) * c(2.0)
    };
    u *= phase;
    Ok(u)
}

/// Haar-like random unitary from the QR decomposition of a Gaussian matrix.
pub fn random_unitary(qubits: usize, seed: u64) -> CMatrix {
    let n = 1usize << qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // Fix column phases so the distribution does not depend on QR conventions.
    let phases = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                c(1.0)
            }
        }),
    );
    CMatrix::from_fn(n, n, |i, j| q[(i, j)] * phases[j])
}

/// Random real orthogonal matrix (QR of a real Gaussian matrix).
pub fn random_orthogonal(qubits: usize, seed: u64) -> CMatrix {
    let n = 1usize << qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = nalgebra::DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    CMatrix::from_fn(n, n, |i, j| c(q[(i, j)] * r[(j, j)].signum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{max_abs, unitarity_defect};

    #[test]
    fn householder_first_column() {
        let psi = [C64::new(0.5, 0.5), C64::new(0.5, -0.5), c(0.0), c(0.0)];
        let u = unitary_with_first_column(&psi).unwrap();
        for (i, z) in psi.iter().enumerate() {
            assert!((u[(i, 0)] - z).norm() < 1e-14);
        }
        let op = LinearOperator::dense(u).unwrap();
        assert!(unitarity_defect(&op).unwrap() < 1e-12);
    }

    #[test]
    fn householder_rejects_unnormalized() {
        assert!(unitary_with_first_column(&[c(0.5), c(0.5)]).is_err());
    }

    #[test]
    fn random_unitaries_are_unitary() {
        for seed in 0..4 {
            let u = LinearOperator::dense(random_unitary(3, seed)).unwrap();
            assert!(unitarity_defect(&u).unwrap() < 1e-12);
            let o = random_orthogonal(2, seed);
            assert!(o.iter().all(|z| z.im == 0.0));
            assert!(unitarity_defect(&LinearOperator::dense(o).unwrap()).unwrap() < 1e-12);
        }
    }

    #[test]
    fn xor_copy_is_involution() {
        let p = xor_copy(&[0, 1], &[2, 3], 4).unwrap();
        let m = p.to_matrix().unwrap();
        assert!(max_abs(&(&m * &m - CMatrix::identity(16, 16))) < 1e-15);
        let mut v = vec![c(0.0); 16];
        v[0b1100] = c(1.0);
        p.apply(&mut v);
        assert_eq!(v[0b1111], c(1.0));
    }
}
