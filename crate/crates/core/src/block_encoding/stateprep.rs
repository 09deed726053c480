use crate::error::{contract, domain, Result};
use crate::gates;
use crate::operator::{LinearOperator, C64};

/// A `(beta, b, eps_sp)` state-preparation pair for a coefficient vector `y`.
#[derive(Debug, Clone)]
pub struct StatePrepPair {
    pub p_left: LinearOperator,
    pub p_right: LinearOperator,
    pub beta: f64,
    pub qubits: usize,
    pub eps_sp: f64,
    coefficients: Vec<C64>,
}

fn qubits_for(m: usize) -> usize {
    m.next_power_of_two().trailing_zeros() as usize
}

impl StatePrepPair {
    /// Equal weights `1/m` on `m` terms with `beta = 1`.
    ///
    /// Uses `H^{(x) b}` on both sides when `m` is a power of two; otherwise a
    /// reflection whose first column is uniform over the first `m` entries, so
    /// that the padding terms carry exactly zero weight.
    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(domain("state-preparation pair over zero terms"));
        }
        let b = qubits_for(m);
        let prep = if m.is_power_of_two() {
            gates::hadamard_n(b)?
        } else {
            let amp = C64::new(1.0 / (m as f64).sqrt(), 0.0);
            let mut psi = vec![C64::new(0.0, 0.0); 1 << b];
            psi[..m].iter_mut().for_each(|z| *z = amp);
            LinearOperator::dense(gates::unitary_with_first_column(&psi)?)?
        };
        let y = vec![C64::new(1.0 / m as f64, 0.0); m];
        Self::from_unitaries(prep.clone(), prep, 1.0, y)
    }

    /// Pair realizing arbitrary complex coefficients with `beta = ||y||_1`.
    pub fn for_coefficients(y: &[C64]) -> Result<Self> {
        let beta: f64 = y.iter().map(|z| z.norm()).sum();
        if y.is_empty() || beta == 0.0 {
            return Err(domain("coefficient vector must be nonzero"));
        }
        let b = qubits_for(y.len());
        let mut left = vec![C64::new(0.0, 0.0); 1 << b];
        let mut right = left.clone();
        for (j, z) in y.iter().enumerate() {
            let mag = (z.norm() / beta).sqrt();
            left[j] = C64::new(mag, 0.0);
            right[j] = if z.norm() > 0.0 {
                *z / z.norm() * mag
            } else {
                C64::new(0.0, 0.0)
            };
        }
        let p_left = LinearOperator::dense(gates::unitary_with_first_column(&left)?)?;
        let p_right = LinearOperator::dense(gates::unitary_with_first_column(&right)?)?;
        Self::from_unitaries(p_left, p_right, beta, y.to_vec())
    }

    /// Wrap a given pair and measure its `eps_sp` against `y`.
    pub fn from_unitaries(
        p_left: LinearOperator,
        p_right: LinearOperator,
        beta: f64,
        y: Vec<C64>,
    ) -> Result<Self> {
        if p_left.qubits() != p_right.qubits() {
            return Err(contract("state-preparation unitaries differ in width"));
        }
        let qubits = p_left.qubits();
        if y.len() > 1 << qubits {
            return Err(contract(format!(
                "{} coefficients exceed a {qubits}-qubit selector",
                y.len()
            )));
        }
        let l1: f64 = y.iter().map(|z| z.norm()).sum();
        if l1 > beta + 1e-12 {
            return Err(domain(format!("||y||_1 = {l1} exceeds beta = {beta}")));
        }
        let mut e0 = vec![C64::new(0.0, 0.0); 1 << qubits];
        e0[0] = C64::new(1.0, 0.0);
        let cs = p_left.applied(&e0);
        let ds = p_right.applied(&e0);
        let mut eps_sp = 0.0;
        for j in 0..cs.len() {
            let realized = cs[j].conj() * ds[j] * beta;
            match y.get(j) {
                Some(target) => eps_sp += (target - realized).norm(),
                None if realized.norm() > 1e-12 => {
                    return Err(contract(format!(
                        "padding coefficient {j} is {realized}, expected 0"
                    )))
                }
                None => {}
            }
        }
        Ok(Self {
            p_left,
            p_right,
            beta,
            qubits,
            eps_sp,
            coefficients: y,
        })
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_power_of_two_is_exact() {
        let p = StatePrepPair::uniform(4).unwrap();
        assert_eq!(p.qubits, 2);
        assert!(p.eps_sp < 1e-15);
    }

    #[test]
    fn uniform_padded_has_zero_tail() {
        let p = StatePrepPair::uniform(3).unwrap();
        assert_eq!(p.qubits, 2);
        assert!(p.eps_sp < 1e-14);
    }

    #[test]
    fn arbitrary_coefficients() {
        let y = [C64::new(0.3, 0.0), C64::new(-0.2, 0.1), C64::new(0.0, 0.0)];
        let p = StatePrepPair::for_coefficients(&y).unwrap();
        assert!((p.beta - (0.3 + 0.05f64.sqrt())).abs() < 1e-15);
        assert!(p.eps_sp < 1e-14);
    }

    #[test]
    fn wrong_pair_reports_error() {
        let h = crate::gates::h();
        let p = StatePrepPair::from_unitaries(h.clone(), h, 1.0, vec![C64::new(1.0, 0.0)]);
        // c_1^* d_1 = 1/2 lands on a padding slot.
        assert!(p.is_err());
    }
}
