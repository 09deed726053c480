use crate::error::{contract, Result};
use crate::operator::{LinearOperator, C64};
use crate::register::RegisterLayout;

/// Amplitudes over a labeled register.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    layout: RegisterLayout,
    normalized: bool,
}

impl StateVector {
    pub fn basis(layout: RegisterLayout, labels: &[usize]) -> Result<Self> {
        let idx = layout.index_of(labels)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            layout,
            normalized: true,
        })
    }

    /// Wrap `amplitudes`, checking unit norm to 1e-12.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<C64>) -> Result<Self> {
        let s = Self::unnormalized(layout, amplitudes)?;
        if (s.norm() - 1.0).abs() > 1e-12 {
            return Err(contract(format!("state norm {} is not 1", s.norm())));
        }
        Ok(Self {
            normalized: true,
            ..s
        })
    }

    /// Wrap amplitudes without a norm check (e.g. after a projection).
    pub fn unnormalized(layout: RegisterLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(contract(format!(
                "{} amplitudes for a {}-dimensional register",
                amplitudes.len(),
                layout.dim()
            )));
        }
        Ok(Self {
            amplitudes,
            layout,
            normalized: false,
        })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn amplitude(&self, labels: &[usize]) -> Result<C64> {
        Ok(self.amplitudes[self.layout.index_of(labels)?])
    }

    pub fn apply(&mut self, op: &LinearOperator) -> Result<()> {
        if op.qubits() != self.layout.total_qubits() {
            return Err(contract(format!(
                "{}-qubit operator applied to a {}-qubit state",
                op.qubits(),
                self.layout.total_qubits()
            )));
        }
        op.apply(&mut self.amplitudes);
        Ok(())
    }

    /// Rescale to unit norm; returns the norm before scaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.amplitudes {
                *z /= n;
            }
            self.normalized = true;
        }
        n
    }
}
