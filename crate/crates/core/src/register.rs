use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// A named group of qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
}

/// Ordered list of registers, most significant first.
///
/// Basis index of a label tuple `(l_0, ..., l_{r-1})` is
/// `l_0 * 2^(q_1 + ... + q_{r-1}) + ... + l_{r-1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_registers<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut layout = Self::new();
        for (name, qubits) in regs {
            layout.push(name, qubits)?;
        }
        Ok(layout)
    }

    pub fn single(name: impl Into<String>, qubits: usize) -> Self {
        Self {
            registers: vec![Register {
                name: name.into(),
                qubits,
            }],
        }
    }

    /// Append a register at the least significant end.
    pub fn push(&mut self, name: impl Into<String>, qubits: usize) -> Result<()> {
        let name = name.into();
        if self.contains(&name) {
            return Err(contract(format!("duplicate register name `{name}`")));
        }
        self.registers.push(Register { name, qubits });
        Ok(())
    }

    /// `self` followed by `lower`; names must stay unique.
    pub fn concat(&self, lower: &RegisterLayout) -> Result<Self> {
        let mut out = self.clone();
        for r in &lower.registers {
            out.push(r.name.clone(), r.qubits)?;
        }
        Ok(out)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn len(&self) -> usize {
        self.registers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.registers.is_empty()
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_qubits()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    /// Qubit offset (from the most significant end) of the named register.
    pub fn offset_of(&self, name: &str) -> Option<usize> {
        let mut off = 0;
        for r in &self.registers {
            if r.name == name {
                return Some(off);
            }
            off += r.qubits;
        }
        None
    }

    /// Qubit positions of the named register, most significant first.
    pub fn qubits_of(&self, name: &str) -> Option<Vec<usize>> {
        let off = self.offset_of(name)?;
        let n = self.get(name)?.qubits;
        Some((off..off + n).collect())
    }

    /// `base` if unused, otherwise the first free `base#k`.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}#{k}"))
            .find(|n| !self.contains(n))
            .unwrap()
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn index_of(&self, labels: &[usize]) -> Result<usize> {
        if labels.len() != self.registers.len() {
            return Err(contract(format!(
                "expected {} labels, got {}",
                self.registers.len(),
                labels.len()
            )));
        }
        let mut idx = 0usize;
        for (r, &l) in self.registers.iter().zip(labels) {
            if l >> r.qubits != 0 {
                return Err(contract(format!(
                    "label {l} does not fit register `{}` of {} qubits",
                    r.name, r.qubits
                )));
            }
            idx = (idx << r.qubits) | l;
        }
        Ok(idx)
    }

    pub fn labels_of(&self, mut index: usize) -> Vec<usize> {
        let mut labels = vec![0; self.registers.len()];
        for (slot, r) in labels.iter_mut().zip(&self.registers).rev() {
            *slot = index & ((1usize << r.qubits) - 1);
            index >>= r.qubits;
        }
        labels
    }
}
