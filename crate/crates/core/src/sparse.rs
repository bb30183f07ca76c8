//! Sparse pure state of one entanglement group.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::BitString;
use crate::circuit::{Matrix2, Qubit};

/// Amplitudes below this magnitude are dropped.
pub const AMPLITUDE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("state has no nonzero amplitude")]
    Empty,
    #[error("bitstring {0} does not match the group size {1}")]
    Width(String, usize),
    #[error("norm {0} is not 1")]
    NotNormalized(f64),
}

/// `Σ αj |ψj⟩` over an ordered list of qubits. Position `p` of every key
/// refers to `qubits[p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    qubits: Vec<Qubit>,
    amps: BTreeMap<BitString, Complex64>,
}

impl SparseState {
    /// The basis state `|bits⟩`.
    pub fn basis(qubits: Vec<Qubit>, bits: BitString) -> Self {
        assert_eq!(qubits.len(), bits.len());
        Self { qubits, amps: BTreeMap::from([(bits, Complex64::new(1.0, 0.0))]) }
    }

    pub fn zero(q: Qubit) -> Self {
        Self::basis(vec![q], BitString::zeros(1))
    }

    /// Builds a state from explicit amplitudes; the norm must be 1 within 1e-9.
    pub fn new(
        qubits: Vec<Qubit>,
        amps: impl IntoIterator<Item = (BitString, Complex64)>,
    ) -> Result<Self, StateError> {
        let mut map = BTreeMap::new();
        for (k, a) in amps {
            if k.len() != qubits.len() {
                return Err(StateError::Width(k.to_string(), qubits.len()));
            }
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        map.retain(|_, a: &mut Complex64| a.norm() >= AMPLITUDE_TOL);
        if map.is_empty() {
            return Err(StateError::Empty);
        }
        let norm: f64 = map.values().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateError::NotNormalized(norm.sqrt()));
        }
        Ok(Self { qubits, amps: map })
    }

    /// Like [`SparseState::new`] with string keys; panics on malformed input.
    pub fn from_pairs(qubits: Vec<Qubit>, pairs: &[(&str, Complex64)]) -> Self {
        Self::new(qubits, pairs.iter().map(|(s, a)| (s.parse().expect("bitstring"), *a)))
            .expect("valid sparse state")
    }

    pub fn qubits(&self) -> &[Qubit] {
        &self.qubits
    }

    pub fn position(&self, q: Qubit) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    /// Number of stored basis states.
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    /// Entries in bitstring order.
    pub fn iter(&self) -> impl Iterator<Item = (&BitString, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, bits: &BitString) -> Complex64 {
        self.amps.get(bits).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// The single basis state, if the group holds exactly one.
    pub fn as_basis(&self) -> Option<&BitString> {
        match self.amps.len() {
            1 => self.amps.keys().next(),
            _ => None,
        }
    }

    /// `self ⊗ other`, members of `other` appended after ours.
    pub fn tensor(&self, other: &SparseState) -> SparseState {
        let mut amps = BTreeMap::new();
        for (ka, a) in &self.amps {
            for (kb, b) in &other.amps {
                amps.insert(ka.concat(kb), a * b);
            }
        }
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        SparseState { qubits, amps }
    }

    /// Drops tiny amplitudes and rescales to unit norm.
    fn renormalize(&mut self) {
        self.amps.retain(|_, a| a.norm() >= AMPLITUDE_TOL);
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in self.amps.values_mut() {
                *a /= norm;
            }
        }
    }

    fn satisfies(bits: &BitString, controls: &[(usize, bool)]) -> bool {
        controls.iter().all(|&(p, v)| bits.get(p) == v)
    }

    /// Applies a single-qubit matrix at `target`, restricted to basis states
    /// meeting every `(position, value)` control. Returns the number of
    /// entries processed.
    pub fn apply_single(&mut self, m: &Matrix2, target: usize, controls: &[(usize, bool)]) -> usize {
        let work = self.amps.len();
        let mut next: HashMap<BitString, Complex64> = HashMap::with_capacity(work * 2);
        for (bits, a) in std::mem::take(&mut self.amps) {
            if !Self::satisfies(&bits, controls) {
                *next.entry(bits).or_default() += a;
                continue;
            }
            let col = usize::from(bits.get(target));
            for (row, m_row) in m.iter().enumerate() {
                let coef = m_row[col];
                if coef.norm() == 0.0 {
                    continue;
                }
                *next.entry(bits.clone().with(target, row == 1)).or_default() += coef * a;
            }
        }
        self.amps = next.into_iter().collect();
        self.renormalize();
        work
    }

    /// Exchanges positions `a` and `b` on basis states meeting the controls.
    pub fn apply_swap(&mut self, a: usize, b: usize, controls: &[(usize, bool)]) -> usize {
        let work = self.amps.len();
        self.amps = std::mem::take(&mut self.amps)
            .into_iter()
            .map(|(bits, amp)| {
                if Self::satisfies(&bits, controls) {
                    let (x, y) = (bits.get(a), bits.get(b));
                    (bits.with(a, y).with(b, x), amp)
                } else {
                    (bits, amp)
                }
            })
            .collect();
        work
    }

    /// Probability that the qubit at `pos` reads 1.
    pub fn probability_one(&self, pos: usize) -> f64 {
        self.amps.iter().filter(|(k, _)| k.get(pos)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Whether any / every stored basis state meets the controls.
    pub fn control_support(&self, controls: &[(usize, bool)]) -> (bool, bool) {
        let mut any = false;
        let mut all = true;
        for k in self.amps.keys() {
            if Self::satisfies(k, controls) {
                any = true;
            } else {
                all = false;
            }
        }
        (any, all)
    }

    pub(crate) fn from_parts_unchecked(qubits: Vec<Qubit>, amps: BTreeMap<BitString, Complex64>) -> Self {
        let mut s = SparseState { qubits, amps };
        s.renormalize();
        s
    }
}
