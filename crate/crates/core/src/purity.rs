//! Single-qubit separability test on sparse pure states.
//!
//! Basis states are split by the digit at the tested position into `A0` and
//! `A1`. The qubit is unentangled iff one side is empty, or both sides pair up
//! one-to-one on the remaining digits with a common amplitude ratio.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::BitString;
use crate::sparse::SparseState;

/// Relative tolerance for comparing amplitude ratios.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PurityError {
    #[error("position {0} is outside a group of {1} qubits")]
    Position(usize, usize),
    #[error("qubit is not separable from the rest of its group")]
    NotSeparable,
}

/// `alpha |0⟩ + beta |1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitAmplitudes {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl QubitAmplitudes {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    /// Probability of reading 0.
    pub fn p0(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub qubit_state: QubitAmplitudes,
    /// The group without the factored qubit; `None` when it was the only member.
    pub remainder: Option<SparseState>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PurityOutcome {
    pub separable: bool,
    /// Pair lookups plus ratio comparisons.
    pub comparisons: usize,
}

fn ratios_equal(r1: Complex64, r2: Complex64) -> bool {
    (r1 - r2).norm() <= RATIO_TOL * r1.norm().max(1.0)
}

type Side<'a> = Vec<(&'a BitString, Complex64)>;

/// Splits entries by the digit at `pos`, each side in bitstring order.
fn split(state: &SparseState, pos: usize) -> (Side<'_>, Side<'_>) {
    state.iter().map(|(k, a)| (k, *a)).partition(|(k, _)| !k.get(pos))
}

/// Runs the test and reports how much work it did.
pub fn purity_test_counted(state: &SparseState, pos: usize) -> Result<PurityOutcome, PurityError> {
    let width = state.qubits().len();
    if pos >= width {
        return Err(PurityError::Position(pos, width));
    }
    let (a0, a1) = split(state, pos);
    let mut comparisons = 0;
    let done = |separable, comparisons| Ok(PurityOutcome { separable, comparisons });
    if a0.is_empty() || a1.is_empty() {
        return done(true, comparisons);
    }
    if a0.len() != a1.len() {
        return done(false, comparisons);
    }
    let mut partners: HashMap<BitString, Complex64> =
        a1.into_iter().map(|(k, a)| (k.without(pos), a)).collect();
    let mut ratio: Option<Complex64> = None;
    for (k, a) in a0 {
        comparisons += 1;
        // Each A1 entry may be consumed once.
        let Some(b) = partners.remove(&k.without(pos)) else {
            return done(false, comparisons);
        };
        let r = a / b;
        match ratio {
            Some(first) => {
                comparisons += 1;
                if !ratios_equal(first, r) {
                    return done(false, comparisons);
                }
            }
            None => ratio = Some(r),
        }
    }
    done(true, comparisons)
}

/// Whether the qubit at position `pos` of the group is unentangled.
pub fn purity_test(state: &SparseState, pos: usize) -> Result<bool, PurityError> {
    purity_test_counted(state, pos).map(|o| o.separable)
}

/// Splits a separable qubit off the group.
///
/// `alpha` takes the phase of the first `A0` amplitude and `beta` that of the
/// first `A1` amplitude, so the remainder's amplitudes are `a / alpha` for
/// the `A0` entries.
pub fn factor_qubit(state: &SparseState, pos: usize) -> Result<Factorization, PurityError> {
    if !purity_test(state, pos)? {
        return Err(PurityError::NotSeparable);
    }
    let (a0, a1) = split(state, pos);
    let weight = |side: &[(&BitString, Complex64)]| side.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    let phase = |side: &[(&BitString, Complex64)]| side.first().map(|(_, a)| a.arg()).unwrap_or(0.0);
    let total = state.norm_sqr().sqrt();
    let alpha = Complex64::from_polar(weight(&a0) / total, phase(&a0));
    let beta = Complex64::from_polar(weight(&a1) / total, phase(&a1));

    let (side, amp) = if a0.is_empty() { (&a1, beta) } else { (&a0, alpha) };
    let mut qubits = state.qubits().to_vec();
    qubits.remove(pos);
    let remainder = if qubits.is_empty() {
        None
    } else {
        let amps: BTreeMap<BitString, Complex64> =
            side.iter().map(|(k, a)| (k.without(pos), a / amp)).collect();
        Some(SparseState::from_parts_unchecked(qubits, amps))
    };
    Ok(Factorization { qubit_state: QubitAmplitudes { alpha, beta }, remainder })
}

/// `q ⊗ rest` with the qubit inserted at position `pos`.
pub fn unfactor(f: &Factorization, qubit: crate::circuit::Qubit, pos: usize) -> SparseState {
    let QubitAmplitudes { alpha, beta } = f.qubit_state;
    let (qubits, entries): (Vec<_>, Vec<(BitString, Complex64)>) = match &f.remainder {
        None => (vec![qubit], vec![(BitString::zeros(0), Complex64::new(1.0, 0.0))]),
        Some(r) => {
            let mut qs = r.qubits().to_vec();
            qs.insert(pos, qubit);
            (qs, r.iter().map(|(k, a)| (k.clone(), *a)).collect())
        }
    };
    let mut amps = BTreeMap::new();
    for (k, a) in entries {
        for (bit, w) in [(false, alpha), (true, beta)] {
            if w.norm() > 0.0 {
                amps.insert(k.inserted(pos, bit), a * w);
            }
        }
    }
    SparseState::from_parts_unchecked(qubits, amps)
}
