//! Ensembles of static circuits.
//!
//! A probabilistic gate compiles to its base gate with probability `p` and to
//! identity otherwise. [`enumerate`] lists every compiled circuit together with
//! every measurement outcome path; [`compile_shot`] draws one compilation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Clbit, GateKind, Instruction};
use crate::text::serialize;
use crate::verify::{self, VerifyError, WalkOptions};

pub const DEFAULT_CAP: usize = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum EnsembleError {
    #[error("ensemble exceeds {0} entries")]
    CapExceeded(usize),
    #[error("{0} probabilistic gates exceed the limit of {max}", max = verify::MAX_PROB_GATES)]
    TooManyProb(usize),
    #[error("circuits of {0} and {1} qubits cannot be composed in sequence")]
    Shape(usize, usize),
    #[error(transparent)]
    Simulation(VerifyError),
}

impl From<VerifyError> for EnsembleError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::BranchCap(c) => EnsembleError::CapExceeded(c),
            VerifyError::TooManyProb(n) => EnsembleError::TooManyProb(n),
            other => EnsembleError::Simulation(other),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub probability: f64,
    /// Static circuit actually executed. Skipped probabilistic gates leave
    /// `id` on each qubit they would have touched.
    pub circuit: Circuit,
    /// Measurement results along this path, in program order.
    pub outcomes: Vec<(Clbit, bool)>,
}

impl Entry {
    fn key(&self) -> (String, Vec<(Clbit, bool)>) {
        (serialize(&self.circuit), self.outcomes.clone())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Ensemble {
    pub entries: Vec<Entry>,
}

impl Ensemble {
    /// Builds an ensemble, merging syntactically identical entries and
    /// keeping first-seen order.
    pub fn from_entries(entries: impl IntoIterator<Item = Entry>) -> Self {
        let mut out: Vec<Entry> = Vec::new();
        let mut index: HashMap<(String, Vec<(Clbit, bool)>), usize> = HashMap::new();
        for e in entries {
            match index.get(&e.key()) {
                Some(&i) => out[i].probability += e.probability,
                None => {
                    index.insert(e.key(), out.len());
                    out.push(e);
                }
            }
        }
        Ensemble { entries: out }
    }

    pub fn singleton(c: Circuit) -> Self {
        Ensemble { entries: vec![Entry { probability: 1.0, circuit: c, outcomes: Vec::new() }] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Drops identity gates and merges the entries that become identical.
    pub fn normalized(&self) -> Ensemble {
        Ensemble::from_entries(self.entries.iter().map(|e| {
            let mut circuit = e.circuit.clone();
            circuit.instructions.retain(|i| !matches!(i, Instruction::Gate(g) if g.kind == GateKind::Id));
            Entry { circuit, ..e.clone() }
        }))
    }

    /// Multiset equality after normalization, probabilities within `tol`.
    pub fn same_as(&self, other: &Ensemble, tol: f64) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        if a.len() != b.len() {
            return false;
        }
        let lookup: HashMap<_, f64> = b.entries.iter().map(|e| (e.key(), e.probability)).collect();
        a.entries.iter().all(|e| lookup.get(&e.key()).is_some_and(|p| (p - e.probability).abs() <= tol))
    }
}

/// Every compiled circuit of `c` with every measurement outcome path, run
/// from `|0…0⟩`. Paths below 1e-12 are dropped.
pub fn enumerate(c: &Circuit, cap: usize) -> Result<Ensemble, EnsembleError> {
    let branches = verify::expand(c, WalkOptions { track_state: false, record_residual: true, cap })?;
    let entries = branches.into_iter().map(|b| Entry {
        probability: b.prob,
        circuit: Circuit {
            n_qubits: c.n_qubits,
            n_clbits: c.n_clbits,
            outputs: c.outputs.clone(),
            instructions: b.residual,
        },
        outcomes: b.outcomes,
    });
    let e = Ensemble::from_entries(entries);
    if e.len() > cap {
        return Err(EnsembleError::CapExceeded(cap));
    }
    Ok(e)
}

/// Pairwise sequential composition.
pub fn compose_seq(a: &Ensemble, b: &Ensemble) -> Result<Ensemble, EnsembleError> {
    for (x, y) in a.entries.iter().flat_map(|x| b.entries.iter().map(move |y| (x, y))) {
        if x.circuit.n_qubits != y.circuit.n_qubits {
            return Err(EnsembleError::Shape(x.circuit.n_qubits, y.circuit.n_qubits));
        }
    }
    Ok(Ensemble::from_entries(a.entries.iter().flat_map(|x| {
        b.entries.iter().map(move |y| Entry {
            probability: x.probability * y.probability,
            circuit: x.circuit.then(&y.circuit),
            outcomes: x.outcomes.iter().chain(&y.outcomes).copied().collect(),
        })
    })))
}

/// Pairwise parallel composition; `b` moves onto registers after `a`'s.
pub fn compose_par(a: &Ensemble, b: &Ensemble) -> Ensemble {
    Ensemble::from_entries(a.entries.iter().flat_map(|x| {
        let shift = x.circuit.n_clbits;
        b.entries.iter().map(move |y| Entry {
            probability: x.probability * y.probability,
            circuit: x.circuit.tensor(&y.circuit),
            outcomes: x
                .outcomes
                .iter()
                .copied()
                .chain(y.outcomes.iter().map(|&(c, v)| (Clbit(c.0 + shift), v)))
                .collect(),
        })
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShotSeed(pub u64);

/// Whether the probabilistic gate at instruction `index` fires for `seed`.
/// Each gate draws from its own ChaCha8 stream, so choices do not depend on
/// the rest of the circuit.
pub fn includes(seed: ShotSeed, index: usize, p: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(index as u64);
    rng.gen::<f64>() < p
}

/// One compilation of `c`: each probabilistic gate becomes its base or is
/// deleted. Measurements and classical controls pass through.
pub fn compile_shot(c: &Circuit, seed: ShotSeed) -> Circuit {
    let instructions = c
        .instructions
        .iter()
        .enumerate()
        .filter_map(|(i, ins)| match ins {
            Instruction::Prob { p, base } => includes(seed, i, *p).then(|| (**base).clone()),
            other => Some(other.clone()),
        })
        .collect();
    Circuit { instructions, ..c.clone() }
}

/// `0.16` rather than `0.16000000000000003`.
pub fn format_probability(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_string()
}
