//! Exact reference semantics.
//!
//! Dense statevector simulation of static circuits, branch-complete
//! simulation of dynamic and probabilistic circuits from `|0…0⟩`, and
//! equivalence checking on output ensembles via conditional density matrices.
//!
//! Dense index convention: qubit 0 is the most significant bit, so the
//! binary expansion of an index reads like the ket label.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::bits::BitString;
use crate::circuit::{Circuit, Clbit, Gate, GateKind, Instruction, Qubit, Violation};

pub const MAX_STATIC_QUBITS: usize = 14;
pub const MAX_DYNAMIC_QUBITS: usize = 12;
pub const MAX_PROB_GATES: usize = 20;
pub const DEFAULT_BRANCH_CAP: usize = 1 << 20;
/// Branches whose conditional probability falls below this are dropped.
pub const BRANCH_TOL: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum VerifyError {
    #[error("{n} qubits exceed the simulation limit of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("instruction {0} is not static")]
    DynamicInstruction(usize),
    #[error("{0} probabilistic gates exceed the limit of {MAX_PROB_GATES}")]
    TooManyProb(usize),
    #[error("branch count exceeded the cap of {0}")]
    BranchCap(usize),
    #[error("input does not match a {0}-qubit register")]
    BadInput(usize),
    #[error("circuits act on {0} and {1} qubits")]
    ShapeMismatch(usize, usize),
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

pub type StateVector = Vec<Complex64>;

#[derive(Clone, Debug)]
pub enum Input {
    /// Computational basis label, qubit 0 leftmost.
    Basis(BitString),
    State(StateVector),
}

impl Input {
    pub fn zeros(n: usize) -> Self {
        Input::Basis(BitString::zeros(n))
    }
}

fn mask(n: usize, q: Qubit) -> usize {
    1 << (n - 1 - q.0)
}

/// Applies a single-qubit matrix (or swap) under `(qubit, value)` controls.
pub fn apply_gate(state: &mut [Complex64], n: usize, gate: &Gate, controls: &[(Qubit, bool)]) {
    let (need, want) = controls.iter().fold((0usize, 0usize), |(need, want), &(q, v)| {
        let m = mask(n, q);
        (need | m, if v { want | m } else { want })
    });
    match (gate.kind, gate.targets.as_slice()) {
        (GateKind::Swap, [a, b]) => {
            let (ma, mb) = (mask(n, *a), mask(n, *b));
            for i in 0..state.len() {
                if i & need == want && i & ma != 0 && i & mb == 0 {
                    state.swap(i, i ^ ma ^ mb);
                }
            }
        }
        (kind, [t]) => {
            let m = kind.matrix().expect("single-qubit gate");
            let mt = mask(n, *t);
            for i in 0..state.len() {
                if i & mt == 0 && i & need == want {
                    let (a0, a1) = (state[i], state[i | mt]);
                    state[i] = m[0][0] * a0 + m[0][1] * a1;
                    state[i | mt] = m[1][0] * a0 + m[1][1] * a1;
                }
            }
        }
        _ => panic!("gate {} with {} targets", gate.kind.name(), gate.targets.len()),
    }
}

/// Applies a plain or controlled gate; other instructions are ignored.
pub fn apply_unitary(state: &mut [Complex64], n: usize, ins: &Instruction) {
    match ins {
        Instruction::Gate(g) => apply_gate(state, n, g, &[]),
        Instruction::Controlled(cg) => {
            let conds: Vec<(Qubit, bool)> = cg.conditions().collect();
            apply_gate(state, n, &cg.base, &conds);
        }
        _ => {}
    }
}

fn initial_state(n: usize, input: &Input) -> Result<StateVector, VerifyError> {
    match input {
        Input::Basis(bits) => {
            if bits.len() != n {
                return Err(VerifyError::BadInput(n));
            }
            let idx = bits.iter().fold(0usize, |acc, b| acc << 1 | usize::from(b));
            let mut v = vec![Complex64::default(); 1 << n];
            v[idx] = Complex64::new(1.0, 0.0);
            Ok(v)
        }
        Input::State(v) => {
            if v.len() != 1 << n {
                return Err(VerifyError::BadInput(n));
            }
            Ok(v.clone())
        }
    }
}

/// Exact statevector of a static circuit.
pub fn simulate_static(c: &Circuit, input: &Input) -> Result<StateVector, VerifyError> {
    if c.n_qubits > MAX_STATIC_QUBITS {
        return Err(VerifyError::TooManyQubits { n: c.n_qubits, max: MAX_STATIC_QUBITS });
    }
    if let Some(i) = c.instructions.iter().position(|ins| !ins.is_static()) {
        return Err(VerifyError::DynamicInstruction(i));
    }
    let mut state = initial_state(c.n_qubits, input)?;
    for ins in &c.instructions {
        apply_unitary(&mut state, c.n_qubits, ins);
    }
    Ok(state)
}

/// One execution path through a dynamic or probabilistic circuit.
#[derive(Clone, Debug)]
pub(crate) struct Branch {
    pub prob: f64,
    pub state: StateVector,
    pub bits: Vec<Option<bool>>,
    /// Static instructions actually executed, when recorded.
    pub residual: Vec<Instruction>,
    pub outcomes: Vec<(Clbit, bool)>,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct WalkOptions {
    pub track_state: bool,
    pub record_residual: bool,
    pub cap: usize,
}

fn id_placeholders(base: &Instruction) -> impl Iterator<Item = Instruction> {
    base.qubits().into_iter().map(|q| Instruction::Gate(Gate::new(GateKind::Id, vec![q])))
}

/// Expands every probabilistic choice and measurement outcome.
pub(crate) fn expand(c: &Circuit, opts: WalkOptions) -> Result<Vec<Branch>, VerifyError> {
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(VerifyError::Invalid(violations));
    }
    let n_prob = c.count_prob();
    if n_prob > MAX_PROB_GATES {
        return Err(VerifyError::TooManyProb(n_prob));
    }
    let n = c.n_qubits;
    let track = opts.track_state || c.count_measurements() > 0;
    if track && n > MAX_DYNAMIC_QUBITS {
        return Err(VerifyError::TooManyQubits { n, max: MAX_DYNAMIC_QUBITS });
    }
    let root = Branch {
        prob: 1.0,
        state: if track { initial_state(n, &Input::zeros(n))? } else { Vec::new() },
        bits: vec![None; c.n_clbits],
        residual: Vec::new(),
        outcomes: Vec::new(),
    };
    let mut live = vec![root];
    for ins in &c.instructions {
        let mut next = Vec::with_capacity(live.len());
        for mut b in live {
            match ins {
                Instruction::Gate(_) | Instruction::Controlled(_) | Instruction::Barrier => {
                    if track {
                        apply_unitary(&mut b.state, n, ins);
                    }
                    if opts.record_residual {
                        b.residual.push(ins.clone());
                    }
                    next.push(b);
                }
                Instruction::Prob { p, base } => {
                    if *p >= BRANCH_TOL {
                        let mut with = b.clone();
                        with.prob *= p;
                        if track {
                            apply_unitary(&mut with.state, n, base);
                        }
                        if opts.record_residual {
                            with.residual.push((**base).clone());
                        }
                        next.push(with);
                    }
                    if 1.0 - p >= BRANCH_TOL {
                        b.prob *= 1.0 - p;
                        if opts.record_residual {
                            b.residual.extend(id_placeholders(base));
                        }
                        next.push(b);
                    }
                }
                Instruction::IfGate { bit, value, base } => {
                    if b.bits[bit.0] == Some(*value) {
                        if track {
                            apply_unitary(&mut b.state, n, base);
                        }
                        if opts.record_residual {
                            b.residual.push((**base).clone());
                        }
                    }
                    next.push(b);
                }
                Instruction::Measure { qubit, bit } => {
                    let m = mask(n, *qubit);
                    let p1: f64 = b.state.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a.norm_sqr()).sum();
                    let p1 = p1.clamp(0.0, 1.0);
                    for (outcome, p) in [(false, 1.0 - p1), (true, p1)] {
                        if p < BRANCH_TOL {
                            continue;
                        }
                        let mut child = b.clone();
                        child.prob *= p;
                        let scale = 1.0 / p.sqrt();
                        for (i, a) in child.state.iter_mut().enumerate() {
                            *a = if (i & m != 0) == outcome { *a * scale } else { Complex64::default() };
                        }
                        child.bits[bit.0] = Some(outcome);
                        child.outcomes.push((*bit, outcome));
                        next.push(child);
                    }
                }
            }
            if next.len() > opts.cap {
                return Err(VerifyError::BranchCap(opts.cap));
            }
        }
        live = next;
    }
    Ok(live)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputBranch {
    pub probability: f64,
    pub statevector: StateVector,
    /// Bits written along this branch.
    pub bits: BTreeMap<Clbit, bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputEnsemble {
    pub n_qubits: usize,
    pub branches: Vec<OutputBranch>,
}

impl OutputEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    /// `Σ p |ψ⟩⟨ψ|` as a dense row-major matrix. Intended for small registers.
    pub fn density_matrix(&self) -> Vec<Complex64> {
        let dim = 1 << self.n_qubits;
        let mut rho = vec![Complex64::default(); dim * dim];
        for b in &self.branches {
            for r in 0..dim {
                for c in 0..dim {
                    rho[r * dim + c] += b.statevector[r] * b.statevector[c].conj() * b.probability;
                }
            }
        }
        rho
    }
}

/// All output branches of `c` run from `|0…0⟩`.
pub fn simulate_dynamic(c: &Circuit) -> Result<OutputEnsemble, VerifyError> {
    let branches = expand(c, WalkOptions { track_state: true, record_residual: false, cap: DEFAULT_BRANCH_CAP })?;
    Ok(OutputEnsemble {
        n_qubits: c.n_qubits,
        branches: branches
            .into_iter()
            .map(|b| OutputBranch {
                probability: b.prob,
                statevector: b.state,
                bits: b.bits.iter().enumerate().filter_map(|(i, v)| v.map(|v| (Clbit(i), v))).collect(),
            })
            .collect(),
    })
}

type BitKey = Vec<Option<bool>>;

fn by_output_value<'a>(e: &'a OutputEnsemble, outputs: &[Clbit]) -> BTreeMap<BitKey, Vec<&'a OutputBranch>> {
    let mut map: BTreeMap<BitKey, Vec<&OutputBranch>> = BTreeMap::new();
    for b in &e.branches {
        let key = outputs.iter().map(|c| b.bits.get(c).copied()).collect();
        map.entry(key).or_default().push(b);
    }
    map
}

/// Max-norm distance between the conditional mixed states, computed entry by
/// entry without materializing either matrix.
fn conditional_distance(a: &[&OutputBranch], pa: f64, b: &[&OutputBranch], pb: f64, dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..dim {
        for c in r..dim {
            let ra: Complex64 = a.iter().map(|x| x.statevector[r] * x.statevector[c].conj() * x.probability).sum();
            let rb: Complex64 = b.iter().map(|x| x.statevector[r] * x.statevector[c].conj() * x.probability).sum();
            worst = worst.max((ra / pa - rb / pb).norm());
        }
    }
    worst
}

/// Largest discrepancy between two ensembles, over output-bit probabilities
/// and per-value conditional density matrices.
pub fn ensemble_distance(a: &OutputEnsemble, b: &OutputEnsemble, outputs: &[Clbit]) -> Result<f64, VerifyError> {
    if a.n_qubits != b.n_qubits {
        return Err(VerifyError::ShapeMismatch(a.n_qubits, b.n_qubits));
    }
    let dim = 1usize << a.n_qubits;
    let ga = by_output_value(a, outputs);
    let gb = by_output_value(b, outputs);
    let mut keys: Vec<&BitKey> = ga.keys().chain(gb.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut worst: f64 = 0.0;
    for key in keys {
        let empty = Vec::new();
        let xa = ga.get(key).unwrap_or(&empty);
        let xb = gb.get(key).unwrap_or(&empty);
        let pa: f64 = xa.iter().map(|x| x.probability).sum();
        let pb: f64 = xb.iter().map(|x| x.probability).sum();
        worst = worst.max((pa - pb).abs());
        if pa > BRANCH_TOL && pb > BRANCH_TOL {
            worst = worst.max(conditional_distance(xa, pa, xb, pb, dim));
        }
    }
    Ok(worst)
}

pub fn ensembles_equal(a: &OutputEnsemble, b: &OutputEnsemble, outputs: &[Clbit], tol: f64) -> Result<bool, VerifyError> {
    Ok(ensemble_distance(a, b, outputs)? <= tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub distance: f64,
    pub measurements_before: usize,
    pub measurements_after: usize,
}

/// Simulates both circuits and compares them on the original's output bits.
pub fn check_optimization(original: &Circuit, optimized: &Circuit, tol: f64) -> Result<CheckReport, VerifyError> {
    if original.n_qubits != optimized.n_qubits {
        return Err(VerifyError::ShapeMismatch(original.n_qubits, optimized.n_qubits));
    }
    for c in [original, optimized] {
        if c.n_qubits > MAX_DYNAMIC_QUBITS {
            return Err(VerifyError::TooManyQubits { n: c.n_qubits, max: MAX_DYNAMIC_QUBITS });
        }
    }
    let a = simulate_dynamic(original)?;
    let b = simulate_dynamic(optimized)?;
    let outputs: Vec<Clbit> = original.outputs.iter().copied().collect();
    let distance = ensemble_distance(&a, &b, &outputs)?;
    Ok(CheckReport {
        passed: distance <= tol,
        distance,
        measurements_before: original.count_measurements(),
        measurements_after: optimized.count_measurements(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: &[Complex64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - Complex64::new(*y, 0.0)).norm() < 1e-12)
    }

    #[test]
    fn hadamard() {
        let c = parse("qubits 1\nclbits 0\nh q0").unwrap();
        let v = simulate_static(&c, &Input::zeros(1)).unwrap();
        assert!(close(&v, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]));
    }

    #[test]
    fn bell_and_labelled_prefix() {
        let c = parse("qubits 3\nclbits 0\nh q0\ncx q0 q1\nx q1").unwrap();
        let v = simulate_static(&c, &Input::zeros(3)).unwrap();
        // (|010⟩ + |100⟩)/√2
        let mut want = [0.0; 8];
        want[0b010] = FRAC_1_SQRT_2;
        want[0b100] = FRAC_1_SQRT_2;
        assert!(close(&v, &want));

        let c = parse("qubits 2\nclbits 0\nh q0\ncx q0 q1").unwrap();
        let v = simulate_static(&c, &Input::zeros(2)).unwrap();
        assert!(close(&v, &[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]));
    }

    #[test]
    fn basis_input_swap_and_negative_controls() {
        let c = parse("qubits 3\nclbits 0\nswap q0 q2\nnctrl q1 : x q0").unwrap();
        let v = simulate_static(&c, &Input::Basis("100".parse().unwrap())).unwrap();
        // |100⟩ -swap-> |001⟩ -(q1 = 0)-> |101⟩
        let mut want = [0.0; 8];
        want[0b101] = 1.0;
        assert!(close(&v, &want));
    }

    #[test]
    fn static_limits() {
        let c = parse("qubits 1\nclbits 1\nmeasure q0 -> c0").unwrap();
        assert_eq!(simulate_static(&c, &Input::zeros(1)), Err(VerifyError::DynamicInstruction(0)));
        let big = Circuit::new(15, 0);
        assert!(matches!(simulate_static(&big, &Input::zeros(15)), Err(VerifyError::TooManyQubits { .. })));
        assert_eq!(
            simulate_static(&Circuit::new(2, 0), &Input::zeros(1)),
            Err(VerifyError::BadInput(2))
        );
    }

    #[test]
    fn measuring_plus_gives_two_branches() {
        let c = parse("qubits 1\nclbits 1\nh q0\nmeasure q0 -> c0").unwrap();
        let e = simulate_dynamic(&c).unwrap();
        assert_eq!(e.branches.len(), 2);
        for (b, want) in e.branches.iter().zip([[1.0, 0.0], [0.0, 1.0]]) {
            assert!((b.probability - 0.5).abs() < 1e-12);
            assert!(close(&b.statevector, &want));
        }
    }

    #[test]
    fn probabilistic_branches() {
        let c = parse("qubits 2\nclbits 0\nh q0\nprob 0.4 cx q0 q1\nprob 0.6 x q1").unwrap();
        let e = simulate_dynamic(&c).unwrap();
        let mut ps: Vec<f64> = e.branches.iter().map(|b| b.probability).collect();
        ps.sort_by(f64::total_cmp);
        let want = [0.16, 0.24, 0.24, 0.36];
        assert!(ps.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn static_circuit_is_one_branch() {
        let c = parse("qubits 2\nclbits 0\nh q0\ncx q0 q1\nry(0.3) q1").unwrap();
        let e = simulate_dynamic(&c).unwrap();
        assert_eq!(e.branches.len(), 1);
        assert_eq!(e.branches[0].statevector, simulate_static(&c, &Input::zeros(2)).unwrap());
    }

    #[test]
    fn global_phase_is_invisible() {
        let a = parse("qubits 1\nclbits 0\nid q0").unwrap();
        let b = parse("qubits 1\nclbits 0\nrz(1.3) q0").unwrap();
        let ea = simulate_dynamic(&a).unwrap();
        let eb = simulate_dynamic(&b).unwrap();
        assert!(ensembles_equal(&ea, &ea, &[], 1e-12).unwrap());
        assert!(ensembles_equal(&ea, &eb, &[], 1e-12).unwrap());
    }

    #[test]
    fn output_bits_distinguish_mixtures() {
        // Same mixed state, but only one circuit exposes the outcome.
        let a = parse("qubits 2\nclbits 1\noutput c0\nh q0\nmeasure q0 -> c0").unwrap();
        let b = parse("qubits 2\nclbits 1\noutput c0\nh q0\nmeasure q0 -> c0\nif c0 == 1 : x q1").unwrap();
        let r = check_optimization(&a, &b, 1e-9).unwrap();
        assert!(!r.passed);
        assert!(r.distance > 0.4);
    }

    #[test]
    fn dropped_gate_fails_the_check() {
        let a = parse("qubits 2\nclbits 1\nh q0\nmeasure q0 -> c0\nif c0 == 1 : x q1").unwrap();
        let good = parse("qubits 2\nclbits 1\nh q0\ncx q0 q1\nmeasure q0 -> c0").unwrap();
        let bad = parse("qubits 2\nclbits 1\nh q0\nmeasure q0 -> c0").unwrap();
        assert!(check_optimization(&a, &good, 1e-9).unwrap().passed);
        let r = check_optimization(&a, &bad, 1e-9).unwrap();
        assert!(!r.passed && r.distance > 1e-9);
        assert_eq!(
            check_optimization(&a, &Circuit::new(3, 1), 1e-9).unwrap_err(),
            VerifyError::ShapeMismatch(2, 3)
        );
    }

    #[test]
    fn branch_limits() {
        let mut c = Circuit::new(1, 0);
        for _ in 0..21 {
            c.push(Instruction::prob(0.5, Gate::single(GateKind::X, 0)));
        }
        assert_eq!(simulate_dynamic(&c).unwrap_err(), VerifyError::TooManyProb(21));
        let mut c = Circuit::new(1, 0);
        for _ in 0..4 {
            c.push(Instruction::prob(0.5, Gate::single(GateKind::X, 0)));
        }
        let r = expand(&c, WalkOptions { track_state: true, record_residual: false, cap: 8 });
        assert_eq!(r.unwrap_err(), VerifyError::BranchCap(8));
    }
}
