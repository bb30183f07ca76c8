//! Measurement elimination.
//!
//! A measurement of an unentangled qubit in a known pure state `α|0⟩ + β|1⟩`
//! becomes a rotation to `|1⟩` followed by `x` with probability `|α|²`; the
//! gates it classically controlled become quantum-controlled on the qubit.
//! Basis states drop the measurement outright, and qubits that are a basis
//! state in every branch keep their controls without any new gates.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, Clbit, Controlled, Gate, GateKind, Instruction, Qubit};
use crate::purity::QubitAmplitudes;
use crate::qcp::{self, GroupState, MeasureFact, QcpConfig, QcpError};

#[derive(Debug, Error, PartialEq)]
pub enum RewriteError {
    #[error("qubit state has norm² {0}, expected 1")]
    NotNormalized(f64),
    #[error("instruction {0} is not a measurement")]
    NotMeasurement(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Qcp(#[from] QcpError),
}

/// Angles of a `u` gate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationSpec {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl RotationSpec {
    pub fn kind(&self) -> GateKind {
        GateKind::U(self.theta, self.phi, self.lambda)
    }

    pub fn gate(&self, q: Qubit) -> Gate {
        Gate::new(self.kind(), vec![q])
    }
}

fn arg(z: num_complex::Complex64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

/// A `u` gate sending `α|0⟩ + β|1⟩` to `|1⟩` up to global phase.
pub fn synthesize_rotation(q: QubitAmplitudes) -> Result<RotationSpec, RewriteError> {
    let n = q.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(RewriteError::NotNormalized(n));
    }
    Ok(RotationSpec {
        theta: 2.0 * q.alpha.norm().atan2(q.beta.norm()),
        phi: -arg(q.alpha) - arg(q.beta),
        lambda: arg(q.alpha) - arg(q.beta),
    })
}

/// Classically-controlled instructions reading a measurement's bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Eligibility {
    Uses(Vec<usize>),
    Ineligible(&'static str),
}

fn measure_at(c: &Circuit, index: usize) -> Result<(Qubit, Clbit), RewriteError> {
    match c.instructions.get(index) {
        Some(Instruction::Measure { qubit, bit }) => Ok((*qubit, *bit)),
        _ => Err(RewriteError::NotMeasurement(index)),
    }
}

/// Indices of the `IfGate`s reading the bit written at `index`, up to the next
/// measurement into the same bit.
fn scope_uses(c: &Circuit, index: usize, bit: Clbit) -> Vec<usize> {
    let mut uses = Vec::new();
    for (j, ins) in c.instructions.iter().enumerate().skip(index + 1) {
        match ins {
            Instruction::Measure { bit: b, .. } if *b == bit => break,
            Instruction::IfGate { bit: b, .. } if *b == bit => uses.push(j),
            _ => {}
        }
    }
    uses
}

pub fn eligible_uses(c: &Circuit, index: usize) -> Result<Eligibility, RewriteError> {
    eligible_uses_with(c, index, usize::MAX)
}

/// Like [`eligible_uses`], also rejecting uses that would exceed
/// `max_controls` once the measured qubit becomes a control.
pub fn eligible_uses_with(c: &Circuit, index: usize, max_controls: usize) -> Result<Eligibility, RewriteError> {
    let (q, bit) = measure_at(c, index)?;
    if c.outputs.contains(&bit) {
        return Ok(Eligibility::Ineligible("output bit"));
    }
    let uses = scope_uses(c, index, bit);
    for &u in &uses {
        let Instruction::IfGate { base, .. } = &c.instructions[u] else { unreachable!() };
        if base.acts_on(q) {
            return Ok(Eligibility::Ineligible("use acts on measured qubit"));
        }
        let controls = match base.as_ref() {
            Instruction::Controlled(cg) => cg.num_controls(),
            _ => 0,
        };
        if controls + 1 > max_controls {
            return Ok(Eligibility::Ineligible("too many controls"));
        }
    }
    if let Some(&last) = uses.last() {
        let disturbed = c.instructions[index + 1..last]
            .iter()
            .any(|ins| !matches!(ins, Instruction::Barrier) && ins.acts_on(q));
        if disturbed {
            return Ok(Eligibility::Ineligible("qubit disturbed"));
        }
    }
    Ok(Eligibility::Uses(uses))
}

/// Turns `if c == v : G` into `G` controlled on `q` being `v`.
fn quantum_control(use_: &Instruction, q: Qubit) -> Instruction {
    let Instruction::IfGate { value, base, .. } = use_ else { panic!("not a classically-controlled gate") };
    let mut cg = match base.as_ref() {
        Instruction::Gate(g) => Controlled::new(Vec::new(), Vec::new(), g.clone()),
        Instruction::Controlled(cg) => Controlled { syntax: Default::default(), ..cg.clone() },
        _ => panic!("classical control wraps a non-unitary"),
    };
    if *value {
        cg.pos_controls.push(q);
    } else {
        cg.neg_controls.push(q);
    }
    Instruction::Controlled(cg)
}

fn inline(use_: &Instruction, outcome: bool) -> Vec<Instruction> {
    match use_ {
        Instruction::IfGate { value, base, .. } if *value == outcome => vec![(**base).clone()],
        _ => Vec::new(),
    }
}

/// Replacement lists keyed by instruction index.
type Edits = BTreeMap<usize, Vec<Instruction>>;

fn apply_edits(c: &Circuit, edits: &Edits) -> Circuit {
    let mut instructions = Vec::with_capacity(c.instructions.len() + edits.len());
    for (i, ins) in c.instructions.iter().enumerate() {
        match edits.get(&i) {
            Some(replacement) => instructions.extend(replacement.iter().cloned()),
            None => instructions.push(ins.clone()),
        }
    }
    Circuit { instructions, ..c.clone() }
}

fn check_uses(c: &Circuit, index: usize, uses: &[usize]) -> Result<(), RewriteError> {
    match eligible_uses(c, index)? {
        Eligibility::Uses(u) if u == uses => Ok(()),
        Eligibility::Uses(u) => Err(RewriteError::Precondition(format!("uses {uses:?} do not match {u:?}"))),
        Eligibility::Ineligible(reason) => Err(RewriteError::Precondition(reason.into())),
    }
}

fn probabilistic_edits(c: &Circuit, index: usize, uses: &[usize], q: QubitAmplitudes, tol: f64) -> Result<Edits, RewriteError> {
    let (qubit, _) = measure_at(c, index)?;
    let rot = synthesize_rotation(q)?;
    let p = q.p0();
    if p <= tol || p >= 1.0 - tol {
        return Err(RewriteError::Precondition(format!("outcome is deterministic (p = {p})")));
    }
    let mut edits = Edits::new();
    edits.insert(
        index,
        vec![Instruction::Gate(rot.gate(qubit)), Instruction::prob(p, Gate::new(GateKind::X, vec![qubit]))],
    );
    for &u in uses {
        edits.insert(u, vec![quantum_control(&c.instructions[u], qubit)]);
    }
    Ok(edits)
}

fn deterministic_edits(c: &Circuit, index: usize, uses: &[usize], outcome: bool) -> Edits {
    let mut edits = Edits::new();
    edits.insert(index, Vec::new());
    for &u in uses {
        edits.insert(u, inline(&c.instructions[u], outcome));
    }
    edits
}

fn basis_diagonal_edits(c: &Circuit, index: usize, uses: &[usize], qubit: Qubit) -> Edits {
    let mut edits = Edits::new();
    edits.insert(index, Vec::new());
    for &u in uses {
        edits.insert(u, vec![quantum_control(&c.instructions[u], qubit)]);
    }
    edits
}

/// Measurement with classically-controlled uses on a pure unentangled qubit.
pub fn apply_theorem1(c: &Circuit, index: usize, uses: &[usize], q: QubitAmplitudes) -> Result<Circuit, RewriteError> {
    check_uses(c, index, uses)?;
    Ok(apply_edits(c, &probabilistic_edits(c, index, uses, q, QcpConfig::default().prob_tol)?))
}

/// Unused measurement on a pure unentangled qubit.
pub fn apply_theorem2(c: &Circuit, index: usize, q: QubitAmplitudes) -> Result<Circuit, RewriteError> {
    check_uses(c, index, &[])?;
    Ok(apply_edits(c, &probabilistic_edits(c, index, &[], q, QcpConfig::default().prob_tol)?))
}

/// Measurement whose outcome is known: drop it and resolve its uses.
pub fn apply_deterministic(c: &Circuit, index: usize, uses: &[usize], outcome: bool) -> Result<Circuit, RewriteError> {
    let (_, bit) = measure_at(c, index)?;
    if c.outputs.contains(&bit) {
        return Err(RewriteError::Precondition("output bit".into()));
    }
    if scope_uses(c, index, bit) != uses {
        return Err(RewriteError::Precondition("uses do not cover the bit's readers".into()));
    }
    Ok(apply_edits(c, &deterministic_edits(c, index, uses, outcome)))
}

/// Measurement of a qubit that is a basis state in every branch.
pub fn apply_basis_diagonal(c: &Circuit, index: usize, uses: &[usize]) -> Result<Circuit, RewriteError> {
    check_uses(c, index, uses)?;
    let (qubit, _) = measure_at(c, index)?;
    Ok(apply_edits(c, &basis_diagonal_edits(c, index, uses, qubit)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeOptions {
    pub qcp: QcpConfig,
    pub enable_theorem2: bool,
    pub enable_basis_diagonal: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { qcp: QcpConfig::default(), enable_theorem2: true, enable_basis_diagonal: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RewriteKind {
    Theorem1,
    Theorem2,
    BasisDiagonal,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Rewritten(RewriteKind),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementRecord {
    /// Index in the input circuit.
    pub index: usize,
    pub qubit: usize,
    pub bit: usize,
    pub decision: Decision,
    /// Probability of reading 0, for probabilistic rewrites.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RewriteReport {
    pub records: Vec<MeasurementRecord>,
    pub measurements_before: usize,
    pub measurements_after: usize,
    pub prob_gates_added: usize,
    /// Classical controls turned into quantum controls.
    pub ifgates_converted: usize,
    /// Classical controls resolved statically (inlined or dropped).
    pub ifgates_resolved: usize,
    /// Work counter of the propagation pass.
    pub qcp_work: u64,
}

impl RewriteReport {
    pub fn rewritten(&self) -> impl Iterator<Item = (&MeasurementRecord, RewriteKind)> {
        self.records.iter().filter_map(|r| match r.decision {
            Decision::Rewritten(k) => Some((r, k)),
            Decision::Skipped(_) => None,
        })
    }
}

/// Propagates constants, then removes every measurement it can.
pub fn optimize(c: &Circuit, opts: &OptimizeOptions) -> Result<(Circuit, RewriteReport), RewriteError> {
    let run = qcp::run(c, &opts.qcp)?;
    let s = &run.circuit;
    let mut report = RewriteReport {
        measurements_before: c.count_measurements(),
        ifgates_resolved: c.count_if() - s.count_if(),
        qcp_work: run.work(),
        ..Default::default()
    };
    let mut edits = Edits::new();
    for (i, ins) in s.instructions.iter().enumerate() {
        let Instruction::Measure { qubit, bit } = *ins else { continue };
        let pre = &run.trace[i];
        let mut p0 = None;
        let decision = match pre.measure_fact(qubit, &opts.qcp) {
            MeasureFact::Deterministic(outcome) => {
                if s.outputs.contains(&bit) {
                    Decision::Skipped("output bit".into())
                } else {
                    let uses = scope_uses(s, i, bit);
                    report.ifgates_resolved += uses.len();
                    edits.extend(deterministic_edits(s, i, &uses, outcome));
                    Decision::Rewritten(RewriteKind::Deterministic)
                }
            }
            MeasureFact::Pure(amps) => match eligible_uses_with(s, i, opts.qcp.max_controls)? {
                Eligibility::Ineligible(reason) => Decision::Skipped(reason.into()),
                Eligibility::Uses(uses) if uses.is_empty() && !opts.enable_theorem2 => {
                    Decision::Skipped("unused-result rewrite disabled".into())
                }
                Eligibility::Uses(uses) => {
                    edits.extend(probabilistic_edits(s, i, &uses, amps, opts.qcp.prob_tol)?);
                    report.prob_gates_added += 1;
                    report.ifgates_converted += uses.len();
                    p0 = Some(amps.p0());
                    Decision::Rewritten(if uses.is_empty() { RewriteKind::Theorem2 } else { RewriteKind::Theorem1 })
                }
            },
            MeasureFact::BasisDiagonal if !opts.enable_basis_diagonal => {
                Decision::Skipped("basis-diagonal rewrite disabled".into())
            }
            MeasureFact::BasisDiagonal => match eligible_uses_with(s, i, opts.qcp.max_controls)? {
                Eligibility::Ineligible(reason) => Decision::Skipped(reason.into()),
                Eligibility::Uses(uses) => {
                    edits.extend(basis_diagonal_edits(s, i, &uses, qubit));
                    report.ifgates_converted += uses.len();
                    Decision::Rewritten(RewriteKind::BasisDiagonal)
                }
            },
            MeasureFact::Unknown => match pre.group(qubit).state {
                GroupState::Known(_) => Decision::Skipped("purity failed".into()),
                _ => Decision::Skipped("state unknown".into()),
            },
        };
        report.records.push(MeasurementRecord { index: run.origin[i], qubit: qubit.0, bit: bit.0, decision, p0 });
    }
    let out = apply_edits(s, &edits);
    report.measurements_after = out.count_measurements();
    Ok((out, report))
}
