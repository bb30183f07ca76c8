//! Quantum constant propagation.
//!
//! Forward abstract interpretation from `|0…0⟩`. Qubits are partitioned into
//! entanglement groups; each group is tracked as an exact sparse state
//! (`Known`), as a single qubit that is a computational basis state in every
//! execution branch (`BasisDiagonal`), or not at all (`Top`). Controlled gates
//! whose controls are statically decided are removed or stripped.
//!
//! Once a group is `Top` it stays `Top`.

use std::sync::Arc;

use thiserror::Error;

use crate::bits::BitString;
use crate::circuit::{Circuit, Clbit, Controlled, Gate, GateKind, Instruction, Qubit, Violation};
use crate::purity::{self, QubitAmplitudes};
use crate::sparse::SparseState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QcpConfig {
    /// Cap on basis states per group.
    pub n_max: usize,
    /// Cap on controls per gate.
    pub max_controls: usize,
    pub amplitude_tol: f64,
    /// Outcome probabilities this close to 0 or 1 count as deterministic.
    pub prob_tol: f64,
}

impl Default for QcpConfig {
    fn default() -> Self {
        Self { n_max: 64, max_controls: 3, amplitude_tol: 1e-12, prob_tol: 1e-9 }
    }
}

impl QcpConfig {
    pub fn check(&self) -> Result<(), QcpError> {
        if self.n_max < 2 {
            return Err(QcpError::Config(format!("n_max must be at least 2, got {}", self.n_max)));
        }
        if self.max_controls < 1 {
            return Err(QcpError::Config("max_controls must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum QcpError {
    #[error("circuit has no qubits")]
    EmptyCircuit,
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("measurements are handled by `AnalysisState::measure`")]
    UnexpectedMeasure,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupState {
    Known(SparseState),
    /// Singleton only: a basis state in every branch, uncorrelated with any
    /// `Known` group.
    BasisDiagonal,
    Top,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub members: Vec<Qubit>,
    pub state: GroupState,
}

impl Group {
    pub fn is_top(&self) -> bool {
        matches!(self.state, GroupState::Top)
    }

    pub fn known(&self) -> Option<&SparseState> {
        match &self.state {
            GroupState::Known(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClbitValue {
    Const(bool),
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimplifyAction {
    Keep,
    Remove,
    /// Replace a controlled gate by its base gate.
    StripControls,
    ReplaceWith(Instruction),
}

impl SimplifyAction {
    /// The instruction that survives, if any.
    pub fn resolve(&self, original: &Instruction) -> Option<Instruction> {
        match self {
            SimplifyAction::Keep => Some(original.clone()),
            SimplifyAction::Remove => None,
            SimplifyAction::StripControls => match original {
                Instruction::Controlled(cg) => Some(Instruction::Gate(cg.base.clone())),
                other => Some(other.clone()),
            },
            SimplifyAction::ReplaceWith(ins) => Some(ins.clone()),
        }
    }
}

/// What propagation learned from a measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureFact {
    /// Unentangled and (numerically) a basis state.
    Deterministic(bool),
    /// Unentangled pure superposition.
    Pure(QubitAmplitudes),
    BasisDiagonal,
    /// Entangled with its group or untracked.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct AnalysisState {
    partition: crate::partition::Partition,
    groups: Vec<Option<Arc<Group>>>,
    clbits: Vec<ClbitValue>,
    work: u64,
}

/// Every qubit in its own `Known` group at `|0⟩`; every clbit unknown.
pub fn init_state(n_qubits: usize, n_clbits: usize) -> Result<AnalysisState, QcpError> {
    if n_qubits == 0 {
        return Err(QcpError::EmptyCircuit);
    }
    let groups = (0..n_qubits)
        .map(|q| {
            Some(Arc::new(Group {
                members: vec![Qubit(q)],
                state: GroupState::Known(SparseState::zero(Qubit(q))),
            }))
        })
        .collect();
    Ok(AnalysisState {
        partition: crate::partition::Partition::new(n_qubits),
        groups,
        clbits: vec![ClbitValue::Unknown; n_clbits],
        work: 0,
    })
}

/// Functional form of [`AnalysisState::apply`].
pub fn apply_instruction(
    s: &AnalysisState,
    ins: &Instruction,
    cfg: &QcpConfig,
) -> Result<(AnalysisState, SimplifyAction), QcpError> {
    let mut next = s.clone();
    let action = next.apply(ins, cfg)?;
    Ok((next, action))
}

impl AnalysisState {
    pub fn num_qubits(&self) -> usize {
        self.partition.num_qubits()
    }

    pub fn group_id(&self, q: Qubit) -> usize {
        self.partition.find(q.0)
    }

    pub fn group(&self, q: Qubit) -> &Group {
        self.groups[self.group_id(q)].as_deref().expect("every root owns a group")
    }

    /// Distinct groups, ordered by their lowest member.
    pub fn groups(&self) -> Vec<&Group> {
        let mut seen = vec![false; self.partition.num_nodes()];
        let mut out = Vec::new();
        for q in 0..self.num_qubits() {
            let id = self.partition.find(q);
            if !std::mem::replace(&mut seen[id], true) {
                out.push(self.groups[id].as_deref().expect("group"));
            }
        }
        out
    }

    pub fn clbit(&self, c: Clbit) -> ClbitValue {
        self.clbits.get(c.0).copied().unwrap_or(ClbitValue::Unknown)
    }

    /// Basis-state updates performed so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// Replaces the groups of `state`'s qubits by one `Known` group holding it.
    pub fn assume_state(&mut self, state: SparseState) {
        let qs = state.qubits().to_vec();
        for &q in &qs {
            self.isolate(q, GroupState::Top);
            let id = self.group_id(q);
            self.groups[id] = None;
        }
        let mut root = self.group_id(qs[0]);
        for q in &qs[1..] {
            root = self.partition.union(qs[0].0, q.0);
        }
        self.set_group(root, Group { members: qs, state: GroupState::Known(state) });
    }

    fn set_group(&mut self, id: usize, g: Group) {
        if self.groups.len() <= id {
            self.groups.resize(id + 1, None);
        }
        self.groups[id] = Some(Arc::new(g));
    }

    /// Moves `q` into its own group with `state`; the rest of its old group
    /// keeps its id and gets `rest` (if it has other members).
    fn detach(&mut self, q: Qubit, state: GroupState, rest: Option<GroupState>) {
        let old = self.group_id(q);
        let mut group = self.groups[old].take().map(Arc::unwrap_or_clone).expect("group");
        group.members.retain(|&m| m != q);
        let id = self.partition.detach(q.0);
        if !group.members.is_empty() {
            group.state = rest.unwrap_or(GroupState::Top);
            self.set_group(old, group);
        }
        self.set_group(id, Group { members: vec![q], state });
    }

    /// Splits `q` off as a singleton; whatever it leaves behind becomes Top
    /// unless it was Top already.
    fn isolate(&mut self, q: Qubit, state: GroupState) {
        if self.group(q).members.len() == 1 {
            let id = self.group_id(q);
            self.set_group(id, Group { members: vec![q], state });
        } else {
            self.detach(q, state, Some(GroupState::Top));
        }
    }

    /// Merges the groups of `qs` into one and returns its id.
    fn merge(&mut self, qs: &[Qubit], make_top: bool) -> usize {
        let mut ids: Vec<usize> = qs.iter().map(|&q| self.group_id(q)).collect();
        ids.dedup();
        let mut distinct = Vec::new();
        for id in ids {
            if !distinct.contains(&id) {
                distinct.push(id);
            }
        }
        if distinct.len() == 1 && !make_top {
            return distinct[0];
        }
        let parts: Vec<Group> = distinct
            .iter()
            .map(|&id| self.groups[id].take().map(Arc::unwrap_or_clone).expect("group"))
            .collect();
        let mut root = self.partition.find(qs[0].0);
        for q in &qs[1..] {
            root = self.partition.union(qs[0].0, q.0);
        }
        let members: Vec<Qubit> = parts.iter().flat_map(|g| g.members.iter().copied()).collect();
        let state = if make_top {
            GroupState::Top
        } else {
            let mut it = parts.into_iter().map(|g| match g.state {
                GroupState::Known(s) => s,
                _ => unreachable!("only Known groups are tensored"),
            });
            let first = it.next().expect("non-empty");
            GroupState::Known(it.fold(first, |acc, s| {
                self.work += (acc.len() * s.len()) as u64;
                acc.tensor(&s)
            }))
        };
        self.set_group(root, Group { members, state });
        root
    }

    fn make_top(&mut self, qs: &[Qubit]) {
        if !qs.is_empty() {
            self.merge(qs, true);
        }
    }

    /// If `q` is in a Known group and its digit never varies, split it off as
    /// a singleton basis state and return that digit.
    fn isolate_constant(&mut self, q: Qubit) -> Option<bool> {
        let group = self.group(q);
        let s = group.known()?;
        let pos = s.position(q)?;
        let p1 = s.probability_one(pos);
        let (any0, any1) = s.iter().fold((false, false), |(z, o), (k, _)| (z || !k.get(pos), o || k.get(pos)));
        if any0 && any1 {
            return None;
        }
        let value = p1 > 0.5;
        if group.members.len() > 1 {
            let f = purity::factor_qubit(s, pos).expect("constant digit is separable");
            let rest = f.remainder.map(GroupState::Known);
            self.detach(q, GroupState::Known(SparseState::basis(vec![q], BitString::zeros(1).with(0, value))), rest);
        }
        Some(value)
    }

    fn state_kind(&self, q: Qubit) -> &GroupState {
        &self.group(q).state
    }

    /// Applies one non-measurement instruction and reports how it simplifies.
    pub fn apply(&mut self, ins: &Instruction, cfg: &QcpConfig) -> Result<SimplifyAction, QcpError> {
        match ins {
            Instruction::Measure { .. } => Err(QcpError::UnexpectedMeasure),
            Instruction::Barrier => Ok(SimplifyAction::Keep),
            Instruction::Gate(g) => {
                self.apply_unitary(&[], g, cfg);
                Ok(SimplifyAction::Keep)
            }
            Instruction::Controlled(cg) => Ok(self.apply_controlled(cg, cfg)),
            Instruction::IfGate { bit, value, base } => match self.clbit(*bit) {
                ClbitValue::Const(v) if v == *value => {
                    let inner = self.apply(base, cfg)?;
                    Ok(match inner.resolve(base) {
                        Some(ins) => SimplifyAction::ReplaceWith(ins),
                        None => SimplifyAction::Remove,
                    })
                }
                ClbitValue::Const(_) => Ok(SimplifyAction::Remove),
                ClbitValue::Unknown => {
                    self.poison(base);
                    Ok(SimplifyAction::Keep)
                }
            },
            Instruction::Prob { base, .. } => {
                self.apply_prob(base);
                Ok(SimplifyAction::Keep)
            }
        }
    }

    /// The instruction may or may not happen: everything it touches becomes
    /// Top, except controls that are basis-diagonal.
    fn poison(&mut self, ins: &Instruction) {
        let qs: Vec<Qubit> = match ins {
            Instruction::Gate(g) => g.targets.clone(),
            Instruction::Controlled(cg) => cg
                .conditions()
                .map(|(q, _)| q)
                .filter(|&q| !matches!(self.state_kind(q), GroupState::BasisDiagonal))
                .chain(cg.base.targets.iter().copied())
                .collect(),
            _ => ins.qubits(),
        };
        self.make_top(&qs);
    }

    fn apply_prob(&mut self, base: &Instruction) {
        if let Instruction::Gate(g) = base {
            if let ([q], true) = (g.targets.as_slice(), g.kind.is_monomial()) {
                let q = *q;
                match self.state_kind(q) {
                    GroupState::BasisDiagonal => return,
                    GroupState::Known(_) => {
                        if self.isolate_constant(q).is_some() {
                            if !g.kind.is_diagonal() {
                                self.isolate(q, GroupState::BasisDiagonal);
                            }
                            return;
                        }
                    }
                    GroupState::Top => {}
                }
            }
        }
        self.poison(base);
    }

    fn apply_controlled(&mut self, cg: &Controlled, cfg: &QcpConfig) -> SimplifyAction {
        let conditions: Vec<(Qubit, bool)> = cg.conditions().collect();
        // Evaluate controls jointly per Known group.
        let mut decided = vec![false; conditions.len()];
        let mut seen_groups = Vec::new();
        let mut work = 0u64;
        for &(q, _) in &conditions {
            let id = self.group_id(q);
            if seen_groups.contains(&id) {
                continue;
            }
            seen_groups.push(id);
            let Some(state) = self.group(q).known() else { continue };
            let local: Vec<(usize, bool)> = conditions
                .iter()
                .filter(|(c, _)| self.group_id(*c) == id)
                .map(|&(c, v)| (state.position(c).expect("member"), v))
                .collect();
            work += state.len() as u64;
            let (any, all) = state.control_support(&local);
            if !any {
                self.work += work;
                return SimplifyAction::Remove;
            }
            if all {
                for (i, &(c, _)) in conditions.iter().enumerate() {
                    if self.group_id(c) == id {
                        decided[i] = true;
                    }
                }
            }
        }
        self.work += work;
        let remaining: Vec<(Qubit, bool)> =
            conditions.iter().zip(&decided).filter(|(_, &d)| !d).map(|(&c, _)| c).collect();
        self.apply_unitary(&remaining, &cg.base, cfg);
        if remaining.is_empty() {
            SimplifyAction::StripControls
        } else if remaining.len() < conditions.len() {
            let (pos, neg): (Vec<_>, Vec<_>) = remaining.iter().partition(|(_, v)| *v);
            SimplifyAction::ReplaceWith(Instruction::Controlled(Controlled::new(
                pos.into_iter().map(|(q, _)| q).collect(),
                neg.into_iter().map(|(q, _)| q).collect(),
                cg.base.clone(),
            )))
        } else {
            SimplifyAction::Keep
        }
    }

    /// Applies `base` conditioned on `controls` (which are not statically
    /// decided).
    fn apply_unitary(&mut self, controls: &[(Qubit, bool)], base: &Gate, cfg: &QcpConfig) {
        let mut spanned: Vec<Qubit> = controls.iter().map(|&(q, _)| q).collect();
        spanned.extend_from_slice(&base.targets);

        let all_known = spanned.iter().all(|&q| matches!(self.state_kind(q), GroupState::Known(_)));
        if !all_known {
            if controls.is_empty() {
                if let [t] = base.targets.as_slice() {
                    if matches!(self.state_kind(*t), GroupState::BasisDiagonal) && base.kind.is_monomial() {
                        return;
                    }
                }
            }
            let touched: Vec<Qubit> = controls
                .iter()
                .map(|&(q, _)| q)
                .filter(|&q| !matches!(self.state_kind(q), GroupState::BasisDiagonal))
                .chain(base.targets.iter().copied())
                .collect();
            self.make_top(&touched);
            return;
        }

        let mut ids: Vec<usize> = spanned.iter().map(|&q| self.group_id(q)).collect();
        ids.sort_unstable();
        ids.dedup();
        let merged_len: usize = ids
            .iter()
            .map(|&id| self.groups[id].as_ref().and_then(|g| g.known()).map_or(1, SparseState::len))
            .fold(1usize, |acc, n| acc.saturating_mul(n));
        if merged_len > cfg.n_max {
            self.make_top(&spanned);
            return;
        }
        let root = self.merge(&spanned, false);
        let group = Arc::make_mut(self.groups[root].as_mut().expect("group"));
        let GroupState::Known(state) = &mut group.state else { unreachable!() };
        let pos = |q: Qubit| state.position(q).expect("member");
        let local: Vec<(usize, bool)> = controls.iter().map(|&(q, v)| (pos(q), v)).collect();
        let work = match (base.kind, base.targets.as_slice()) {
            (GateKind::Swap, [a, b]) => {
                let (a, b) = (pos(*a), pos(*b));
                state.apply_swap(a, b, &local)
            }
            (kind, [t]) => {
                let m = kind.matrix().expect("single-qubit gate");
                let t = pos(*t);
                state.apply_single(&m, t, &local)
            }
            _ => unreachable!("validated gate arity"),
        };
        let overflow = state.len() > cfg.n_max;
        self.work += work as u64;
        if overflow {
            self.make_top(&spanned);
        }
    }

    /// Measures `q` into `bit`, updating the abstract state.
    pub fn measure(&mut self, q: Qubit, bit: Clbit, cfg: &QcpConfig) -> MeasureFact {
        let fact = self.measure_fact(q, cfg);
        let value = match fact {
            MeasureFact::Deterministic(v) => {
                let state = GroupState::Known(SparseState::basis(vec![q], BitString::zeros(1).with(0, v)));
                self.split_pure(q, state);
                ClbitValue::Const(v)
            }
            MeasureFact::Pure(_) => {
                self.split_pure(q, GroupState::BasisDiagonal);
                ClbitValue::Unknown
            }
            MeasureFact::BasisDiagonal => ClbitValue::Unknown,
            MeasureFact::Unknown => {
                let members = self.group(q).members.clone();
                self.make_top(&members);
                ClbitValue::Unknown
            }
        };
        if let Some(slot) = self.clbits.get_mut(bit.0) {
            *slot = value;
        }
        fact
    }

    /// What a measurement of `q` would reveal, without changing the state.
    pub fn measure_fact(&self, q: Qubit, cfg: &QcpConfig) -> MeasureFact {
        match self.state_kind(q) {
            GroupState::Top => MeasureFact::Unknown,
            GroupState::BasisDiagonal => MeasureFact::BasisDiagonal,
            GroupState::Known(s) => {
                let pos = s.position(q).expect("member");
                match purity::factor_qubit(s, pos) {
                    Err(_) => MeasureFact::Unknown,
                    Ok(f) => {
                        let p0 = f.qubit_state.p0();
                        if p0 >= 1.0 - cfg.prob_tol {
                            MeasureFact::Deterministic(false)
                        } else if p0 <= cfg.prob_tol {
                            MeasureFact::Deterministic(true)
                        } else {
                            MeasureFact::Pure(f.qubit_state)
                        }
                    }
                }
            }
        }
    }

    fn split_pure(&mut self, q: Qubit, state: GroupState) {
        let group = self.group(q);
        if group.members.len() == 1 {
            let id = self.group_id(q);
            self.set_group(id, Group { members: vec![q], state });
            return;
        }
        let s = group.known().expect("pure measurement on a Known group");
        let pos = s.position(q).expect("member");
        let work = s.len() as u64;
        let f = purity::factor_qubit(s, pos).expect("separable");
        self.work += work;
        self.detach(q, state, f.remainder.map(GroupState::Known));
    }
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub struct QcpRun {
    pub circuit: Circuit,
    /// Abstract state immediately before each instruction of `circuit`.
    pub trace: Vec<AnalysisState>,
    /// Index in the input circuit of each surviving instruction.
    pub origin: Vec<usize>,
    pub final_state: AnalysisState,
}

impl QcpRun {
    pub fn work(&self) -> u64 {
        self.final_state.work()
    }
}

/// Propagates constants through `c`, returning the simplified circuit and the
/// pre-state of every surviving instruction.
pub fn run(c: &Circuit, cfg: &QcpConfig) -> Result<QcpRun, QcpError> {
    cfg.check()?;
    let violations = c.validate_with(cfg.max_controls);
    if !violations.is_empty() {
        return Err(QcpError::Invalid(violations));
    }
    let mut state = init_state(c.n_qubits, c.n_clbits)?;
    let mut out = Circuit { instructions: Vec::with_capacity(c.instructions.len()), ..c.clone() };
    let mut trace = Vec::with_capacity(c.instructions.len());
    let mut origin = Vec::with_capacity(c.instructions.len());
    for (idx, ins) in c.instructions.iter().enumerate() {
        let before = state.clone();
        let kept = match ins {
            Instruction::Measure { qubit, bit } => {
                state.measure(*qubit, *bit, cfg);
                Some(ins.clone())
            }
            _ => state.apply(ins, cfg)?.resolve(ins),
        };
        if let Some(kept) = kept {
            out.instructions.push(kept);
            trace.push(before);
            origin.push(idx);
        }
    }
    Ok(QcpRun { circuit: out, trace, origin, final_state: state })
}
