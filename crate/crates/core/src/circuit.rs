//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over a fixed register of
//! qubits and classical bits. Static instructions are plain or controlled
//! gates; dynamic instructions are measurements and classically-conditioned
//! gates; probabilistic instructions carry a compile-time inclusion
//! probability.
//!
//! Bitstrings over an ordered qubit list put the lowest-indexed qubit in the
//! leftmost (most significant) position.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

pub type Matrix2 = [[Complex64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Qubit(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clbit(pub usize);

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

impl fmt::Display for Clbit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Standard gate set. Angles are in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateKind {
    Id,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    Swap,
    Rx(f64),
    Ry(f64),
    Rz(f64),
    U(f64, f64, f64),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::Id => "id",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::T => "t",
            GateKind::Tdg => "tdg",
            GateKind::Swap => "swap",
            GateKind::Rx(_) => "rx",
            GateKind::Ry(_) => "ry",
            GateKind::Rz(_) => "rz",
            GateKind::U(..) => "u",
        }
    }

    /// Number of qubits the gate acts on.
    pub fn arity(&self) -> usize {
        match self {
            GateKind::Swap => 2,
            _ => 1,
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        match *self {
            GateKind::Rx(a) | GateKind::Ry(a) | GateKind::Rz(a) => vec![a],
            GateKind::U(t, p, l) => vec![t, p, l],
            _ => Vec::new(),
        }
    }

    /// Single-qubit matrix, `None` for `swap`.
    pub fn matrix(&self) -> Option<Matrix2> {
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let m = match *self {
            GateKind::Id => [[one, zero], [zero, one]],
            GateKind::X => [[zero, one], [one, zero]],
            GateKind::Y => [[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]],
            GateKind::Z => [[one, zero], [zero, -one]],
            GateKind::H => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            GateKind::S => [[one, zero], [zero, c(0.0, 1.0)]],
            GateKind::Sdg => [[one, zero], [zero, c(0.0, -1.0)]],
            GateKind::T => [[one, zero], [zero, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
            GateKind::Tdg => [[one, zero], [zero, Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)]],
            GateKind::Swap => return None,
            GateKind::Rx(theta) => {
                let (s, co) = (theta / 2.0).sin_cos();
                [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
            }
            GateKind::Ry(theta) => {
                let (s, co) = (theta / 2.0).sin_cos();
                [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
            }
            GateKind::Rz(theta) => [
                [Complex64::from_polar(1.0, -theta / 2.0), zero],
                [zero, Complex64::from_polar(1.0, theta / 2.0)],
            ],
            GateKind::U(theta, phi, lambda) => {
                let (s, co) = (theta / 2.0).sin_cos();
                [
                    [c(co, 0.0), -Complex64::from_polar(s, lambda)],
                    [Complex64::from_polar(s, phi), Complex64::from_polar(co, phi + lambda)],
                ]
            }
        };
        Some(m)
    }

    /// True when the matrix maps every computational basis state to a basis
    /// state up to phase (one nonzero entry per column).
    pub fn is_monomial(&self) -> bool {
        match self.matrix() {
            None => true,
            Some(m) => (0..2).all(|col| {
                (0..2).filter(|&row| m[row][col].norm() > 1e-12).count() == 1
            }),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self.matrix() {
            None => false,
            Some(m) => m[0][1].norm() <= 1e-12 && m[1][0].norm() <= 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<Qubit>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: impl Into<Vec<Qubit>>) -> Self {
        Self { kind, targets: targets.into() }
    }

    pub fn single(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![Qubit(q)])
    }
}

/// Spelling used when printing a controlled gate. Ignored by equality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CtrlSyntax {
    #[default]
    Explicit,
    /// `cx` / `cz` / `ccx` shorthand.
    Sugar,
}

#[derive(Clone, Debug)]
pub struct Controlled {
    pub pos_controls: Vec<Qubit>,
    pub neg_controls: Vec<Qubit>,
    pub base: Gate,
    pub syntax: CtrlSyntax,
}

impl PartialEq for Controlled {
    fn eq(&self, other: &Self) -> bool {
        self.pos_controls == other.pos_controls
            && self.neg_controls == other.neg_controls
            && self.base == other.base
    }
}

impl Controlled {
    pub fn new(pos_controls: Vec<Qubit>, neg_controls: Vec<Qubit>, base: Gate) -> Self {
        Self { pos_controls, neg_controls, base, syntax: CtrlSyntax::Explicit }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self {
            pos_controls: vec![Qubit(control)],
            neg_controls: Vec::new(),
            base: Gate::single(GateKind::X, target),
            syntax: CtrlSyntax::Sugar,
        }
    }

    pub fn cz(control: usize, target: usize) -> Self {
        Self { base: Gate::single(GateKind::Z, target), ..Self::cx(control, target) }
    }

    pub fn ccx(c1: usize, c2: usize, target: usize) -> Self {
        Self {
            pos_controls: vec![Qubit(c1), Qubit(c2)],
            neg_controls: Vec::new(),
            base: Gate::single(GateKind::X, target),
            syntax: CtrlSyntax::Sugar,
        }
    }

    pub fn num_controls(&self) -> usize {
        self.pos_controls.len() + self.neg_controls.len()
    }

    /// `(qubit, required value)` for every control.
    pub fn conditions(&self) -> impl Iterator<Item = (Qubit, bool)> + '_ {
        self.pos_controls
            .iter()
            .map(|&q| (q, true))
            .chain(self.neg_controls.iter().map(|&q| (q, false)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate(Gate),
    Controlled(Controlled),
    Measure { qubit: Qubit, bit: Clbit },
    /// Applies `base` when classical bit `bit` holds `value`.
    IfGate { bit: Clbit, value: bool, base: Box<Instruction> },
    /// Compiles to `base` with probability `p`, to nothing otherwise.
    Prob { p: f64, base: Box<Instruction> },
    Barrier,
}

impl From<Gate> for Instruction {
    fn from(g: Gate) -> Self {
        Instruction::Gate(g)
    }
}

impl From<Controlled> for Instruction {
    fn from(c: Controlled) -> Self {
        Instruction::Controlled(c)
    }
}

impl Instruction {
    pub fn gate(kind: GateKind, q: usize) -> Self {
        Instruction::Gate(Gate::single(kind, q))
    }

    pub fn measure(q: usize, c: usize) -> Self {
        Instruction::Measure { qubit: Qubit(q), bit: Clbit(c) }
    }

    pub fn if_bit(c: usize, value: bool, base: impl Into<Instruction>) -> Self {
        Instruction::IfGate { bit: Clbit(c), value, base: Box::new(base.into()) }
    }

    pub fn prob(p: f64, base: impl Into<Instruction>) -> Self {
        Instruction::Prob { p, base: Box::new(base.into()) }
    }

    /// Whether this is a plain or controlled gate.
    pub fn is_unitary(&self) -> bool {
        matches!(self, Instruction::Gate(_) | Instruction::Controlled(_))
    }

    pub fn is_static(&self) -> bool {
        !matches!(
            self,
            Instruction::Measure { .. } | Instruction::IfGate { .. } | Instruction::Prob { .. }
        )
    }

    /// Every qubit the instruction touches, controls first.
    pub fn qubits(&self) -> Vec<Qubit> {
        match self {
            Instruction::Gate(g) => g.targets.clone(),
            Instruction::Controlled(c) => c
                .pos_controls
                .iter()
                .chain(&c.neg_controls)
                .chain(&c.base.targets)
                .copied()
                .collect(),
            Instruction::Measure { qubit, .. } => vec![*qubit],
            Instruction::IfGate { base, .. } | Instruction::Prob { base, .. } => base.qubits(),
            Instruction::Barrier => Vec::new(),
        }
    }

    pub fn acts_on(&self, q: Qubit) -> bool {
        self.qubits().contains(&q)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_clbits: usize,
    pub outputs: BTreeSet<Clbit>,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        Self { n_qubits, n_clbits, outputs: BTreeSet::new(), instructions: Vec::new() }
    }

    pub fn with_instructions(mut self, instructions: Vec<Instruction>) -> Self {
        self.instructions = instructions;
        self
    }

    pub fn push(&mut self, ins: impl Into<Instruction>) -> &mut Self {
        self.instructions.push(ins.into());
        self
    }

    pub fn count_measurements(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Measure { .. })).count()
    }

    pub fn count_prob(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::Prob { .. })).count()
    }

    pub fn count_if(&self) -> usize {
        self.instructions.iter().filter(|i| matches!(i, Instruction::IfGate { .. })).count()
    }

    /// Instructions that apply (or may apply) a gate.
    pub fn count_gates(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| !matches!(i, Instruction::Measure { .. } | Instruction::Barrier))
            .count()
    }

    pub fn is_static(&self) -> bool {
        self.instructions.iter().all(Instruction::is_static)
    }

    /// Layer count. A barrier aligns every qubit; classical wires are ignored.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.n_qubits];
        for ins in &self.instructions {
            if let Instruction::Barrier = ins {
                let top = level.iter().copied().max().unwrap_or(0);
                level.iter_mut().for_each(|l| *l = top);
                continue;
            }
            let qs = ins.qubits();
            let next = qs.iter().filter_map(|q| level.get(q.0)).copied().max().unwrap_or(0) + 1;
            for q in qs {
                if let Some(l) = level.get_mut(q.0) {
                    *l = next;
                }
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    /// Sequential concatenation on the same register.
    pub fn then(&self, other: &Circuit) -> Circuit {
        let mut out = self.clone();
        out.n_clbits = self.n_clbits.max(other.n_clbits);
        out.outputs.extend(other.outputs.iter().copied());
        out.instructions.extend(other.instructions.iter().cloned());
        out
    }

    /// Parallel composition: `other` is placed on fresh qubits and clbits
    /// after this circuit's registers.
    pub fn tensor(&self, other: &Circuit) -> Circuit {
        let mut out = self.clone();
        out.n_qubits += other.n_qubits;
        out.n_clbits += other.n_clbits;
        out.outputs.extend(other.outputs.iter().map(|c| Clbit(c.0 + self.n_clbits)));
        out.instructions.extend(
            other
                .instructions
                .iter()
                .map(|ins| shift_instruction(ins, self.n_qubits, self.n_clbits)),
        );
        out
    }
}

fn shift_instruction(ins: &Instruction, dq: usize, dc: usize) -> Instruction {
    let sq = |qs: &[Qubit]| qs.iter().map(|q| Qubit(q.0 + dq)).collect::<Vec<_>>();
    match ins {
        Instruction::Gate(g) => Instruction::Gate(Gate { kind: g.kind, targets: sq(&g.targets) }),
        Instruction::Controlled(cg) => Instruction::Controlled(Controlled {
            pos_controls: sq(&cg.pos_controls),
            neg_controls: sq(&cg.neg_controls),
            base: Gate { kind: cg.base.kind, targets: sq(&cg.base.targets) },
            syntax: cg.syntax,
        }),
        Instruction::Measure { qubit, bit } => {
            Instruction::Measure { qubit: Qubit(qubit.0 + dq), bit: Clbit(bit.0 + dc) }
        }
        Instruction::IfGate { bit, value, base } => Instruction::IfGate {
            bit: Clbit(bit.0 + dc),
            value: *value,
            base: Box::new(shift_instruction(base, dq, dc)),
        },
        Instruction::Prob { p, base } => {
            Instruction::Prob { p: *p, base: Box::new(shift_instruction(base, dq, dc)) }
        }
        Instruction::Barrier => Instruction::Barrier,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    QubitOutOfRange,
    ClbitOutOfRange,
    DuplicateQubit,
    GateArity,
    NonFiniteAngle,
    NoControls,
    TooManyControls,
    ProbabilityRange,
    ProbWrapsDynamic,
    IfWrapsDynamic,
    BitNeverWritten,
    OutputOutOfRange,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Offending instruction, `None` for register-level problems.
    pub index: Option<usize>,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "instruction {i}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl Circuit {
    /// Checks every structural invariant with no limit on control count.
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(usize::MAX)
    }

    pub fn validate_with(&self, max_controls: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        for c in &self.outputs {
            if c.0 >= self.n_clbits {
                out.push(Violation {
                    index: None,
                    rule: Rule::OutputOutOfRange,
                    message: format!("output {c} is not a declared clbit"),
                });
            }
        }
        let mut written = vec![false; self.n_clbits];
        for (idx, ins) in self.instructions.iter().enumerate() {
            let mut push = |rule, message: String| {
                out.push(Violation { index: Some(idx), rule, message })
            };
            let qs = ins.qubits();
            for q in &qs {
                if q.0 >= self.n_qubits {
                    push(Rule::QubitOutOfRange, format!("{q} is not declared"));
                }
            }
            let mut seen = BTreeSet::new();
            if !qs.iter().all(|q| seen.insert(*q)) {
                push(Rule::DuplicateQubit, "qubit used twice".into());
            }
            match ins {
                Instruction::Measure { bit, .. } => {
                    if bit.0 >= self.n_clbits {
                        push(Rule::ClbitOutOfRange, format!("{bit} is not declared"));
                    } else {
                        written[bit.0] = true;
                    }
                }
                Instruction::IfGate { bit, base, .. } => {
                    if bit.0 >= self.n_clbits {
                        push(Rule::ClbitOutOfRange, format!("{bit} is not declared"));
                    } else if !written[bit.0] {
                        push(Rule::BitNeverWritten, format!("{bit} read before any measurement"));
                    }
                    if !base.is_unitary() {
                        push(Rule::IfWrapsDynamic, "if wraps dynamic op".into());
                    }
                }
                Instruction::Prob { p, base } => {
                    if !(0.0..=1.0).contains(p) {
                        push(Rule::ProbabilityRange, format!("probability {p} outside [0,1]"));
                    }
                    if !base.is_unitary() {
                        push(Rule::ProbWrapsDynamic, "prob wraps dynamic op".into());
                    }
                }
                _ => {}
            }
            let unitary = match ins {
                Instruction::IfGate { base, .. } | Instruction::Prob { base, .. } => base.as_ref(),
                other => other,
            };
            let gate = match unitary {
                Instruction::Gate(g) => Some(g),
                Instruction::Controlled(cg) => {
                    if cg.num_controls() == 0 {
                        push(Rule::NoControls, "controlled gate without controls".into());
                    }
                    if cg.num_controls() > max_controls {
                        push(
                            Rule::TooManyControls,
                            format!("{} controls exceed the bound {max_controls}", cg.num_controls()),
                        );
                    }
                    Some(&cg.base)
                }
                _ => None,
            };
            if let Some(g) = gate {
                if g.targets.len() != g.kind.arity() {
                    push(
                        Rule::GateArity,
                        format!("{} expects {} target(s)", g.kind.name(), g.kind.arity()),
                    );
                }
                if g.kind.angles().iter().any(|a| !a.is_finite()) {
                    push(Rule::NonFiniteAngle, "angle is not finite".into());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_unitarity_error(m: &Matrix2) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let dot: Complex64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).norm());
            }
        }
        worst
    }

    #[test]
    fn every_fixed_gate_is_unitary() {
        use GateKind::*;
        for k in [Id, X, Y, Z, H, S, Sdg, T, Tdg, Rx(0.3), Ry(-1.2), Rz(2.5)] {
            assert!(max_unitarity_error(&k.matrix().unwrap()) < 1e-12, "{k:?}");
        }
    }

    #[test]
    fn u_gate_is_unitary_on_a_grid() {
        let angles = [-3.0, -1.1, 0.0, 0.4, 1.57, 2.9, 6.1];
        for &t in &angles {
            for &p in &angles {
                for &l in &angles {
                    let m = GateKind::U(t, p, l).matrix().unwrap();
                    assert!(max_unitarity_error(&m) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn monomial_and_diagonal_classification() {
        assert!(GateKind::X.is_monomial());
        assert!(GateKind::Y.is_monomial());
        assert!(GateKind::T.is_monomial() && GateKind::T.is_diagonal());
        assert!(!GateKind::H.is_monomial());
        assert!(GateKind::Rx(std::f64::consts::PI).is_monomial());
        assert!(!GateKind::X.is_diagonal());
    }

    #[test]
    fn validate_flags_unwritten_bit() {
        let c = Circuit::new(2, 1).with_instructions(vec![Instruction::if_bit(
            0,
            true,
            Gate::single(GateKind::X, 1),
        )]);
        let v = c.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, Some(0));
        assert_eq!(v[0].rule, Rule::BitNeverWritten);
    }

    #[test]
    fn validate_flags_prob_wrapping_if() {
        let c = Circuit::new(2, 1).with_instructions(vec![
            Instruction::measure(0, 0),
            Instruction::prob(0.5, Instruction::if_bit(0, true, Gate::single(GateKind::X, 1))),
        ]);
        let v = c.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, Some(1));
        assert_eq!(v[0].message, "prob wraps dynamic op");
    }

    #[test]
    fn validate_control_bound_and_duplicates() {
        let c = Circuit::new(4, 0).with_instructions(vec![
            Controlled::new(vec![Qubit(0), Qubit(1), Qubit(2)], vec![], Gate::single(GateKind::X, 3))
                .into(),
            Controlled::cx(1, 1).into(),
        ]);
        let v = c.validate_with(2);
        let rules: Vec<_> = v.iter().map(|v| (v.index, v.rule)).collect();
        assert_eq!(rules, vec![(Some(0), Rule::TooManyControls), (Some(1), Rule::DuplicateQubit)]);
        assert_eq!(c.validate_with(3).len(), 1);
    }

    #[test]
    fn depth_and_counts() {
        let mut c = Circuit::new(2, 1);
        c.push(Gate::single(GateKind::H, 0))
            .push(Controlled::cx(0, 1))
            .push(Instruction::measure(0, 0))
            .push(Instruction::Barrier)
            .push(Instruction::if_bit(0, true, Gate::single(GateKind::X, 1)));
        assert_eq!(c.depth(), 4);
        assert_eq!(c.count_measurements(), 1);
        assert_eq!(c.count_gates(), 3);
        assert!(!c.is_static());
    }

    #[test]
    fn tensor_shifts_registers() {
        let mut a = Circuit::new(1, 1);
        a.push(Instruction::measure(0, 0));
        let mut b = Circuit::new(2, 1);
        b.outputs.insert(Clbit(0));
        b.push(Controlled::cx(0, 1)).push(Instruction::measure(1, 0));
        let t = a.tensor(&b);
        assert_eq!(t.n_qubits, 3);
        assert_eq!(t.n_clbits, 2);
        assert!(t.outputs.contains(&Clbit(1)));
        assert_eq!(t.instructions[1], Controlled::cx(1, 2).into());
        assert_eq!(t.instructions[2], Instruction::measure(2, 1));
    }
}
