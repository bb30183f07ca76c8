//! Line-oriented circuit format (`.qc`).
//!
//! ```text
//! qubits 3
//! clbits 1
//! output c0
//! h q0
//! ctrl q0 nctrl q1 : rx(0.5) q2
//! measure q0 -> c0
//! if c0 == 1 : x q1
//! prob 0.4 cx q1 q2
//! barrier
//! ```
//!
//! `#` starts a comment. `cx`, `cz` and `ccx` are shorthand for controlled
//! gates whose last operand is the target.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Circuit, Clbit, Controlled, CtrlSyntax, Gate, GateKind, Instruction, Qubit, Violation};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: undeclared qubit q{index}")]
    UndeclaredQubit { line: usize, index: usize },
    #[error("line {line}: undeclared clbit c{index}")]
    UndeclaredClbit { line: usize, index: usize },
    #[error("line {line}: qubit q{index} used twice in one instruction")]
    DuplicateQubit { line: usize, index: usize },
    #[error("line {line}: probability {value} outside [0,1]")]
    Probability { line: usize, value: f64 },
    #[error("invalid circuit: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

struct LineParser<'a> {
    line: usize,
    n_qubits: usize,
    n_clbits: usize,
    text: &'a str,
}

impl LineParser<'_> {
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, message: message.into() }
    }

    fn qubit(&self, tok: &str) -> Result<Qubit, ParseError> {
        let index = tok
            .strip_prefix('q')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| self.err(format!("expected qubit, found `{tok}`")))?;
        if index >= self.n_qubits {
            return Err(ParseError::UndeclaredQubit { line: self.line, index });
        }
        Ok(Qubit(index))
    }

    fn clbit(&self, tok: &str) -> Result<Clbit, ParseError> {
        let index = tok
            .strip_prefix('c')
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| self.err(format!("expected clbit, found `{tok}`")))?;
        if index >= self.n_clbits {
            return Err(ParseError::UndeclaredClbit { line: self.line, index });
        }
        Ok(Clbit(index))
    }

    fn qubit_list(&self, s: &str) -> Result<Vec<Qubit>, ParseError> {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| self.qubit(t))
            .collect()
    }

    fn angles(&self, s: &str) -> Result<Vec<f64>, ParseError> {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("bad angle `{t}`")))
            })
            .collect()
    }

    fn check_distinct(&self, qs: &[Qubit]) -> Result<(), ParseError> {
        let mut seen = BTreeSet::new();
        for q in qs {
            if !seen.insert(*q) {
                return Err(ParseError::DuplicateQubit { line: self.line, index: q.0 });
            }
        }
        Ok(())
    }

    /// `<kind>[(<angles>)] q<i> ...` or one of the controlled shorthands.
    fn unitary(&self, s: &str, allow_sugar: bool) -> Result<Instruction, ParseError> {
        let s = s.trim();
        let (head, rest) = match s.find(|c: char| c.is_whitespace()) {
            Some(i) => (&s[..i], s[i..].trim()),
            None => (s, ""),
        };
        let (name, angle_text) = match head.find('(') {
            Some(i) => {
                let close = head
                    .rfind(')')
                    .filter(|&j| j == head.len() - 1)
                    .ok_or_else(|| self.err("unclosed angle list"))?;
                (&head[..i], Some(&head[i + 1..close]))
            }
            None => (head, None),
        };
        let operands = self.qubit_list(rest)?;
        self.check_distinct(&operands)?;

        if matches!(name, "cx" | "cz" | "ccx") {
            if !allow_sugar {
                return Err(self.err(format!("`{name}` not allowed after `ctrl`")));
            }
            if angle_text.is_some() {
                return Err(self.err(format!("`{name}` takes no angles")));
            }
            let want = if name == "ccx" { 3 } else { 2 };
            if operands.len() != want {
                return Err(self.err(format!("`{name}` expects {want} qubits")));
            }
            let (target, controls) = operands.split_last().unwrap();
            let kind = if name == "cz" { GateKind::Z } else { GateKind::X };
            return Ok(Instruction::Controlled(Controlled {
                pos_controls: controls.to_vec(),
                neg_controls: Vec::new(),
                base: Gate::new(kind, vec![*target]),
                syntax: CtrlSyntax::Sugar,
            }));
        }

        let angles = match angle_text {
            Some(t) => self.angles(t)?,
            None => Vec::new(),
        };
        let kind = self.gate_kind(name, &angles)?;
        if operands.len() != kind.arity() {
            return Err(self.err(format!("`{name}` expects {} qubit(s)", kind.arity())));
        }
        Ok(Instruction::Gate(Gate::new(kind, operands)))
    }

    fn gate_kind(&self, name: &str, angles: &[f64]) -> Result<GateKind, ParseError> {
        let fixed = |k: GateKind| {
            if angles.is_empty() {
                Ok(k)
            } else {
                Err(self.err(format!("`{name}` takes no angles")))
            }
        };
        let one = |f: fn(f64) -> GateKind| match angles {
            [a] => Ok(f(*a)),
            _ => Err(self.err(format!("`{name}` expects one angle"))),
        };
        match name {
            "id" => fixed(GateKind::Id),
            "x" => fixed(GateKind::X),
            "y" => fixed(GateKind::Y),
            "z" => fixed(GateKind::Z),
            "h" => fixed(GateKind::H),
            "s" => fixed(GateKind::S),
            "sdg" => fixed(GateKind::Sdg),
            "t" => fixed(GateKind::T),
            "tdg" => fixed(GateKind::Tdg),
            "swap" => fixed(GateKind::Swap),
            "rx" => one(GateKind::Rx),
            "ry" => one(GateKind::Ry),
            "rz" => one(GateKind::Rz),
            "u" => match angles {
                [t, p, l] => Ok(GateKind::U(*t, *p, *l)),
                _ => Err(self.err("`u` expects three angles")),
            },
            other => Err(self.err(format!("unknown gate `{other}`"))),
        }
    }

    /// A gate line, a shorthand, or `ctrl ... [nctrl ...] : <gate line>`.
    fn controlled_or_gate(&self, s: &str) -> Result<Instruction, ParseError> {
        let s = s.trim();
        if !(s.starts_with("ctrl ") || s.starts_with("nctrl ")) {
            return self.unitary(s, true);
        }
        let (spec, gate_text) = s.split_once(':').ok_or_else(|| self.err("missing `:` after controls"))?;
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut current: Option<bool> = None;
        for tok in spec.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            match tok {
                "ctrl" if pos.is_empty() && current.is_none() => current = Some(true),
                "nctrl" if neg.is_empty() && current != Some(false) => current = Some(false),
                _ => match current {
                    Some(true) => pos.push(self.qubit(tok)?),
                    Some(false) => neg.push(self.qubit(tok)?),
                    None => return Err(self.err(format!("unexpected `{tok}`"))),
                },
            }
        }
        if pos.is_empty() && neg.is_empty() {
            return Err(self.err("controlled gate without controls"));
        }
        let base = match self.unitary(gate_text, false)? {
            Instruction::Gate(g) => g,
            _ => unreachable!(),
        };
        let all: Vec<Qubit> = pos.iter().chain(&neg).chain(&base.targets).copied().collect();
        self.check_distinct(&all)?;
        Ok(Instruction::Controlled(Controlled::new(pos, neg, base)))
    }

    fn instruction(&self) -> Result<Instruction, ParseError> {
        let s = self.text;
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        match head {
            "barrier" => {
                if !rest.trim().is_empty() {
                    return Err(self.err("`barrier` takes no operands"));
                }
                Ok(Instruction::Barrier)
            }
            "measure" => {
                let (q, c) = rest.split_once("->").ok_or_else(|| self.err("expected `measure q<i> -> c<j>`"))?;
                Ok(Instruction::Measure { qubit: self.qubit(q.trim())?, bit: self.clbit(c.trim())? })
            }
            "if" => {
                let (cond, body) = rest.split_once(':').ok_or_else(|| self.err("missing `:` after condition"))?;
                let (bit, value) = cond.split_once("==").ok_or_else(|| self.err("expected `c<j> == <0|1>`"))?;
                let value = match value.trim() {
                    "0" => false,
                    "1" => true,
                    v => return Err(self.err(format!("condition value must be 0 or 1, found `{v}`"))),
                };
                Ok(Instruction::IfGate {
                    bit: self.clbit(bit.trim())?,
                    value,
                    base: Box::new(self.controlled_or_gate(body)?),
                })
            }
            "prob" => {
                let rest = rest.trim_start();
                let (p, body) = rest.split_once(char::is_whitespace).ok_or_else(|| self.err("expected `prob <p> <gate>`"))?;
                let value: f64 = p.parse().map_err(|_| self.err(format!("bad probability `{p}`")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(ParseError::Probability { line: self.line, value });
                }
                Ok(Instruction::Prob { p: value, base: Box::new(self.controlled_or_gate(body)?) })
            }
            _ => self.controlled_or_gate(s),
        }
    }
}

fn header_count(line: usize, rest: &str, what: &str) -> Result<usize, ParseError> {
    rest.trim().parse().map_err(|_| ParseError::Syntax {
        line,
        message: format!("`{what}` expects a non-negative integer"),
    })
}

/// Parses and validates circuit source text.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut n_qubits = None;
    let mut n_clbits = None;
    let mut outputs = BTreeSet::new();
    let mut instructions = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        match head {
            "qubits" => {
                if n_qubits.is_some() || !instructions.is_empty() {
                    return Err(ParseError::Syntax { line, message: "misplaced `qubits` header".into() });
                }
                n_qubits = Some(header_count(line, rest, "qubits")?);
                continue;
            }
            "clbits" => {
                if n_clbits.is_some() || !instructions.is_empty() {
                    return Err(ParseError::Syntax { line, message: "misplaced `clbits` header".into() });
                }
                n_clbits = Some(header_count(line, rest, "clbits")?);
                continue;
            }
            _ => {}
        }
        let (Some(nq), Some(nc)) = (n_qubits, n_clbits) else {
            return Err(ParseError::Syntax { line, message: "`qubits` and `clbits` must come first".into() });
        };
        let p = LineParser { line, n_qubits: nq, n_clbits: nc, text: s };
        if head == "output" {
            if !instructions.is_empty() {
                return Err(p.err("`output` must precede instructions"));
            }
            for tok in rest.split_whitespace() {
                outputs.insert(p.clbit(tok)?);
            }
            continue;
        }
        instructions.push(p.instruction()?);
    }

    let n_qubits = n_qubits.ok_or(ParseError::Syntax { line: 0, message: "missing `qubits` header".into() })?;
    let n_clbits = n_clbits.ok_or(ParseError::Syntax { line: 0, message: "missing `clbits` header".into() })?;
    let circuit = Circuit { n_qubits, n_clbits, outputs, instructions };
    let violations = circuit.validate();
    if violations.is_empty() {
        Ok(circuit)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

fn write_gate(out: &mut String, g: &Gate) {
    out.push_str(g.kind.name());
    let angles = g.kind.angles();
    if !angles.is_empty() {
        let list: Vec<String> = angles.iter().map(|a| format!("{a:?}")).collect();
        let _ = write!(out, "({})", list.join(","));
    }
    for q in &g.targets {
        let _ = write!(out, " {q}");
    }
}

fn join_qubits(qs: &[Qubit]) -> String {
    qs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn sugar_name(cg: &Controlled) -> Option<&'static str> {
    if cg.syntax != CtrlSyntax::Sugar || !cg.neg_controls.is_empty() {
        return None;
    }
    match (cg.pos_controls.len(), cg.base.kind) {
        (1, GateKind::X) => Some("cx"),
        (1, GateKind::Z) => Some("cz"),
        (2, GateKind::X) => Some("ccx"),
        _ => None,
    }
}

/// Writes one instruction in the line grammar.
pub fn write_instruction(out: &mut String, ins: &Instruction) {
    match ins {
        Instruction::Gate(g) => write_gate(out, g),
        Instruction::Controlled(cg) => {
            if let Some(name) = sugar_name(cg) {
                out.push_str(name);
                for q in cg.pos_controls.iter().chain(&cg.base.targets) {
                    let _ = write!(out, " {q}");
                }
                return;
            }
            let mut parts = Vec::new();
            if !cg.pos_controls.is_empty() {
                parts.push(format!("ctrl {}", join_qubits(&cg.pos_controls)));
            }
            if !cg.neg_controls.is_empty() {
                parts.push(format!("nctrl {}", join_qubits(&cg.neg_controls)));
            }
            out.push_str(&parts.join(" "));
            out.push_str(" : ");
            write_gate(out, &cg.base);
        }
        Instruction::Measure { qubit, bit } => {
            let _ = write!(out, "measure {qubit} -> {bit}");
        }
        Instruction::IfGate { bit, value, base } => {
            let _ = write!(out, "if {bit} == {} : ", u8::from(*value));
            write_instruction(out, base);
        }
        Instruction::Prob { p, base } => {
            let _ = write!(out, "prob {p:?} ");
            write_instruction(out, base);
        }
        Instruction::Barrier => out.push_str("barrier"),
    }
}

pub fn instruction_to_string(ins: &Instruction) -> String {
    let mut s = String::new();
    write_instruction(&mut s, ins);
    s
}

/// Serializes a circuit. Lines are `\n`-separated with no trailing newline.
pub fn serialize(c: &Circuit) -> String {
    let mut out = format!("qubits {}\nclbits {}", c.n_qubits, c.n_clbits);
    if !c.outputs.is_empty() {
        out.push_str("\noutput");
        for b in &c.outputs {
            let _ = write!(out, " {b}");
        }
    }
    for ins in &c.instructions {
        out.push('\n');
        write_instruction(&mut out, ins);
    }
    out
}
