//! Random circuit generators and brute-force oracles shared by the
//! integration tests. Nothing here calls the analysis under test.
#![allow(dead_code)]

use std::path::PathBuf;

use mcmopt::bits::BitString;
use mcmopt::circuit::{Circuit, Clbit, Controlled, Gate, GateKind, Instruction, Qubit};
use mcmopt::sparse::SparseState;
use mcmopt::verify::{self, Input};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn load(name: &str) -> Circuit {
    mcmopt::parse(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

fn angle(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
}

fn random_kind(rng: &mut ChaCha8Rng) -> GateKind {
    match rng.gen_range(0..13) {
        0 => GateKind::X,
        1 => GateKind::Y,
        2 => GateKind::Z,
        3 | 4 => GateKind::H,
        5 => GateKind::S,
        6 => GateKind::Sdg,
        7 => GateKind::T,
        8 => GateKind::Tdg,
        9 => GateKind::Rx(angle(rng)),
        10 => GateKind::Ry(angle(rng)),
        11 => GateKind::Rz(angle(rng)),
        _ => GateKind::U(angle(rng), angle(rng), angle(rng)),
    }
}

/// A random gate or controlled gate on `n` qubits, avoiding `avoid`.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize, avoid: Option<Qubit>) -> Instruction {
    let mut pool: Vec<Qubit> = (0..n).map(Qubit).filter(|q| Some(*q) != avoid).collect();
    pool.shuffle(rng);
    let controls = match rng.gen_range(0..10) {
        0..=4 => 0,
        5..=7 => 1,
        8 => 2,
        _ => 3,
    }
    .min(pool.len().saturating_sub(1));
    if pool.len() >= 2 && rng.gen_bool(0.08) {
        return Gate::new(GateKind::Swap, vec![pool[0], pool[1]]).into();
    }
    let target = pool[0];
    let base = Gate::new(random_kind(rng), vec![target]);
    if controls == 0 {
        return base.into();
    }
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for &q in &pool[1..=controls] {
        if rng.gen_bool(0.8) {
            pos.push(q);
        } else {
            neg.push(q);
        }
    }
    Controlled::new(pos, neg, base).into()
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub qubits: usize,
    pub instructions: usize,
    pub measurements: usize,
    pub prob_gates: usize,
}

/// Random dynamic circuit. Measurements are followed by a few classically
/// controlled gates, usually on other qubits, so rewrites get exercised.
pub fn random_dynamic(rng: &mut ChaCha8Rng, shape: Shape) -> Circuit {
    let n = shape.qubits;
    let mut c = Circuit::new(n, shape.measurements.max(1));
    let mut measured: Vec<(Clbit, Qubit)> = Vec::new();
    let (mut m, mut p) = (0, 0);
    // Half of the circuits keep one qubit untouched until it is prepared in a
    // superposition and measured, so the pure-state rewrites get exercised.
    let mut reserved = (n > 1 && rng.gen_bool(0.5)).then(|| Qubit(rng.gen_range(0..n)));
    while c.instructions.len() < shape.instructions {
        let roll = rng.gen_range(0..100);
        if roll < 12 && m < shape.measurements {
            let q = match reserved.take() {
                Some(q) => {
                    let kind = match rng.gen_range(0..4) {
                        0 => GateKind::H,
                        1 => GateKind::Rx(angle(rng)),
                        2 => GateKind::Ry(angle(rng)),
                        _ => GateKind::U(angle(rng), angle(rng), angle(rng)),
                    };
                    c.push(Gate::new(kind, vec![q]));
                    q
                }
                None => Qubit(rng.gen_range(0..n)),
            };
            let bit = Clbit(m);
            c.push(Instruction::Measure { qubit: q, bit });
            measured.push((bit, q));
            m += 1;
            if n > 1 && rng.gen_bool(0.5) {
                let base = random_unitary(rng, n, Some(q));
                c.push(Instruction::IfGate { bit, value: rng.gen_bool(0.7), base: Box::new(base) });
            }
        } else if roll < 30 && !measured.is_empty() {
            let &(bit, q) = measured.choose(rng).unwrap();
            let avoid = if rng.gen_bool(0.9) { Some(q) } else { None };
            if n > 1 || avoid.is_none() {
                let value = rng.gen_bool(0.7);
                c.push(Instruction::IfGate { bit, value, base: Box::new(random_unitary(rng, n, avoid)) });
            }
        } else if roll < 38 && p < shape.prob_gates {
            let prob = if rng.gen_bool(0.1) { [0.0, 1.0][rng.gen_range(0..2)] } else { rng.gen_range(0.05..0.95) };
            let base = if rng.gen_bool(0.6) {
                Gate::new(GateKind::X, vec![Qubit(rng.gen_range(0..n))]).into()
            } else {
                random_unitary(rng, n, reserved)
            };
            c.push(Instruction::Prob { p: prob, base: Box::new(base) });
            p += 1;
        } else if roll < 40 {
            c.push(Instruction::Barrier);
        } else {
            c.push(random_unitary(rng, n, reserved));
        }
    }
    if rng.gen_bool(0.2) && m > 0 {
        c.outputs.insert(Clbit(rng.gen_range(0..m)));
    }
    c
}

/// Measurement-free circuit with probabilistic gates.
pub fn random_probabilistic(rng: &mut ChaCha8Rng, qubits: usize, gates: usize, prob_gates: usize) -> Circuit {
    let mut c = Circuit::new(qubits, 0);
    let mut slots: Vec<bool> = (0..gates).map(|i| i < prob_gates).collect();
    slots.shuffle(rng);
    for is_prob in slots {
        let u = random_unitary(rng, qubits, None);
        if is_prob {
            c.push(Instruction::Prob { p: rng.gen_range(0.05..0.95), base: Box::new(u) });
        } else {
            c.push(u);
        }
    }
    c
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Haar-like single-qubit state.
pub fn random_qubit(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    let theta = (rng.gen_range(-1.0f64..1.0)).acos();
    let (a, b) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    (Complex64::from_polar(a, angle(rng)), Complex64::from_polar(b, angle(rng)))
}

fn normalize(entries: Vec<(BitString, Complex64)>) -> Vec<(BitString, Complex64)> {
    let norm: f64 = entries.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
    entries.into_iter().map(|(k, a)| (k, a / norm)).collect()
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitString {
    BitString::from_bits((0..n).map(|_| rng.gen_bool(0.5)))
}

/// A random sparse state on `n` qubits with at most `k` entries. Half of the
/// time qubit `pos` is built as a product factor so both verdicts occur.
pub fn random_sparse(rng: &mut ChaCha8Rng, n: usize, k: usize, pos: usize) -> SparseState {
    let qubits: Vec<Qubit> = (0..n).map(Qubit).collect();
    let mut entries = Vec::new();
    if rng.gen_bool(0.5) && n > 1 {
        let (a, b) = match rng.gen_range(0..4) {
            0 => (Complex64::new(1.0, 0.0), Complex64::default()),
            1 => (Complex64::default(), Complex64::new(1.0, 0.0)),
            _ => random_qubit(rng),
        };
        let rest_k = (k / 2).max(1);
        let mut rest: Vec<(BitString, Complex64)> = Vec::new();
        for _ in 0..rest_k {
            let bits = random_bits(rng, n - 1);
            if rest.iter().all(|(x, _)| *x != bits) {
                rest.push((bits, random_complex(rng)));
            }
        }
        for (bits, amp) in rest {
            for (v, w) in [(false, a), (true, b)] {
                if w.norm() > 0.0 {
                    entries.push((bits.inserted(pos, v), amp * w));
                }
            }
        }
    } else {
        for _ in 0..rng.gen_range(1..=k) {
            let bits = random_bits(rng, n);
            if entries.iter().all(|(x, _)| *x != bits) {
                entries.push((bits, random_complex(rng)));
            }
        }
        if rng.gen_bool(0.3) {
            // Equal-size sides that pair up but with distinct ratios.
            let extra: Vec<_> = entries.iter().map(|(b, a)| (b.clone().with(pos, !b.get(pos)), a * 0.5)).collect();
            for (b, a) in extra {
                if entries.iter().all(|(x, _)| *x != b) && entries.len() < k {
                    entries.push((b, a));
                }
            }
        }
    }
    SparseState::new(qubits, normalize(entries)).unwrap()
}

/// Dense vector of a sparse state over its own qubit order.
pub fn dense(s: &SparseState) -> Vec<Complex64> {
    let n = s.qubits().len();
    let mut v = vec![Complex64::default(); 1 << n];
    for (bits, a) in s.iter() {
        let idx = bits.iter().fold(0usize, |acc, b| acc << 1 | usize::from(b));
        v[idx] = *a;
    }
    v
}

/// `Tr(ρ²)` of the reduced state of qubit `pos` of a dense `n`-qubit vector.
pub fn reduced_purity(v: &[Complex64], n: usize, pos: usize) -> f64 {
    let m = 1 << (n - 1 - pos);
    let mut rho = [[Complex64::default(); 2]; 2];
    for i in 0..v.len() {
        if i & m != 0 {
            continue;
        }
        let pair = [v[i], v[i | m]];
        for a in 0..2 {
            for b in 0..2 {
                rho[a][b] += pair[a] * pair[b].conj();
            }
        }
    }
    rho.iter().flatten().map(|x| x.norm_sqr()).sum()
}

/// Fidelity between the pure state `psi` of `group` (in that qubit order) and
/// the reduced state of `group` in the dense `n`-qubit vector `v`.
pub fn group_fidelity(v: &[Complex64], n: usize, group: &SparseState) -> f64 {
    let members: Vec<usize> = group.qubits().iter().map(|q| q.0).collect();
    let rest: Vec<usize> = (0..n).filter(|q| !members.contains(q)).collect();
    let mut total = 0.0;
    for r in 0..1usize << rest.len() {
        let mut overlap = Complex64::default();
        for (bits, a) in group.iter() {
            let mut idx = 0usize;
            for (k, &q) in members.iter().enumerate() {
                if bits.get(k) {
                    idx |= 1 << (n - 1 - q);
                }
            }
            for (k, &q) in rest.iter().enumerate() {
                if r >> (rest.len() - 1 - k) & 1 == 1 {
                    idx |= 1 << (n - 1 - q);
                }
            }
            overlap += a.conj() * v[idx];
        }
        total += overlap.norm_sqr();
    }
    total
}

/// Density matrix of a single-measurement circuit built by deferring the
/// measurement onto an ancilla and tracing the ancilla out.
pub fn deferred_density(c: &Circuit) -> Vec<Complex64> {
    let n = c.n_qubits;
    let anc = Qubit(n);
    let mut dilated = Circuit::new(n + 1, 0);
    for ins in &c.instructions {
        match ins {
            Instruction::Measure { qubit, .. } => {
                dilated.push(Controlled::new(vec![*qubit], vec![], Gate::new(GateKind::X, vec![anc])));
            }
            Instruction::IfGate { value, base, .. } => {
                let mut cg = match base.as_ref() {
                    Instruction::Gate(g) => Controlled::new(vec![], vec![], g.clone()),
                    Instruction::Controlled(cg) => cg.clone(),
                    _ => unreachable!(),
                };
                if *value {
                    cg.pos_controls.push(anc);
                } else {
                    cg.neg_controls.push(anc);
                }
                dilated.push(cg);
            }
            other => {
                dilated.push(other.clone());
            }
        }
    }
    let v = verify::simulate_static(&dilated, &Input::zeros(n + 1)).unwrap();
    let dim = 1 << n;
    let mut rho = vec![Complex64::default(); dim * dim];
    for r in 0..dim {
        for col in 0..dim {
            for a in 0..2 {
                rho[r * dim + col] += v[r << 1 | a] * v[col << 1 | a].conj();
            }
        }
    }
    rho
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
