mod common;

use common::*;
use mcmopt::circuit::{Circuit, Qubit};
use mcmopt::ensemble::{self, compile_shot, ShotSeed};
use mcmopt::purity::{factor_qubit, purity_test, purity_test_counted, unfactor};
use mcmopt::qcp::{self, GroupState, QcpConfig};
use mcmopt::rewrite::{optimize, OptimizeOptions, RewriteKind};
use mcmopt::sparse::SparseState;
use mcmopt::verify::{self, check_optimization, Input};
use mcmopt::{parse, serialize};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_dynamic(seed: u64) -> Circuit {
    random_dynamic(&mut rng(seed), Shape { qubits: 1 + (seed % 5) as usize, instructions: 18, measurements: 2, prob_gates: 2 })
}

fn static_circuit(seed: u64, qubits: usize, gates: usize) -> Circuit {
    random_probabilistic(&mut rng(seed), qubits, gates, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let c = small_dynamic(seed);
        let text = serialize(&c);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn known_groups_match_simulation(seed in any::<u64>(), n_max in 2usize..40) {
        let c = static_circuit(seed, 1 + (seed % 6) as usize, 25);
        let cfg = QcpConfig { n_max, ..QcpConfig::default() };
        let run = qcp::run(&c, &cfg).unwrap();
        let exact = verify::simulate_static(&c, &Input::zeros(c.n_qubits)).unwrap();
        for g in run.final_state.groups() {
            if let GroupState::Known(s) = &g.state {
                prop_assert!(s.len() <= n_max);
                let f = group_fidelity(&exact, c.n_qubits, s);
                prop_assert!((f - 1.0).abs() < 1e-9, "fidelity {} for {:?}", f, s.qubits());
            }
        }
    }

    #[test]
    fn basis_diagonal_qubits_are_classical(seed in any::<u64>()) {
        let c = small_dynamic(seed);
        let run = qcp::run(&c, &QcpConfig::default()).unwrap();
        let e = verify::simulate_dynamic(&c).unwrap();
        for q in 0..c.n_qubits {
            if matches!(run.final_state.group(Qubit(q)).state, GroupState::BasisDiagonal) {
                let m = 1 << (c.n_qubits - 1 - q);
                for b in &e.branches {
                    let p1: f64 = b.statevector.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a.norm_sqr()).sum();
                    prop_assert!(!(1e-9..=1.0 - 1e-9).contains(&p1), "q{} has p1 {}", q, p1);
                }
            }
        }
    }

    #[test]
    fn propagation_preserves_semantics(seed in any::<u64>(), n_max in 2usize..16) {
        let c = small_dynamic(seed);
        let run = qcp::run(&c, &QcpConfig { n_max, ..QcpConfig::default() }).unwrap();
        let r = check_optimization(&c, &run.circuit, 1e-9).unwrap();
        prop_assert!(r.passed, "distance {}\n{}\n--\n{}", r.distance, serialize(&c), serialize(&run.circuit));
        prop_assert!(run.circuit.instructions.len() <= c.instructions.len());
    }

    #[test]
    fn top_is_absorbing(seed in any::<u64>()) {
        let c = small_dynamic(seed);
        let run = qcp::run(&c, &QcpConfig { n_max: 4, ..QcpConfig::default() }).unwrap();
        let mut states: Vec<_> = run.trace.iter().collect();
        states.push(&run.final_state);
        for q in 0..c.n_qubits {
            let mut seen_top = false;
            for s in &states {
                let top = s.group(Qubit(q)).is_top();
                prop_assert!(!seen_top || top, "q{} left Top", q);
                seen_top |= top;
            }
        }
    }

    #[test]
    fn work_is_polynomially_bounded(seed in any::<u64>(), n_max in 2usize..64) {
        let c = small_dynamic(seed);
        let cfg = QcpConfig { n_max, ..QcpConfig::default() };
        let run = qcp::run(&c, &cfg).unwrap();
        let g = c.count_gates() as u64 + 1;
        let m = c.count_measurements() as u64 + 1;
        let (cc, nm) = ((cfg.max_controls + 1) as u64, n_max as u64);
        prop_assert!(run.work() <= 4 * (g * cc * cc * nm + m * nm * nm), "work {}", run.work());
    }

    #[test]
    fn optimize_preserves_semantics(seed in any::<u64>()) {
        let c = small_dynamic(seed);
        let (out, report) = optimize(&c, &OptimizeOptions::default()).unwrap();
        let r = check_optimization(&c, &out, 1e-9).unwrap();
        prop_assert!(r.passed, "distance {}\n{}\n--\n{}", r.distance, serialize(&c), serialize(&out));
        prop_assert!(report.measurements_after <= report.measurements_before);
        prop_assert_eq!(report.measurements_before - report.measurements_after, report.rewritten().count());
        let (_, second) = optimize(&out, &OptimizeOptions::default()).unwrap();
        prop_assert_eq!(second.rewritten().count(), 0);
    }

    #[test]
    fn factor_inverts_tensor(seed in any::<u64>(), n in 1usize..5, pos_seed in any::<usize>()) {
        let mut r = rng(seed);
        let pos = pos_seed % n;
        let (a, b) = random_qubit(&mut r);
        let rest = if n > 1 { Some(random_sparse(&mut r, n - 1, 8, 0)) } else { None };
        let f = mcmopt::purity::Factorization { qubit_state: mcmopt::purity::QubitAmplitudes::new(a, b), remainder: rest };
        let joined = unfactor(&f, Qubit(99), pos);
        prop_assert!(purity_test(&joined, pos).unwrap());
        let back = factor_qubit(&joined, pos).unwrap();
        let again = unfactor(&back, Qubit(99), pos);
        let overlap: Complex64 = joined.iter().map(|(k, x)| x.conj() * again.amplitude(k)).sum();
        prop_assert!((overlap.norm() - 1.0).abs() < 1e-9);
        prop_assert!((back.qubit_state.p0() - a.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn purity_agrees_with_reduced_state(seed in any::<u64>(), n in 1usize..6, k in 1usize..17) {
        let mut r = rng(seed);
        let pos = (seed as usize / 7) % n;
        let s: SparseState = random_sparse(&mut r, n, k, pos);
        let outcome = purity_test_counted(&s, pos).unwrap();
        let oracle = reduced_purity(&dense(&s), n, pos) > 1.0 - 1e-9;
        prop_assert_eq!(outcome.separable, oracle);
        prop_assert!(outcome.comparisons <= s.len() * s.len());
    }

    #[test]
    fn ensembles_are_distributions(seed in any::<u64>()) {
        let c = small_dynamic(seed);
        let e = ensemble::enumerate(&c, ensemble::DEFAULT_CAP).unwrap();
        prop_assert!((e.total_probability() - 1.0).abs() < 1e-9);
        prop_assert!(e.entries.iter().all(|x| x.probability > 0.0 && x.circuit.is_static()));
    }

    #[test]
    fn shots_belong_to_the_ensemble(seed in any::<u64>(), shot in any::<u64>()) {
        let c = random_probabilistic(&mut rng(seed), 2, 5, 3);
        let e = ensemble::enumerate(&c, ensemble::DEFAULT_CAP).unwrap().normalized();
        let compiled = compile_shot(&c, ShotSeed(shot));
        let text = serialize(&compiled);
        prop_assert!(e.entries.iter().any(|x| serialize(&x.circuit) == text));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pure_measurements_in_context(seed in any::<u64>(), n in 2usize..6) {
        use mcmopt::circuit::{Gate, GateKind, Instruction};
        use rand::Rng;
        let mut r = rng(seed);
        let mut c = Circuit::new(n, 1);
        for _ in 0..r.gen_range(0..8) {
            c.push(random_unitary(&mut r, n, Some(Qubit(0))));
        }
        let (a, b) = random_qubit(&mut r);
        c.push(Gate::new(GateKind::U(2.0 * b.norm().atan2(a.norm()), b.arg() - a.arg(), 0.0), vec![Qubit(0)]));
        c.push(Instruction::measure(0, 0));
        for _ in 0..r.gen_range(0..4) {
            if r.gen_bool(0.5) {
                c.push(random_unitary(&mut r, n, Some(Qubit(0))));
            }
            let base = random_unitary(&mut r, n, Some(Qubit(0)));
            c.push(Instruction::IfGate { bit: mcmopt::circuit::Clbit(0), value: r.gen_bool(0.5), base: Box::new(base) });
        }
        for _ in 0..r.gen_range(0..6) {
            c.push(random_unitary(&mut r, n, None));
        }
        let (out, report) = optimize(&c, &OptimizeOptions::default()).unwrap();
        let check = check_optimization(&c, &out, 1e-9).unwrap();
        prop_assert!(check.passed, "distance {}\n{}\n--\n{}", check.distance, serialize(&c), serialize(&out));
        let p0 = a.norm_sqr();
        let crowded = c.instructions.iter().any(|i| match i {
            Instruction::IfGate { base, .. } => matches!(base.as_ref(), Instruction::Controlled(cg) if cg.num_controls() >= 3),
            _ => false,
        });
        if p0 > 1e-6 && p0 < 1.0 - 1e-6 && !crowded {
            let rewritten: Vec<_> = report.rewritten().map(|(_, k)| k).collect();
            prop_assert!(matches!(rewritten.as_slice(), [RewriteKind::Theorem1 | RewriteKind::Theorem2]), "{:?}", report.records);
            prop_assert_eq!(out.count_measurements(), 0);
        }
    }
}

#[test]
fn dynamic_simulation_matches_deferred_measurement() {
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut c = random_dynamic(&mut rng(seed), Shape { qubits: 3, instructions: 12, measurements: 1, prob_gates: 0 });
        c.outputs.clear();
        if c.count_measurements() != 1 {
            continue;
        }
        let e = verify::simulate_dynamic(&c).unwrap();
        let sum: f64 = e.branches.iter().map(|b| b.probability).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(max_diff(&e.density_matrix(), &deferred_density(&c)) < 1e-9, "{}", serialize(&c));
        checked += 1;
    }
    assert!(checked > 50);
}
