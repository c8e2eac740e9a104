//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail for reasons recorded
//! in the README; the run exits nonzero if any other criterion fails or if a
//! known-red one starts passing.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use treeramsey::bridge::IntSource;
use treeramsey::mix::mix64;
use treeramsey::tree::full_tree_size;
use treeramsey::*;

const KNOWN_RED: &[usize] = &[5];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Every `n`-chain of a copy, by brute force over the index tree.
fn copy_chains(w: &Embedding, n: usize) -> Vec<Chain> {
    let idx: Vec<BitString> = (0..full_tree_size(w.depth())).map(BitString::from_heap_index).collect();
    let mut out = Vec::new();
    fn rec(idx: &[BitString], w: &Embedding, n: usize, cur: &mut Vec<BitString>, out: &mut Vec<Chain>) {
        if cur.len() == n {
            out.push(Chain::new(cur.iter().map(|x| w.image(x)).collect()).unwrap());
            return;
        }
        for x in idx {
            if cur.last().is_none_or(|l| l.is_proper_prefix_of(x)) {
                cur.push(*x);
                rec(idx, w, n, cur, out);
                cur.pop();
            }
        }
    }
    rec(&idx, w, n, &mut Vec::new(), &mut out);
    out
}

fn monochromatic(w: &Embedding, f: &ChainColoring, color: u32) -> bool {
    copy_chains(w, f.arity()).iter().all(|c| f.eval(c).ok() == Some(color))
}

fn extension_agreement() -> Verdict {
    let (mut ok, mut exhausted, mut bad, mut checked) = (0, 0, Vec::new(), 0usize);
    for seed in 0..200u64 {
        let arity = 2 + (seed % 2) as usize;
        let k = 2 + ((seed / 2) % 2) as u32;
        let f = ChainColoring::seeded(arity, k, 10, seed).unwrap();
        match reduce_step(&Embedding::identity(10), &f, 3) {
            Ok(out) => {
                ok += 1;
                let s = &out.embedding;
                let agrees = verify_embedding(s, &TruncatedTree::full(10))
                    && enumerate_chains(&TruncatedTree::full(3), arity - 1, None).iter().all(|ic| {
                        let chain = s.map_chain(ic);
                        let Ok(g) = out.coloring.eval(&chain) else { return false };
                        ic.last().extensions(3).all(|t| {
                            let mut nodes = chain.nodes().to_vec();
                            nodes.push(s.image(&t));
                            checked += 1;
                            f.eval(&Chain::new(nodes).unwrap()).ok() == Some(g)
                        })
                    });
                if !agrees {
                    bad.push(seed);
                }
            }
            Err(e) if e.is_depth_exhausted() => exhausted += 1,
            Err(_) => bad.push(seed),
        }
    }
    let vacuous = if ok == 0 { " (holds vacuously)" } else { "" };
    verdict(
        bad.is_empty(),
        format!("{ok}/200 reductions succeeded, {exhausted} exhausted, {checked} extensions checked, violations {bad:?}{vacuous}"),
    )
}

fn solver_soundness() -> Verdict {
    let (mut ok, mut exhausted, mut bad) = (0, 0, Vec::new());
    for seed in 0..50u64 {
        let f = ChainColoring::seeded(2, 2, 12, seed).unwrap();
        match tt_solve(&f, 12, 2) {
            Ok(r) => {
                ok += 1;
                let sound = verify_embedding(&r.witness, &TruncatedTree::full(12))
                    && verify_monochromatic(&r.witness, &f, r.color)
                    && monochromatic(&r.witness, &f, r.color);
                if !sound {
                    bad.push(seed);
                }
            }
            Err(e) if e.is_depth_exhausted() => exhausted += 1,
            Err(_) => bad.push(seed),
        }
    }
    verdict(bad.is_empty(), format!("{ok}/50 solved and verified, {exhausted} exhausted, unsound {bad:?}"))
}

fn oracle_agreement() -> Verdict {
    let nodes = enumerate_chains(&TruncatedTree::full(3), 1, None);
    let (mut both, mut neither, mut bad) = (0, 0, 0);
    for mask in 0u32..1 << 15 {
        let entries = nodes.iter().enumerate().map(|(i, c)| (c.clone(), mask >> i & 1));
        let f = ChainColoring::table(1, 2, 3, entries).unwrap();
        let fast = tt1_solve(&Embedding::identity(3), &f, 1);
        let slow = brute_force_tt(&f, 3, 1, u128::MAX).unwrap();
        let host = TruncatedTree::full(3);
        let fine = match (&fast, &slow) {
            (Ok((c, w)), Some((c2, w2))) => {
                both += 1;
                verify_embedding(w, &host) && monochromatic(w, &f, *c) && verify_embedding(w2, &host) && monochromatic(w2, &f, *c2)
            }
            (Err(e), None) => {
                neither += 1;
                e.is_depth_exhausted()
            }
            _ => false,
        };
        bad += usize::from(!fine);
    }
    verdict(bad == 0, format!("32768 colorings: {both} solved by both, {neither} by neither, {bad} disagreements"))
}

fn jump_accounting() -> Verdict {
    let mut per_n = BTreeMap::new();
    let mut wrong = 0;
    for n in 1..=3usize {
        let mut colorings = vec![ChainColoring::constant(n, 2, 10, 1).unwrap()];
        colorings.extend((0..20).map(|seed| ChainColoring::seeded(n, 2, 12, seed).unwrap()));
        for f in colorings {
            let target = if n == 3 { 1 } else { 2 };
            if let Ok(r) = tt_solve(&f, f.depth(), target) {
                *per_n.entry(n).or_insert(0) += 1;
                if ledger_jump_cost(&r.ledger) != 2 * (n - 1) || r.ledger.jump_levels != 2 * (n - 1) {
                    wrong += 1;
                }
            }
        }
    }
    let covered = (1..=3).all(|n| per_n.get(&n).copied().unwrap_or(0) > 0);
    verdict(covered && wrong == 0, format!("successful solves per n {per_n:?}, cost mismatches {wrong}"))
}

fn ramsey_bridge() -> Verdict {
    let colorings: Vec<IntTupleColoring> = (0u32..1 << 15)
        .map(|mask| {
            let mut table = BTreeMap::new();
            for (i, t) in treeramsey::bridge::increasing_tuples(6, 2).into_iter().enumerate() {
                table.insert(t, mask >> i & 1);
            }
            IntTupleColoring::new(2, 2, 6, IntSource::Table(table)).unwrap()
        })
        .collect();
    let brute_ok = colorings.iter().all(|f| match brute_force_rt(f, 3, u128::MAX).unwrap() {
        Some((c, set)) => treeramsey::bridge::is_homogeneous(f, &set, c),
        None => false,
    });
    let mut smallest = None;
    let mut best = (0, 0usize);
    let mut unverified = 0;
    for depth in 0..=64usize {
        let mut solved = 0;
        for f in &colorings {
            match rt_solve(f, 3, depth) {
                Ok(sol) => {
                    if !treeramsey::bridge::is_homogeneous(f, &sol.set, sol.color) {
                        unverified += 1;
                    }
                    solved += 1;
                }
                Err(e) if !e.is_depth_exhausted() && solved == 0 => break,
                Err(_) => {}
            }
        }
        if solved > best.1 {
            best = (depth, solved);
        }
        if solved == colorings.len() {
            smallest = Some(depth);
            break;
        }
    }
    let detail = match smallest {
        Some(d) => format!("brute force found a homogeneous 3-set in all 32768: {brute_ok}; rt_solve succeeds on all at D = {d}; unverified {unverified}"),
        None if best.1 == 0 => format!(
            "brute force found a homogeneous 3-set in all 32768: {brute_ok}; rt_solve succeeds on none of them at any D <= 64 \
             (D >= 6 is outside a 6-point domain); unverified {unverified}"
        ),
        None => format!(
            "brute force found a homogeneous 3-set in all 32768: {brute_ok}; no D <= 64 where rt_solve succeeds on all \
             (best D = {} with {}/32768); unverified {unverified}",
            best.0, best.1
        ),
    };
    verdict(brute_ok && smallest.is_some() && unverified == 0, detail)
}

fn jump_laws() -> Verdict {
    let mut violations = Vec::new();
    let mut halted = 0;
    for case in 0..1000u64 {
        let mut state = mix64(case);
        let mut next = |bound: u64| {
            state = mix64(state.wrapping_add(0x9e37_79b9_7f4a_7c15));
            state % bound
        };
        let len = 1 + next(10) as usize;
        let program = MachineProgram::from_instructions(
            (0..len)
                .map(|_| {
                    let (a, b) = (next(8) as usize, next(8) as usize);
                    match next(6) {
                        0 => Instruction::Halt,
                        1 => Instruction::Inc(a),
                        2 => Instruction::Dec(a),
                        3 => Instruction::Jz(a, next(9) as i64 - 4),
                        _ => Instruction::Query { input: a, output: b },
                    }
                })
                .collect(),
        )
        .unwrap();
        let horizon = next(48) as usize;
        let salt = next(u64::MAX);
        let x = OracleApprox::from_fn(horizon, |i| mix64(salt ^ i) & 1 == 1);
        let m = next(24);
        let t = next(64);
        let base = step_run(&program, &x, m, t);
        if base.halted() {
            halted += 1;
            let keep = (t as usize).min(horizon);
            let other = OracleApprox::from_fn(keep + next(16) as usize, |i| {
                if (i as usize) < keep { x.get(i).unwrap() } else { mix64(!salt ^ i) & 1 == 1 }
            });
            if step_run(&program, &other, m, t) != base {
                violations.push(format!("use principle, case {case}"));
            }
            for pad in 1..=8 {
                if step_run(&program, &x, m, t + pad * 7) != base {
                    violations.push(format!("padding, case {case}"));
                    break;
                }
            }
        }
        if case % 10 == 0 {
            let s = next(64);
            if !jump_stage(&x, s).is_subset(&jump_stage(&x, s + 1)) {
                violations.push(format!("stage monotonicity, case {case}"));
            }
        }
    }
    let pairing = (0..10_000u64).all(|z| {
        let (m, e) = unpair(z);
        pair(m, e) == z
    }) && (0..100u64).all(|m| (0..100u64).all(|e| unpair(pair(m, e)) == (m, e)));
    verdict(
        violations.is_empty() && pairing,
        format!("1000 cases ({halted} halting), 100 stage pairs, pairing bijective to 10^4: {pairing}, violations {violations:?}"),
    )
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_treeramsey");
    let scratch = tempfile::TempDir::new().unwrap();
    let root = scratch.path();
    let commands: &[&[&str]] = &[
        &["gen", "coloring", "--arity", "2", "--depth", "12", "--seed", "3", "--out", "pairs.json"],
        &["gen", "coloring", "--arity", "3", "--kind", "constant", "--depth", "10", "--value", "1", "--out", "triples.json"],
        &["gen", "coloring", "--arity", "2", "--domain", "10", "--seed", "8", "--out", "tuples.json"],
        &["tt", "solve", "--coloring", "pairs.json", "--target-depth", "2", "--out", "solve.json", "--ledger", "ledger.json"],
        &["tt", "solve", "--coloring", "triples.json", "--target-depth", "1", "--out", "solve3.json"],
        &["reduce", "step", "--coloring", "pairs.json", "--target-depth", "1", "--out", "reduce.json"],
        &["rt", "solve", "--coloring", "tuples.json", "--size", "3", "--out", "rt.json"],
        &["rt", "brute", "--coloring", "tuples.json", "--size", "3", "--out", "rtb.json"],
        &["tt", "brute", "--coloring", "pairs.json", "--depth", "4", "--target-depth", "1", "--out", "brute.json"],
        &["verify", "--embedding", "solve3.json", "--coloring", "triples.json", "--out", "verify.json"],
        &["jump", "approx", "--base", "even", "--level", "2", "--stage", "10", "--out", "jump.json"],
        &["jump", "approx", "--stage", "8"],
    ];
    let run_all = |dir: &Path| -> Vec<(i32, Vec<u8>, Vec<u8>)> {
        commands
            .iter()
            .map(|args| {
                let out = Command::new(bin).current_dir(dir).args(*args).output().unwrap();
                (out.status.code().unwrap_or(-1), out.stdout, out.stderr)
            })
            .collect()
    };
    let snapshot = |dir: &Path| -> BTreeMap<String, Vec<u8>> {
        fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap())
            .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
            .collect()
    };
    let (a, b) = (root.join("a"), root.join("b"));
    fs::create_dir(&a).unwrap();
    fs::create_dir(&b).unwrap();
    let (ra, rb) = (run_all(&a), run_all(&b));
    let rerun = run_all(&a);
    let codes: Vec<i32> = ra.iter().map(|r| r.0).collect();
    let same = ra == rb && ra == rerun && snapshot(&a) == snapshot(&b);
    let files = snapshot(&a).len();
    verdict(
        same && codes.iter().all(|c| [0, 2].contains(c)),
        format!("{} commands run three times, {files} artifacts byte-identical: {same}, exit codes {codes:?}", commands.len()),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 7] = [
        ("extension agreement", extension_agreement),
        ("solver soundness", solver_soundness),
        ("oracle agreement", oracle_agreement),
        ("jump accounting", jump_accounting),
        ("Ramsey bridge", ramsey_bridge),
        ("jump simulator laws", jump_laws),
        ("determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let number = i + 1;
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        let note = if KNOWN_RED.contains(&number) { " [known red]" } else { "" };
        println!("{tag} {number} {name}{note} ({:.1}s): {}", start.elapsed().as_secs_f64(), v.detail);
        if v.pass == KNOWN_RED.contains(&number) {
            unexpected.push(number);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
