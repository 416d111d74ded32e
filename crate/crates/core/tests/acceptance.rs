//! Acceptance suite. Every criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.
//!
//! Run with `cargo test --release -p fjspma --test acceptance`.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fjspma::chromosome::{solution_vector, Chromosome, OpRef, TransportTask};
use fjspma::decode::{decode, decode_parts};
use fjspma::evolution::{
    pmx_crossover, pox_crossover, run, run_ga_baseline, Algorithm, HrpeoParams, StopRule,
};
use fjspma::harness::{arpd, default_time_budget, run_trials};
use fjspma::instance::{Instance, InstanceGenerator, Time};
use fjspma::local_search::conditional_local_search;
use fjspma::niching::identify_seeds;
use fjspma::region::{GlobalTree, RegionBox};
use fjspma::validate::check_schedule;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Written straight to stderr so the line shows even when output is captured.
fn announce(id: usize, name: &str, o: &Outcome, secs: f64) {
    let line = format!(
        "criterion {id} {name}: {} ({}; {secs:.1} s)\n",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

fn feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let setups = [(4, 3, 2, 1), (5, 4, 2, 2), (6, 4, 3, 3), (3, 2, 1, 2), (8, 5, 2, 3), (6, 3, 1, 1)];
    let per_instance = 10_000 / setups.len() + 1;
    let mut total = 0;
    for (k, &(j, m, r, a)) in setups.iter().enumerate() {
        let inst = InstanceGenerator::new(j, m, r, a).generate(100 + k as u64);
        for _ in 0..per_instance {
            let c = Chromosome::random(&inst, &mut rng);
            let report = match decode(&c, &inst) {
                Ok(s) => check_schedule(&s, &c, &inst),
                Err(e) => return outcome(false, format!("decode failed: {e}")),
            };
            if !report.is_empty() {
                return outcome(false, format!("violations on instance {k}: {report}"));
            }
            total += 1;
        }
    }
    outcome(true, format!("{total} chromosomes on {} instances, capacities 1-3", setups.len()))
}

/// All distinct orderings of a multiset of job ids.
fn sequences(left: &mut [usize], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if left.iter().all(|&l| l == 0) {
        out.push(cur.clone());
        return;
    }
    for j in 0..left.len() {
        if left[j] > 0 {
            left[j] -= 1;
            cur.push(j);
            sequences(left, cur, out);
            cur.pop();
            left[j] += 1;
        }
    }
}

/// All task lists over `ops` (in processing order) whose loads and unloads
/// follow that order, with every unload after its load and at most
/// `capacity` jobs on board.
fn interleavings(ops: &[OpRef], capacity: usize) -> Vec<Vec<TransportTask>> {
    fn go(
        ops: &[OpRef],
        capacity: usize,
        loads: usize,
        unloads: usize,
        cur: &mut Vec<TransportTask>,
        out: &mut Vec<Vec<TransportTask>>,
    ) {
        if unloads == ops.len() {
            out.push(cur.clone());
            return;
        }
        if loads < ops.len() && loads - unloads < capacity {
            cur.push(TransportTask::load(ops[loads]));
            go(ops, capacity, loads + 1, unloads, cur, out);
            cur.pop();
        }
        if unloads < loads {
            cur.push(TransportTask::unload(ops[unloads]));
            go(ops, capacity, loads, unloads + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(ops, capacity, 0, 0, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive optimum for single-AGV instances.
fn brute_force(inst: &Instance) -> Time {
    assert_eq!(inst.num_agvs(), 1);
    let n = inst.total_operations();
    let mut seqs = Vec::new();
    let mut left: Vec<usize> = (0..inst.num_jobs()).map(|j| inst.job_len(j)).collect();
    sequences(&mut left, &mut Vec::new(), &mut seqs);
    let mut assignments: Vec<Vec<usize>> = vec![Vec::new()];
    for o in 0..n {
        assignments = assignments
            .into_iter()
            .flat_map(|a| {
                inst.operation(o).eligible.iter().map(move |&(m, _)| {
                    let mut b = a.clone();
                    b.push(m);
                    b
                })
            })
            .collect();
    }
    let agvs = vec![0; n];
    let mut best = Time::MAX;
    for seq in &seqs {
        for machines in &assignments {
            let mut next = vec![0usize; inst.num_jobs()];
            let mut ops = Vec::new();
            for &j in seq {
                let o = inst.op_id(j, next[j]);
                if next[j] == 0 || machines[o] != machines[o - 1] {
                    ops.push(OpRef::Real(o));
                }
                next[j] += 1;
                if next[j] == inst.job_len(j) {
                    ops.push(OpRef::Terminal(j));
                }
            }
            for list in interleavings(&ops, inst.agv_capacity()) {
                let lists = [list];
                if let Ok(s) = decode_parts(seq, machines, &agvs, &lists, inst) {
                    best = best.min(s.makespan);
                }
            }
        }
    }
    best
}

fn brute_force_oracle() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    let shapes = [(3, 2), (2, 2), (3, 2)];
    for (k, &(jobs, machines)) in shapes.iter().enumerate() {
        let inst = InstanceGenerator::new(jobs, machines, 1, 2)
            .ops_per_job(2, 2)
            .max_flexibility(2)
            .generate(40 + k as u64);
        let t0 = Instant::now();
        let optimum = brute_force(&inst);
        let enum_secs = t0.elapsed().as_secs_f64();
        let hits = (0..20)
            .filter(|&seed| {
                let p = HrpeoParams {
                    seed,
                    stop: StopRule::Generations(60),
                    ..HrpeoParams::default()
                };
                run(&inst, &p).expect("run succeeds").best_makespan == optimum
            })
            .count();
        pass &= hits >= 19 && enum_secs < 300.0;
        details.push(format!("instance {k}: optimum {optimum}, {hits}/20 hits, enumeration {enum_secs:.1} s"));
    }
    outcome(pass, details.join("; "))
}

fn ablation_direction() -> Outcome {
    let mut hrpeo = Vec::new();
    let mut ga = Vec::new();
    for k in 0..5u64 {
        let inst = InstanceGenerator::new(6, 4, 2, 2).ops_per_job(3, 3).generate(500 + k);
        let params = HrpeoParams {
            stop: StopRule::TimeBudgetMs(default_time_budget(&inst).as_millis() as u64),
            ..HrpeoParams::default()
        };
        let reports = run_trials(
            &format!("desk-{k}"),
            &inst,
            &[Algorithm::Hrpeo, Algorithm::GaBaseline],
            &params,
            10,
            1000,
        )
        .expect("trials succeed");
        hrpeo.push(reports[0].arpd_percent);
        ga.push(reports[1].arpd_percent);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (h, g) = (mean(&hrpeo), mean(&ga));
    outcome(
        h < g,
        format!("mean ARPD hrpeo {h:.3}% vs ga-baseline {g:.3}% (per instance {hrpeo:.2?} vs {ga:.2?})"),
    )
}

fn arpd_arithmetic() -> Outcome {
    let a = arpd(&[110.0, 105.0], 100.0).unwrap();
    let mut pass = (a.percent - 7.5).abs() <= 1e-12 && (a.ratio - 0.075).abs() <= 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let best = rng.gen_range(10.0..500.0f64).round();
        let cs: Vec<f64> = (0..rng.gen_range(1..20)).map(|_| best + rng.gen_range(0.0..100.0f64).round()).collect();
        let k = rng.gen_range(0.01..1000.0);
        let scaled: Vec<f64> = cs.iter().map(|c| c * k).collect();
        let d = (arpd(&cs, best).unwrap().ratio - arpd(&scaled, best * k).unwrap().ratio).abs();
        worst = worst.max(d);
    }
    pass &= worst <= 1e-12;
    outcome(pass, format!("arpd([110,105],100) = {}; worst scale drift {worst:.1e}", a.percent))
}

fn seed_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut details = Vec::new();
    let mut pass = true;
    for k in 0..3u64 {
        let inst = InstanceGenerator::new(6, 4, 2, 2).generate(700 + k);
        let set: Vec<(Vec<i32>, f64)> = (0..1000)
            .map(|_| {
                let c = Chromosome::random(&inst, &mut rng);
                let f = decode(&c, &inst).unwrap().makespan as f64;
                (solution_vector(&c), f)
            })
            .collect();
        let seeds = identify_seeds(&set, 3.5, 2.0);
        let best = (0..set.len()).min_by(|&a, &b| set[a].1.total_cmp(&set[b].1)).unwrap();
        let ok = seeds.len() <= 50 && seeds.indices().contains(&best);
        pass &= ok;
        details.push(format!("{} seeds", seeds.len()));
    }
    outcome(pass, format!("per 1000 random solutions: {}", details.join(", ")))
}

fn tree_invariants() -> Outcome {
    let dims = 6;
    let root = RegionBox::new(vec![0; dims], vec![16; dims]);
    let root_volume: i128 = 16i128.pow(dims as u32);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tree: GlobalTree<usize> = GlobalTree::new(root.clone());
        let mut recorded: Vec<(Vec<i32>, f64)> = Vec::new();
        for step in 0..1000 {
            if rng.gen_bool(0.7) {
                let v: Vec<i32> = (0..dims).map(|_| rng.gen_range(0..16)).collect();
                let f = rng.gen_range(0.0..100.0);
                tree.record(v.clone(), f, step).unwrap();
                recorded.push((v, f));
            } else {
                let leaves = tree.leaves();
                let leaf = *leaves.choose(&mut rng).unwrap();
                let d = rng.gen_range(0..dims);
                let _ = tree.halve(leaf, d);
            }
        }
        let leaves = tree.leaves();
        let volume: i128 = leaves
            .iter()
            .map(|&l| {
                let b = tree.region_box(l);
                (0..dims).map(|d| b.width(d) as i128).product::<i128>()
            })
            .sum();
        if volume != root_volume {
            return outcome(false, format!("leaf volume {volume} != {root_volume}"));
        }
        for (i, &a) in leaves.iter().enumerate() {
            for &b in &leaves[i + 1..] {
                let (ba, bb) = (tree.region_box(a), tree.region_box(b));
                if (0..dims).all(|d| ba.overlaps_on(bb, d)) {
                    return outcome(false, format!("leaves {a} and {b} overlap"));
                }
            }
        }
        let count: usize = leaves.iter().map(|&l| tree.count(l)).sum();
        if count != recorded.len() || tree.len() != recorded.len() {
            return outcome(false, format!("count {count} != recorded {}", recorded.len()));
        }
        for (v, _) in &recorded {
            let hits = leaves.iter().filter(|&&l| tree.region_box(l).contains(v)).count();
            if hits != 1 {
                return outcome(false, format!("vector in {hits} leaves"));
            }
        }
        for id in 0..tree.num_nodes() {
            let recs = tree.records_under(id);
            if recs.len() != tree.count(id) {
                return outcome(false, format!("node {id} count mismatch"));
            }
            if !recs.is_empty() {
                let mean = recs.iter().map(|r| r.fitness).sum::<f64>() / recs.len() as f64;
                if (mean - tree.mean_fitness(id)).abs() > 1e-9 {
                    return outcome(false, format!("node {id} mean {} vs {mean}", tree.mean_fitness(id)));
                }
            }
        }
    }
    outcome(true, "5 runs of 1000 record/split steps: tiling, counts and means exact")
}

fn monotonicity() -> Outcome {
    for seed in 0..4u64 {
        let inst = InstanceGenerator::new(4, 3, 2, 2).generate(900 + seed);
        let p = HrpeoParams {
            seed,
            stop: StopRule::Generations(8),
            ..HrpeoParams::default()
        };
        for out in [run(&inst, &p).unwrap(), run_ga_baseline(&inst, &p).unwrap()] {
            if out.history.windows(2).any(|w| w[1].best > w[0].best) {
                return outcome(false, format!("history increases for seed {seed}"));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut improved = 0;
    for i in 0..1000u64 {
        let inst = InstanceGenerator::new(4, 3, 2, 1 + (i % 3) as usize).generate(i % 10);
        let c = Chromosome::random(&inst, &mut rng);
        let f = decode(&c, &inst).unwrap().makespan;
        let mean = if i % 4 == 0 { f as f64 } else { f64::INFINITY };
        let (out, g) = conditional_local_search(&c, f, mean, &inst);
        let s = match decode(&out, &inst) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("local search output fails to decode: {e}")),
        };
        if g > f || s.makespan != g || !check_schedule(&s, &out, &inst).is_empty() {
            return outcome(false, format!("local search call {i} returned {g} from {f}"));
        }
        improved += usize::from(g < f);
    }
    outcome(true, format!("histories non-increasing; 1000 local searches never worse ({improved} improved)"))
}

fn budget_adherence() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for &(j, m, r) in &[(5, 2, 1), (6, 4, 2), (10, 5, 2)] {
        let inst = InstanceGenerator::new(j, m, r, 2).generate(11);
        let budget = default_time_budget(&inst);
        for alg in [Algorithm::Hrpeo, Algorithm::GaBaseline] {
            for seed in 0..2 {
                let p = HrpeoParams {
                    seed,
                    stop: StopRule::TimeBudgetMs(budget.as_millis() as u64),
                    ..HrpeoParams::default()
                };
                let t0 = Instant::now();
                fjspma::evolution::run_algorithm(alg, &inst, &p).unwrap();
                let ratio = t0.elapsed().as_secs_f64() / budget.as_secs_f64();
                pass &= ratio <= 1.10;
                details.push(format!("{}ms {alg}: {:.3}", budget.as_millis(), ratio));
            }
        }
    }
    outcome(pass, format!("elapsed/budget {}", details.join(", ")))
}

fn operator_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..1000 {
        let jobs = rng.gen_range(1..7);
        let lens: Vec<usize> = (0..jobs).map(|_| rng.gen_range(1..5)).collect();
        let base: Vec<usize> = (0..jobs).flat_map(|j| std::iter::repeat_n(j, lens[j])).collect();
        let mut p1 = base.clone();
        let mut p2 = base.clone();
        p1.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        let (c1, c2) = pox_crossover(&p1, &p2, jobs, &mut rng);
        for c in [&c1, &c2] {
            let mut sorted = c.clone();
            sorted.sort_unstable();
            if sorted != base {
                return outcome(false, format!("POX trial {t} changed job counts"));
            }
        }
        if pox_crossover(&p1, &p1, jobs, &mut rng) != (p1.clone(), p1.clone()) {
            return outcome(false, format!("POX trial {t}: identical parents changed"));
        }
    }
    for t in 0..1000 {
        let len = rng.gen_range(1..12);
        let mut p1: Vec<usize> = (0..len).collect();
        let mut p2 = p1.clone();
        p1.shuffle(&mut rng);
        p2.shuffle(&mut rng);
        let (c1, c2) = pmx_crossover(&p1, &p2, &mut rng);
        for c in [&c1, &c2] {
            if c.iter().copied().collect::<BTreeSet<_>>().len() != len {
                return outcome(false, format!("PMX trial {t} broke the permutation"));
            }
        }
        if pmx_crossover(&p1, &p1, &mut rng) != (p1.clone(), p1.clone()) {
            return outcome(false, format!("PMX trial {t}: identical parents changed"));
        }
        let layer: Vec<usize> = (0..len).map(|_| rng.gen_range(0..3)).collect();
        if pmx_crossover(&layer, &layer, &mut rng) != (layer.clone(), layer.clone()) {
            return outcome(false, format!("PMX trial {t}: identical assignment layers changed"));
        }
    }
    outcome(true, "1000 trials each: POX keeps job counts, PMX keeps permutations, identical parents fixed")
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("feasibility", feasibility),
        ("brute-force oracle", brute_force_oracle),
        ("ablation direction", ablation_direction),
        ("ARPD arithmetic", arpd_arithmetic),
        ("seed statistics", seed_statistics),
        ("k-d tree invariants", tree_invariants),
        ("monotonicity", monotonicity),
        ("budget adherence", budget_adherence),
        ("operator laws", operator_laws),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        announce(i + 1, name, &o, t0.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(format!("{} {name}: {}", i + 1, o.detail));
        }
    }
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.join("\n"));
}
