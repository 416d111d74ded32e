//! Crossover, mutation and roulette selection.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::chromosome::{repair_machine_layer, Chromosome};
use crate::instance::Instance;

/// POX on job-repetition sequences with a random nonempty proper job subset.
/// With a single job both children equal their parents.
pub fn pox_crossover<R: Rng + ?Sized>(
    p1: &[usize],
    p2: &[usize],
    num_jobs: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    if num_jobs < 2 {
        return (p1.to_vec(), p2.to_vec());
    }
    let in_a = loop {
        let set: Vec<bool> = (0..num_jobs).map(|_| rng.gen_bool(0.5)).collect();
        let k = set.iter().filter(|&&b| b).count();
        if k > 0 && k < num_jobs {
            break set;
        }
    };
    pox_with_set(p1, p2, &in_a)
}

/// POX with a given partition: `c1` keeps `p1`'s genes of jobs in the set at
/// their positions and takes the remaining jobs in `p2` order; `c2` keeps
/// `p2`'s genes of the set and is filled from `p1`.
pub fn pox_with_set(p1: &[usize], p2: &[usize], in_a: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let child = |keep: &[usize], fill: &[usize]| -> Vec<usize> {
        let mut rest = fill.iter().copied().filter(|&j| !in_a[j]);
        keep.iter()
            .map(|&j| {
                if in_a[j] {
                    j
                } else {
                    rest.next().expect("parents hold the same job multiset")
                }
            })
            .collect()
    };
    (child(p1, p2), child(p2, p1))
}

/// PMX with uniformly drawn cut points.
pub fn pmx_crossover<R: Rng + ?Sized>(p1: &[usize], p2: &[usize], rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let len = p1.len();
    let a = rng.gen_range(0..=len);
    let b = rng.gen_range(0..=len);
    pmx_with_cuts(p1, p2, a.min(b), a.max(b))
}

/// PMX exchanging `[lo, hi)`. Outside the segment each inherited value that
/// clashes with the segment is mapped through the segment correspondence.
/// Layers with repeated values may form mapping cycles; the walk then stops
/// at the last value reached.
pub fn pmx_with_cuts(p1: &[usize], p2: &[usize], lo: usize, hi: usize) -> (Vec<usize>, Vec<usize>) {
    assert_eq!(p1.len(), p2.len());
    let child = |outer: &[usize], inner: &[usize]| -> Vec<usize> {
        let seg = &inner[lo..hi];
        let mut c = outer.to_vec();
        c[lo..hi].copy_from_slice(seg);
        for k in (0..lo).chain(hi..outer.len()) {
            let mut v = outer[k];
            for _ in 0..seg.len() {
                match seg.iter().position(|&s| s == v) {
                    Some(t) if outer[lo + t] != v => v = outer[lo + t],
                    _ => break,
                }
            }
            c[k] = v;
        }
        c
    };
    (child(p1, p2), child(p2, p1))
}

/// Swaps two sequence positions with probability `rate`, then resamples each
/// machine gene among eligible machines and each AGV gene with probability
/// `rate`. Task lists are rebuilt.
pub fn mutate<R: Rng + ?Sized>(chromosome: &mut Chromosome, rate: f64, instance: &Instance, rng: &mut R) {
    let n = chromosome.op_seq.len();
    let mut changed = false;
    if n >= 2 && rng.gen_bool(rate) {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        chromosome.op_seq.swap(a, b);
        changed |= a != b;
    }
    for o in 0..n {
        if rng.gen_bool(rate) {
            chromosome.machines[o] = instance.operation(o).eligible.choose(rng).expect("eligible is nonempty").0;
            changed = true;
        }
        if rng.gen_bool(rate) {
            chromosome.agvs[o] = rng.gen_range(0..instance.num_agvs());
            changed = true;
        }
    }
    if changed {
        chromosome.rebuild_task_lists(instance);
    }
}

/// Two offspring from two parents: POX on the sequence, PMX on machine and
/// AGV layers, mutation and machine repair.
pub fn recombine<R: Rng + ?Sized>(
    p1: &Chromosome,
    p2: &Chromosome,
    mutation_rate: f64,
    instance: &Instance,
    rng: &mut R,
) -> [Chromosome; 2] {
    let (s1, s2) = pox_crossover(&p1.op_seq, &p2.op_seq, instance.num_jobs(), rng);
    let (m1, m2) = pmx_crossover(&p1.machines, &p2.machines, rng);
    let (a1, a2) = pmx_crossover(&p1.agvs, &p2.agvs, rng);
    [(s1, m1, a1), (s2, m2, a2)].map(|(s, m, a)| {
        let mut c = Chromosome {
            op_seq: s,
            machines: m,
            agvs: a,
            task_lists: Vec::new(),
        };
        repair_machine_layer(&mut c, instance, rng);
        c.rebuild_task_lists(instance);
        mutate(&mut c, mutation_rate, instance, rng);
        c
    })
}

/// Roulette over cluster means (lower is better) with weights
/// `worst - mean + 1`. `exclude` is never picked. Returns `None` when no
/// candidate is left.
pub fn roulette_pick<R: Rng + ?Sized>(means: &[f64], exclude: Option<usize>, rng: &mut R) -> Option<usize> {
    let candidates: Vec<usize> = (0..means.len()).filter(|&i| Some(i) != exclude).collect();
    let worst = candidates.iter().map(|&i| means[i]).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = candidates.iter().map(|&i| worst - means[i] + 1.0).collect();
    let total: f64 = weights.iter().sum();
    if candidates.is_empty() || !total.is_finite() {
        return None;
    }
    let mut x = rng.gen_range(0.0..total);
    for (k, w) in weights.iter().enumerate() {
        if x < *w {
            return Some(candidates[k]);
        }
        x -= w;
    }
    candidates.last().copied()
}
