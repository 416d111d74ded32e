//! Subpopulations drawn from the recorded members of a cluster, padded with
//! chromosomes sampled inside the cluster's regions.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::chromosome::Chromosome;
use crate::instance::{Instance, Time};
use crate::niching::Cluster;
use crate::region::{GlobalTree, Record, RegionBox};

const SAMPLE_RETRIES: usize = 20;

fn sample_assignments<R: Rng + ?Sized>(
    bbox: &RegionBox,
    instance: &Instance,
    rng: &mut R,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = instance.total_operations();
    let mut machines = Vec::with_capacity(n);
    for o in 0..n {
        let (lo, hi) = (bbox.low[n + o], bbox.high[n + o]);
        let options: Vec<usize> = instance
            .operation(o)
            .eligible
            .iter()
            .map(|e| e.0)
            .filter(|&m| lo <= m as i32 && (m as i32) < hi)
            .collect();
        machines.push(*options.choose(rng)?);
    }
    let mut agvs = Vec::with_capacity(n);
    for o in 0..n {
        let (lo, hi) = (bbox.low[2 * n + o], bbox.high[2 * n + o]);
        if lo >= hi {
            return None;
        }
        agvs.push(rng.gen_range(lo..hi) as usize);
    }
    Some((machines, agvs))
}

/// Random job-repetition sequence with every slot inside its interval, by
/// slot-wise random choice with restarts.
fn sample_sequence<R: Rng + ?Sized>(bbox: &RegionBox, instance: &Instance, rng: &mut R) -> Option<Vec<usize>> {
    let n = instance.total_operations();
    'retry: for _ in 0..SAMPLE_RETRIES {
        let mut left: Vec<usize> = (0..instance.num_jobs()).map(|j| instance.job_len(j)).collect();
        let mut seq = Vec::with_capacity(n);
        for k in 0..n {
            let (lo, hi) = (bbox.low[k].max(0) as usize, bbox.high[k].max(0) as usize);
            let options: Vec<usize> = (lo..hi.min(left.len())).filter(|&j| left[j] > 0).collect();
            let Some(&j) = options.choose(rng) else {
                continue 'retry;
            };
            left[j] -= 1;
            seq.push(j);
        }
        return Some(seq);
    }
    None
}

/// Chromosome whose solution vector lies in `bbox`, if one is found.
pub fn sample_in_box<R: Rng + ?Sized>(bbox: &RegionBox, instance: &Instance, rng: &mut R) -> Option<Chromosome> {
    let seq = sample_sequence(bbox, instance, rng)?;
    let (machines, agvs) = sample_assignments(bbox, instance, rng)?;
    Some(Chromosome::new(seq, machines, agvs, instance))
}

/// Random swaps of `start`'s sequence that keep it inside `bbox`, with
/// machine and AGV genes resampled inside `bbox`. `start` must lie in
/// `bbox`.
pub fn walk_in_box<R: Rng + ?Sized>(
    start: &Chromosome,
    bbox: &RegionBox,
    instance: &Instance,
    rng: &mut R,
) -> Chromosome {
    let n = start.op_seq.len();
    let mut seq = start.op_seq.clone();
    for _ in 0..n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let fits = |k: usize, j: usize| bbox.low[k] <= j as i32 && (j as i32) < bbox.high[k];
        if fits(a, seq[b]) && fits(b, seq[a]) {
            seq.swap(a, b);
        }
    }
    let (machines, agvs) =
        sample_assignments(bbox, instance, rng).unwrap_or_else(|| (start.machines.clone(), start.agvs.clone()));
    Chromosome::new(seq, machines, agvs, instance)
}

/// Up to `size` distinct members taken from the `window` best.
fn best_distinct(
    members: &[&Record<Chromosome>],
    size: usize,
    window: usize,
) -> Vec<(Chromosome, Option<Time>)> {
    let mut best: Vec<&Record<Chromosome>> = members.to_vec();
    let cmp = |a: &&Record<Chromosome>, b: &&Record<Chromosome>| a.fitness.total_cmp(&b.fitness);
    if window < best.len() {
        best.select_nth_unstable_by(window, cmp);
        best.truncate(window);
    }
    best.sort_by(cmp);
    let mut seen: HashSet<&[i32]> = HashSet::new();
    best.into_iter()
        .filter(|r| seen.insert(&r.vector))
        .take(size)
        .map(|r| (r.payload.clone(), Some(r.fitness as Time)))
        .collect()
}

/// Up to `size` best distinct members of the cluster, padded to exactly
/// `size` with chromosomes drawn inside the cluster's regions.
pub fn generate_subpopulation<R: Rng + ?Sized>(
    cluster: &Cluster,
    tree: &GlobalTree<Chromosome>,
    instance: &Instance,
    size: usize,
    rng: &mut R,
) -> Vec<(Chromosome, Option<Time>)> {
    let members = cluster.members(tree);
    let mut out = best_distinct(&members, size, 4 * size);
    if out.len() < size && members.len() > 4 * size {
        out = best_distinct(&members, size, members.len());
    }
    while out.len() < size {
        let region = *cluster.regions.choose(rng).expect("clusters are nonempty");
        let bbox = tree.region_box(region);
        let c = sample_in_box(bbox, instance, rng)
            .or_else(|| {
                tree.records(region)
                    .choose(rng)
                    .map(|r| walk_in_box(&r.payload, bbox, instance, rng))
            })
            .or_else(|| {
                members.choose(rng).map(|r| {
                    let own = tree.region_box(tree.locate(&r.vector).expect("recorded vectors are in range"));
                    walk_in_box(&r.payload, own, instance, rng)
                })
            })
            .unwrap_or_else(|| Chromosome::random(instance, rng));
        debug_assert!(c.validate(instance).is_ok());
        out.push((c, None));
    }
    out
}
