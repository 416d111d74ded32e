//! Greedy machine/AGV reassignment and reordering of transport tasks.

use crate::chromosome::{Chromosome, TransportTask};
use crate::decode::decode_parts;
use crate::instance::{Instance, Time};

/// Onboard count after each task of a list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerProfile(pub Vec<usize>);

impl LayerProfile {
    /// Fails if the list ever unloads from an empty container.
    pub fn of(list: &[TransportTask]) -> Result<Self, String> {
        let mut level = 0usize;
        let mut out = Vec::with_capacity(list.len());
        for (i, t) in list.iter().enumerate() {
            if t.is_load() {
                level += 1;
            } else {
                level = level.checked_sub(1).ok_or_else(|| format!("negative level at position {i}"))?;
            }
            out.push(level);
        }
        Ok(Self(out))
    }

    /// Levels stay within `[0, capacity]` and the list ends empty.
    pub fn is_valid(&self, capacity: usize) -> bool {
        self.0.iter().all(|&l| l <= capacity) && self.0.last().is_none_or(|&l| l == 0)
    }
}

/// Positions whose node may move one level: loads reaching the top levels
/// and unloads landing on the bottom levels. The final node never qualifies.
pub fn transformable_nodes(list: &[TransportTask], capacity: usize) -> Vec<usize> {
    if capacity < 2 || list.is_empty() {
        return Vec::new();
    }
    let Ok(profile) = LayerProfile::of(list) else {
        return Vec::new();
    };
    let load_min = (capacity - 1).max(2);
    let unload_max = if capacity >= 3 { 1 } else { 0 };
    (0..list.len() - 1)
        .filter(|&i| {
            let l = profile.0[i];
            if list[i].is_load() {
                l >= load_min
            } else {
                l <= unload_max
            }
        })
        .collect()
}

/// Moves the node at `pos` one level: a load is overtaken by the nearest
/// following unload, an unload by the nearest following load. Returns `None`
/// if no such node exists or the result breaks capacity or pairing.
pub fn transform_node(list: &[TransportTask], pos: usize, capacity: usize) -> Option<Vec<TransportTask>> {
    let want_load = !list.get(pos)?.is_load();
    let q = (pos + 1..list.len()).find(|&q| list[q].is_load() == want_load)?;
    let mut out = list.to_vec();
    let moved = out.remove(q);
    out.insert(pos, moved);
    let profile = LayerProfile::of(&out).ok()?;
    if !profile.is_valid(capacity) {
        return None;
    }
    let mut loaded = std::collections::HashSet::new();
    for t in &out {
        if t.is_load() {
            loaded.insert(t.op);
        } else if !loaded.contains(&t.op) {
            return None;
        }
    }
    Some(out)
}

fn evaluate(c: &Chromosome, instance: &Instance) -> Option<Time> {
    decode_parts(&c.op_seq, &c.machines, &c.agvs, &c.task_lists, instance)
        .ok()
        .map(|s| s.makespan)
}

/// First-improvement sweep over machine genes, then AGV genes. Task lists
/// are rebuilt by the container rule for every trial.
pub fn greedy_machine_agv_search(chromosome: &Chromosome, fitness: Time, instance: &Instance) -> (Chromosome, Time) {
    let mut best = chromosome.clone();
    let mut best_fit = fitness;
    for o in 0..instance.total_operations() {
        let current = best.machines[o];
        for &(m, _) in &instance.operation(o).eligible {
            if m == current {
                continue;
            }
            let mut trial = best.clone();
            trial.machines[o] = m;
            trial.rebuild_task_lists(instance);
            if let Some(f) = evaluate(&trial, instance).filter(|&f| f < best_fit) {
                best = trial;
                best_fit = f;
                break;
            }
        }
    }
    for o in 0..instance.total_operations() {
        let current = best.agvs[o];
        for r in 0..instance.num_agvs() {
            if r == current {
                continue;
            }
            let mut trial = best.clone();
            trial.agvs[o] = r;
            trial.rebuild_task_lists(instance);
            if let Some(f) = evaluate(&trial, instance).filter(|&f| f < best_fit) {
                best = trial;
                best_fit = f;
                break;
            }
        }
    }
    (best, best_fit)
}

/// Applies improving node transformations on every AGV list until none is
/// left.
pub fn transform_search(chromosome: &Chromosome, fitness: Time, instance: &Instance) -> (Chromosome, Time) {
    let capacity = instance.agv_capacity();
    let mut best = chromosome.clone();
    let mut best_fit = fitness;
    for r in 0..instance.num_agvs() {
        'restart: loop {
            for pos in transformable_nodes(&best.task_lists[r], capacity) {
                let Some(list) = transform_node(&best.task_lists[r], pos, capacity) else {
                    continue;
                };
                let mut trial = best.clone();
                trial.task_lists[r] = list;
                if let Some(f) = evaluate(&trial, instance).filter(|&f| f < best_fit) {
                    best = trial;
                    best_fit = f;
                    continue 'restart;
                }
            }
            break;
        }
    }
    (best, best_fit)
}

/// Runs both searches when `fitness` beats `region_mean`; otherwise returns
/// the input unchanged.
pub fn conditional_local_search(
    chromosome: &Chromosome,
    fitness: Time,
    region_mean: f64,
    instance: &Instance,
) -> (Chromosome, Time) {
    if (fitness as f64) >= region_mean {
        return (chromosome.clone(), fitness);
    }
    let (c, f) = greedy_machine_agv_search(chromosome, fitness, instance);
    transform_search(&c, f, instance)
}
