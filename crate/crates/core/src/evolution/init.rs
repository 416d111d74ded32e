//! Decision-tree initialization with first-come-first-served assignments.

use rand::Rng;

use crate::chromosome::{build_default_task_lists, processing_order, Chromosome, OpRef};
use crate::decode::decode_parts;
use crate::instance::{Instance, Location, Time, MW};

/// Machine and AGV genes for a (partial) sequence: each operation in order
/// takes the AGV that frees up first and the eligible machine that frees up
/// first (shorter processing time on ties).
pub fn fcfs_assignment(op_seq: &[usize], instance: &Instance) -> (Vec<usize>, Vec<usize>) {
    let n = instance.total_operations();
    let mut machines: Vec<usize> = (0..n).map(|o| instance.operation(o).eligible[0].0).collect();
    let mut agvs = vec![0usize; n];
    let mut machine_free = vec![0 as Time; instance.num_machines()];
    let mut agv_free = vec![0 as Time; instance.num_agvs()];
    let mut agv_loc = vec![MW; instance.num_agvs()];
    let mut job_ready = vec![0 as Time; instance.num_jobs()];
    let mut job_loc: Vec<Location> = vec![MW; instance.num_jobs()];
    for op in processing_order(op_seq, instance) {
        let OpRef::Real(o) = op else { continue };
        let j = instance.operation(o).job;
        let r = (0..instance.num_agvs()).min_by_key(|&r| (agv_free[r], r)).unwrap();
        let (m, pt) = instance
            .operation(o)
            .eligible
            .iter()
            .copied()
            .min_by_key(|&(m, pt)| (machine_free[m], pt, m))
            .unwrap();
        machines[o] = m;
        agvs[o] = r;
        let dest = instance.machine_location(m);
        let start = agv_free[r].max(job_ready[j]);
        let arrive = start
            + instance.transport_time(agv_loc[r], job_loc[j])
            + instance.transport_time(job_loc[j], dest);
        agv_free[r] = arrive;
        agv_loc[r] = dest;
        let begin = arrive.max(machine_free[m]);
        machine_free[m] = begin + pt;
        job_ready[j] = begin + pt;
        job_loc[j] = dest;
    }
    (machines, agvs)
}

/// Makespan of the scheduled part of a partial sequence under FCFS genes.
pub fn partial_fitness(op_seq: &[usize], instance: &Instance) -> Time {
    let (machines, agvs) = fcfs_assignment(op_seq, instance);
    let lists = build_default_task_lists(op_seq, &machines, &agvs, instance);
    decode_parts(op_seq, &machines, &agvs, &lists, instance)
        .map(|s| s.makespan)
        .unwrap_or(Time::MAX)
}

/// Full sequences of the subtree rooted at `first_job`, keeping at most
/// `n1` branches per layer.
fn subtree(first_job: usize, n1: usize, instance: &Instance) -> Vec<Vec<usize>> {
    let total = instance.total_operations();
    let mut frontier = vec![vec![first_job]];
    for _ in 1..total {
        let mut next = Vec::new();
        for seq in &frontier {
            let mut used = vec![0usize; instance.num_jobs()];
            for &j in seq {
                used[j] += 1;
            }
            for j in 0..instance.num_jobs() {
                if used[j] < instance.job_len(j) {
                    let mut s = seq.clone();
                    s.push(j);
                    next.push(s);
                }
            }
        }
        if next.len() > n1 {
            let mut scored: Vec<(Time, usize, Vec<usize>)> = next
                .into_iter()
                .enumerate()
                .map(|(i, s)| (partial_fitness(&s, instance), i, s))
                .collect();
            scored.sort_by_key(|(f, i, _)| (*f, *i));
            scored.truncate(n1);
            next = scored.into_iter().map(|(_, _, s)| s).collect();
        }
        frontier = next;
    }
    frontier
}

/// Exactly `num_jobs * n1` chromosomes, `n1` from each first-operation
/// subtree. Subtrees with fewer than `n1` complete branches repeat their
/// sequences with random machine and AGV genes.
pub fn initialize_population<R: Rng + ?Sized>(instance: &Instance, n1: usize, rng: &mut R) -> Vec<Chromosome> {
    let mut out = Vec::with_capacity(instance.num_jobs() * n1);
    for j in 0..instance.num_jobs() {
        let seqs = subtree(j, n1, instance);
        for k in 0..n1 {
            let seq = seqs[k % seqs.len()].clone();
            if k < seqs.len() {
                let (machines, agvs) = fcfs_assignment(&seq, instance);
                out.push(Chromosome::new(seq, machines, agvs, instance));
            } else {
                let mut c = Chromosome::random(instance, rng);
                c.op_seq = seq;
                c.rebuild_task_lists(instance);
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode;
    use crate::instance::{generate_random_instance, Operation};
    use crate::validate::check_schedule;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(job: usize) -> Vec<Operation> {
        vec![Operation {
            job,
            stage: 0,
            eligible: vec![(0, 3)],
        }]
    }

    #[test]
    fn one_job_one_branch() {
        let inst = Instance::new(1, 1, 1, vec![single(0)], vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pop = initialize_population(&inst, 1, &mut rng);
        assert_eq!(pop.len(), 1);
        assert_eq!(pop[0].op_seq, vec![0]);
    }

    #[test]
    fn two_single_op_jobs_cover_both_orders() {
        let inst = Instance::new(1, 1, 2, vec![single(0), single(1)], vec![vec![0; 3]; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pop = initialize_population(&inst, 2, &mut rng);
        assert_eq!(pop.len(), 4);
        assert_eq!(pop[0].op_seq, vec![0, 1]);
        assert_eq!(pop[1].op_seq, vec![0, 1]);
        assert_eq!(pop[2].op_seq, vec![1, 0]);
        assert_eq!(pop[3].op_seq, vec![1, 0]);
    }

    #[test]
    fn population_is_feasible_and_sized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..4 {
            let inst = generate_random_instance(5, 4, 2, 2 + seed as usize % 2, seed);
            let pop = initialize_population(&inst, 6, &mut rng);
            assert_eq!(pop.len(), 30);
            for (k, c) in pop.iter().enumerate() {
                assert_eq!(c.op_seq[0], k / 6);
                assert!(c.validate(&inst).is_ok());
                let s = decode(c, &inst).unwrap();
                assert!(check_schedule(&s, c, &inst).is_empty());
            }
        }
    }

    #[test]
    fn fcfs_spreads_over_idle_machines() {
        let op = |job| Operation {
            job,
            stage: 0,
            eligible: vec![(0, 5), (1, 5)],
        };
        let inst = Instance::new(2, 2, 2, vec![vec![op(0)], vec![op(1)]], vec![vec![0; 4]; 4]).unwrap();
        let (machines, agvs) = fcfs_assignment(&[0, 1], &inst);
        assert_eq!(machines, vec![0, 1]);
        assert_eq!(agvs, vec![0, 0]);
        assert_eq!(partial_fitness(&[0], &inst), 5);
    }
}
