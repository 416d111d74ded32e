//! Three-layer encoding plus per-AGV transport-task lists.
//!
//! * `op_seq` uses job repetition: job `i` appears `S_i` times and its k-th
//!   occurrence denotes operation `(i, k)`, so every permutation respects job
//!   precedence.
//! * `machines[o]` and `agvs[o]` are indexed by global operation id.
//! * `task_lists[r]` is the ordered load/unload list of AGV `r`.
//!
//! Each job also owns a virtual terminal operation performed at PW with zero
//! processing time. It follows the job's last real operation in the
//! processing order and rides the AGV of that last operation.

use std::fmt;

use rand::{seq::SliceRandom, Rng};

use crate::instance::{Instance, OpId};

/// Either a real operation or the virtual delivery of a job to PW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpRef {
    Real(OpId),
    Terminal(usize),
}

impl OpRef {
    pub fn job(self, instance: &Instance) -> usize {
        match self {
            OpRef::Real(o) => instance.operation(o).job,
            OpRef::Terminal(j) => j,
        }
    }
}

impl fmt::Display for OpRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpRef::Real(o) => write!(f, "O{o}"),
            OpRef::Terminal(j) => write!(f, "P{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Load,
    Unload,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TransportTask {
    pub op: OpRef,
    pub kind: TaskKind,
}

impl TransportTask {
    pub fn load(op: OpRef) -> Self {
        Self {
            op,
            kind: TaskKind::Load,
        }
    }

    pub fn unload(op: OpRef) -> Self {
        Self {
            op,
            kind: TaskKind::Unload,
        }
    }

    pub fn is_load(&self) -> bool {
        self.kind == TaskKind::Load
    }
}

impl fmt::Display for TransportTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.is_load() { '+' } else { '-' };
        write!(f, "{sign}{}", self.op)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub op_seq: Vec<usize>,
    pub machines: Vec<usize>,
    pub agvs: Vec<usize>,
    pub task_lists: Vec<Vec<TransportTask>>,
}

impl Chromosome {
    /// Assembles a chromosome and derives its task lists by the container rule.
    pub fn new(op_seq: Vec<usize>, machines: Vec<usize>, agvs: Vec<usize>, instance: &Instance) -> Self {
        let task_lists = build_default_task_lists(&op_seq, &machines, &agvs, instance);
        Self {
            op_seq,
            machines,
            agvs,
            task_lists,
        }
    }

    /// Uniform random op sequence, eligible machines and AGVs.
    pub fn random<R: Rng + ?Sized>(instance: &Instance, rng: &mut R) -> Self {
        let mut op_seq = job_repetition_sequence(instance);
        op_seq.shuffle(rng);
        let machines = instance
            .operations()
            .iter()
            .map(|op| op.eligible.choose(rng).expect("eligible is nonempty").0)
            .collect();
        let agvs = (0..instance.total_operations())
            .map(|_| rng.gen_range(0..instance.num_agvs()))
            .collect();
        Self::new(op_seq, machines, agvs, instance)
    }

    pub fn rebuild_task_lists(&mut self, instance: &Instance) {
        self.task_lists = build_default_task_lists(&self.op_seq, &self.machines, &self.agvs, instance);
    }

    /// Real operations in processing order.
    pub fn operation_order(&self, instance: &Instance) -> Vec<OpId> {
        operation_order(&self.op_seq, instance)
    }

    /// Real and terminal operations in processing order.
    pub fn processing_order(&self, instance: &Instance) -> Vec<OpRef> {
        processing_order(&self.op_seq, instance)
    }

    /// Whether `op` needs a load/unload pair.
    pub fn needs_transport(&self, op: OpRef, instance: &Instance) -> bool {
        needs_transport(op, &self.machines, instance)
    }

    /// AGV carrying `op`; terminal deliveries use the AGV of the job's last operation.
    pub fn agv_of(&self, op: OpRef, instance: &Instance) -> usize {
        agv_of(op, &self.agvs, instance)
    }

    /// Checks the structural invariants of the encoding.
    pub fn validate(&self, instance: &Instance) -> Result<(), String> {
        let n = instance.total_operations();
        if self.op_seq.len() != n || self.machines.len() != n || self.agvs.len() != n {
            return Err("layer lengths differ from the operation count".into());
        }
        let mut counts = vec![0usize; instance.num_jobs()];
        for &j in &self.op_seq {
            if j >= instance.num_jobs() {
                return Err(format!("job id {j} out of range"));
            }
            counts[j] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            if c != instance.job_len(j) {
                return Err(format!("job {j} appears {c} times, expected {}", instance.job_len(j)));
            }
        }
        for (o, &m) in self.machines.iter().enumerate() {
            if !instance.operation(o).is_eligible(m) {
                return Err(format!("operation {o} assigned to ineligible machine {m}"));
            }
        }
        if let Some(o) = self.agvs.iter().position(|&r| r >= instance.num_agvs()) {
            return Err(format!("operation {o} assigned to unknown AGV"));
        }
        if self.task_lists.len() != instance.num_agvs() {
            return Err("one task list per AGV expected".into());
        }
        let order = self.processing_order(instance);
        let mut rank = std::collections::HashMap::new();
        for (pos, op) in order.iter().enumerate() {
            rank.insert(*op, pos);
        }
        let mut seen = std::collections::HashMap::new();
        for (r, list) in self.task_lists.iter().enumerate() {
            let mut level = 0usize;
            let mut last_load = None;
            let mut last_unload = None;
            for task in list {
                let pos = *rank.get(&task.op).ok_or("task for unknown operation")?;
                if self.agv_of(task.op, instance) != r || !self.needs_transport(task.op, instance) {
                    return Err(format!("task {task} does not belong on AGV {r}"));
                }
                let entry = seen.entry(task.op).or_insert((0, 0));
                if task.is_load() {
                    entry.0 += 1;
                    level += 1;
                    if level > instance.agv_capacity() {
                        return Err(format!("AGV {r} exceeds capacity at {task}"));
                    }
                    if last_load.is_some_and(|p| p > pos) {
                        return Err(format!("AGV {r} loads out of processing order at {task}"));
                    }
                    last_load = Some(pos);
                } else {
                    if entry.0 != 1 {
                        return Err(format!("{task} precedes its load"));
                    }
                    entry.1 += 1;
                    level = level
                        .checked_sub(1)
                        .ok_or_else(|| format!("AGV {r} unloads from an empty container"))?;
                    if last_unload.is_some_and(|p| p > pos) {
                        return Err(format!("AGV {r} unloads out of processing order at {task}"));
                    }
                    last_unload = Some(pos);
                }
            }
            if level != 0 {
                return Err(format!("AGV {r} ends loaded"));
            }
        }
        for op in order {
            let expected = if self.needs_transport(op, instance) { (1, 1) } else { (0, 0) };
            if seen.get(&op).copied().unwrap_or((0, 0)) != expected {
                return Err(format!("{op} does not have exactly the expected transport tasks"));
            }
        }
        Ok(())
    }
}

/// `[0, 0, .., 1, 1, ..]`: each job id repeated once per operation.
pub fn job_repetition_sequence(instance: &Instance) -> Vec<usize> {
    instance
        .jobs()
        .iter()
        .enumerate()
        .flat_map(|(i, ops)| std::iter::repeat_n(i, ops.len()))
        .collect()
}

pub(crate) fn operation_order(op_seq: &[usize], instance: &Instance) -> Vec<OpId> {
    let mut next = vec![0usize; instance.num_jobs()];
    op_seq
        .iter()
        .map(|&j| {
            let o = instance.op_id(j, next[j]);
            next[j] += 1;
            o
        })
        .collect()
}

/// Processing order over a (possibly partial) job-repetition prefix: each
/// job's terminal operation is placed right after its last real operation
/// once all of them are present.
pub(crate) fn processing_order(op_seq: &[usize], instance: &Instance) -> Vec<OpRef> {
    let mut next = vec![0usize; instance.num_jobs()];
    let mut order = Vec::with_capacity(op_seq.len() + instance.num_jobs());
    for &j in op_seq {
        order.push(OpRef::Real(instance.op_id(j, next[j])));
        next[j] += 1;
        if next[j] == instance.job_len(j) {
            order.push(OpRef::Terminal(j));
        }
    }
    order
}

pub(crate) fn needs_transport(op: OpRef, machines: &[usize], instance: &Instance) -> bool {
    match op {
        OpRef::Terminal(_) => true,
        OpRef::Real(o) => {
            instance.operation(o).stage == 0 || machines[o] != machines[o - 1]
        }
    }
}

pub(crate) fn agv_of(op: OpRef, agvs: &[usize], instance: &Instance) -> usize {
    match op {
        OpRef::Real(o) => agvs[o],
        OpRef::Terminal(j) => agvs[instance.op_id(j, instance.job_len(j) - 1)],
    }
}

/// Orders every AGV's transport tasks by the container rule: operations are
/// taken in processing order, loads are issued while the container has room
/// and a full container is emptied first-in first-out. Operations that stay
/// on the machine of their predecessor contribute no tasks.
pub fn build_default_task_lists(
    op_seq: &[usize],
    machines: &[usize],
    agvs: &[usize],
    instance: &Instance,
) -> Vec<Vec<TransportTask>> {
    let mut per_agv: Vec<Vec<OpRef>> = vec![Vec::new(); instance.num_agvs()];
    for op in processing_order(op_seq, instance) {
        if needs_transport(op, machines, instance) {
            per_agv[agv_of(op, agvs, instance)].push(op);
        }
    }
    per_agv
        .into_iter()
        .map(|ops| container_rule(&ops, instance.agv_capacity()))
        .collect()
}

pub(crate) fn container_rule(ops: &[OpRef], capacity: usize) -> Vec<TransportTask> {
    let mut list = Vec::with_capacity(ops.len() * 2);
    let mut container = std::collections::VecDeque::with_capacity(capacity);
    for &op in ops {
        if container.len() == capacity {
            list.extend(container.drain(..).map(TransportTask::unload));
        }
        list.push(TransportTask::load(op));
        container.push_back(op);
    }
    list.extend(container.drain(..).map(TransportTask::unload));
    list
}

/// Flat integer vector: per-slot job ids, then machine genes, then AGV genes.
pub fn solution_vector(chromosome: &Chromosome) -> Vec<i32> {
    chromosome
        .op_seq
        .iter()
        .chain(&chromosome.machines)
        .chain(&chromosome.agvs)
        .map(|&g| g as i32)
        .collect()
}

pub fn euclidean_distance(a: &[i32], b: &[i32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Replaces every ineligible machine gene by a uniformly drawn eligible one.
/// Returns whether anything changed. Task lists are not rebuilt.
pub fn repair_machine_layer<R: Rng + ?Sized>(
    chromosome: &mut Chromosome,
    instance: &Instance,
    rng: &mut R,
) -> bool {
    let mut changed = false;
    for (o, m) in chromosome.machines.iter_mut().enumerate() {
        let op = instance.operation(o);
        if !op.is_eligible(*m) {
            *m = op.eligible.choose(rng).expect("eligible is nonempty").0;
            changed = true;
        }
    }
    changed
}
