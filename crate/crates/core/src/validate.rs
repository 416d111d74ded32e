//! Feasibility checks on a realized schedule.
//!
//! The checks mirror the constraint groups of the mixed-integer model:
//! makespan bound, load/unload pairing, AGV capacity over the trace,
//! one task at a time per AGV, the links between transport and processing,
//! machine eligibility and machine exclusivity. Nothing here reuses the
//! decoder's timing logic.

use std::collections::HashMap;
use std::fmt;

use crate::chromosome::{Chromosome, OpRef, TaskKind, TransportTask};
use crate::decode::Schedule;
use crate::instance::{Instance, Time, MW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    Makespan,
    Pairing,
    CapacityWindow,
    AgvOverlap,
    Link,
    MachineOverlap,
    Assignment,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Makespan => "makespan",
            ViolationKind::Pairing => "pairing",
            ViolationKind::CapacityWindow => "capacity-window",
            ViolationKind::AgvOverlap => "agv-overlap",
            ViolationKind::Link => "link",
            ViolationKind::MachineOverlap => "machine-overlap",
            ViolationKind::Assignment => "assignment",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Offending operations, tasks, AGVs or machines.
    pub ids: Vec<String>,
    pub times: Vec<Time>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let times: Vec<String> = self.times.iter().map(|t| t.to_string()).collect();
        write!(
            f,
            "{} ids={} times={} {}",
            self.kind,
            self.ids.join(","),
            times.join(","),
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }

    fn push(&mut self, kind: ViolationKind, ids: Vec<String>, times: Vec<Time>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            ids,
            times,
            detail: detail.into(),
        });
    }
}

/// One violation per line; an empty report prints `feasible`.
impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "feasible");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

struct Realized {
    agv: usize,
    start: Time,
    end: Time,
}

pub fn check_schedule(schedule: &Schedule, chromosome: &Chromosome, instance: &Instance) -> ViolationReport {
    use ViolationKind::*;
    let mut report = ViolationReport::default();
    let n = instance.total_operations();

    // (11) eligibility and AGV range
    for o in 0..n {
        let m = chromosome.machines[o];
        if !instance.operation(o).is_eligible(m) {
            report.push(Assignment, vec![format!("O{o}"), format!("M{}", m + 1)], vec![], "ineligible machine");
        }
        if chromosome.agvs[o] >= instance.num_agvs() {
            report.push(Assignment, vec![format!("O{o}")], vec![], "unknown AGV");
        }
    }

    // expected transport needs, derived from the machine layer
    let mut expected: Vec<(OpRef, usize)> = Vec::new();
    for (j, job) in instance.jobs().iter().enumerate() {
        let first = instance.job_start(j);
        for s in 0..job.len() {
            let o = first + s;
            if s == 0 || chromosome.machines[o] != chromosome.machines[o - 1] {
                expected.push((OpRef::Real(o), chromosome.agvs[o]));
            }
        }
        expected.push((OpRef::Terminal(j), chromosome.agvs[first + job.len() - 1]));
    }

    // collect realized tasks
    let mut loads: HashMap<OpRef, Vec<Realized>> = HashMap::new();
    let mut unloads: HashMap<OpRef, Vec<Realized>> = HashMap::new();
    for (r, trace) in schedule.agv_traces.iter().enumerate() {
        for e in trace {
            let map = if e.task.kind == TaskKind::Load { &mut loads } else { &mut unloads };
            map.entry(e.task.op).or_default().push(Realized {
                agv: r,
                start: e.start,
                end: e.end,
            });
        }
    }

    // (2) pairing
    let expected_ops: HashMap<OpRef, usize> = expected.iter().copied().collect();
    for &(op, agv) in &expected {
        let l = loads.get(&op).map(|v| v.as_slice()).unwrap_or(&[]);
        let u = unloads.get(&op).map(|v| v.as_slice()).unwrap_or(&[]);
        if l.len() != 1 || u.len() != 1 {
            report.push(
                Pairing,
                vec![op.to_string()],
                vec![],
                format!("{} loads and {} unloads, expected one each", l.len(), u.len()),
            );
        } else if l[0].agv != u[0].agv || l[0].agv != agv {
            report.push(
                Pairing,
                vec![op.to_string(), format!("R{}", l[0].agv), format!("R{}", u[0].agv)],
                vec![],
                format!("tasks not both on assigned AGV R{agv}"),
            );
        }
    }
    for op in loads.keys().chain(unloads.keys()) {
        if !expected_ops.contains_key(op) {
            report.push(Pairing, vec![op.to_string()], vec![], "transport task for an operation that needs none");
        }
    }

    // (3) onboard count within [0, A]; (4)-(7) one task at a time
    for (r, trace) in schedule.agv_traces.iter().enumerate() {
        let mut onboard: i64 = 0;
        let mut carried: Vec<OpRef> = Vec::new();
        let mut location = MW;
        let mut prev_end: Time = 0;
        for (k, e) in trace.iter().enumerate() {
            if e.end < e.start {
                report.push(AgvOverlap, vec![format!("R{r}"), e.task.to_string()], vec![e.start, e.end], "task ends before it starts");
            }
            if k > 0 && e.start < prev_end {
                report.push(
                    AgvOverlap,
                    vec![format!("R{r}"), trace[k - 1].task.to_string(), e.task.to_string()],
                    vec![prev_end, e.start],
                    "task starts before the previous one ends",
                );
            }
            prev_end = prev_end.max(e.end);
            match e.task.kind {
                TaskKind::Load => {
                    onboard += 1;
                    carried.push(e.task.op);
                }
                TaskKind::Unload => {
                    onboard -= 1;
                    if let Some(p) = carried.iter().position(|&o| o == e.task.op) {
                        carried.remove(p);
                    } else {
                        report.push(CapacityWindow, vec![format!("R{r}"), e.task.to_string()], vec![e.start], "unload of a job not on board");
                    }
                }
            }
            if onboard < 0 || onboard > instance.agv_capacity() as i64 {
                report.push(
                    CapacityWindow,
                    vec![format!("R{r}"), e.task.to_string()],
                    vec![e.start],
                    format!("onboard count {onboard} outside [0, {}]", instance.agv_capacity()),
                );
            }
            // travel consistency
            let (pickup, target) = endpoints(e.task, chromosome, instance);
            let (from, to) = match e.task.kind {
                TaskKind::Load => (location, pickup),
                TaskKind::Unload => (pickup, target),
            };
            if e.from != from || e.to != to || e.end.checked_sub(e.start) != Some(instance.transport_time(from, to)) {
                report.push(
                    Link,
                    vec![format!("R{r}"), e.task.to_string()],
                    vec![e.start, e.end],
                    format!(
                        "travel {}->{} takes {}",
                        instance.location_name(from),
                        instance.location_name(to),
                        instance.transport_time(from, to)
                    ),
                );
            }
            location = to;
        }
        if onboard != 0 {
            report.push(CapacityWindow, vec![format!("R{r}")], vec![], "AGV ends with jobs on board");
        }
    }

    // (8)-(10) transport/processing links; processing durations
    let completion = |o: usize| schedule.op_start[o] + proc_time(chromosome, instance, o);
    for (j, job) in instance.jobs().iter().enumerate() {
        let first = instance.job_start(j);
        for s in 0..=job.len() {
            let op = if s < job.len() { OpRef::Real(first + s) } else { OpRef::Terminal(j) };
            let prev_done = if s == 0 { 0 } else { completion(first + s - 1) };
            let transported = expected_ops.contains_key(&op);
            let unload = unloads.get(&op).and_then(|v| v.first());
            if let Some(u) = unload.filter(|_| transported) {
                if u.start < prev_done {
                    report.push(Link, vec![op.to_string()], vec![u.start, prev_done], "unload starts before the previous operation completes");
                }
                if let Some(l) = loads.get(&op).and_then(|v| v.first()) {
                    if l.end > u.start {
                        report.push(Link, vec![op.to_string()], vec![l.end, u.start], "unload starts before the load completes");
                    }
                }
            }
            match op {
                OpRef::Real(o) => {
                    let start = schedule.op_start[o];
                    let ready = match unload.filter(|_| transported) {
                        Some(u) => u.end,
                        None if transported => continue,
                        None => prev_done,
                    };
                    if start < ready {
                        report.push(Link, vec![op.to_string()], vec![start, ready], "processing starts before the job is available");
                    }
                    if schedule.op_end[o] != completion(o) {
                        report.push(Link, vec![op.to_string()], vec![start, schedule.op_end[o]], "processing duration differs from the processing time");
                    }
                }
                OpRef::Terminal(_) => {
                    if let (Some(u), Some(delivered)) = (unload, schedule.delivery_end[j]) {
                        if u.end != delivered {
                            report.push(Link, vec![op.to_string()], vec![u.end, delivered], "delivery time differs from the unload end");
                        }
                    }
                }
            }
        }
    }

    // (12)-(13) machine exclusivity
    let mut per_machine: Vec<Vec<(Time, Time, usize)>> = vec![Vec::new(); instance.num_machines()];
    for o in 0..n {
        if let Some(list) = per_machine.get_mut(chromosome.machines[o]) {
            list.push((schedule.op_start[o], completion(o), o));
        }
    }
    for (m, list) in per_machine.iter_mut().enumerate() {
        list.sort_unstable();
        for w in list.windows(2) {
            if w[1].0 < w[0].1 {
                report.push(
                    MachineOverlap,
                    vec![format!("M{}", m + 1), format!("O{}", w[0].2), format!("O{}", w[1].2)],
                    vec![w[0].1, w[1].0],
                    "operations overlap on one machine",
                );
            }
        }
    }

    // (1) makespan bounds every completion
    let latest = (0..n)
        .map(completion)
        .chain(schedule.agv_traces.iter().flatten().map(|e| e.end))
        .max()
        .unwrap_or(0);
    if schedule.makespan < latest {
        report.push(Makespan, vec![], vec![schedule.makespan, latest], "makespan below a completion time");
    }
    report
}

fn proc_time(chromosome: &Chromosome, instance: &Instance, o: usize) -> Time {
    instance
        .operation(o)
        .processing_time(chromosome.machines[o])
        .unwrap_or(0)
}

fn endpoints(task: TransportTask, chromosome: &Chromosome, instance: &Instance) -> (usize, usize) {
    let m = &chromosome.machines;
    match task.op {
        OpRef::Real(o) => {
            let op = instance.operation(o);
            let pickup = if op.stage == 0 { MW } else { instance.machine_location(m[o - 1]) };
            (pickup, instance.machine_location(m[o]))
        }
        OpRef::Terminal(j) => {
            let last = instance.job_start(j) + instance.job_len(j) - 1;
            (instance.machine_location(m[last]), instance.pw())
        }
    }
}
