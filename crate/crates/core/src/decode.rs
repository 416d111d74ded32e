//! Turns a chromosome into a timed schedule.
//!
//! Operations are processed in `op_seq` order on their machines. Every AGV
//! walks its task list: a load starts when the AGV finishes its previous
//! task and takes the travel time to the job; an unload additionally waits
//! for the job's previous operation and takes the travel time from the job's
//! location to the target machine (or PW). Processing starts once the job is
//! unloaded and the machine has finished its previous operation.

use thiserror::Error;

use crate::chromosome::{
    agv_of, needs_transport, processing_order, Chromosome, OpRef, TaskKind, TransportTask,
};
use crate::instance::{Instance, Location, Time, MW};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub task: TransportTask,
    pub from: Location,
    pub to: Location,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    /// Per real operation; zero for operations absent from a partial decode.
    pub op_start: Vec<Time>,
    pub op_end: Vec<Time>,
    /// Delivery time at PW per job, `None` for jobs not finished in a partial decode.
    pub delivery_end: Vec<Option<Time>>,
    pub agv_traces: Vec<Vec<TraceEntry>>,
    pub makespan: Time,
}

impl Schedule {
    /// Start and end of the transport tasks of `op`, if it has any.
    pub fn transport_of(&self, op: OpRef) -> Option<(&TraceEntry, &TraceEntry)> {
        for trace in &self.agv_traces {
            let load = trace.iter().find(|e| e.task == TransportTask::load(op));
            let unload = trace.iter().find(|e| e.task == TransportTask::unload(op));
            if let (Some(l), Some(u)) = (load, unload) {
                return Some((l, u));
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("AGV {agv} exceeds its capacity at {task}")]
    CapacityExceeded { agv: usize, task: TransportTask },
    #[error("AGV {agv} unloads {task} before loading it")]
    UnloadBeforeLoad { agv: usize, task: TransportTask },
    #[error("AGV {agv} still carries jobs after its last task")]
    UnfinishedLoad { agv: usize },
    #[error("task lists cannot be executed: circular waiting or missing transport tasks")]
    Deadlock,
}

/// Decodes a full chromosome.
pub fn decode(chromosome: &Chromosome, instance: &Instance) -> Result<Schedule, DecodeError> {
    decode_parts(
        &chromosome.op_seq,
        &chromosome.machines,
        &chromosome.agvs,
        &chromosome.task_lists,
        instance,
    )
}

/// Makespan of a chromosome.
pub fn makespan(chromosome: &Chromosome, instance: &Instance) -> Result<Time, DecodeError> {
    decode(chromosome, instance).map(|s| s.makespan)
}

/// Decodes a possibly partial job-repetition prefix `op_seq`. Only the
/// operations it contains (and terminals of completed jobs) are scheduled.
pub fn decode_parts(
    op_seq: &[usize],
    machines: &[usize],
    agvs: &[usize],
    task_lists: &[Vec<TransportTask>],
    instance: &Instance,
) -> Result<Schedule, DecodeError> {
    let n = instance.total_operations();
    let order = processing_order(op_seq, instance);
    let real_order: Vec<usize> = order
        .iter()
        .filter_map(|op| match op {
            OpRef::Real(o) => Some(*o),
            OpRef::Terminal(_) => None,
        })
        .collect();

    let pickup = |op: OpRef| -> Location {
        match op {
            OpRef::Real(o) if instance.operation(o).stage == 0 => MW,
            OpRef::Real(o) => instance.machine_location(machines[o - 1]),
            OpRef::Terminal(j) => {
                instance.machine_location(machines[instance.op_id(j, instance.job_len(j) - 1)])
            }
        }
    };
    let target = |op: OpRef| -> Location {
        match op {
            OpRef::Real(o) => instance.machine_location(machines[o]),
            OpRef::Terminal(_) => instance.pw(),
        }
    };

    let mut op_end: Vec<Option<Time>> = vec![None; n];
    let mut op_start = vec![0; n];
    let mut unload_end: Vec<Option<Time>> = vec![None; n];
    let mut delivery_end: Vec<Option<Time>> = vec![None; instance.num_jobs()];

    // completion of the operation preceding `op` within its job
    let predecessor_done = |op: OpRef, op_end: &[Option<Time>]| -> Option<Time> {
        match op {
            OpRef::Real(o) if instance.operation(o).stage == 0 => Some(0),
            OpRef::Real(o) => op_end[o - 1],
            OpRef::Terminal(j) => op_end[instance.op_id(j, instance.job_len(j) - 1)],
        }
    };

    let num_agvs = instance.num_agvs();
    let mut ptr = vec![0usize; num_agvs];
    let mut agv_time = vec![0 as Time; num_agvs];
    let mut agv_loc = vec![MW; num_agvs];
    let mut onboard = vec![0usize; num_agvs];
    let mut loaded: Vec<Vec<OpRef>> = vec![Vec::new(); num_agvs];
    let mut traces: Vec<Vec<TraceEntry>> = task_lists
        .iter()
        .map(|l| Vec::with_capacity(l.len()))
        .collect();
    let mut machine_free = vec![0 as Time; instance.num_machines()];
    let mut next_proc = 0usize;

    loop {
        let mut progress = false;
        for r in 0..num_agvs {
            let list = &task_lists[r];
            while ptr[r] < list.len() {
                let task = list[ptr[r]];
                let (start, from, to) = match task.kind {
                    TaskKind::Load => {
                        onboard[r] += 1;
                        if onboard[r] > instance.agv_capacity() {
                            return Err(DecodeError::CapacityExceeded { agv: r, task });
                        }
                        loaded[r].push(task.op);
                        (agv_time[r], agv_loc[r], pickup(task.op))
                    }
                    TaskKind::Unload => {
                        let Some(slot) = loaded[r].iter().position(|&o| o == task.op) else {
                            return Err(DecodeError::UnloadBeforeLoad { agv: r, task });
                        };
                        let Some(ready) = predecessor_done(task.op, &op_end) else {
                            break;
                        };
                        loaded[r].swap_remove(slot);
                        onboard[r] -= 1;
                        (agv_time[r].max(ready), pickup(task.op), target(task.op))
                    }
                };
                let end = start + instance.transport_time(from, to);
                if task.kind == TaskKind::Unload {
                    match task.op {
                        OpRef::Real(o) => unload_end[o] = Some(end),
                        OpRef::Terminal(j) => delivery_end[j] = Some(end),
                    }
                }
                traces[r].push(TraceEntry {
                    task,
                    from,
                    to,
                    start,
                    end,
                });
                agv_time[r] = end;
                agv_loc[r] = to;
                ptr[r] += 1;
                progress = true;
            }
        }

        while next_proc < real_order.len() {
            let o = real_order[next_proc];
            let ready = if needs_transport(OpRef::Real(o), machines, instance) {
                unload_end[o]
            } else {
                predecessor_done(OpRef::Real(o), &op_end)
            };
            let Some(ready) = ready else { break };
            let m = machines[o];
            let pt = instance
                .operation(o)
                .processing_time(m)
                .expect("machine genes must be eligible");
            let start = ready.max(machine_free[m]);
            op_start[o] = start;
            op_end[o] = Some(start + pt);
            machine_free[m] = start + pt;
            next_proc += 1;
            progress = true;
        }

        let agvs_done = (0..num_agvs).all(|r| ptr[r] == task_lists[r].len());
        if agvs_done && next_proc == real_order.len() {
            break;
        }
        if !progress {
            return Err(DecodeError::Deadlock);
        }
    }

    if let Some(agv) = onboard.iter().position(|&c| c != 0) {
        return Err(DecodeError::UnfinishedLoad { agv });
    }
    // every terminal in the order must have been delivered
    for op in &order {
        if let OpRef::Terminal(j) = op {
            if delivery_end[*j].is_none() {
                return Err(DecodeError::Deadlock);
            }
        }
    }
    debug_assert!(order
        .iter()
        .all(|&op| !needs_transport(op, machines, instance)
            || task_lists[agv_of(op, agvs, instance)].contains(&TransportTask::load(op))));

    let makespan = op_end
        .iter()
        .flatten()
        .chain(delivery_end.iter().flatten())
        .copied()
        .max()
        .unwrap_or(0);
    Ok(Schedule {
        op_start,
        op_end: op_end.into_iter().map(|e| e.unwrap_or(0)).collect(),
        delivery_end,
        agv_traces: traces,
        makespan,
    })
}
