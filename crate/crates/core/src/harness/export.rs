//! Gantt and convergence files.
//!
//! Gantt files hold one record per line as `key=value` fields:
//!
//! ```text
//! makespan=14
//! machine=M1 op=0 job=0 stage=0 start=2 end=5
//! agv=0 kind=load op=O0 job=0 from=MW to=MW start=0 end=0 onboard=
//! agv=0 kind=unload op=O0 job=0 from=MW to=M1 start=0 end=1 onboard=0
//! ```
//!
//! `onboard` lists the jobs carried while the AGV performs the task.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::chromosome::{Chromosome, TaskKind};
use crate::decode::Schedule;
use crate::evolution::HistoryPoint;
use crate::instance::{Instance, Time};
use crate::validate::check_schedule;

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineRecord {
    pub machine: String,
    pub op: usize,
    pub job: usize,
    pub stage: usize,
    pub start: Time,
    pub end: Time,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgvRecord {
    pub agv: usize,
    pub kind: TaskKind,
    /// `O<id>` for operations, `P<job>` for deliveries.
    pub op: String,
    pub job: usize,
    pub from: String,
    pub to: String,
    pub start: Time,
    pub end: Time,
    pub onboard: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Gantt {
    pub makespan: Time,
    pub machines: Vec<MachineRecord>,
    pub agvs: Vec<AgvRecord>,
}

impl Gantt {
    /// Builds the records of a schedule, refusing it if it has violations.
    pub fn from_schedule(schedule: &Schedule, chromosome: &Chromosome, instance: &Instance) -> Result<Self, HarnessError> {
        let report = check_schedule(schedule, chromosome, instance);
        if !report.is_empty() {
            return Err(HarnessError::Infeasible(report.to_string()));
        }
        let mut machines: Vec<MachineRecord> = (0..instance.total_operations())
            .map(|o| {
                let op = instance.operation(o);
                MachineRecord {
                    machine: instance.location_name(instance.machine_location(chromosome.machines[o])),
                    op: o,
                    job: op.job,
                    stage: op.stage,
                    start: schedule.op_start[o],
                    end: schedule.op_end[o],
                }
            })
            .collect();
        machines.sort_by(|a, b| a.machine.cmp(&b.machine).then(a.start.cmp(&b.start)));
        let mut agvs = Vec::new();
        for (r, trace) in schedule.agv_traces.iter().enumerate() {
            let mut onboard: Vec<usize> = Vec::new();
            for e in trace {
                let job = e.task.op.job(instance);
                let mut carried = onboard.clone();
                carried.sort_unstable();
                agvs.push(AgvRecord {
                    agv: r,
                    kind: e.task.kind,
                    op: e.task.op.to_string(),
                    job,
                    from: instance.location_name(e.from),
                    to: instance.location_name(e.to),
                    start: e.start,
                    end: e.end,
                    onboard: carried,
                });
                match e.task.kind {
                    TaskKind::Load => onboard.push(job),
                    TaskKind::Unload => {
                        if let Some(p) = onboard.iter().position(|&j| j == job) {
                            onboard.remove(p);
                        }
                    }
                }
            }
        }
        Ok(Self {
            makespan: schedule.makespan,
            machines,
            agvs,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("makespan={}\n", self.makespan);
        for m in &self.machines {
            let _ = writeln!(
                out,
                "machine={} op={} job={} stage={} start={} end={}",
                m.machine, m.op, m.job, m.stage, m.start, m.end
            );
        }
        for a in &self.agvs {
            let onboard: Vec<String> = a.onboard.iter().map(|j| j.to_string()).collect();
            let _ = writeln!(
                out,
                "agv={} kind={} op={} job={} from={} to={} start={} end={} onboard={}",
                a.agv,
                match a.kind {
                    TaskKind::Load => "load",
                    TaskKind::Unload => "unload",
                },
                a.op,
                a.job,
                a.from,
                a.to,
                a.start,
                a.end,
                onboard.join(",")
            );
        }
        out
    }
}

fn fields(line: &str, lineno: usize) -> Result<HashMap<&str, &str>, HarnessError> {
    line.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| HarnessError::Format(format!("line {lineno}: expected key=value, got {tok:?}")))
        })
        .collect()
}

fn get<T: std::str::FromStr>(f: &HashMap<&str, &str>, key: &str, lineno: usize) -> Result<T, HarnessError> {
    f.get(key)
        .ok_or_else(|| HarnessError::Format(format!("line {lineno}: missing {key}")))?
        .parse()
        .map_err(|_| HarnessError::Format(format!("line {lineno}: bad value for {key}")))
}

pub fn parse_gantt(text: &str) -> Result<Gantt, HarnessError> {
    let mut g = Gantt::default();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = fields(line, lineno)?;
        if f.contains_key("makespan") {
            g.makespan = get(&f, "makespan", lineno)?;
        } else if f.contains_key("machine") {
            g.machines.push(MachineRecord {
                machine: get(&f, "machine", lineno)?,
                op: get(&f, "op", lineno)?,
                job: get(&f, "job", lineno)?,
                stage: get(&f, "stage", lineno)?,
                start: get(&f, "start", lineno)?,
                end: get(&f, "end", lineno)?,
            });
        } else if f.contains_key("agv") {
            let kind = match f.get("kind").copied() {
                Some("load") => TaskKind::Load,
                Some("unload") => TaskKind::Unload,
                _ => return Err(HarnessError::Format(format!("line {lineno}: bad kind"))),
            };
            let onboard = f
                .get("onboard")
                .copied()
                .unwrap_or("")
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse())
                .collect::<Result<Vec<usize>, _>>()
                .map_err(|_| HarnessError::Format(format!("line {lineno}: bad onboard list")))?;
            g.agvs.push(AgvRecord {
                agv: get(&f, "agv", lineno)?,
                kind,
                op: get(&f, "op", lineno)?,
                job: get(&f, "job", lineno)?,
                from: get(&f, "from", lineno)?,
                to: get(&f, "to", lineno)?,
                start: get(&f, "start", lineno)?,
                end: get(&f, "end", lineno)?,
                onboard,
            });
        } else {
            return Err(HarnessError::Format(format!("line {lineno}: unknown record")));
        }
    }
    Ok(g)
}

pub fn export_gantt(
    schedule: &Schedule,
    chromosome: &Chromosome,
    instance: &Instance,
    path: &Path,
) -> Result<(), HarnessError> {
    let g = Gantt::from_schedule(schedule, chromosome, instance)?;
    std::fs::write(path, g.to_text())?;
    Ok(())
}

pub fn convergence_csv(history: &[HistoryPoint]) -> String {
    let mut out = String::from("elapsed_ms,best_makespan\n");
    for h in history {
        let _ = writeln!(out, "{},{}", h.elapsed_ms, h.best);
    }
    out
}

pub fn export_convergence(history: &[HistoryPoint], path: &Path) -> Result<(), HarnessError> {
    if history.is_empty() {
        return Err(HarnessError::Format("empty convergence history".into()));
    }
    std::fs::write(path, convergence_csv(history))?;
    Ok(())
}

/// `(elapsed_ms, best_makespan)` rows of a convergence file.
pub fn read_convergence(path: &Path) -> Result<Vec<(f64, Time)>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let bad = || HarnessError::Format(format!("line {}: expected elapsed_ms,best_makespan", i + 1));
            let (a, b) = l.split_once(',').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Terminal deliveries are listed under `P<job>`.
pub fn is_delivery(record: &AgvRecord) -> bool {
    record.op.starts_with('P')
}
