//! Problem data for the flexible job shop with limited multi-load AGVs.
//!
//! Locations in the transport matrix are ordered `MW, M1..MK, PW`: index `0`
//! is the raw-material warehouse, machine `m` (0-based) sits at `m + 1` and
//! the product warehouse is `K + 1`.
//!
//! The text format:
//!
//! ```text
//! # comment
//! jobs=2 machines=2 agvs=1 capacity=2
//! job 1 ops=2
//! op 1: 1:5 2:7
//! op 2: 2:3
//! job 2 ops=1
//! op 1: 1:4
//! transport
//! 0 2 3 4
//! 2 0 1 2
//! 3 1 0 1
//! 4 2 1 0
//! ```
//!
//! Job, operation and machine numbers are 1-based in the file.

use std::fmt;

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Time unit used for processing and transport durations.
pub type Time = u32;

/// Global operation index, `0..total_operations()`, ordered job by job.
pub type OpId = usize;

/// Location index into the transport matrix.
pub type Location = usize;

/// Raw-material warehouse.
pub const MW: Location = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operation {
    pub job: usize,
    pub stage: usize,
    /// `(machine, processing time)` pairs, machine 0-based, sorted by machine.
    pub eligible: Vec<(usize, Time)>,
}

impl Operation {
    pub fn processing_time(&self, machine: usize) -> Option<Time> {
        self.eligible
            .iter()
            .find(|(m, _)| *m == machine)
            .map(|(_, pt)| *pt)
    }

    pub fn is_eligible(&self, machine: usize) -> bool {
        self.processing_time(machine).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    num_machines: usize,
    num_agvs: usize,
    agv_capacity: usize,
    jobs: Vec<Vec<Operation>>,
    transport: Vec<Vec<Time>>,
    // flattened views
    ops: Vec<Operation>,
    job_offset: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("instance has no jobs")]
    NoJobs,
    #[error("job {job} has no operations")]
    EmptyJob { job: usize },
    #[error("operation {stage} of job {job} has no eligible machine")]
    NoEligibleMachine { job: usize, stage: usize },
    #[error("operation {stage} of job {job} references machine {machine} outside 1..={max}")]
    UnknownMachine {
        job: usize,
        stage: usize,
        machine: usize,
        max: usize,
    },
    #[error("operation {stage} of job {job} has zero processing time")]
    ZeroProcessingTime { job: usize, stage: usize },
    #[error("transport matrix must be {expected}x{expected}")]
    TransportShape { expected: usize },
    #[error("transport time from {from} to itself is {value}, expected 0")]
    NonZeroDiagonal { from: usize, value: Time },
    #[error("at least one machine, one AGV and capacity >= 1 are required")]
    EmptyResources,
}

impl Instance {
    /// Builds an instance from per-job operation lists. Machines in `jobs`
    /// are 0-based; the transport matrix is `(K+2) x (K+2)`.
    pub fn new(
        num_machines: usize,
        num_agvs: usize,
        agv_capacity: usize,
        jobs: Vec<Vec<Operation>>,
        transport: Vec<Vec<Time>>,
    ) -> Result<Self, InstanceError> {
        if num_machines == 0 || num_agvs == 0 || agv_capacity == 0 {
            return Err(InstanceError::EmptyResources);
        }
        if jobs.is_empty() {
            return Err(InstanceError::NoJobs);
        }
        let mut jobs = jobs;
        for (i, job) in jobs.iter_mut().enumerate() {
            if job.is_empty() {
                return Err(InstanceError::EmptyJob { job: i });
            }
            for (j, op) in job.iter_mut().enumerate() {
                op.job = i;
                op.stage = j;
                if op.eligible.is_empty() {
                    return Err(InstanceError::NoEligibleMachine { job: i, stage: j });
                }
                for &(m, pt) in &op.eligible {
                    if m >= num_machines {
                        return Err(InstanceError::UnknownMachine {
                            job: i,
                            stage: j,
                            machine: m + 1,
                            max: num_machines,
                        });
                    }
                    if pt == 0 {
                        return Err(InstanceError::ZeroProcessingTime { job: i, stage: j });
                    }
                }
                op.eligible.sort_unstable();
                op.eligible.dedup_by_key(|(m, _)| *m);
            }
        }
        let size = num_machines + 2;
        if transport.len() != size || transport.iter().any(|row| row.len() != size) {
            return Err(InstanceError::TransportShape { expected: size });
        }
        for (x, row) in transport.iter().enumerate() {
            if row[x] != 0 {
                return Err(InstanceError::NonZeroDiagonal {
                    from: x,
                    value: row[x],
                });
            }
        }
        let mut job_offset = Vec::with_capacity(jobs.len() + 1);
        let mut ops = Vec::new();
        for job in &jobs {
            job_offset.push(ops.len());
            ops.extend(job.iter().cloned());
        }
        job_offset.push(ops.len());
        Ok(Self {
            num_machines,
            num_agvs,
            agv_capacity,
            jobs,
            transport,
            ops,
            job_offset,
        })
    }

    pub fn num_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn num_machines(&self) -> usize {
        self.num_machines
    }

    pub fn num_agvs(&self) -> usize {
        self.num_agvs
    }

    /// Maximum number of jobs one AGV carries at once.
    pub fn agv_capacity(&self) -> usize {
        self.agv_capacity
    }

    /// Total number of real operations over all jobs.
    pub fn total_operations(&self) -> usize {
        self.ops.len()
    }

    pub fn jobs(&self) -> &[Vec<Operation>] {
        &self.jobs
    }

    pub fn job_len(&self, job: usize) -> usize {
        self.jobs[job].len()
    }

    pub fn operation(&self, op: OpId) -> &Operation {
        &self.ops[op]
    }

    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op_id(&self, job: usize, stage: usize) -> OpId {
        self.job_offset[job] + stage
    }

    /// First operation id of `job`.
    pub fn job_start(&self, job: usize) -> OpId {
        self.job_offset[job]
    }

    pub fn machine_location(&self, machine: usize) -> Location {
        machine + 1
    }

    pub fn pw(&self) -> Location {
        self.num_machines + 1
    }

    pub fn num_locations(&self) -> usize {
        self.num_machines + 2
    }

    pub fn transport_time(&self, from: Location, to: Location) -> Time {
        self.transport[from][to]
    }

    pub fn transport_matrix(&self) -> &[Vec<Time>] {
        &self.transport
    }

    pub fn location_name(&self, loc: Location) -> String {
        if loc == MW {
            "MW".to_string()
        } else if loc == self.pw() {
            "PW".to_string()
        } else {
            format!("M{loc}")
        }
    }

    pub fn parse_location(&self, name: &str) -> Option<Location> {
        match name {
            "MW" => Some(MW),
            "PW" => Some(self.pw()),
            _ => name
                .strip_prefix('M')?
                .parse::<usize>()
                .ok()
                .filter(|m| (1..=self.num_machines).contains(m)),
        }
    }

    /// Serializes the instance in the text format accepted by [`parse_instance`].
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "jobs={} machines={} agvs={} capacity={}",
            self.num_jobs(),
            self.num_machines,
            self.num_agvs,
            self.agv_capacity
        )?;
        for (i, job) in self.jobs.iter().enumerate() {
            writeln!(f, "job {} ops={}", i + 1, job.len())?;
            for (j, op) in job.iter().enumerate() {
                write!(f, "op {}:", j + 1)?;
                for (m, pt) in &op.eligible {
                    write!(f, " {}:{}", m + 1, pt)?;
                }
                writeln!(f)?;
            }
        }
        writeln!(f, "transport")?;
        for row in &self.transport {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

fn key_value<'a>(token: &'a str, key: &str, line: usize) -> Result<&'a str, ParseError> {
    token
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| ParseError::new(line, format!("expected `{key}=<value>`, found `{token}`")))
}

fn number<T: std::str::FromStr>(text: &str, what: &str, line: usize) -> Result<T, ParseError> {
    text.parse::<T>()
        .map_err(|_| ParseError::new(line, format!("invalid {what} `{text}`")))
}

/// Parses an instance file. Every rejection carries the offending line number.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty instance file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(ParseError::new(
            hline,
            "malformed header, expected `jobs=<J> machines=<K> agvs=<R> capacity=<A>`",
        ));
    }
    let num_jobs: usize = number(key_value(fields[0], "jobs", hline)?, "job count", hline)?;
    let num_machines: usize = number(
        key_value(fields[1], "machines", hline)?,
        "machine count",
        hline,
    )?;
    let num_agvs: usize = number(key_value(fields[2], "agvs", hline)?, "AGV count", hline)?;
    let capacity: usize = number(key_value(fields[3], "capacity", hline)?, "capacity", hline)?;
    if num_jobs == 0 || num_machines == 0 || num_agvs == 0 || capacity == 0 {
        return Err(ParseError::new(hline, "all header counts must be >= 1"));
    }

    let mut jobs = Vec::with_capacity(num_jobs);
    for i in 0..num_jobs {
        let (line, text) = lines
            .next()
            .ok_or_else(|| ParseError::new(hline, format!("missing block for job {}", i + 1)))?;
        let parts: Vec<&str> = text.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "job" {
            return Err(ParseError::new(line, "expected `job <i> ops=<S_i>`"));
        }
        let id: usize = number(parts[1], "job number", line)?;
        if id != i + 1 {
            return Err(ParseError::new(
                line,
                format!("job numbers must be consecutive, expected {} found {id}", i + 1),
            ));
        }
        let num_ops: usize = number(key_value(parts[2], "ops", line)?, "operation count", line)?;
        if num_ops == 0 {
            return Err(ParseError::new(line, format!("job {id} has no operations")));
        }
        let mut ops = Vec::with_capacity(num_ops);
        for j in 0..num_ops {
            let (line, text) = lines.next().ok_or_else(|| {
                ParseError::new(line, format!("job {id}: missing operation {}", j + 1))
            })?;
            let (head, rest) = text
                .split_once(':')
                .ok_or_else(|| ParseError::new(line, "expected `op <j>: <m>:<pt> ...`"))?;
            let head: Vec<&str> = head.split_whitespace().collect();
            if head.len() != 2 || head[0] != "op" {
                return Err(ParseError::new(line, "expected `op <j>: <m>:<pt> ...`"));
            }
            let stage: usize = number(head[1], "operation number", line)?;
            if stage != j + 1 {
                return Err(ParseError::new(
                    line,
                    format!(
                        "operation numbers must be consecutive, expected {} found {stage}",
                        j + 1
                    ),
                ));
            }
            let mut eligible = Vec::new();
            for pair in rest.split_whitespace() {
                let (m, pt) = pair.split_once(':').ok_or_else(|| {
                    ParseError::new(line, format!("expected `<machine>:<time>`, found `{pair}`"))
                })?;
                let m: usize = number(m, "machine", line)?;
                if m == 0 || m > num_machines {
                    return Err(ParseError::new(
                        line,
                        format!("machine {m} outside 1..={num_machines}"),
                    ));
                }
                if pt.starts_with('-') {
                    return Err(ParseError::new(line, format!("negative time `{pt}`")));
                }
                let pt: Time = number(pt, "processing time", line)?;
                if pt == 0 {
                    return Err(ParseError::new(line, "processing time must be positive"));
                }
                if eligible.iter().any(|&(e, _)| e == m - 1) {
                    return Err(ParseError::new(line, format!("machine {m} listed twice")));
                }
                eligible.push((m - 1, pt));
            }
            if eligible.is_empty() {
                return Err(ParseError::new(
                    line,
                    format!("no eligible machine for operation {stage} of job {id}"),
                ));
            }
            ops.push(Operation {
                job: i,
                stage: j,
                eligible,
            });
        }
        jobs.push(ops);
    }

    let size = num_machines + 2;
    let (tline, text) = lines
        .next()
        .ok_or_else(|| ParseError::new(hline, "missing `transport` section"))?;
    if text != "transport" {
        return Err(ParseError::new(tline, "expected `transport`"));
    }
    let mut transport = Vec::with_capacity(size);
    for r in 0..size {
        let (line, text) = lines.next().ok_or_else(|| {
            ParseError::new(tline, format!("transport matrix has {r} rows, expected {size}"))
        })?;
        let mut row = Vec::with_capacity(size);
        for cell in text.split_whitespace() {
            if cell.starts_with('-') {
                return Err(ParseError::new(line, format!("negative time `{cell}`")));
            }
            row.push(number::<Time>(cell, "transport time", line)?);
        }
        if row.len() != size {
            return Err(ParseError::new(
                line,
                format!("ragged transport row: {} entries, expected {size}", row.len()),
            ));
        }
        if row[r] != 0 {
            return Err(ParseError::new(line, "transport diagonal must be 0"));
        }
        transport.push(row);
    }
    if let Some((line, _)) = lines.next() {
        return Err(ParseError::new(line, "unexpected trailing content"));
    }
    Instance::new(num_machines, num_agvs, capacity, jobs, transport)
        .map_err(|e| ParseError::new(hline, e.to_string()))
}

/// Knobs for the random instance generator.
#[derive(Debug, Clone)]
pub struct InstanceGenerator {
    pub num_jobs: usize,
    pub num_machines: usize,
    pub num_agvs: usize,
    pub capacity: usize,
    /// Inclusive range of operations per job.
    pub ops_per_job: (usize, usize),
    /// Inclusive range of processing times.
    pub processing_time: (Time, Time),
    /// Maximum eligible machines per operation.
    pub max_flexibility: usize,
    /// Side of the square grid on which locations are placed; transport
    /// times are Manhattan distances.
    pub grid: Time,
}

impl InstanceGenerator {
    pub fn new(num_jobs: usize, num_machines: usize, num_agvs: usize, capacity: usize) -> Self {
        Self {
            num_jobs,
            num_machines,
            num_agvs,
            capacity,
            ops_per_job: (2, 4),
            processing_time: (5, 20),
            max_flexibility: 3,
            grid: 6,
        }
    }

    pub fn ops_per_job(mut self, min: usize, max: usize) -> Self {
        self.ops_per_job = (min, max);
        self
    }

    pub fn processing_time(mut self, min: Time, max: Time) -> Self {
        self.processing_time = (min, max);
        self
    }

    pub fn max_flexibility(mut self, max: usize) -> Self {
        self.max_flexibility = max;
        self
    }

    pub fn grid(mut self, grid: Time) -> Self {
        self.grid = grid;
        self
    }

    /// # Panics
    ///
    /// Panics if any count is zero.
    pub fn generate(&self, seed: u64) -> Instance {
        assert!(
            self.num_jobs >= 1 && self.num_machines >= 1 && self.num_agvs >= 1 && self.capacity >= 1,
            "generator counts must be >= 1"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = self.ops_per_job;
        let (lo, hi) = (lo.max(1), hi.max(lo.max(1)));
        let (plo, phi) = self.processing_time;
        let (plo, phi) = (plo.max(1), phi.max(plo.max(1)));
        let flex = self.max_flexibility.clamp(1, self.num_machines);
        let machines: Vec<usize> = (0..self.num_machines).collect();

        let jobs = (0..self.num_jobs)
            .map(|i| {
                let n = rng.gen_range(lo..=hi);
                (0..n)
                    .map(|j| {
                        let k = rng.gen_range(1..=flex);
                        let eligible = machines
                            .choose_multiple(&mut rng, k)
                            .map(|&m| (m, rng.gen_range(plo..=phi)))
                            .collect();
                        Operation {
                            job: i,
                            stage: j,
                            eligible,
                        }
                    })
                    .collect()
            })
            .collect();

        let size = self.num_machines + 2;
        let points: Vec<(i64, i64)> = (0..size)
            .map(|_| {
                (
                    rng.gen_range(0..=self.grid) as i64,
                    rng.gen_range(0..=self.grid) as i64,
                )
            })
            .collect();
        let transport = (0..size)
            .map(|a| {
                (0..size)
                    .map(|b| {
                        let d = (points[a].0 - points[b].0).abs() + (points[a].1 - points[b].1).abs();
                        d as Time
                    })
                    .collect()
            })
            .collect();
        Instance::new(self.num_machines, self.num_agvs, self.capacity, jobs, transport)
            .expect("generator produces valid instances")
    }
}

/// Deterministic random instance with the default generator settings.
pub fn generate_random_instance(
    num_jobs: usize,
    num_machines: usize,
    num_agvs: usize,
    capacity: usize,
    seed: u64,
) -> Instance {
    InstanceGenerator::new(num_jobs, num_machines, num_agvs, capacity).generate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "jobs=1 machines=1 agvs=1 capacity=2\njob 1 ops=1\nop 1: 1:5\ntransport\n0 0 0\n0 0 0\n0 0 0\n";

    #[test]
    fn parses_minimal_file() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.num_jobs(), 1);
        assert_eq!(inst.agv_capacity(), 2);
        assert_eq!(inst.total_operations(), 1);
        assert_eq!(inst.operation(0).processing_time(0), Some(5));
        assert_eq!(inst.pw(), 2);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = format!("# header comment\n\n{}", MINIMAL.replace("op 1: 1:5", "op 1: 1:5 # only op"));
        assert_eq!(parse_instance(&text).unwrap(), parse_instance(MINIMAL).unwrap());
    }

    #[test]
    fn rejects_operation_without_machines() {
        let text = MINIMAL.replace("op 1: 1:5", "op 1:");
        let err = parse_instance(&text).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("no eligible machine"), "{err}");
    }

    #[test]
    fn rejects_ragged_matrix_and_negative_times() {
        let ragged = MINIMAL.replace("0 0 0\n0 0 0\n0 0 0", "0 0 0\n0 0\n0 0 0");
        let err = parse_instance(&ragged).unwrap_err();
        assert_eq!(err.line, 6);
        assert!(err.message.contains("ragged"));

        let negative = MINIMAL.replace("0 0 0\n0 0 0\n0 0 0", "0 -1 0\n0 0 0\n0 0 0");
        let err = parse_instance(&negative).unwrap_err();
        assert!(err.message.contains("negative"));

        let negative_pt = MINIMAL.replace("1:5", "1:-5");
        assert!(parse_instance(&negative_pt).unwrap_err().message.contains("negative"));
    }

    #[test]
    fn rejects_malformed_header() {
        let err = parse_instance("jobs=1 machines=1 agvs=1\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("header"));
        assert!(parse_instance("").is_err());
        assert!(parse_instance("jobs=x machines=1 agvs=1 capacity=1").is_err());
    }

    #[test]
    fn rejects_nonzero_diagonal_and_missing_rows() {
        let diag = MINIMAL.replace("0 0 0\n0 0 0\n0 0 0", "0 0 0\n0 4 0\n0 0 0");
        assert!(parse_instance(&diag).unwrap_err().message.contains("diagonal"));
        let short = MINIMAL.replace("0 0 0\n0 0 0\n0 0 0\n", "0 0 0\n");
        assert!(parse_instance(&short).is_err());
    }

    #[test]
    fn generator_is_deterministic_and_structural() {
        let a = generate_random_instance(2, 2, 1, 2, 7);
        let b = generate_random_instance(2, 2, 1, 2, 7);
        assert_eq!(a, b);
        let per_job: usize = a.jobs().iter().map(|j| j.len()).sum();
        assert_eq!(a.total_operations(), per_job);
        for x in 0..a.num_locations() {
            assert_eq!(a.transport_time(x, x), 0);
            for y in 0..a.num_locations() {
                assert_eq!(a.transport_time(x, y), a.transport_time(y, x));
            }
        }
    }

    #[test]
    fn location_names_round_trip() {
        let inst = generate_random_instance(2, 3, 1, 1, 1);
        for loc in 0..inst.num_locations() {
            assert_eq!(inst.parse_location(&inst.location_name(loc)), Some(loc));
        }
        assert_eq!(inst.parse_location("M9"), None);
    }
}
