//! ARPD, runtime budgets, experiment sessions and exports.

mod export;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{run_algorithm, Algorithm, HistoryPoint, HrpeoParams, RunError, RunOutcome, StopRule};
use crate::instance::{parse_instance, Instance, ParseError, Time};

pub use export::{
    convergence_csv, export_convergence, export_gantt, is_delivery, parse_gantt, read_convergence, AgvRecord, Gantt,
    MachineRecord,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("schedule is infeasible:\n{0}")]
    Infeasible(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Arpd(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arpd {
    /// Mean relative deviation times 100.
    pub percent: f64,
    pub ratio: f64,
}

/// Average relative percentage deviation of `makespans` from `c_best`.
pub fn arpd(makespans: &[f64], c_best: f64) -> Result<Arpd, HarnessError> {
    if makespans.is_empty() {
        return Err(HarnessError::Arpd("no makespans".into()));
    }
    if !(c_best > 0.0) {
        return Err(HarnessError::Arpd(format!("best makespan must be positive, got {c_best}")));
    }
    if let Some(c) = makespans.iter().find(|&&c| c < c_best) {
        return Err(HarnessError::Arpd(format!("makespan {c} is below the best {c_best}")));
    }
    let excess: f64 = makespans.iter().map(|c| c - c_best).sum();
    let denom = makespans.len() as f64 * c_best;
    Ok(Arpd {
        percent: 100.0 * excess / denom,
        ratio: excess / denom,
    })
}

/// `jobs * machines * AGVs * 10 ms`.
pub fn default_time_budget(instance: &Instance) -> Duration {
    Duration::from_millis((instance.num_jobs() * instance.num_machines() * instance.num_agvs() * 10) as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<PathBuf>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    /// Trial `k` runs with seed `master_seed + k`.
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub params: HrpeoParams,
    /// Per-trial budget; the instance-scaled default applies when absent.
    #[serde(default)]
    pub budget_ms: Option<u64>,
    /// Generation cap instead of a time budget.
    #[serde(default)]
    pub generations: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Hrpeo]
}

fn default_repetitions() -> usize {
    20
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if let Some(dir) = path.parent() {
            for p in &mut cfg.instances {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    fn stop_rule(&self, instance: &Instance) -> StopRule {
        match (self.generations, self.budget_ms) {
            (Some(g), _) => StopRule::Generations(g),
            (None, Some(ms)) => StopRule::TimeBudgetMs(ms),
            (None, None) => StopRule::TimeBudgetMs(default_time_budget(instance).as_millis() as u64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub makespan: Time,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub algorithm: Algorithm,
    pub trials: Vec<TrialRecord>,
    pub c_best: Time,
    pub arpd_percent: f64,
    pub arpd_ratio: f64,
    /// History of the best trial.
    pub convergence: Vec<HistoryPoint>,
}

impl RunReport {
    /// Report of one finished trial; its makespan is the reference.
    pub fn single(instance: &str, algorithm: Algorithm, seed: u64, outcome: &RunOutcome) -> Self {
        Self {
            instance: instance.to_string(),
            algorithm,
            trials: vec![TrialRecord {
                seed,
                makespan: outcome.best_makespan,
                millis: outcome.elapsed.as_secs_f64() * 1e3,
            }],
            c_best: outcome.best_makespan,
            arpd_percent: 0.0,
            arpd_ratio: 0.0,
            convergence: outcome.history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub instance: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub reports: Vec<RunReport>,
    pub failures: Vec<InstanceFailure>,
}

struct Trials {
    algorithm: Algorithm,
    trials: Vec<TrialRecord>,
    best_history: Vec<HistoryPoint>,
}

/// Runs `trials` seeded trials of each algorithm on one instance and
/// reports ARPD against the best makespan of the whole batch.
pub fn run_trials(
    name: &str,
    instance: &Instance,
    algorithms: &[Algorithm],
    params: &HrpeoParams,
    repetitions: usize,
    master_seed: u64,
) -> Result<Vec<RunReport>, HarnessError> {
    let mut batches = Vec::new();
    for &algorithm in algorithms {
        let mut trials = Vec::with_capacity(repetitions);
        let mut best: Option<(Time, Vec<HistoryPoint>)> = None;
        for k in 0..repetitions as u64 {
            let p = HrpeoParams {
                seed: master_seed + k,
                ..params.clone()
            };
            let t0 = Instant::now();
            let out = run_algorithm(algorithm, instance, &p)?;
            let millis = t0.elapsed().as_secs_f64() * 1e3;
            log::info!("{name} {algorithm} seed {}: makespan {} in {millis:.1} ms", p.seed, out.best_makespan);
            if best.as_ref().is_none_or(|b| out.best_makespan < b.0) {
                best = Some((out.best_makespan, out.history.clone()));
            }
            trials.push(TrialRecord {
                seed: p.seed,
                makespan: out.best_makespan,
                millis,
            });
        }
        batches.push(Trials {
            algorithm,
            trials,
            best_history: best.map(|b| b.1).unwrap_or_default(),
        });
    }
    let c_best = batches
        .iter()
        .flat_map(|b| b.trials.iter().map(|t| t.makespan))
        .min()
        .ok_or_else(|| HarnessError::Arpd("no trials".into()))?;
    batches
        .into_iter()
        .map(|b| {
            let values: Vec<f64> = b.trials.iter().map(|t| t.makespan as f64).collect();
            let a = arpd(&values, c_best as f64)?;
            Ok(RunReport {
                instance: name.to_string(),
                algorithm: b.algorithm,
                trials: b.trials,
                c_best,
                arpd_percent: a.percent,
                arpd_ratio: a.ratio,
                convergence: b.best_history,
            })
        })
        .collect()
}

/// Runs a whole session. Failures are recorded per instance and do not stop
/// the remaining instances.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SessionResult, HarnessError> {
    if config.repetitions == 0 {
        return Err(HarnessError::Format("repetitions must be at least 1".into()));
    }
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut result = SessionResult::default();
    for path in &config.instances {
        let name = path.display().to_string();
        let outcome = (|| -> Result<Vec<RunReport>, HarnessError> {
            let instance = parse_instance(&std::fs::read_to_string(path)?)?;
            let params = HrpeoParams {
                stop: config.stop_rule(&instance),
                ..config.params.clone()
            };
            run_trials(&name, &instance, &config.algorithms, &params, config.repetitions, config.master_seed)
        })();
        match outcome {
            Ok(reports) => {
                if let Some(dir) = &config.output_dir {
                    let stem = path.file_stem().map_or("instance".into(), |s| s.to_string_lossy().into_owned());
                    for r in &reports {
                        let file = dir.join(format!("{stem}-{}.json", r.algorithm));
                        std::fs::write(file, serde_json::to_string_pretty(r)?)?;
                    }
                }
                result.reports.extend(reports);
            }
            Err(e) => {
                log::warn!("{name}: {e}");
                result.failures.push(InstanceFailure {
                    instance: name,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chromosome::Chromosome;
    use crate::decode::decode;
    use crate::instance::{generate_random_instance, Operation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn arpd_by_hand() {
        assert_eq!(arpd(&[110.0, 105.0], 100.0).unwrap().percent, 7.5);
        assert_eq!(arpd(&[100.0], 100.0).unwrap().percent, 0.0);
        assert_eq!(arpd(&[50.0, 50.0], 50.0).unwrap().ratio, 0.0);
    }

    #[test]
    fn arpd_rejects_bad_input() {
        assert!(arpd(&[], 1.0).is_err());
        assert!(arpd(&[5.0], 0.0).is_err());
        assert!(arpd(&[4.0], 5.0).is_err());
    }

    #[test]
    fn budget_formula() {
        let inst = generate_random_instance(10, 5, 2, 2, 0);
        assert_eq!(default_time_budget(&inst), Duration::from_millis(1000));
        let one = generate_random_instance(1, 1, 1, 1, 0);
        assert_eq!(default_time_budget(&one), Duration::from_millis(10));
        let double = generate_random_instance(20, 5, 2, 2, 0);
        assert_eq!(default_time_budget(&double), 2 * default_time_budget(&inst));
    }

    fn trivial() -> Instance {
        Instance::new(
            1,
            1,
            1,
            vec![vec![Operation { job: 0, stage: 0, eligible: vec![(0, 4)] }]],
            vec![vec![0, 2, 3], vec![2, 0, 1], vec![3, 1, 0]],
        )
        .unwrap()
    }

    #[test]
    fn trivial_gantt_has_one_processing_record() {
        let inst = trivial();
        let c = Chromosome::new(vec![0], vec![0], vec![0], &inst);
        let s = decode(&c, &inst).unwrap();
        let g = Gantt::from_schedule(&s, &c, &inst).unwrap();
        assert_eq!(g.machines.len(), 1);
        assert_eq!(g.agvs.len(), 4);
        assert_eq!(g.agvs.iter().filter(|a| is_delivery(a)).count(), 2);
        assert_eq!(parse_gantt(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn gantt_round_trips_through_a_file() {
        let inst = generate_random_instance(4, 3, 2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = Chromosome::random(&inst, &mut rng);
        let s = decode(&c, &inst).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        export_gantt(&s, &c, &inst, &path).unwrap();
        let g = parse_gantt(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(g, Gantt::from_schedule(&s, &c, &inst).unwrap());
        assert_eq!(g.makespan, s.makespan);
        assert!(g.agvs.iter().all(|a| a.onboard.len() <= inst.agv_capacity()));
    }

    #[test]
    fn infeasible_schedule_is_refused() {
        let inst = trivial();
        let c = Chromosome::new(vec![0], vec![0], vec![0], &inst);
        let mut s = decode(&c, &inst).unwrap();
        s.op_start[0] = 0;
        s.op_end[0] = 4;
        let dir = tempfile::tempdir().unwrap();
        let err = export_gantt(&s, &c, &inst, &dir.path().join("g.txt")).unwrap_err();
        assert!(matches!(err, HarnessError::Infeasible(_)));
    }

    #[test]
    fn convergence_round_trip() {
        let history = vec![
            HistoryPoint { generation: 0, elapsed_ms: 0.25, best: 40 },
            HistoryPoint { generation: 1, elapsed_ms: 3.125, best: 38 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        export_convergence(&history, &path).unwrap();
        let rows = read_convergence(&path).unwrap();
        assert_eq!(rows, vec![(0.25, 40), (3.125, 38)]);
        assert!(export_convergence(&[], &path).is_err());
    }

    #[test]
    fn session_isolates_failures_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.txt");
        std::fs::write(&good, generate_random_instance(3, 2, 1, 2, 5).to_text()).unwrap();
        let bad = dir.path().join("bad.txt");
        std::fs::write(&bad, "not an instance").unwrap();
        let cfg = ExperimentConfig {
            instances: vec![bad, good.clone(), dir.path().join("missing.txt")],
            algorithms: vec![Algorithm::Hrpeo, Algorithm::GaBaseline],
            repetitions: 2,
            master_seed: 9,
            params: HrpeoParams::default(),
            budget_ms: None,
            generations: Some(2),
            output_dir: Some(dir.path().join("out")),
        };
        let a = run_experiment(&cfg).unwrap();
        assert_eq!(a.failures.len(), 2);
        assert_eq!(a.reports.len(), 2);
        let c_best = a.reports.iter().flat_map(|r| r.trials.iter().map(|t| t.makespan)).min().unwrap();
        for r in &a.reports {
            assert_eq!(r.c_best, c_best);
            assert!(r.arpd_percent >= 0.0);
        }
        assert!(dir.path().join("out/good-hrpeo.json").exists());
        let b = run_experiment(&cfg).unwrap();
        let strip = |s: &SessionResult| {
            s.reports
                .iter()
                .map(|r| (r.trials.iter().map(|t| (t.seed, t.makespan)).collect::<Vec<_>>(), r.c_best))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"instances": ["a.txt"], "generations": 3}"#).unwrap();
        assert_eq!(cfg.repetitions, 20);
        assert_eq!(cfg.algorithms, vec![Algorithm::Hrpeo]);
        assert_eq!(cfg.params, HrpeoParams::default());
    }
}
