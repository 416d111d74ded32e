//! Region-partitioning evolutionary search and a plain GA baseline.
//!
//! [`run`] keeps every evaluated solution in a [`GlobalTree`]. Each
//! generation builds one subpopulation per cluster of regions, varies it,
//! adds cross-cluster offspring, splits regions around seed solutions and
//! regroups the regions into clusters.

mod init;
mod operators;
mod sampling;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chromosome::{solution_vector, Chromosome};
use crate::decode::{decode, makespan, Schedule};
use crate::instance::{Instance, Time};
use crate::local_search::conditional_local_search;
use crate::niching::{group_clusters, identify_seeds, Cluster};
use crate::region::{full_range, GlobalTree, RegionId};
use crate::validate::check_schedule;

pub use init::{fcfs_assignment, initialize_population, partial_fitness};
pub use operators::{mutate, pmx_crossover, pmx_with_cuts, pox_crossover, pox_with_set, recombine, roulette_pick};
pub use sampling::{generate_subpopulation, sample_in_box, walk_in_box};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    TimeBudgetMs(u64),
    Generations(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HrpeoParams {
    pub n1: usize,
    pub n2: usize,
    pub alpha: f64,
    pub mutation_rate: f64,
    pub seed: u64,
    pub stop: StopRule,
    /// Seeds closer than this are merged.
    pub dedup_distance: f64,
    /// Seed statistics use at most this many of a cluster's best members.
    pub seed_pool_limit: usize,
}

impl Default for HrpeoParams {
    fn default() -> Self {
        Self {
            n1: 6,
            n2: 9,
            alpha: 3.5,
            mutation_rate: 0.1,
            seed: 0,
            stop: StopRule::Generations(50),
            dedup_distance: 2.0,
            seed_pool_limit: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("n1 must be at least 1")]
    N1,
    #[error("alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("mutation rate must lie in [0, 1], got {0}")]
    MutationRate(f64),
    #[error("seed pool limit must be at least 2")]
    SeedPool,
}

impl HrpeoParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n1 == 0 {
            return Err(ParamError::N1);
        }
        if !(self.alpha > 0.0) {
            return Err(ParamError::Alpha(self.alpha));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(ParamError::MutationRate(self.mutation_rate));
        }
        if self.seed_pool_limit < 2 {
            return Err(ParamError::SeedPool);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Hrpeo,
    GaBaseline,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Hrpeo => "hrpeo",
            Algorithm::GaBaseline => "ga-baseline",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hrpeo" => Ok(Algorithm::Hrpeo),
            "ga-baseline" => Ok(Algorithm::GaBaseline),
            other => Err(format!("unknown algorithm {other:?}, expected hrpeo or ga-baseline")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub generation: usize,
    pub elapsed_ms: f64,
    pub best: Time,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Chromosome,
    pub best_makespan: Time,
    pub schedule: Schedule,
    pub history: Vec<HistoryPoint>,
    pub evaluations: usize,
    pub generations: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("best solution failed validation:\n{0}")]
    Infeasible(String),
}

struct Clock {
    start: Instant,
    budget: Option<Duration>,
    max_generations: Option<usize>,
}

impl Clock {
    fn new(stop: StopRule) -> Self {
        let (budget, max_generations) = match stop {
            StopRule::TimeBudgetMs(ms) => (Some(Duration::from_millis(ms)), None),
            StopRule::Generations(g) => (None, Some(g)),
        };
        Self {
            start: Instant::now(),
            budget,
            max_generations,
        }
    }

    fn expired(&self) -> bool {
        self.budget.is_some_and(|b| self.start.elapsed() >= b)
    }

    fn done(&self, generation: usize) -> bool {
        self.expired() || self.max_generations.is_some_and(|g| generation >= g)
    }

    fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Incumbent, history and evaluation count shared by both algorithms.
struct Tracker<'a> {
    instance: &'a Instance,
    clock: Clock,
    best: Option<(Chromosome, Time)>,
    history: Vec<HistoryPoint>,
    evaluations: usize,
}

impl<'a> Tracker<'a> {
    fn new(instance: &'a Instance, stop: StopRule) -> Self {
        Self {
            instance,
            clock: Clock::new(stop),
            best: None,
            history: Vec::new(),
            evaluations: 0,
        }
    }

    fn evaluate(&mut self, c: &Chromosome) -> Time {
        self.evaluations += 1;
        let f = makespan(c, self.instance).expect("operators produce decodable chromosomes");
        self.offer(c, f);
        f
    }

    fn offer(&mut self, c: &Chromosome, f: Time) {
        if self.best.as_ref().is_none_or(|(_, b)| f < *b) {
            self.best = Some((c.clone(), f));
        }
    }

    fn log(&mut self, generation: usize) {
        let best = self.best.as_ref().expect("population is nonempty").1;
        self.history.push(HistoryPoint {
            generation,
            elapsed_ms: self.clock.elapsed_ms(),
            best,
        });
    }

    fn finish(self, generations: usize) -> Result<RunOutcome, RunError> {
        let (best, best_makespan) = self.best.expect("population is nonempty");
        let schedule = decode(&best, self.instance).map_err(|e| RunError::Infeasible(e.to_string()))?;
        let report = check_schedule(&schedule, &best, self.instance);
        if !report.is_empty() {
            return Err(RunError::Infeasible(report.to_string()));
        }
        Ok(RunOutcome {
            best,
            best_makespan,
            schedule,
            history: self.history,
            evaluations: self.evaluations,
            generations,
            elapsed: self.clock.start.elapsed(),
        })
    }
}

pub fn run_algorithm(algorithm: Algorithm, instance: &Instance, params: &HrpeoParams) -> Result<RunOutcome, RunError> {
    match algorithm {
        Algorithm::Hrpeo => run(instance, params),
        Algorithm::GaBaseline => run_ga_baseline(instance, params),
    }
}

struct Search<'a> {
    params: &'a HrpeoParams,
    rng: ChaCha8Rng,
    tree: GlobalTree<Chromosome>,
    tracker: Tracker<'a>,
}

impl<'a> Search<'a> {
    fn instance(&self) -> &'a Instance {
        self.tracker.instance
    }

    fn record(&mut self, c: Chromosome) -> (Time, RegionId) {
        let f = self.tracker.evaluate(&c);
        let region = self
            .tree
            .record(solution_vector(&c), f as f64, c)
            .expect("solution vectors lie in the full range");
        (f, region)
    }

    /// Records a child and, when it beats its region's mean, its locally
    /// improved version.
    fn record_with_local_search(&mut self, child: Chromosome) {
        let (f, region) = self.record(child.clone());
        let mean = self.tree.mean_fitness(region);
        let (improved, g) = conditional_local_search(&child, f, mean, self.instance());
        if g < f {
            self.record(improved);
        }
    }

    /// Returns false when the clock ran out midway.
    fn exploit(&mut self, clusters: &[Cluster]) -> bool {
        let instance = self.instance();
        let size = instance.num_jobs() * self.params.n1;
        for cluster in clusters {
            let subpop = generate_subpopulation(cluster, &self.tree, instance, size, &mut self.rng);
            let mut order: Vec<usize> = (0..subpop.len()).collect();
            order.shuffle(&mut self.rng);
            if order.len() % 2 == 1 && order.len() > 1 {
                let extra = order[self.rng.gen_range(0..order.len() - 1)];
                order.push(extra);
            }
            for pair in order.chunks(2) {
                if self.tracker.clock.expired() {
                    return false;
                }
                let p2 = pair.get(1).copied().unwrap_or(pair[0]);
                let children = recombine(
                    &subpop[pair[0]].0,
                    &subpop[p2].0,
                    self.params.mutation_rate,
                    instance,
                    &mut self.rng,
                );
                for child in children {
                    self.record_with_local_search(child);
                }
            }
        }
        true
    }

    fn explore(&mut self, clusters: &[Cluster]) -> bool {
        let instance = self.instance();
        let populated: Vec<&Cluster> = clusters.iter().filter(|c| c.count > 0).collect();
        let means: Vec<f64> = populated.iter().map(|c| c.mean_fitness).collect();
        for _ in 0..self.params.n2 {
            if self.tracker.clock.expired() {
                return false;
            }
            let picked = roulette_pick(&means, None, &mut self.rng)
                .and_then(|a| roulette_pick(&means, Some(a), &mut self.rng).map(|b| (a, b)));
            match picked {
                Some((a, b)) => {
                    let pa = self.random_member(populated[a]);
                    let pb = self.random_member(populated[b]);
                    let children = recombine(&pa, &pb, self.params.mutation_rate, instance, &mut self.rng);
                    for child in children {
                        self.record(child);
                    }
                }
                None => {
                    let c = Chromosome::random(instance, &mut self.rng);
                    self.record(c);
                }
            }
        }
        true
    }

    fn random_member(&mut self, cluster: &Cluster) -> Chromosome {
        let mut k = self.rng.gen_range(0..cluster.count);
        for &r in &cluster.regions {
            let recs = self.tree.records(r);
            if k < recs.len() {
                return recs[k].payload.clone();
            }
            k -= recs.len();
        }
        unreachable!("cluster count matches its regions")
    }

    /// Splits regions around the seeds of every cluster.
    fn divide(&mut self, clusters: &[Cluster]) {
        let mut all_seeds: Vec<Vec<Vec<i32>>> = Vec::with_capacity(clusters.len());
        for cluster in clusters {
            if self.tracker.clock.expired() {
                return;
            }
            let mut members = cluster.members(&self.tree);
            if members.len() < 2 {
                continue;
            }
            let limit = self.params.seed_pool_limit.min(members.len());
            members.select_nth_unstable_by(limit - 1, |a, b| a.fitness.total_cmp(&b.fitness));
            members.truncate(limit);
            let seeds = identify_seeds(&members, self.params.alpha, self.params.dedup_distance);
            all_seeds.push(seeds.seeds.iter().map(|s| members[s.index].vector.clone()).collect());
        }
        for seeds in all_seeds {
            let refs: Vec<&[i32]> = seeds.iter().map(|v| v.as_slice()).collect();
            self.tree.divide_regions(&refs).expect("seeds are recorded vectors");
        }
    }
}

/// Region-partitioning evolutionary search.
pub fn run(instance: &Instance, params: &HrpeoParams) -> Result<RunOutcome, RunError> {
    params.validate()?;
    let mut s = Search {
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        tree: GlobalTree::new(full_range(instance)),
        tracker: Tracker::new(instance, params.stop),
    };
    for c in initialize_population(instance, params.n1, &mut s.rng) {
        s.record(c);
    }
    s.tracker.log(0);
    let mut clusters = group_clusters(&s.tree, instance);
    let mut generation = 0;
    while !s.tracker.clock.done(generation) {
        generation += 1;
        let finished = s.exploit(&clusters) && s.explore(&clusters);
        if finished {
            s.divide(&clusters);
            clusters = group_clusters(&s.tree, instance);
        }
        s.tracker.log(generation);
        log::debug!(
            "generation {generation}: {} clusters, {} regions, best {}",
            clusters.len(),
            s.tree.leaves().len(),
            s.tracker.best.as_ref().map_or(0, |b| b.1)
        );
        if !finished {
            break;
        }
    }
    s.tracker.finish(generation)
}

/// Generational GA over the same encoding and operators, without regions:
/// binary tournaments, one elite, and local search against the population
/// mean.
pub fn run_ga_baseline(instance: &Instance, params: &HrpeoParams) -> Result<RunOutcome, RunError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tracker = Tracker::new(instance, params.stop);
    let init = initialize_population(instance, params.n1, &mut rng);
    let size = init.len();
    let mut pop: Vec<(Chromosome, Time)> = init
        .into_iter()
        .map(|c| {
            let f = tracker.evaluate(&c);
            (c, f)
        })
        .collect();
    tracker.log(0);
    let mut generation = 0;
    'outer: while !tracker.clock.done(generation) {
        generation += 1;
        let mean = pop.iter().map(|p| p.1 as f64).sum::<f64>() / size as f64;
        let elite = pop.iter().min_by_key(|p| p.1).cloned().expect("population is nonempty");
        let mut next = vec![elite];
        while next.len() < size {
            if tracker.clock.expired() {
                tracker.log(generation);
                break 'outer;
            }
            let tournament = |rng: &mut ChaCha8Rng| {
                let a = &pop[rng.gen_range(0..size)];
                let b = &pop[rng.gen_range(0..size)];
                if a.1 <= b.1 { a.0.clone() } else { b.0.clone() }
            };
            let p1 = tournament(&mut rng);
            let p2 = tournament(&mut rng);
            for child in recombine(&p1, &p2, params.mutation_rate, instance, &mut rng) {
                let f = tracker.evaluate(&child);
                let (c, g) = conditional_local_search(&child, f, mean, instance);
                if g < f {
                    tracker.evaluations += 1;
                    tracker.offer(&c, g);
                }
                next.push((c, g));
            }
        }
        next.truncate(size);
        pop = next;
        tracker.log(generation);
    }
    tracker.finish(generation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_random_instance, Operation};

    fn gens(g: usize, seed: u64) -> HrpeoParams {
        HrpeoParams {
            stop: StopRule::Generations(g),
            seed,
            ..HrpeoParams::default()
        }
    }

    #[test]
    fn params_are_checked() {
        let mut p = HrpeoParams::default();
        assert!(p.validate().is_ok());
        p.mutation_rate = 1.5;
        assert_eq!(p.validate(), Err(ParamError::MutationRate(1.5)));
        p.mutation_rate = 0.1;
        p.alpha = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Hrpeo, Algorithm::GaBaseline] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert!("tabu".parse::<Algorithm>().is_err());
    }

    #[test]
    fn trivial_instance_is_solved_at_initialization() {
        let inst = Instance::new(
            1,
            1,
            1,
            vec![vec![Operation { job: 0, stage: 0, eligible: vec![(0, 4)] }]],
            vec![vec![0, 2, 3], vec![2, 0, 1], vec![3, 1, 0]],
        )
        .unwrap();
        let out = run(&inst, &gens(2, 0)).unwrap();
        // MW -> M1 (2), process (4), M1 -> PW (1)
        assert_eq!(out.best_makespan, 7);
        assert_eq!(out.history[0].best, 7);
    }

    #[test]
    fn history_is_monotone_and_deterministic() {
        let inst = generate_random_instance(4, 3, 2, 2, 12);
        let a = run(&inst, &gens(4, 7)).unwrap();
        let b = run(&inst, &gens(4, 7)).unwrap();
        assert_eq!(a.history.len(), 5);
        for w in a.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
        let bests = |o: &RunOutcome| o.history.iter().map(|h| h.best).collect::<Vec<_>>();
        assert_eq!(bests(&a), bests(&b));
        assert_eq!(a.best, b.best);
        assert_eq!(a.evaluations, b.evaluations);
        assert_eq!(a.best_makespan, a.schedule.makespan);
    }

    #[test]
    fn ga_baseline_runs() {
        let inst = generate_random_instance(4, 3, 2, 2, 12);
        let out = run_ga_baseline(&inst, &gens(5, 1)).unwrap();
        assert_eq!(out.generations, 5);
        for w in out.history.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn zero_budget_returns_initial_best() {
        let inst = generate_random_instance(3, 3, 2, 2, 2);
        let p = HrpeoParams {
            stop: StopRule::TimeBudgetMs(0),
            ..HrpeoParams::default()
        };
        let out = run(&inst, &p).unwrap();
        assert_eq!(out.generations, 0);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn stop_rule_serializes() {
        let p = gens(3, 1);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"generations\":3"));
        let back: HrpeoParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let partial: HrpeoParams = serde_json::from_str(r#"{"n1": 3}"#).unwrap();
        assert_eq!(partial.n1, 3);
        assert_eq!(partial.n2, 9);
    }
}
