//! Nearest-better distances, seed detection and clustering of regions.

use crate::instance::Instance;
use crate::region::{GlobalTree, Record, RegionBox, RegionId};

/// Anything with a solution vector and a fitness (lower is better).
pub trait Point {
    fn coords(&self) -> &[i32];
    fn fitness(&self) -> f64;
}

impl<T> Point for Record<T> {
    fn coords(&self) -> &[i32] {
        &self.vector
    }
    fn fitness(&self) -> f64 {
        self.fitness
    }
}

impl<P: Point + ?Sized> Point for &P {
    fn coords(&self) -> &[i32] {
        (**self).coords()
    }
    fn fitness(&self) -> f64 {
        (**self).fitness()
    }
}

impl Point for (Vec<i32>, f64) {
    fn coords(&self) -> &[i32] {
        &self.0
    }
    fn fitness(&self) -> f64 {
        self.1
    }
}

fn distance(a: &[i32], b: &[i32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (*x - *y) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Distance from `set[index]` to the nearest strictly better member, or
/// `f64::INFINITY` when no member is strictly better.
pub fn nbd<P: Point>(index: usize, set: &[P]) -> f64 {
    let x = &set[index];
    set.iter()
        .filter(|p| p.fitness() < x.fitness())
        .map(|p| distance(x.coords(), p.coords()))
        .fold(f64::INFINITY, f64::min)
}

/// NBD of every member. Members are visited in fitness order so each one
/// is only compared with the strictly better prefix.
pub fn nbd_all<P: Point>(set: &[P]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| set[a].fitness().total_cmp(&set[b].fitness()));
    let mut out = vec![f64::INFINITY; set.len()];
    let mut better = 0;
    for k in 0..order.len() {
        let x = &set[order[k]];
        while set[order[better]].fitness() < x.fitness() {
            better += 1;
        }
        let best_sq = order[..better]
            .iter()
            .map(|&j| squared_distance(x.coords(), set[j].coords()))
            .min();
        if let Some(d) = best_sq {
            out[order[k]] = (d as f64).sqrt();
        }
    }
    out
}

fn squared_distance(a: &[i32], b: &[i32]) -> i64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (*x - *y) as i64;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    /// Index into the set passed to [`identify_seeds`].
    pub index: usize,
    pub nbd: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeedSet {
    pub seeds: Vec<Seed>,
    /// Mean and standard deviation of the finite NBD values.
    pub mu: f64,
    pub sigma: f64,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.seeds.iter().map(|s| s.index).collect()
    }
}

/// Flags NBD outliers (`nbd > mu + alpha * sigma`) and every member with no
/// strictly better neighbour, then drops flagged members within `dedup`
/// distance of a fitter flagged member.
///
/// Seeds are returned fittest first.
pub fn identify_seeds<P: Point>(set: &[P], alpha: f64, dedup: f64) -> SeedSet {
    if set.len() < 2 {
        return SeedSet::default();
    }
    let values = nbd_all(set);
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let (mu, sigma) = if finite.is_empty() {
        (0.0, 0.0)
    } else {
        let n = finite.len() as f64;
        let mu = finite.iter().sum::<f64>() / n;
        let var = finite.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
        (mu, var.sqrt())
    };
    let threshold = mu + alpha * sigma;
    let mut flagged: Vec<usize> = (0..set.len()).filter(|&i| values[i] > threshold).collect();
    flagged.sort_by(|&a, &b| set[a].fitness().total_cmp(&set[b].fitness()).then(a.cmp(&b)));
    let mut seeds: Vec<Seed> = Vec::new();
    for i in flagged {
        if seeds
            .iter()
            .all(|s| distance(set[s.index].coords(), set[i].coords()) > dedup)
        {
            seeds.push(Seed { index: i, nbd: values[i] });
        }
    }
    SeedSet { seeds, mu, sigma }
}

/// Adjacency-connected group of regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Starting region first, then absorbed regions in discovery order.
    pub regions: Vec<RegionId>,
    /// Count-weighted mean over the regions; infinite when all are empty.
    pub mean_fitness: f64,
    pub count: usize,
}

impl Cluster {
    pub fn seed_region(&self) -> RegionId {
        self.regions[0]
    }

    pub fn members<'a, T>(&self, tree: &'a GlobalTree<T>) -> Vec<&'a Record<T>> {
        self.regions.iter().flat_map(|&r| tree.records(r)).collect()
    }

    pub fn boxes<'a, T>(&self, tree: &'a GlobalTree<T>) -> Vec<&'a RegionBox> {
        self.regions.iter().map(|&r| tree.region_box(r)).collect()
    }

    pub fn contains_vector<T>(&self, tree: &GlobalTree<T>, v: &[i32]) -> bool {
        self.regions.iter().any(|&r| tree.region_box(r).contains(v))
    }
}

/// False when the box cannot contain any encoding of `instance`: an empty
/// interval, or a machine interval without an eligible machine for its
/// operation.
pub fn region_may_be_feasible(bbox: &RegionBox, instance: &Instance) -> bool {
    if (0..bbox.dims()).any(|d| bbox.width(d) <= 0) {
        return false;
    }
    let n = instance.total_operations();
    (0..n).all(|o| {
        let (lo, hi) = (bbox.low[n + o], bbox.high[n + o]);
        instance
            .operation(o)
            .eligible
            .iter()
            .any(|&(m, _)| lo <= m as i32 && (m as i32) < hi)
    })
}

/// Grows a cluster from `start` by depth-first search, absorbing unvisited
/// adjacent regions whose mean is not better than the region they are
/// reached from. Regions with `allowed[id] == false` are never absorbed.
pub fn find_neighborhood<T>(
    tree: &GlobalTree<T>,
    start: RegionId,
    allowed: &[bool],
    visited: &mut [bool],
) -> Vec<RegionId> {
    let mut cluster = vec![start];
    visited[start] = true;
    let mut stack = vec![start];
    while let Some(r) = stack.pop() {
        let mean = tree.mean_fitness(r);
        for n in tree.neighbors(r) {
            if !visited[n] && allowed[n] && tree.mean_fitness(n) >= mean {
                visited[n] = true;
                cluster.push(n);
                stack.push(n);
            }
        }
    }
    cluster
}

/// Partitions the leaves accepted by `keep` into clusters, each grown from
/// the best remaining region.
pub fn group_clusters_with<T>(tree: &GlobalTree<T>, keep: impl Fn(&RegionBox) -> bool) -> Vec<Cluster> {
    let mut allowed = vec![false; tree.num_nodes()];
    let mut order = Vec::new();
    for id in tree.leaves() {
        if keep(tree.region_box(id)) {
            allowed[id] = true;
            order.push(id);
        }
    }
    order.sort_by(|&a, &b| tree.mean_fitness(a).total_cmp(&tree.mean_fitness(b)).then(a.cmp(&b)));
    let mut visited = vec![false; tree.num_nodes()];
    let mut clusters = Vec::new();
    for id in order {
        if visited[id] {
            continue;
        }
        let regions = find_neighborhood(tree, id, &allowed, &mut visited);
        let count: usize = regions.iter().map(|&r| tree.count(r)).sum();
        let sum: f64 = regions
            .iter()
            .filter(|&&r| tree.count(r) > 0)
            .map(|&r| tree.mean_fitness(r) * tree.count(r) as f64)
            .sum();
        let mean_fitness = if count == 0 { f64::INFINITY } else { sum / count as f64 };
        clusters.push(Cluster {
            regions,
            mean_fitness,
            count,
        });
    }
    clusters
}

pub fn group_clusters<T>(tree: &GlobalTree<T>, instance: &Instance) -> Vec<Cluster> {
    group_clusters_with(tree, |b| region_may_be_feasible(b, instance))
}
