//! Global k-d tree over the solution-vector space.
//!
//! Leaves are regions: axis-aligned boxes of half-open integer intervals.
//! Every evaluated solution is recorded in the unique leaf containing its
//! vector, and leaves only ever split. Splits halve one interval at its
//! integer midpoint.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::Instance;

pub type RegionId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionBox {
    pub low: Vec<i32>,
    pub high: Vec<i32>,
}

impl RegionBox {
    pub fn new(low: Vec<i32>, high: Vec<i32>) -> Self {
        assert_eq!(low.len(), high.len());
        debug_assert!(low.iter().zip(&high).all(|(l, h)| l <= h));
        Self { low, high }
    }

    pub fn dims(&self) -> usize {
        self.low.len()
    }

    pub fn width(&self, dim: usize) -> i32 {
        self.high[dim] - self.low[dim]
    }

    pub fn contains(&self, v: &[i32]) -> bool {
        v.len() == self.dims()
            && v
                .iter()
                .zip(self.low.iter().zip(&self.high))
                .all(|(x, (l, h))| l <= x && x < h)
    }

    /// Sum of `log2(width)`; `-inf` for boxes with an empty interval.
    pub fn log_volume(&self) -> f64 {
        (0..self.dims()).map(|d| (self.width(d) as f64).log2()).sum()
    }

    /// Intervals intersect or share an endpoint in every dimension.
    pub fn touches_or_overlaps(&self, other: &RegionBox) -> bool {
        (0..self.dims()).all(|d| self.low[d] <= other.high[d] && other.low[d] <= self.high[d])
    }

    /// Open overlap on one dimension.
    pub fn overlaps_on(&self, other: &RegionBox, dim: usize) -> bool {
        self.low[dim] < other.high[dim] && other.low[dim] < self.high[dim]
    }

    /// Distinct boxes that touch: they meet in every dimension and are
    /// separated (sharing only an endpoint) in at least one.
    pub fn is_adjacent(&self, other: &RegionBox) -> bool {
        self.touches_or_overlaps(other) && (0..self.dims()).any(|d| !self.overlaps_on(other, d))
    }

    fn split(&self, dim: usize) -> (RegionBox, RegionBox, i32) {
        let mid = (self.low[dim] + self.high[dim]).div_euclid(2);
        let mut left = self.clone();
        let mut right = self.clone();
        left.high[dim] = mid;
        right.low[dim] = mid;
        (left, right, mid)
    }
}

/// Per-dimension value ranges of solution vectors: job ids for sequence
/// slots, machines for machine genes, AGVs for AGV genes.
pub fn full_range(instance: &Instance) -> RegionBox {
    let n = instance.total_operations();
    let mut high = Vec::with_capacity(3 * n);
    high.extend(std::iter::repeat_n(instance.num_jobs() as i32, n));
    high.extend(std::iter::repeat_n(instance.num_machines() as i32, n));
    high.extend(std::iter::repeat_n(instance.num_agvs() as i32, n));
    RegionBox::new(vec![0; 3 * n], high)
}

#[derive(Debug, Clone)]
pub struct Record<T> {
    pub vector: Vec<i32>,
    pub fitness: f64,
    pub payload: T,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("vector of length {len} lies outside the root box")]
    OutOfBox { len: usize },
    #[error("region {0} is not a leaf")]
    NotALeaf(RegionId),
    #[error("region {region} has width {width} on dimension {dim}, cannot halve")]
    TooNarrow { region: RegionId, dim: usize, width: i32 },
}

#[derive(Debug, Clone)]
enum NodeKind<T> {
    Leaf(Vec<Record<T>>),
    Internal {
        dim: usize,
        split: i32,
        left: RegionId,
        right: RegionId,
    },
}

#[derive(Debug, Clone)]
struct Node<T> {
    bbox: RegionBox,
    count: usize,
    sum: f64,
    kind: NodeKind<T>,
}

/// Result of [`GlobalTree::divide_regions`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DivideOutcome {
    pub splits: usize,
    /// Seed index pairs that could not be separated any further.
    pub exhausted: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct GlobalTree<T> {
    nodes: Vec<Node<T>>,
}

impl<T> GlobalTree<T> {
    pub fn new(root: RegionBox) -> Self {
        Self {
            nodes: vec![Node {
                bbox: root,
                count: 0,
                sum: 0.0,
                kind: NodeKind::Leaf(Vec::new()),
            }],
        }
    }

    pub fn root_box(&self) -> &RegionBox {
        &self.nodes[0].bbox
    }

    pub fn region_box(&self, id: RegionId) -> &RegionBox {
        &self.nodes[id].bbox
    }

    pub fn is_leaf(&self, id: RegionId) -> bool {
        matches!(self.nodes[id].kind, NodeKind::Leaf(_))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Total number of recorded solutions.
    pub fn len(&self) -> usize {
        self.nodes[0].count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Current regions in id order.
    pub fn leaves(&self) -> Vec<RegionId> {
        (0..self.nodes.len()).filter(|&id| self.is_leaf(id)).collect()
    }

    /// Number of solutions recorded under `id` (leaf or internal).
    pub fn count(&self, id: RegionId) -> usize {
        self.nodes[id].count
    }

    /// Mean fitness under `id`; `f64::INFINITY` when nothing is recorded.
    pub fn mean_fitness(&self, id: RegionId) -> f64 {
        let node = &self.nodes[id];
        if node.count == 0 {
            f64::INFINITY
        } else {
            node.sum / node.count as f64
        }
    }

    /// Records of a leaf; empty for internal nodes.
    pub fn records(&self, id: RegionId) -> &[Record<T>] {
        match &self.nodes[id].kind {
            NodeKind::Leaf(r) => r,
            NodeKind::Internal { .. } => &[],
        }
    }

    /// All records in the subtree rooted at `id`.
    pub fn records_under(&self, id: RegionId) -> Vec<&Record<T>> {
        let mut out = Vec::with_capacity(self.nodes[id].count);
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.nodes[n].kind {
                NodeKind::Leaf(r) => out.extend(r.iter()),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        out
    }

    /// Leaves in the subtree rooted at `id`.
    pub fn leaves_under(&self, id: RegionId) -> Vec<RegionId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            match &self.nodes[n].kind {
                NodeKind::Leaf(_) => out.push(n),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        out
    }

    /// Leaf whose box contains `v`.
    pub fn locate(&self, v: &[i32]) -> Result<RegionId, RegionError> {
        if !self.root_box().contains(v) {
            return Err(RegionError::OutOfBox { len: v.len() });
        }
        let mut id = 0;
        while let NodeKind::Internal {
            dim,
            split,
            left,
            right,
        } = self.nodes[id].kind
        {
            id = if v[dim] < split { left } else { right };
        }
        Ok(id)
    }

    /// Records a solution in its leaf and updates running statistics along
    /// the path.
    pub fn record(&mut self, vector: Vec<i32>, fitness: f64, payload: T) -> Result<RegionId, RegionError> {
        if !self.root_box().contains(&vector) {
            return Err(RegionError::OutOfBox { len: vector.len() });
        }
        let mut id = 0;
        loop {
            let node = &mut self.nodes[id];
            node.count += 1;
            node.sum += fitness;
            match &mut node.kind {
                NodeKind::Internal {
                    dim,
                    split,
                    left,
                    right,
                } => id = if vector[*dim] < *split { *left } else { *right },
                NodeKind::Leaf(records) => {
                    records.push(Record {
                        vector,
                        fitness,
                        payload,
                    });
                    return Ok(id);
                }
            }
        }
    }

    /// Halves leaf `id` on `dim` and redistributes its records.
    pub fn halve(&mut self, id: RegionId, dim: usize) -> Result<(RegionId, RegionId), RegionError> {
        if !self.is_leaf(id) {
            return Err(RegionError::NotALeaf(id));
        }
        let width = self.nodes[id].bbox.width(dim);
        if width < 2 {
            return Err(RegionError::TooNarrow {
                region: id,
                dim,
                width,
            });
        }
        let (lbox, rbox, mid) = self.nodes[id].bbox.split(dim);
        let (left, right) = (self.nodes.len(), self.nodes.len() + 1);
        let records = match std::mem::replace(
            &mut self.nodes[id].kind,
            NodeKind::Internal {
                dim,
                split: mid,
                left,
                right,
            },
        ) {
            NodeKind::Leaf(r) => r,
            NodeKind::Internal { .. } => unreachable!(),
        };
        let (lrec, rrec): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.vector[dim] < mid);
        for (bbox, recs) in [(lbox, lrec), (rbox, rrec)] {
            self.nodes.push(Node {
                bbox,
                count: recs.len(),
                sum: recs.iter().map(|r| r.fitness).sum(),
                kind: NodeKind::Leaf(recs),
            });
        }
        Ok((left, right))
    }

    pub fn are_adjacent(&self, a: RegionId, b: RegionId) -> bool {
        a != b && self.nodes[a].bbox.is_adjacent(&self.nodes[b].bbox)
    }

    /// Leaves adjacent to leaf `id`, in ascending id order.
    pub fn neighbors(&self, id: RegionId) -> Vec<RegionId> {
        let target = &self.nodes[id].bbox;
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if n == id || !node.bbox.touches_or_overlaps(target) {
                continue;
            }
            match &node.kind {
                NodeKind::Leaf(_) => out.push(n),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Splits regions until no two seeds share a region or sit in adjacent
    /// regions, or until the remaining pairs cannot be separated.
    ///
    /// Cut dimensions are tried in order of decreasing variance over the seed
    /// set (lowest index first on ties). A pair sharing a region splits that
    /// region on the first such dimension where the two seeds differ. A pair
    /// in adjacent regions splits the larger region (lower id on ties, then
    /// the other one) on the first dimension along which its seed can still
    /// be moved away from the other region.
    pub fn divide_regions(&mut self, seeds: &[&[i32]]) -> Result<DivideOutcome, RegionError> {
        let mut outcome = DivideOutcome::default();
        if seeds.len() < 2 {
            return Ok(outcome);
        }
        for s in seeds {
            if !self.root_box().contains(s) {
                return Err(RegionError::OutOfBox { len: s.len() });
            }
        }
        let order = variance_order(seeds);
        let mut exhausted: HashSet<(usize, usize)> = HashSet::new();
        loop {
            let mut acted = false;
            for i in 0..seeds.len() {
                for j in i + 1..seeds.len() {
                    if seeds[i] == seeds[j] || exhausted.contains(&(i, j)) {
                        continue;
                    }
                    let (ri, rj) = (self.locate(seeds[i])?, self.locate(seeds[j])?);
                    let cut = if ri == rj {
                        order
                            .iter()
                            .find(|&&d| seeds[i][d] != seeds[j][d])
                            .map(|&d| (ri, d))
                    } else if self.are_adjacent(ri, rj) {
                        let mut sides = [(ri, seeds[i], rj), (rj, seeds[j], ri)];
                        let vol = |r: RegionId| self.nodes[r].bbox.log_volume();
                        if vol(rj) > vol(ri) || (vol(rj) == vol(ri) && rj < ri) {
                            sides.swap(0, 1);
                        }
                        sides.iter().find_map(|&(own, seed, other)| {
                            let ob = &self.nodes[other].bbox;
                            let bb = &self.nodes[own].bbox;
                            order
                                .iter()
                                .find(|&&d| {
                                    bb.width(d) >= 2
                                        && (seed[d] <= ob.low[d] - 2 || seed[d] > ob.high[d])
                                })
                                .map(|&d| (own, d))
                        })
                    } else {
                        continue;
                    };
                    match cut {
                        Some((region, dim)) => {
                            self.halve(region, dim)?;
                            outcome.splits += 1;
                            acted = true;
                        }
                        None => {
                            exhausted.insert((i, j));
                        }
                    }
                }
            }
            if !acted {
                break;
            }
        }
        let mut exhausted: Vec<_> = exhausted.into_iter().collect();
        exhausted.sort_unstable();
        if !exhausted.is_empty() {
            log::debug!("region division exhausted for seed pairs {exhausted:?}");
        }
        outcome.exhausted = exhausted;
        Ok(outcome)
    }

    /// One line per leaf: id, record count, mean fitness and box.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for id in self.leaves() {
            let b = &self.nodes[id].bbox;
            let ranges: Vec<String> = (0..b.dims()).map(|d| format!("{}..{}", b.low[d], b.high[d])).collect();
            let _ = writeln!(
                out,
                "region {id} count={} mean={} box={}",
                self.count(id),
                self.mean_fitness(id),
                ranges.join(",")
            );
        }
        out
    }
}

/// Dimensions sorted by decreasing variance of the seed coordinates.
fn variance_order(seeds: &[&[i32]]) -> Vec<usize> {
    let dims = seeds[0].len();
    let n = seeds.len() as f64;
    let var: Vec<f64> = (0..dims)
        .map(|d| {
            let mean = seeds.iter().map(|s| s[d] as f64).sum::<f64>() / n;
            seeds.iter().map(|s| (s[d] as f64 - mean).powi(2)).sum::<f64>() / n
        })
        .collect();
    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::generate_random_instance;

    fn cube(dims: usize, width: i32) -> RegionBox {
        RegionBox::new(vec![0; dims], vec![width; dims])
    }

    #[test]
    fn full_range_layout() {
        let inst = crate::instance::Instance::new(
            3,
            2,
            1,
            vec![
                vec![crate::instance::Operation { job: 0, stage: 0, eligible: vec![(0, 1)] }; 2],
                vec![crate::instance::Operation { job: 1, stage: 0, eligible: vec![(2, 1)] }],
            ],
            vec![vec![0; 5]; 5],
        )
        .unwrap();
        let b = full_range(&inst);
        assert_eq!(b.dims(), 9);
        assert_eq!(b.low, vec![0; 9]);
        assert_eq!(b.high, vec![2, 2, 2, 3, 3, 3, 2, 2, 2]);

        let one_job = generate_random_instance(1, 2, 1, 1, 3);
        let b = full_range(&one_job);
        assert!((0..one_job.total_operations()).all(|d| b.low[d] == 0 && b.high[d] == 1));
    }

    #[test]
    fn record_updates_means() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(2, 8));
        let r = t.record(vec![1, 1], 10.0, ()).unwrap();
        assert_eq!(t.mean_fitness(r), 10.0);
        t.record(vec![2, 5], 20.0, ()).unwrap();
        assert_eq!(t.mean_fitness(r), 15.0);
        assert!(t.record(vec![8, 0], 1.0, ()).is_err());
        assert!(t.record(vec![0], 1.0, ()).is_err());
    }

    #[test]
    fn halving_splits_at_midpoint_and_redistributes() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(2, 8));
        t.record(vec![1, 0], 4.0, ()).unwrap();
        t.record(vec![6, 0], 8.0, ()).unwrap();
        let (l, r) = t.halve(0, 0).unwrap();
        assert_eq!((t.region_box(l).low[0], t.region_box(l).high[0]), (0, 4));
        assert_eq!((t.region_box(r).low[0], t.region_box(r).high[0]), (4, 8));
        assert_eq!(t.count(l), 1);
        assert_eq!(t.count(r), 1);
        assert_eq!(t.mean_fitness(l), 4.0);
        assert_eq!(t.mean_fitness(r), 8.0);
        assert_eq!(t.mean_fitness(0), 6.0);
        assert_eq!(t.halve(0, 1), Err(RegionError::NotALeaf(0)));
        assert!(t.is_leaf(l) && !t.is_leaf(0));
        assert_eq!(t.records_under(0).len(), 2);
    }

    #[test]
    fn narrow_dimension_cannot_be_halved() {
        let mut t: GlobalTree<()> = GlobalTree::new(RegionBox::new(vec![0, 0], vec![1, 4]));
        assert!(matches!(t.halve(0, 0), Err(RegionError::TooNarrow { width: 1, .. })));
        assert!(t.halve(0, 1).is_ok());
    }

    #[test]
    fn empty_region_mean_is_worst() {
        let t: GlobalTree<()> = GlobalTree::new(cube(1, 4));
        assert_eq!(t.mean_fitness(0), f64::INFINITY);
    }

    #[test]
    fn adjacency_rules() {
        let a = RegionBox::new(vec![0, 0], vec![4, 4]);
        let b = RegionBox::new(vec![4, 0], vec![8, 4]);
        let corner = RegionBox::new(vec![4, 4], vec![8, 8]);
        let far = RegionBox::new(vec![5, 0], vec![8, 4]);
        assert!(a.is_adjacent(&b));
        assert!(a.is_adjacent(&corner));
        assert!(!a.is_adjacent(&far));
        assert!(!a.is_adjacent(&a));
    }

    #[test]
    fn neighbors_match_brute_force() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(2, 8));
        let (l, r) = t.halve(0, 0).unwrap();
        let (ll, lr) = t.halve(l, 1).unwrap();
        t.halve(r, 0).unwrap();
        t.halve(ll, 0).unwrap();
        let leaves = t.leaves();
        for &a in &leaves {
            let brute: Vec<_> = leaves.iter().copied().filter(|&b| t.are_adjacent(a, b)).collect();
            assert_eq!(t.neighbors(a), brute);
        }
        assert!(t.neighbors(lr).len() >= 2);
    }

    #[test]
    fn divide_with_single_seed_is_noop() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(3, 8));
        let s = [1, 2, 3];
        assert_eq!(t.divide_regions(&[&s]).unwrap(), DivideOutcome::default());
        assert_eq!(t.num_nodes(), 1);
    }

    #[test]
    fn identical_seeds_stay_together() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(3, 8));
        let s = [1, 2, 3];
        let out = t.divide_regions(&[&s, &s]).unwrap();
        assert_eq!(out.splits, 0);
        assert_eq!(t.locate(&s).unwrap(), 0);
    }

    #[test]
    fn seeds_differing_on_one_dimension_end_non_adjacent() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(3, 8));
        let (a, b) = ([2, 1, 2], [2, 5, 2]);
        let out = t.divide_regions(&[&a, &b]).unwrap();
        assert!(out.exhausted.is_empty());
        let (ra, rb) = (t.locate(&a).unwrap(), t.locate(&b).unwrap());
        assert_ne!(ra, rb);
        assert!(!t.are_adjacent(ra, rb));
        // [0,8) -> [0,4) | [4,8), then [0,4) -> [0,2) | [2,4)
        assert_eq!((t.region_box(ra).low[1], t.region_box(ra).high[1]), (0, 2));
        assert_eq!((t.region_box(rb).low[1], t.region_box(rb).high[1]), (4, 8));
        assert_eq!(out.splits, 2);
    }

    #[test]
    fn neighbouring_values_are_reported_as_exhausted() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(1, 8));
        let (a, b) = ([3], [4]);
        let out = t.divide_regions(&[&a, &b]).unwrap();
        assert_eq!(out.exhausted, vec![(0, 1)]);
        assert_ne!(t.locate(&a).unwrap(), t.locate(&b).unwrap());
    }

    #[test]
    fn dump_lists_every_leaf() {
        let mut t: GlobalTree<()> = GlobalTree::new(cube(2, 4));
        t.record(vec![0, 0], 3.0, ()).unwrap();
        t.halve(0, 1).unwrap();
        let dump = t.dump();
        assert_eq!(dump.lines().count(), 2);
        assert!(dump.contains("region 1 count=1 mean=3 box=0..4,0..2"));
        assert!(dump.contains("mean=inf"));
    }
}
