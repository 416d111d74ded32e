//! Identify seeds among random solutions, divide the tree around them and
//! group the leaves into clusters.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fjspma::chromosome::solution_vector;
use fjspma::niching::{group_clusters, identify_seeds};
use fjspma::region::{full_range, GlobalTree};
use fjspma::{decode, generate_random_instance, Chromosome};

fn main() -> anyhow::Result<()> {
    let inst = generate_random_instance(5, 3, 2, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut tree = GlobalTree::new(full_range(&inst));
    for _ in 0..400 {
        let c = Chromosome::random(&inst, &mut rng);
        let f = decode(&c, &inst)?.makespan as f64;
        tree.record(solution_vector(&c), f, c)?;
    }
    let all = tree.records_under(0);
    let seeds = identify_seeds(&all, 3.5, 2.0);
    println!("nbd mean {:.2} sd {:.2}, {} seeds", seeds.mu, seeds.sigma, seeds.len());
    for s in &seeds.seeds {
        println!("  seed fitness {} nbd {:.2}", all[s.index].fitness, s.nbd);
    }
    let vectors: Vec<Vec<i32>> = seeds.seeds.iter().map(|s| all[s.index].vector.clone()).collect();
    let refs: Vec<&[i32]> = vectors.iter().map(|v| v.as_slice()).collect();
    let outcome = tree.divide_regions(&refs)?;
    println!("{} splits, {} leaves", outcome.splits, tree.leaves().len());
    for (i, c) in group_clusters(&tree, &inst).iter().enumerate() {
        println!("cluster {i}: {} regions, {} records, mean {:.1}", c.regions.len(), c.count, c.mean_fitness);
    }
    Ok(())
}
