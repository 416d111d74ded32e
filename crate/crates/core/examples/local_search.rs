//! Apply the machine/AGV greedy search and the transport-list node
//! transforms to random chromosomes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fjspma::decode::makespan;
use fjspma::local_search::{greedy_machine_agv_search, transform_search, transformable_nodes};
use fjspma::{generate_random_instance, Chromosome};

fn main() -> anyhow::Result<()> {
    let inst = generate_random_instance(5, 3, 2, 3, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..5 {
        let c = Chromosome::random(&inst, &mut rng);
        let f = makespan(&c, &inst)?;
        let (g, fg) = greedy_machine_agv_search(&c, f, &inst);
        let nodes: usize = g.task_lists.iter().map(|l| transformable_nodes(l, inst.agv_capacity()).len()).sum();
        let (_, ft) = transform_search(&g, fg, &inst);
        println!("trial {trial}: {f} -> greedy {fg} -> transforms {ft} ({nodes} candidate nodes)");
    }
    Ok(())
}
