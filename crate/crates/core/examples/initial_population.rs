//! Build the tree-search initial population and compare it with random
//! chromosomes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fjspma::decode::makespan;
use fjspma::evolution::initialize_population;
use fjspma::{generate_random_instance, Chromosome, Time};

fn main() -> anyhow::Result<()> {
    let inst = generate_random_instance(6, 4, 2, 2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let pop = initialize_population(&inst, 6, &mut rng);
    let built: Vec<_> = pop.iter().map(|c| makespan(c, &inst)).collect::<Result<_, _>>()?;
    let random: Vec<_> = (0..pop.len())
        .map(|_| makespan(&Chromosome::random(&inst, &mut rng), &inst))
        .collect::<Result<_, _>>()?;
    let mean = |v: &[Time]| v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64;
    println!("{} chromosomes", pop.len());
    println!("initial  best {} mean {:.1}", built.iter().min().unwrap(), mean(&built));
    println!("random   best {} mean {:.1}", random.iter().min().unwrap(), mean(&random));
    Ok(())
}
