//! Decode a random three-layer chromosome and print its Gantt records.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fjspma::harness::Gantt;
use fjspma::{check_schedule, decode, generate_random_instance, Chromosome};

fn main() -> anyhow::Result<()> {
    let inst = generate_random_instance(4, 3, 2, 2, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = Chromosome::random(&inst, &mut rng);
    println!("op_seq   {:?}", c.op_seq);
    println!("machines {:?}", c.machines);
    println!("agvs     {:?}", c.agvs);
    for (r, list) in c.task_lists.iter().enumerate() {
        let tasks: Vec<String> = list
            .iter()
            .map(|t| format!("{}{}", if t.is_load() { '+' } else { '-' }, t.op))
            .collect();
        println!("agv {r} tasks {}", tasks.join(" "));
    }
    let schedule = decode(&c, &inst)?;
    println!("violations: {}", check_schedule(&schedule, &c, &inst).len());
    print!("{}", Gantt::from_schedule(&schedule, &c, &inst)?.to_text());
    Ok(())
}
