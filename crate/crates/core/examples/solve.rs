//! Solve a generated instance under a generation cap and print the
//! convergence history.

use fjspma::evolution::{run, HrpeoParams, StopRule};
use fjspma::instance::InstanceGenerator;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let inst = InstanceGenerator::new(8, 4, 2, 2).generate(12);
    let params = HrpeoParams {
        seed: 3,
        stop: StopRule::Generations(30),
        ..HrpeoParams::default()
    };
    let out = run(&inst, &params)?;
    println!(
        "makespan {} after {} generations, {} evaluations, {:.0} ms",
        out.best_makespan,
        out.generations,
        out.evaluations,
        out.elapsed.as_secs_f64() * 1e3
    );
    for h in &out.history {
        println!("gen {:>3} {:>8.1} ms best {}", h.generation, h.elapsed_ms, h.best);
    }
    Ok(())
}
