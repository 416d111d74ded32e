//! Write a Gantt file and a convergence CSV, then read both back.

use fjspma::evolution::{run, HrpeoParams, StopRule};
use fjspma::harness::{export_convergence, export_gantt, is_delivery, parse_gantt, read_convergence};
use fjspma::instance::InstanceGenerator;

fn main() -> anyhow::Result<()> {
    let inst = InstanceGenerator::new(4, 3, 2, 2).generate(1);
    let params = HrpeoParams {
        stop: StopRule::Generations(10),
        ..HrpeoParams::default()
    };
    let out = run(&inst, &params)?;
    let dir = std::env::temp_dir();
    let gantt_path = dir.join("fjspma-example.gantt");
    let csv_path = dir.join("fjspma-example.csv");
    export_gantt(&out.schedule, &out.best, &inst, &gantt_path)?;
    export_convergence(&out.history, &csv_path)?;
    let gantt = parse_gantt(&std::fs::read_to_string(&gantt_path)?)?;
    let deliveries = gantt.agvs.iter().filter(|a| is_delivery(a)).count();
    println!(
        "{}: makespan {}, {} machine records, {} AGV records ({} delivery tasks)",
        gantt_path.display(),
        gantt.makespan,
        gantt.machines.len(),
        gantt.agvs.len(),
        deliveries
    );
    let rows = read_convergence(&csv_path)?;
    println!("{}: {} rows, final best {}", csv_path.display(), rows.len(), rows.last().map_or(0, |r| r.1));
    Ok(())
}
