//! Compare the region-partitioning search with the GA baseline on a few
//! generated instances under the default time budget.

use fjspma::evolution::{Algorithm, HrpeoParams, StopRule};
use fjspma::harness::{default_time_budget, run_trials};
use fjspma::instance::InstanceGenerator;

fn main() -> anyhow::Result<()> {
    let reps = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(5);
    for k in 0..3u64 {
        let inst = InstanceGenerator::new(6, 4, 2, 2).generate(k);
        let params = HrpeoParams {
            stop: StopRule::TimeBudgetMs(default_time_budget(&inst).as_millis() as u64),
            ..HrpeoParams::default()
        };
        let reports = run_trials(
            &format!("gen-{k}"),
            &inst,
            &[Algorithm::Hrpeo, Algorithm::GaBaseline],
            &params,
            reps,
            0,
        )?;
        for r in reports {
            println!("{} {:<12} c_best {:>4} arpd {:.2}%", r.instance, r.algorithm.to_string(), r.c_best, r.arpd_percent);
        }
    }
    Ok(())
}
