//! Parse an instance from text, then show the validator catching a
//! tampered schedule.

use fjspma::{check_schedule, decode, parse_instance, Chromosome};

const TEXT: &str = "\
jobs=2 machines=2 agvs=1 capacity=2
job 1 ops=2
op 1: 1:4 2:6
op 2: 2:3
job 2 ops=2
op 1: 2:5
op 2: 1:2 2:4
transport
0 2 3 4
2 0 2 3
3 2 0 2
4 3 2 0
";

fn main() -> anyhow::Result<()> {
    let inst = parse_instance(TEXT)?;
    println!("{} jobs, {} operations", inst.num_jobs(), inst.total_operations());
    let c = Chromosome::new(vec![0, 1, 0, 1], vec![0, 1, 1, 0], vec![0; 4], &inst);
    let mut schedule = decode(&c, &inst)?;
    println!("makespan {}, violations {}", schedule.makespan, check_schedule(&schedule, &c, &inst).len());
    schedule.op_start[1] = 0;
    schedule.op_end[1] = inst.operation(1).eligible[0].1;
    print!("after moving operation 1 to time 0:\n{}", check_schedule(&schedule, &c, &inst));
    Ok(())
}
