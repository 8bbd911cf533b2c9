//! Handover penalty sweep on a small generated scenario: handover count,
//! flight time and path length per penalty value. With costs in SI units the
//! geometric term is of order 1e6 to 1e7, so the count only moves once the
//! penalty reaches that scale.

use handover_gcs::planner::{generate_scenario, sweep, PlanOptions, ScenarioDefaults, SweepParam};

fn main() -> handover_gcs::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scenario = generate_scenario(seed, 8, &ScenarioDefaults::default())?;
    let values = [0.1, 10.0, 1e3, 1e5, 1e6, 3e6, 1e7, 1e8];
    let options = PlanOptions { seed, ..PlanOptions::default() };
    let rows = sweep(&scenario, SweepParam::LambdaHo, &values, &options)?;
    println!("{:>10} {:>4} {:>10} {:>12} {:>16}", "lambda_ho", "N", "T (s)", "length (m)", "cost");
    for r in rows {
        match (r.handover_count, r.total_time_s, r.path_length_m, r.cost) {
            (Some(n), Some(t), Some(l), Some(c)) => {
                println!("{:>10} {n:>4} {t:>10.3} {l:>12.3} {c:>16.6}", r.value)
            }
            _ => println!("{:>10} failed: {}", r.value, r.error.unwrap_or_default()),
        }
    }
    Ok(())
}
