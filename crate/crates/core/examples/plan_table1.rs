//! Plans one seeded 30-station scenario with the default parameters and
//! prints the route, timing and validation summary.

use handover_gcs::planner::{generate_scenario, plan, validate, PlanOptions, ScenarioDefaults};

fn main() -> handover_gcs::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scenario = generate_scenario(seed, 30, &ScenarioDefaults::default())?;
    let result = plan(&scenario, &PlanOptions { seed, ..PlanOptions::default() })?;
    println!("serving sequence: {:?}", result.serving_sequence);
    println!("handovers: {}", result.handover_count);
    for h in &result.handovers {
        println!("  t = {:8.3} s  {} -> {}", h.time_s, h.from_bs, h.to_bs);
    }
    println!("flight time: {:.3} s", result.total_time_s);
    println!("path length: {:.3} m", result.path_length_m);
    println!("peak acceleration: {:.4} m/s^2", result.peak_acceleration_mps2);
    println!("cost {:.6} (bound {:.6}, gap {:.2e})", result.cost.total, result.lower_bound, result.gap);
    println!("wall time: {:.2} s", result.wall_time_s);
    let report = validate(&scenario, &result, 1000)?;
    println!("validation: {}", if report.passed { "pass" } else { "FAIL" });
    for c in &report.checks {
        println!("  {:<22} {:>5}  value {:.3e}  limit {:.3e}", c.name, c.passed, c.value, c.limit);
    }
    Ok(())
}
