//! Relaxation and rounding against brute-force path enumeration on a small
//! corridor of low-power stations.

use handover_gcs::channel::BaseStation;
use handover_gcs::gcs::{build_gcs, enumerate_oracle, enumerate_simple_paths, plan_route, RouteOptions};
use handover_gcs::planner::{generate_scenario, scenario_gamma_min, ScenarioDefaults};
use handover_gcs::regions::{build_disks, build_graph};

fn main() -> handover_gcs::Result<()> {
    let mut s = generate_scenario(0, 1, &ScenarioDefaults::default())?;
    s.channel.tx_power_w = 3e-3;
    s.start = [500.0, 2500.0];
    s.goal = [4500.0, 2500.0];
    s.base_stations = vec![
        BaseStation::new(1, 900.0, 2400.0, 30.0),
        BaseStation::new(2, 1700.0, 2700.0, 120.0),
        BaseStation::new(3, 2100.0, 2200.0, 60.0),
        BaseStation::new(4, 2900.0, 2600.0, 10.0),
        BaseStation::new(5, 3500.0, 2300.0, 90.0),
        BaseStation::new(6, 4200.0, 2550.0, 40.0),
    ];
    let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, scenario_gamma_min(&s)?);
    let graph = build_graph(&disks, s.start, s.goal);
    let paths = enumerate_simple_paths(&graph, 10_000)?;
    println!("{} disks, {} edges, {} simple start-goal paths", disks.len(), graph.edges.len(), paths.len());

    let problem = build_gcs(&graph, &s.gcs_settings())?;
    let route = plan_route(&problem, &RouteOptions::default())?;
    let best = enumerate_oracle(&problem, 10_000)?;
    println!("relaxation bound  {:.6}", route.lower_bound);
    println!("rounded route     {:.6}  {:?}", route.solution.cost.total, route.solution.bs_sequence);
    println!("enumerated best   {:.6}  {:?}", best.cost.total, best.bs_sequence);
    println!("candidates refined {}, rejected {}", route.candidates.len(), route.rejected_candidates);
    println!("route / best = {:.6}", route.solution.cost.total / best.cost.total);
    Ok(())
}
