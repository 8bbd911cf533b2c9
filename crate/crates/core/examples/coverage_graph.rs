//! Coverage disks and the intersection graph for a generated scenario, plus
//! the coverage radius as a function of transmit power.

use handover_gcs::channel::BaseStation;
use handover_gcs::planner::{generate_scenario, ScenarioDefaults};
use handover_gcs::regions::{build_disks, build_graph, coverage_radius, reachable};
use handover_gcs::urllc::gamma_min;

fn main() -> handover_gcs::Result<()> {
    let defaults = ScenarioDefaults::default();
    let g = gamma_min(&defaults.urllc)?;
    println!("gamma_min = {g:.6e} ({:.3} dB)", 10.0 * g.log10());

    println!("\ncoverage radius at {} m altitude, 100 m antenna:", defaults.airspace.altitude_m);
    let bs = BaseStation::new(0, 0.0, 0.0, 100.0);
    for p in [0.09, 1e-2, 1e-3, 1e-4, 1e-5] {
        let mut ch = defaults.channel;
        ch.tx_power_w = p;
        match coverage_radius(&bs, &defaults.airspace, &ch, g) {
            Some(c) => println!("  P = {p:8.1e} W  ->  rho = {:9.3} m", c.radius_m),
            None => println!("  P = {p:8.1e} W  ->  no coverage"),
        }
    }

    let mut d = defaults.clone();
    d.channel.tx_power_w = 1e-4;
    let s = generate_scenario(1, 12, &d)?;
    let disks = build_disks(&s.base_stations, &s.airspace, &s.channel, g);
    let graph = build_graph(&disks, s.start, s.goal);
    println!("\n12 stations at 0.1 mW: {} disks, {} directed edges", disks.len(), graph.edges.len());
    for disk in &disks {
        println!(
            "  bs {:2}  center ({:7.1}, {:7.1})  rho {:8.3} m",
            disk.bs_id, disk.center[0], disk.center[1], disk.radius_m
        );
    }
    println!("start-to-goal path exists: {}", reachable(&graph));
    Ok(())
}
