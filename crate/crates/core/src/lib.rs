//! Handover-aware URLLC trajectory planning for cellular-connected UAVs.
//!
//! The planner turns a finite-blocklength reliability target into a coverage
//! disk per base station, links overlapping disks into a directed graph, and
//! searches that graph for a smooth, speed-bounded trajectory. Each graph
//! vertex owns one Bézier segment (a planar shape curve plus a monotone
//! time-scaling curve); edges carry continuity constraints and convex costs
//! that trade handovers against flight time, geometric effort and smoothness.
//!
//! The discrete route is obtained from the convex relaxation of the resulting
//! mixed-integer program by randomized rounding, and each candidate route is
//! refined by a final second-order cone program.
//!
//! ```no_run
//! use handover_gcs::planner::{plan, generate_scenario, PlanOptions, ScenarioDefaults};
//!
//! let scenario = generate_scenario(0, 30, &ScenarioDefaults::default()).unwrap();
//! let result = plan(&scenario, &PlanOptions::default()).unwrap();
//! println!("{} handovers, {:.1} s", result.handover_count, result.total_time_s);
//! ```

pub mod bezier;
pub mod channel;
pub mod cli;
pub mod conic;
pub mod error;
pub mod gcs;
pub mod planner;
pub mod regions;
pub mod urllc;

pub use error::{Error, Result, Stage};
