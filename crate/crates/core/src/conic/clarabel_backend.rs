use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::{check_solution, ConicProgram, ConicSolver, SolveStatus, Solution, TIME_LIMIT_ENV};

/// Embedded interior-point backend (Clarabel).
#[derive(Debug, Clone)]
pub struct ClarabelBackend {
    pub time_limit_s: f64,
    pub max_iter: u32,
    pub tolerance: f64,
    /// Ruiz equilibration of the constraint matrix. Callers that already
    /// normalize their rows and variables usually do better without it.
    pub equilibrate: bool,
    /// Fraction of the step to the cone boundary taken per iteration.
    pub max_step_fraction: f64,
}

impl Default for ClarabelBackend {
    fn default() -> Self {
        Self {
            time_limit_s: f64::INFINITY,
            max_iter: 200,
            tolerance: 1e-8,
            equilibrate: true,
            max_step_fraction: 0.99,
        }
    }
}

impl ClarabelBackend {
    /// Default backend, with the time limit taken from the environment when set.
    pub fn from_env() -> Self {
        let mut b = Self::default();
        if let Some(limit) = std::env::var(TIME_LIMIT_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|v| *v > 0.0)
        {
            b.time_limit_s = limit;
        }
        b
    }
}

struct Assembled {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn assemble(program: &ConicProgram) -> Assembled {
    let n = program.num_variables();
    let mut ii = Vec::new();
    let mut jj = Vec::new();
    let mut vv = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();

    // Clarabel form: A x + s = b, s in K. A row s = e(x) = a.x + c maps to
    // A_row = -a, b = c.
    let mut push_row = |terms: &[(super::VariableRef, f64)], constant: f64, scale: f64, b: &mut Vec<f64>| {
        let row = b.len();
        for (v, c) in terms {
            ii.push(row);
            jj.push(v.index());
            vv.push(-c * scale);
        }
        b.push(constant * scale);
    };

    if !program.equalities.is_empty() {
        for e in &program.equalities {
            push_row(&e.terms, e.constant, 1.0, &mut b);
        }
        cones.push(SupportedConeT::ZeroConeT(program.equalities.len()));
    }
    if !program.nonnegatives.is_empty() {
        for e in &program.nonnegatives {
            push_row(&e.terms, e.constant, 1.0, &mut b);
        }
        cones.push(SupportedConeT::NonnegativeConeT(program.nonnegatives.len()));
    }
    for cone in &program.second_order {
        if cone.len() == 1 {
            push_row(&cone[0].terms, cone[0].constant, 1.0, &mut b);
            cones.push(SupportedConeT::NonnegativeConeT(1));
            continue;
        }
        for e in cone {
            push_row(&e.terms, e.constant, 1.0, &mut b);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.len()));
    }
    for cone in &program.rotated {
        // 2 u0 u1 >= ||w||^2  <=>  ||(u0 - u1, sqrt2 w)|| <= u0 + u1
        let (u0, u1) = (&cone[0], &cone[1]);
        let sum_terms: Vec<_> = u0.terms.iter().chain(u1.terms.iter()).copied().collect();
        push_row(&sum_terms, u0.constant + u1.constant, 1.0, &mut b);
        let diff_terms: Vec<_> = u0
            .terms
            .iter()
            .copied()
            .chain(u1.terms.iter().map(|&(v, c)| (v, -c)))
            .collect();
        push_row(&diff_terms, u0.constant - u1.constant, 1.0, &mut b);
        for w in &cone[2..] {
            push_row(&w.terms, w.constant, std::f64::consts::SQRT_2, &mut b);
        }
        cones.push(SupportedConeT::SecondOrderConeT(cone.len()));
    }

    let m = b.len();
    Assembled {
        a: CscMatrix::new_from_triplets(m, n, ii, jj, vv),
        b,
        cones,
    }
}

fn gap_is_small(primal: f64, dual: f64, tolerance: f64) -> bool {
    (primal - dual).abs() <= 10.0 * tolerance * primal.abs().max(dual.abs()).max(1.0)
}

impl ConicSolver for ClarabelBackend {
    fn solve(&self, program: &ConicProgram) -> Solution {
        let n = program.num_variables();
        let failure = |status| Solution {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            backend_objective: f64::NAN,
            dual_objective: f64::NAN,
            max_equality_residual: f64::NAN,
            max_cone_violation: f64::NAN,
            iterations: 0,
            solve_time_s: 0.0,
        };
        if program.validate().is_err() {
            return failure(SolveStatus::NumericalFailure);
        }
        let Assembled { a, b, cones } = assemble(program);
        let p = CscMatrix::zeros((n, n));
        let settings = DefaultSettings {
            verbose: false,
            time_limit: self.time_limit_s,
            max_iter: self.max_iter,
            tol_feas: self.tolerance,
            equilibrate_enable: self.equilibrate,
            max_step_fraction: self.max_step_fraction,
            tol_gap_abs: self.tolerance,
            tol_gap_rel: self.tolerance,
            ..DefaultSettings::default()
        };
        let mut solver = match DefaultSolver::new(&p, program.objective_coefficients(), &a, &b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("conic backend rejected the program: {e}");
                return failure(SolveStatus::NumericalFailure);
            }
        };
        solver.solve();
        let sol = &solver.solution;
        let x = sol.x.clone();
        let report = check_solution(program, &x);
        log::debug!(
            "backend status {:?} after {} iterations, primal {:.9e} dual {:.9e}",
            sol.status,
            sol.iterations,
            sol.obj_val,
            sol.obj_val_dual
        );
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            // a stalled run is kept only if it is feasible and its duality gap is small
            SolverStatus::AlmostSolved | SolverStatus::InsufficientProgress
                if report.passes && gap_is_small(sol.obj_val, sol.obj_val_dual, self.tolerance) =>
            {
                SolveStatus::Optimal
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            other => {
                log::debug!("conic backend stopped with {other:?}");
                SolveStatus::NumericalFailure
            }
        };
        let status = if status == SolveStatus::Optimal && !report.passes {
            log::debug!(
                "backend reported optimal but recheck failed (worst {:?}, {:.3e})",
                report.worst,
                report.max_scaled()
            );
            SolveStatus::NumericalFailure
        } else {
            status
        };
        Solution {
            status,
            objective: program.objective_value(&x),
            backend_objective: sol.obj_val + program.objective_constant(),
            dual_objective: sol.obj_val_dual + program.objective_constant(),
            max_equality_residual: report.max_equality_abs,
            max_cone_violation: report.max_cone_abs,
            iterations: sol.iterations,
            solve_time_s: sol.solve_time,
            x,
        }
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}
