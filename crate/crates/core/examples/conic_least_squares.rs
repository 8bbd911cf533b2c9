//! Constrained least squares through the conic layer: the unconstrained
//! problem against its normal-equation solution, then the same fit inside a
//! norm ball, with the independent residual check.

use handover_gcs::conic::{check_solution, solve, AffineExpr, ConicProgram};
use nalgebra::{DMatrix, DVector};

fn rows(a: &DMatrix<f64>, b: &DVector<f64>, x: &[handover_gcs::conic::VariableRef]) -> Vec<AffineExpr> {
    (0..a.nrows())
        .map(|i| {
            let mut e = AffineExpr::constant(-b[i]);
            for (j, &v) in x.iter().enumerate() {
                e.push(v, a[(i, j)]);
            }
            e
        })
        .collect()
}

fn main() {
    let a = DMatrix::from_row_slice(5, 3, &[
        1.0, 0.5, -0.2, //
        0.3, 2.0, 0.1, //
        -1.0, 0.2, 1.5, //
        0.7, -0.4, 0.9, //
        0.0, 1.1, -0.6,
    ]);
    let b = DVector::from_vec(vec![1.0, 4.0, -2.0, 0.5, 3.0]);
    let closed = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).unwrap();

    let mut p = ConicProgram::new();
    let x = p.add_variables(3);
    let t = p.add_quadratic_cost_epigraph(rows(&a, &b, &x), 1.0);
    p.add_objective_term(t, 1.0);
    let sol = solve(&p);
    println!("unconstrained: {:?}, objective {:.9}", sol.status, sol.objective);
    for j in 0..3 {
        println!("  x{j} = {:+.9}  (normal equations {:+.9})", sol.value(x[j]), closed[j]);
    }

    // ||x|| <= 1
    let mut cone = vec![AffineExpr::constant(1.0)];
    cone.extend(x.iter().map(|&v| AffineExpr::var(v)));
    p.add_second_order_cone(cone);
    let sol = solve(&p);
    let norm = x.iter().map(|&v| sol.value(v).powi(2)).sum::<f64>().sqrt();
    println!("\nin the unit ball: {:?}, objective {:.9}, ||x|| = {norm:.9}", sol.status, sol.objective);
    let report = check_solution(&p, &sol.x);
    println!(
        "recheck: passes {}, equality residual {:.1e}, cone violation {:.1e}",
        report.passes, report.max_equality_abs, report.max_cone_abs
    );
}
