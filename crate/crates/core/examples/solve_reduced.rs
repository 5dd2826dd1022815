//! Solve for the radius at which both multipliers vanish.

use magtrap::reduction::{leading_order_rho, solve_rho};
use magtrap::{FieldModel, SolverConfig};

fn main() -> magtrap::Result<()> {
    let m = FieldModel::leading(1.0, 2.0)?;
    let eps = 0.002;
    let r = solve_rho(&m, eps, &SolverConfig::default())?;
    let s = &r.solution;
    println!("rho = {:.9} (leading order {:.6})", r.rho_eps, leading_order_rho(&m, eps)?);
    println!("bracket [{:.4}, {:.4}], {} evaluations", r.window.0, r.window.1, r.trace.len());
    println!("lambda = ({:.2e}, {:.2e})", s.lambda1, s.lambda2);
    println!("iterations {}, residual {:.2e}, |phi|_C2 {:.4e}", s.iterations, s.eq_residual, s.phi_c2);
    Ok(())
}
