//! Integrate the planar system from a solved curve and measure the gap.

use magtrap::dynamics::verify_solution;
use magtrap::reduction::solve_rho;
use magtrap::{FieldModel, SolverConfig, VerifyConfig};

fn main() -> magtrap::Result<()> {
    let m = FieldModel::leading(1.0, 2.0)?;
    let sol = solve_rho(&m, 0.002, &SolverConfig::default())?.solution;
    let cfg = VerifyConfig {
        slow_periods: 0.25,
        ..VerifyConfig::default()
    };
    let r = verify_solution(&m, &sol, &cfg)?;
    println!("integrated arc length {:.1} over {} samples", r.duration, r.samples);
    println!("first loop deviation {:.2e}, overall {:.2e}", r.fast_period_deviation, r.deviation);
    println!("speed drift {:.2e}", r.speed_drift);
    println!("radius range [{:.4}, {:.4}], rho = {:.4}", r.r_min, r.r_max, sol.params.rho);
    Ok(())
}
