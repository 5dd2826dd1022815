//! Fit power laws for the solved radius and correction as ε shrinks.

use magtrap::reduction::sweep_scaling;
use magtrap::{FieldModel, SolverConfig};

fn main() {
    let m = FieldModel::leading(1.0, 2.0).unwrap();
    let eps: Vec<f64> = (0..6).map(|k| 0.002 / f64::powi(2.0, k)).collect();
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = match sweep_scaling(&m, &eps, &SolverConfig::default(), jobs) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("{f}");
            std::process::exit(2);
        }
    };
    for ((e, r), n) in report.eps_values.iter().zip(&report.rho_values).zip(&report.phi_norms) {
        println!("{e:.3e}  {r:.6}  {n:.4e}");
    }
    println!("rho slope {:.4}, phi slope {:.4}", report.fitted_rho_slope, report.fitted_phi_slope);
}
