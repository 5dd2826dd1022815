//! The two-circle ansatz, its curvature and how a normal graph changes it.

use magtrap::geometry::{ansatz_curve, curvature, curvature_linearization, normal_field, perturbed_curve};
use magtrap::{AnsatzParams, PeriodicScalar, UniformGrid};

fn main() -> magtrap::Result<()> {
    let p = AnsatzParams::new(0.05, 4.0)?;
    let grid = UniformGrid::new(256)?;
    let jet = ansatz_curve(&p, &grid);
    let k = curvature(&jet, 64)?;
    println!("speed factor {:.6}, min speed {:.6}", p.speed_factor(), jet.min_speed());
    println!("curvature at t=1: {:.9} (closed form {:.9})", k.eval(1.0), p.curvature_at(1.0));

    let normals = normal_field(&jet)?;
    println!("normal at t=0: {:.6}", normals.n[0]);

    let phi = PeriodicScalar::cosine(16, 2, 1e-3);
    let bent = perturbed_curve(&p, &phi, &grid)?;
    let kb = curvature(&bent, 64)?;
    let lin = curvature_linearization(&p, &PeriodicScalar::zeros(16), &grid)?;
    let predicted = &k + &lin.apply(&phi)?.with_mode_count(64);
    println!("linearization error {:.2e}", (&kb - &predicted).norms().sup_norm);
    Ok(())
}
