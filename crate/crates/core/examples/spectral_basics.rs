//! Truncated Fourier series: sampling, derivatives and the inverse of `d²/dt² + 1`.

use magtrap::{PeriodicScalar, UniformGrid};

fn main() -> magtrap::Result<()> {
    let grid = UniformGrid::new(64)?;
    let samples: Vec<f64> = grid.nodes().map(|t| t.cos().exp()).collect();
    let f = PeriodicScalar::analyze(&samples, 16)?;
    println!("exp(cos t): a0 = {:.12}, a1 = {:.12}", f.a(0), f.a(1));

    let t = 0.7f64;
    let exact = -t.sin() * t.cos().exp();
    println!("f'(0.7) = {:.12} (direct {:.12})", f.eval_derivative(t, 1), exact);

    // Remove the resonant modes, then solve ψ'' + ψ = g.
    let (g, c1, s1) = f.project_out_first_harmonics();
    let psi = g.l0_invert(1e-12)?;
    let back = psi.l0_apply();
    println!("dropped first harmonics ({c1:.6}, {s1:.6})");
    println!("round trip error {:.2e}", (&back - &g).norms().sup_norm);
    println!("C2 norm of solution {:.6}", psi.norms().c2_norm);
    Ok(())
}
