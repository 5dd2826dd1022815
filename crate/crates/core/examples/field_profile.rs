//! A decaying radial field: strength, gradient and the radial vector potential.

use magtrap::field::rotation_equivariance_check;
use magtrap::{FieldModel, Point, RadialProfile};

fn main() -> magtrap::Result<()> {
    let m = FieldModel::new(1.0, 2.0, 0.2, 4.0)?;
    for r in [0.5, 1.0, 4.0, 16.0] {
        println!("r = {r:>4}: B = {:.8}, flux = {:.6}, remainder = {:.3e}", m.b(r), m.flux(r), m.remainder(r));
    }
    let v = Point::new(3.0, -1.0);
    println!("gradient at {v}: {:.6}", m.gradient(v));
    println!("potential at {v}: {:.6}", m.potential(v));
    println!("rotation check {:.2e}", rotation_equivariance_check(&m, v, 1.1));
    Ok(())
}
