//! Full Lorentz motion in a field along z: the horizontal part is planar, z drifts.

use magtrap::dynamics::{integrate_lorentz3d, integrate_planar};
use magtrap::{FieldModel, Point, SimConfig};

fn main() -> magtrap::Result<()> {
    let m = FieldModel::leading(1.0, 2.0)?;
    let sim = SimConfig::adaptive(1e-11, 40.0).with_samples_every(5.0);
    let traj = integrate_lorentz3d(&m, [4.0, 0.0, 0.0], [0.0, 0.8, 0.3], 1.0, -1.0, &sim)?;
    for (t, q) in traj.times.iter().zip(&traj.positions) {
        println!("t = {t:>5.1}  q = ({:+.5}, {:+.5}, {:+.5})", q[0], q[1], q[2]);
    }

    let planar = integrate_planar(&m, Point::new(4.0, 0.0), Point::new(0.0, 1.0), &SimConfig::rk4(1e-3, 20.0))?;
    let end = planar.positions.last().unwrap();
    println!("planar orbit after 20: {end:.6}, |v| = {:.3}", end.norm());
    Ok(())
}
