//! Write a closed curve for rational ε and a run config the binary can read.

use magtrap::cli::{curve_output, Command, CurveSource, FieldConfig, RunConfig};
use magtrap::{AnsatzParams, FieldModel};

fn main() -> magtrap::Result<()> {
    let p = AnsatzParams::new(2.0 / 13.0, 3.0)?;
    let out = curve_output(&CurveSource::Ansatz(p), 2048, None)?;
    println!("closes after {:?} with {:?} curls", out.closure_period, out.curls);
    let (x0, y0) = (out.x[0], out.y[0]);
    let (x1, y1) = (*out.x.last().unwrap(), *out.y.last().unwrap());
    println!("endpoint gap {:.2e}", (x1 - x0).hypot(y1 - y0));

    let mut cfg = RunConfig::new(Command::Solve);
    cfg.field = Some(FieldConfig::model(&FieldModel::leading(1.0, 2.0)?));
    cfg.eps = Some(0.002);
    cfg.validate()?;
    println!("{}", cfg.to_json());
    Ok(())
}
