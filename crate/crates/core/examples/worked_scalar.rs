//! The scalar symbol Ω(z) = (z² + 1.5z - 1)/(z - 1), end to end.
//!
//! Run with `cargo run --example worked_scalar`.

use toepricc::cli::{analyze, report_to_text, AnalysisOptions};
use toepricc::matcore::CMatrix;
use toepricc::Realization;

fn main() -> toepricc::Result<()> {
    let one = |x: f64| CMatrix::from_real(1, 1, &[x]);
    let omega = Realization::new(
        one(2.5)?,
        one(1.0)?,
        one(0.0)?,
        one(1.0)?,
        one(1.0)?,
        one(1.0)?,
        one(1.5)?,
    )?;

    let report = analyze(&omega, &AnalysisOptions::default())?;
    print!("{}", report_to_text(&report));
    println!("exit code: {}", report.verdict.exit_code());
    Ok(())
}
