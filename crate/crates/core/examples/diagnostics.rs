//! Pole and zero diagnostics, and how non-invertible symbols are
//! recognized when the Riccati iteration breaks down.
//!
//! Run with `cargo run --example diagnostics`.

use toepricc::matcore::CMatrix;
use toepricc::riccati::{solve_fixed_point, FixedPointOptions};
use toepricc::symbol::{diagnose, DiagnoseOptions};
use toepricc::toeplitz::section_study;
use toepricc::Realization;

fn main() -> toepricc::Result<()> {
    let one = |x: f64| CMatrix::from_real(1, 1, &[x]);
    let symbols = [
        (
            "(z^2 + 1.5z - 1)/(z - 1)",
            Realization::new(
                one(2.5)?,
                one(1.0)?,
                one(0.0)?,
                one(1.0)?,
                one(1.0)?,
                one(1.0)?,
                one(1.5)?,
            )?,
        ),
        (
            "1/(z - 1)",
            Realization::circle(one(0.0)?, one(1.0)?, one(1.0)?, one(1.0)?)?,
        ),
        (
            "z^2/(z - 1)",
            Realization::new(
                one(1.0)?,
                one(1.0)?,
                one(0.0)?,
                one(1.0)?,
                one(1.0)?,
                one(1.0)?,
                one(1.0)?,
            )?,
        ),
        ("1 + z", Realization::plus(one(1.0)?, one(1.0)?, one(0.0)?, one(1.0)?)?),
    ];
    for (name, r) in &symbols {
        let d = diagnose(r, &DiagnoseOptions::default())?;
        println!("{name}");
        let poles: Vec<String> = d.circle_poles.iter().map(|p| format!("{:.3}", p.value)).collect();
        println!("  poles of alpha: [{}]", poles.join(", "));
        println!(
            "  min sigma_min on scan: {:.3e} at {:.3}",
            d.zero_scan_min, d.zero_scan_argmin
        );
        if d.near_zero {
            println!("  singular on the unit circle: not Fredholm");
            continue;
        }
        match solve_fixed_point(r, &FixedPointOptions::default()) {
            Ok(sol) if sol.stabilizing => println!("  stabilizing Q found: invertible"),
            outcome => {
                let why = match outcome {
                    Ok(sol) if !sol.pivot_ok => "singular pivot".to_string(),
                    Ok(_) => "fixed point is not stabilizing".to_string(),
                    Err(e) => e.to_string(),
                };
                let study = section_study(r, &[8, 16, 32, 64], 8);
                println!("  Riccati: {why}");
                println!(
                    "  sections: singular {} / still moving {}",
                    study.singular_signal, study.divergence_signal
                );
            }
        }
    }
    Ok(())
}
