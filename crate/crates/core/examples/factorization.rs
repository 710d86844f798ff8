//! Builds Ω = ΨΘ under both normalizations of the middle factor and checks
//! the factors and their inverses on circles around the unit circle.
//!
//! Run with `cargo run --example factorization`.

use toepricc::factorization::{check_minimality_of_factors, verify_inverse_factors, verify_product};
use toepricc::instances::random_instances;
use toepricc::matcore::C64;
use toepricc::{build_factors, solve_fixed_point, FixedPointOptions, Split};

fn main() -> toepricc::Result<()> {
    let inst = random_instances(3, 1).remove(0);
    let r = &inst.realization;
    let sol = solve_fixed_point(r, &FixedPointOptions::default())?;

    for split in [Split::IdentityDelta, Split::IdentityD] {
        let f = build_factors(r, &sol, split)?;
        println!("split {split}:");
        println!("  |Psi Theta - Omega| (relative) = {:.2e}", verify_product(r, &f, 512)?);
        println!(
            "  |inverse factors| residual     = {:.2e}",
            verify_inverse_factors(&f, 512)?
        );
        println!(
            "  minimal realizations           = {:?}",
            check_minimality_of_factors(&f)?.flags()
        );
        let z = C64::new(0.2, 0.9);
        let theta = f.theta.evaluate(z)?;
        let theta_inv = f.theta_inv.evaluate(z)?;
        println!("  |Theta(z) Theta^-1(z) - I| at z = {z} : {:.2e}", {
            let eye = toepricc::CMatrix::identity(r.m());
            (&theta * &theta_inv).dist(&eye)
        });
    }
    Ok(())
}
