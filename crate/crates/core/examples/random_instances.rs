//! Random invertible symbols with eigenvalues of α on the unit circle,
//! built backwards from stable factor data.
//!
//! Run with `cargo run --example random_instances`.

use toepricc::instances::random_instances;
use toepricc::matcore::spectral_radius;
use toepricc::symbol::check_minimality;

fn main() -> toepricc::Result<()> {
    println!(
        "{:>2} {:>2} {:>2} {:>8} {:>9} {:>11} {:>8}",
        "m", "s", "t", "rho(A)", "rho(A∘)", "rho(alpha∘)", "minimal"
    );
    for inst in random_instances(2024, 8) {
        let r = &inst.realization;
        println!(
            "{:>2} {:>2} {:>2} {:>8.3} {:>9.3} {:>11.3} {:>8}",
            r.m(),
            r.s(),
            r.t(),
            spectral_radius(r.a())?,
            spectral_radius(&inst.a_circ)?,
            spectral_radius(&inst.alpha_circ)?,
            check_minimality(r)?.passed()
        );
    }
    Ok(())
}
