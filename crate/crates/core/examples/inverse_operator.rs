//! Explicit blocks of the inverse operator compared with numerically
//! inverted finite sections, and the Riccati solution recovered from them.
//!
//! Run with `cargo run --example inverse_operator`.

use toepricc::instances::random_instances;
use toepricc::toeplitz::{inverse_convergence, q_from_inverse};
use toepricc::{build_factors, inverse_blocks, solve_fixed_point, FixedPointOptions, Split};

fn main() -> toepricc::Result<()> {
    let inst = random_instances(11, 1).remove(0);
    let r = &inst.realization;
    let sol = solve_fixed_point(r, &FixedPointOptions::default())?;
    let f = build_factors(r, &sol, Split::IdentityDelta)?;

    let blocks = inverse_blocks(&f, 4);
    println!("block (0, 0) of the inverse:\n{:?}", blocks.block(0, 0));
    println!("block (3, 1) of the inverse:\n{:?}", blocks.block(3, 1));

    println!("{:>4} {:>22}", "N", "max window block error");
    for row in inverse_convergence(r, &f, &[8, 16, 32, 64, 128], 8) {
        match row.max_block_error {
            Some(e) => println!("{:>4} {e:>22.3e}", row.n),
            None => println!("{:>4} {:>22}", row.n, "singular"),
        }
    }
    for n in [16, 32, 64] {
        println!(
            "N = {n:>3}: |Q from inverse blocks - Q| = {:.2e}",
            q_from_inverse(r, &f, n).dist(&sol.q)
        );
    }
    Ok(())
}
