//! Two routes to the stabilizing Riccati solution: fixed-point iteration
//! from zero, and the finite-section formula `Q_N = 𝒞 T_N^{-1} 𝒪`, with and
//! without the scaling `z → rz`.
//!
//! Run with `cargo run --example riccati_routes`.

use toepricc::instances::random_instances;
use toepricc::riccati::{solve_finite_section, solve_fixed_point, FixedPointOptions};

fn main() -> toepricc::Result<()> {
    let inst = random_instances(7, 1).remove(0);
    let r = &inst.realization;
    println!("instance: m={} s={} t={}", r.m(), r.s(), r.t());

    let sol = solve_fixed_point(r, &FixedPointOptions::default())?;
    println!(
        "fixed point: {} iterations, residual {:.2e}, stabilizing {}",
        sol.iterations, sol.residual, sol.stabilizing
    );
    if let Some(cl) = &sol.closed_loop {
        println!(
            "rho(A_circ) = {:.4}, rho(alpha_circ) = {:.4}",
            cl.rho_a_circ, cl.rho_alpha_circ
        );
    }
    println!("|Q - Q_constructed| = {:.2e}", sol.q.dist(&inst.q));

    println!("{:>4} {:>14} {:>16}", "N", "|Q_N - Q|", "|Q_N(1.05) - Q_N|");
    for n in [4, 8, 16, 32, 64] {
        let qn = solve_finite_section(r, n, 1.0)?;
        let qr = solve_finite_section(r, n, 1.05)?;
        println!("{n:>4} {:>14.3e} {:>16.3e}", qn.dist(&inst.q), qr.dist(&qn));
    }
    Ok(())
}
