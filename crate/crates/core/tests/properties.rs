use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toepricc::factorization::{build_factors, verify_product, Split};
use toepricc::instances::{random_instance, Instance, InstanceParams};
use toepricc::matcore::{c64, eigenvalues, inverse, singular_values, solve, spectral_radius, CMatrix, C64};
use toepricc::riccati::{riccati_map, solve_finite_section, solve_fixed_point, FixedPointOptions};
use toepricc::toeplitz::{inverse_blocks, max_block_error, psi_inv_section, psi_section};

fn matrix(n: usize, cols: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * cols)
        .prop_map(move |v| CMatrix::from_vec(n, cols, v.into_iter().map(|(a, b)| c64(a, b)).collect()).unwrap())
}

fn square() -> impl Strategy<Value = CMatrix> {
    (1usize..7).prop_flat_map(|n| matrix(n, n))
}

fn instance() -> impl Strategy<Value = Instance> {
    (any::<u64>(), 1usize..=3, 1usize..=4, 1usize..=4).prop_map(|(seed, m, s, t)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = InstanceParams::new(m, s, t, 1 + (seed as usize) % m.min(t));
        random_instance(&mut rng, &params, 2000).expect("instance within the attempt budget")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solve_round_trip(m in square(), shift in 2.0f64..4.0) {
        // diagonal shift keeps the system well conditioned
        let n = m.rows();
        let a = &m + &CMatrix::identity(n).scale_real(shift * n as f64);
        let x = CMatrix::from_fn(n, 2, |i, j| c64(i as f64 - 1.5, j as f64 + 0.25));
        let b = &a * &x;
        let got = solve(&a, &b).unwrap();
        prop_assert!(got.dist(&x) < 1e-12 * (1.0 + x.norm_fro()));
        let inv = inverse(&a).unwrap();
        prop_assert!((&a * &inv).dist(&CMatrix::identity(n)) < 1e-12);
    }

    #[test]
    fn eigenvalues_respect_trace_and_norm_bounds(m in square()) {
        let eig = eigenvalues(&m).unwrap();
        prop_assert_eq!(eig.len(), m.rows());
        let trace: C64 = (0..m.rows()).map(|i| m[(i, i)]).sum();
        let sum: C64 = eig.iter().sum();
        prop_assert!((trace - sum).norm() < 1e-10 * (1.0 + m.norm_fro()));
        let rho = spectral_radius(&m).unwrap();
        prop_assert!(rho <= m.max_row_sum() * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn triangular_spectrum_is_the_diagonal(m in square()) {
        let n = m.rows();
        let u = CMatrix::from_fn(n, n, |i, j| if i <= j { m[(i, j)] } else { c64(0.0, 0.0) });
        let mut eig = eigenvalues(&u).unwrap();
        for i in 0..n {
            let d = m[(i, i)];
            let k = eig
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - d).norm().total_cmp(&(b.1 - d).norm()))
                .map(|(k, _)| k)
                .unwrap();
            prop_assert!((eig[k] - d).norm() < 1e-6, "{:?} vs {:?}", eig, d);
            eig.remove(k);
        }
    }

    #[test]
    fn singular_values_match_frobenius_norm(m in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))) {
        let sv = singular_values(&m).unwrap();
        let ss: f64 = sv.iter().map(|s| s * s).sum();
        prop_assert!((ss - m.norm_fro().powi(2)).abs() < 1e-12 * (1.0 + ss));
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rank_deficient_products_have_a_zero_singular_value(a in matrix(4, 2), b in matrix(2, 4)) {
        let p = &a * &b;
        let sv = singular_values(&p).unwrap();
        prop_assert!(sv[3] <= 1e-12 * (1.0 + sv[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn laurent_series_sums_to_the_symbol(inst in instance(), theta in 0.0f64..std::f64::consts::TAU) {
        let r = &inst.realization;
        // inside the annulus 1 < |z| < 1/ρ(A)
        let z = C64::from_polar(1.1, theta);
        let (plus, minus) = r.laurent_coefficients(400);
        let mut sum = r.laurent_coefficient(0);
        let mut zp = c64(1.0, 0.0);
        for c in plus.iter().skip(1) {
            zp *= z;
            sum = &sum + &c.scale(zp);
        }
        let zi = z.inv();
        let mut zm = c64(1.0, 0.0);
        for c in minus.iter().skip(1) {
            zm *= zi;
            sum = &sum + &c.scale(zm);
        }
        let exact = r.evaluate(z).unwrap();
        prop_assert!(sum.dist(&exact) < 1e-9 * (1.0 + exact.norm_fro()));
    }

    #[test]
    fn scaled_symbol_is_a_substitution(inst in instance(), theta in 0.0f64..std::f64::consts::TAU, rad in 0.5f64..1.2) {
        let r = &inst.realization;
        let scaled = r.scale(1.1).unwrap();
        let z = C64::from_polar(rad, theta);
        let lhs = scaled.evaluate(z);
        let rhs = r.evaluate(z * 1.1);
        if let (Ok(lhs), Ok(rhs)) = (lhs, rhs) {
            prop_assert!(lhs.dist(&rhs) < 1e-10 * (1.0 + rhs.norm_fro()));
        }
    }

    #[test]
    fn fixed_point_recovers_the_constructed_solution(inst in instance()) {
        let r = &inst.realization;
        let sol = solve_fixed_point(r, &FixedPointOptions::default()).unwrap();
        prop_assert!(sol.stabilizing);
        prop_assert!(sol.q.dist(&inst.q) < 1e-9 * (1.0 + inst.q.norm_fro()));
        let f = build_factors(r, &sol, Split::IdentityDelta).unwrap();
        prop_assert!(verify_product(r, &f, 256).unwrap() < 1e-9);
    }

    #[test]
    fn finite_section_solution_is_the_iterate(inst in instance(), n in 1usize..12) {
        let r = &inst.realization;
        let mut q = CMatrix::zeros(r.t(), r.s());
        for _ in 0..n {
            q = riccati_map(r, &q).unwrap();
        }
        let qn = solve_finite_section(r, n, 1.0).unwrap();
        prop_assert!(qn.dist(&q) < 1e-9 * (1.0 + q.norm_fro()));
    }

    #[test]
    fn inverse_blocks_are_split_invariant_and_telescope(inst in instance()) {
        let r = &inst.realization;
        let sol = solve_fixed_point(r, &FixedPointOptions::default()).unwrap();
        let a = build_factors(r, &sol, Split::IdentityDelta).unwrap();
        let b = build_factors(r, &sol, Split::IdentityD).unwrap();
        let n = 12;
        let ia = inverse_blocks(&a, n);
        let ib = inverse_blocks(&b, n);
        prop_assert!(max_block_error(&ia.data, &ib.data, r.m()) < 1e-11);
        // [T^{-1}]_{i+1,j+1} - [T^{-1}]_{i,j} = Θ^×_{i+1} Ψ^×_{j+1}
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let lhs = &ia.block(i + 1, j + 1) - &ia.block(i, j);
                let rhs = &ia.theta_x[i + 1] * &ia.psi_x[j + 1];
                prop_assert!(lhs.dist(&rhs) < 1e-10 * (1.0 + rhs.norm_fro()));
            }
        }
        let prod = &psi_inv_section(&a, n).into_data() * &psi_section(&a, n).into_data();
        prop_assert!(max_block_error(&prod, &CMatrix::identity(n * r.m()), r.m()) < 1e-12);
    }
}
