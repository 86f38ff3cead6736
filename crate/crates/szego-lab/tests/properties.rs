use proptest::prelude::*;

use szego_lab::boundary_geometry::{make_torus_grid, metric_distance, sphere_point};
use szego_lab::quotient_szego::{commutation_residual, product_power_context, random_invariant_family, weighted_equivalence_check};
use szego_lab::regularity_lab::ap_characteristic_interval;
use szego_lab::szego_core::{project_torus, BoundaryField};
use szego_lab::C64;

fn smooth_weight(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |t: f64| (a * t.cos() + b * (2.0 * t).sin()).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn characteristic_is_at_least_one(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -3.0f64..3.0, len in 0.01f64..6.0, p in 1.05f64..8.0,
    ) {
        let q = ap_characteristic_interval(&smooth_weight(a, b), c, len, p, &[]).unwrap();
        prop_assert!(q >= 1.0 - 1e-9, "{}", q);
    }

    #[test]
    fn power_weight_characteristic_is_at_least_one(
        alpha in -0.9f64..3.0, c in -0.5f64..0.5, len in 0.001f64..2.0, p in 1.05f64..8.0,
    ) {
        let mu = move |t: f64| (2.0 * (0.5 * t).sin()).abs().powf(alpha);
        let q = ap_characteristic_interval(&mu, c, len, p, &[0.0]).unwrap();
        prop_assert!(q >= 1.0 - 1e-9, "{}", q);
    }

    #[test]
    fn dual_characteristic_identity(
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -3.0f64..3.0, len in 0.05f64..6.0, p in 1.1f64..6.0,
    ) {
        let w = smooth_weight(a, b);
        let pp = p / (p - 1.0);
        let sigma = move |t: f64| w(t).powf(-1.0 / (p - 1.0));
        let lw = ap_characteristic_interval(&smooth_weight(a, b), c, len, p, &[]).unwrap().ln();
        let ls = ap_characteristic_interval(&sigma, c, len, pp, &[]).unwrap().ln();
        prop_assert!((ls - lw / (p - 1.0)).abs() < 1e-9 * (1.0 + lw.abs()), "{} {}", ls, lw);
    }

    #[test]
    fn torus_projection_is_idempotent(seed in any::<u64>()) {
        let grid = make_torus_grid(2, 8).unwrap();
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let vals: Vec<C64> = (0..grid.len()).map(|_| C64::new(next(), next())).collect();
        let f = BoundaryField::from_values(vals).unwrap();
        let once = project_torus(&grid, &f).unwrap();
        let twice = project_torus(&grid, &once).unwrap();
        let d = once.values().iter().zip(twice.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn metric_triangle_inequality(
        x in prop::array::uniform3(0.0f64..1.0),
        y in prop::array::uniform3(0.0f64..1.0),
        z in prop::array::uniform3(0.0f64..1.0),
    ) {
        let tau = std::f64::consts::TAU;
        let pt = |u: [f64; 3]| sphere_point(u[0] * tau, u[1] * tau, u[2] * std::f64::consts::FRAC_PI_2);
        let (a, b, c) = (pt(x), pt(y), pt(z));
        let (ab, bc, ac) = (metric_distance(&a, &b), metric_distance(&b, &c), metric_distance(&a, &c));
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((ab - metric_distance(&b, &a)).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quotient_norm_forms_agree(seed in any::<u64>(), p in 1.2f64..5.0) {
        let ctx = product_power_context(2, 2, 12).unwrap();
        let fam = random_invariant_family(&ctx, 3, seed).unwrap();
        let rep = weighted_equivalence_check(&ctx, p, &fam).unwrap();
        prop_assert!(rep.max_relative_gap < 1e-10, "{}", rep.max_relative_gap);
    }

    #[test]
    fn projection_commutes_with_symmetrization(seed in any::<u64>()) {
        let ctx = product_power_context(2, 3, 12).unwrap();
        let vals: Vec<C64> = (0..ctx.grid.len() as u64)
            .map(|i| {
                let h = seed.wrapping_add(i).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                C64::new((h >> 40) as f64 / (1u64 << 24) as f64 - 0.5, ((h >> 16) & 0xFF_FFFF) as f64 / (1u64 << 24) as f64 - 0.5)
            })
            .collect();
        let f = BoundaryField::from_values(vals).unwrap();
        prop_assert!(commutation_residual(&ctx, &f).unwrap() < 1e-10);
    }
}
