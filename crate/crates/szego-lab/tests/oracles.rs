//! Closed-form and independently computed reference values.

use std::f64::consts::PI;

use szego_lab::admissibility::{fourier_construct_polydisc, herglotz_solve};
use szego_lab::boundary_geometry::{integrate_real, make_sphere3_grid, make_torus_grid, SPHERE3_MASS};
use szego_lab::quotient_maps::{
    closed_form_density, density_from_jacobian, reinhardt_boundary_mass, DomainId, Group, Provenance, ProperMapSpec, WeightField,
};
use szego_lab::regularity_lab::{
    ball_volume_exact, endpoint_witness_bidisc, gamma_alpha, intsize_integral, predicted_circle_interval, predicted_thullen_interval,
    sphere_moment_mean,
};
use szego_lab::szego_core::{project_torus, BoundaryField};
use szego_lab::C64;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn sphere_moments_match_beta_integral() {
    // |z1|² is uniform on [0, 1] under normalized measure on S³.
    for (p, q) in [(2.0, 2.0), (1.0, 3.0), (4.0, 0.0), (2.5, 1.5)] {
        let oracle = simpson(|s: f64| s.powf(p / 2.0) * (1.0 - s).powf(q / 2.0), 0.0, 1.0, 200_000);
        assert!((sphere_moment_mean(p, q) - oracle).abs() < 1e-6, "({p},{q})");
    }
    assert!((sphere_moment_mean(2.0, 2.0) - 1.0 / 6.0).abs() < 1e-14);
}

#[test]
fn boundary_layer_constants() {
    assert!((gamma_alpha(0.0).unwrap() - PI / 2.0).abs() < 1e-9);
    // The ball of radius √2 is the whole sphere: 2π I = 2π².
    assert!((intsize_integral(0.0, 2f64.sqrt()).unwrap() - PI).abs() < 1e-9);
    assert!((ball_volume_exact(2f64.sqrt()).unwrap() - SPHERE3_MASS).abs() < 1e-8);
}

#[test]
fn small_balls_have_volume_pi_squared_delta_four() {
    for d in [0.02, 0.05] {
        let v = ball_volume_exact(d).unwrap();
        assert!((v / (PI * PI * d.powi(4)) - 1.0).abs() < 0.01, "{d}: {v}");
    }
}

#[test]
fn torus_projection_of_distance_square_is_two() {
    let grid = make_torus_grid(2, 24).unwrap();
    let h = BoundaryField::from_fn(&grid, |z| C64::new((z[0] - z[1]).norm_sqr(), 0.0)).unwrap();
    let sh = project_torus(&grid, &h).unwrap();
    for v in sh.values() {
        assert!((v - C64::new(2.0, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn bidisc_witness_at_p_two_is_two_thirds() {
    // ‖2‖² / ‖|z1 − z2|²‖² = 4 / mean((2 − 2 cos t)²) = 4 / 6.
    let r = endpoint_witness_bidisc(2.0, &[32, 64]).unwrap();
    for q in &r.ratios {
        assert!((q - 2.0 / 3.0).abs() < 1e-12, "{q}");
    }
}

#[test]
fn bidisc_density_mass_matches_direct_quadrature() {
    // The density depends on t = θ1 − θ2 only, so the T² integral is 2π times a 1-D one.
    // Its |t| kink on the diagonal limits the grid rule to second order.
    let f = |t: f64| {
        let s = (t / 2.0).sin();
        (4.0 * s * s + t.sin().powi(2)).sqrt()
    };
    let oracle = 2.0 * PI * simpson(f, 0.0, 2.0 * PI, 20_000);
    let err = |n: usize| {
        let grid = make_torus_grid(2, n).unwrap();
        let w = density_from_jacobian(&ProperMapSpec::symmetrized_bidisc(), &grid).unwrap();
        (integrate_real(&grid, w.values()).unwrap() / oracle - 1.0).abs()
    };
    let (e1, e2) = (err(64), err(128));
    assert!(e1 < 1e-3, "{e1}");
    assert!(e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn reinhardt_mass_of_unit_sphere() {
    assert!((reinhardt_boundary_mass(1, 1) - SPHERE3_MASS).abs() < 1e-10);
}

#[test]
fn thullen_density_matches_pipeline() {
    let grid = make_sphere3_grid(16, 16, 8).unwrap();
    for (m, k) in [(1, 2), (2, 3), (3, 3)] {
        let d = DomainId::Thullen { m, k };
        let a = density_from_jacobian(&d.map_spec().unwrap(), &grid).unwrap();
        let b = closed_form_density(&d, &grid).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn herglotz_recovers_square_root() {
    let a = 0.5;
    let grid = make_torus_grid(1, 2048).unwrap();
    let w = WeightField::from_fn(&grid, Provenance::User, move |z| (C64::new(1.0, 0.0) + z[0] * a).norm()).unwrap();
    let sol = herglotz_solve(&grid, &w).unwrap();
    for z in [C64::new(0.3, 0.2), C64::new(-0.7, 0.1), C64::new(0.0, -0.9)] {
        let oracle = (C64::new(1.0, 0.0) + z * a).sqrt();
        assert!((sol.eval_point(&[z]) - oracle).norm() < 1e-10, "{z}");
    }
}

#[test]
fn orthant_construction_recovers_polynomial() {
    let grid = make_torus_grid(2, 32).unwrap();
    let g = |z: &[C64]| C64::new(1.0, 0.0) + z[0] * z[1] * 0.4;
    let w = WeightField::from_fn(&grid, Provenance::User, move |z| g(z).norm_sqr()).unwrap();
    let rep = fourier_construct_polydisc(&grid, &w, &Group::swap2()).unwrap();
    assert!(!rep.fourier_support.needs_singular_measure);
    let sol = rep.herglotz.unwrap();
    let z = [C64::new(0.5, 0.1), C64::new(-0.2, 0.6)];
    assert!((sol.eval_point(&z) - g(&z)).norm() < 1e-10);
}

#[test]
fn predicted_intervals() {
    let c = predicted_circle_interval(1.0);
    assert_eq!((c.lower, c.upper), (Some(1.5), Some(3.0)));
    let t = predicted_thullen_interval(2, 2);
    assert_eq!((t.lower, t.upper), (Some(4.0 / 3.0), Some(4.0)));
    let t = predicted_thullen_interval(1, 1);
    assert_eq!((t.lower, t.upper), (None, None));
    let t = predicted_thullen_interval(2, 3);
    assert!((t.lower.unwrap() - 10.0 / 7.0).abs() < 1e-15 && (t.upper.unwrap() - 10.0 / 3.0).abs() < 1e-15);
}
