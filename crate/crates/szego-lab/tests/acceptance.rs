//! End-to-end acceptance checks, one PASS/FAIL line per criterion.

use std::time::Instant;

use szego_lab::admissibility::{fourier_construct_polydisc, herglotz_solve, log_integrability_domain, Verdict};
use szego_lab::boundary_geometry::{inner, make_sphere3_grid, make_torus_grid};
use szego_lab::quotient_maps::{
    bidisc_density, closed_form_density, density_from_jacobian, thullen_density, DomainId, Group, Provenance, ProperMapSpec,
    WeightField,
};
use szego_lab::quotient_szego::{
    commutation_residual, power1d_context, product_power_context, random_invariant_family, weighted_equivalence_check,
};
use szego_lab::regularity_lab::{
    ap_interval_detect, asymptotic_check, bidisc_interval_detect, endpoint_witness_bidisc, intsize_refinement,
    metric_geometry_check, sphere_moment_mean, thullen_interval_scan, triangle_check, BidiscWeight, GrowthClass,
};
use szego_lab::szego_core::{BoundaryField, SzegoProjector};
use szego_lab::{Result, C64};

type Outcome = Result<(bool, String)>;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn density_oracles() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    let t = Instant::now();
    let grid = make_torus_grid(2, 32)?;
    let w = density_from_jacobian(&ProperMapSpec::symmetrized_bidisc(), &grid)?;
    let oracle: Vec<f64> = (0..grid.len()).map(|i| bidisc_density(grid.node(i)[0] - grid.node(i)[1])).collect();
    worst = worst.max(max_abs_diff(w.values(), &oracle));
    slowest = slowest.max(t.elapsed().as_secs_f64());
    let sphere = make_sphere3_grid(32, 32, 32)?;
    for (m, k) in [(1, 1), (1, 2), (2, 2), (2, 3), (3, 3)] {
        let t = Instant::now();
        let w = density_from_jacobian(&ProperMapSpec::power(m, k)?, &sphere)?;
        let oracle: Vec<f64> =
            (0..sphere.len()).map(|i| thullen_density(m, k, sphere.point(i)[0].norm(), sphere.point(i)[1].norm())).collect();
        worst = worst.max(max_abs_diff(w.values(), &oracle));
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    let w = density_from_jacobian(&ProperMapSpec::minimal_ball(), &sphere)?;
    let oracle = closed_form_density(&DomainId::Thullen { m: 2, k: 2 }, &sphere)?;
    worst = worst.max(max_abs_diff(w.values(), oracle.values()));
    slowest = slowest.max(t.elapsed().as_secs_f64());
    Ok((worst < 1e-10 && slowest < 5.0, format!("max node error {worst:.2e}, slowest {slowest:.2}s")))
}

fn reproducing_identities() -> Outcome {
    let grid = make_torus_grid(2, 64)?;
    let h = BoundaryField::from_fn(&grid, |z| C64::new((z[0] - z[1]).norm_sqr(), 0.0))?;
    let s = SzegoProjector::for_grid(&grid)?.project(&h)?;
    let torus_dev = s.values().iter().map(|v| (v - C64::new(2.0, 0.0)).norm()).fold(0.0, f64::max);

    let sphere = make_sphere3_grid(48, 48, 24)?;
    let proj = SzegoProjector::new(&sphere, 10)?;
    let mut mono_dev = 0.0f64;
    for a in 0..=10u32 {
        for b in 0..=(10 - a) {
            let f = BoundaryField::from_fn(&sphere, move |z| z[0].powu(a) * z[1].powu(b))?;
            let p = proj.project(&f)?;
            mono_dev = mono_dev.max(p.values().iter().zip(f.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
        }
    }
    // Odd powers of |z1| are not smooth in sphere coordinates, so they get a finer grid.
    let fine = make_sphere3_grid(160, 160, 24)?;
    let fine_proj = SzegoProjector::new(&fine, 10)?;
    let mut moment_dev = 0.0f64;
    for (m, k) in [(1u32, 1u32), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2)] {
        let (sphere, proj) = if m % 2 == 1 { (&fine, &fine_proj) } else { (&sphere, &proj) };
        let f = BoundaryField::from_fn(&sphere, move |z| C64::new(z[0].norm().powi(m as i32) * z[1].norm().powi(k as i32), 0.0))?;
        let p = proj.project(&f)?;
        let c = sphere_moment_mean(m as f64, k as f64);
        moment_dev = moment_dev.max(p.values().iter().map(|v| (v - C64::new(c, 0.0)).norm()).fold(0.0, f64::max));
    }
    Ok((
        torus_dev < 1e-10 && mono_dev < 1e-10 && moment_dev < 1e-6,
        format!("torus {torus_dev:.2e}, monomials {mono_dev:.2e}, moment constants {moment_dev:.2e}"),
    ))
}

fn circle_intervals() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let t = Instant::now();
        let r = ap_interval_detect(alpha)?;
        let secs = t.elapsed().as_secs_f64();
        ok &= r.max_endpoint_error <= 0.05 && secs < 30.0;
        parts.push(format!(
            "alpha {alpha}: ({:.3}, {:.3}) err {:.3} {:.1}s",
            r.detected.lower.unwrap_or(1.0),
            r.detected.upper.unwrap_or(f64::INFINITY),
            r.max_endpoint_error,
            secs
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn bidisc_sharp_interval() -> Outcome {
    let d = bidisc_interval_detect(BidiscWeight::Density);
    let c = bidisc_interval_detect(BidiscWeight::Comparable);
    let sizes = [32, 64, 128, 256];
    let w4 = endpoint_witness_bidisc(4.0, &sizes)?;
    let w2 = endpoint_witness_bidisc(2.0, &sizes)?;
    let ok = d.max_endpoint_error <= 0.1
        && c.max_endpoint_error <= 0.1
        && w4.classification == GrowthClass::Growing
        && w4.monotone
        && w4.log_slope > 0.0
        && w4.r_squared > 0.9
        && w2.classification == GrowthClass::Stable;
    Ok((
        ok,
        format!(
            "density ({:.3}, {:.3}), comparable ({:.3}, {:.3}); p=4 slope {:.3} R2 {:.4}; p=2 spread {:.2e}",
            d.detected.lower.unwrap_or(1.0),
            d.detected.upper.unwrap_or(f64::INFINITY),
            c.detected.lower.unwrap_or(1.0),
            c.detected.upper.unwrap_or(f64::INFINITY),
            w4.log_slope,
            w4.r_squared,
            w2.relative_spread
        ),
    ))
}

fn thullen_intervals() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let p_grid = [1.2, 1.5, 2.0, 3.0, 5.0];
    for (m, k) in [(1, 1), (1, 2), (2, 2), (2, 3)] {
        let t = Instant::now();
        let r = thullen_interval_scan(m, k, &p_grid, [96, 96, 96])?;
        let secs = t.elapsed().as_secs_f64();
        ok &= r.max_endpoint_error <= 0.15 && secs < 300.0;
        if (m, k) == (1, 1) {
            ok &= r.detected.lower.is_none() && r.detected.upper.is_none();
        }
        parts.push(format!(
            "({m},{k}): ({:.3}, {:.3}) err {:.3} {:.1}s",
            r.detected.lower.unwrap_or(1.0),
            r.detected.upper.unwrap_or(f64::INFINITY),
            r.max_endpoint_error,
            secs
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn intsize_asymptotics() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.0, 1.0, 2.0] {
        let r = asymptotic_check(alpha, &[0.4, 0.2, 0.1, 0.05])?;
        ok &= r.converged && r.monotone;
        parts.push(format!("alpha {alpha}: err {:.2e} monotone {}", r.final_relative_error.unwrap_or(f64::NAN), r.monotone));
    }
    let d = intsize_refinement(-1.0, 0.3);
    ok &= d.verdict == Verdict::Divergent;
    parts.push(format!("alpha -1: {:?}", d.verdict));
    Ok((ok, parts.join("; ")))
}

fn metric_geometry() -> Outcome {
    let tri = triangle_check(10_000, 11);
    let grid = make_sphere3_grid(128, 128, 128)?;
    let g = metric_geometry_check(&grid, &[0.12, 0.2, 0.3, 0.4], 6, 5)?;
    let ok = tri.violations == 0 && g.under_resolved == 0 && g.doubling_holds && g.max_grid_volume_error < 0.1 && g.engulfing_failures == 0 && g.engulfing_pairs > 0;
    Ok((
        ok,
        format!(
            "triangle violations {}, max doubling ratio {:.2} (bound {:.2}), grid volume error {:.2e}, under-resolved {}, engulfing {}/{}",
            tri.violations,
            g.max_doubling_ratio,
            g.doubling_bound,
            g.max_grid_volume_error,
            g.under_resolved,
            g.engulfing_pairs - g.engulfing_failures,
            g.engulfing_pairs
        ),
    ))
}

fn admissibility() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let b = log_integrability_domain(&DomainId::SymmetrizedBidisc, &[32, 64, 128, 256])?;
    ok &= b.verdict == Verdict::Finite;
    let mut thullen_ok = true;
    for m in 1..=3 {
        for k in 1..=3 {
            let r = log_integrability_domain(&DomainId::Thullen { m, k }, &[16, 32, 64, 128])?;
            thullen_ok &= r.verdict == Verdict::Finite;
        }
    }
    ok &= thullen_ok;
    parts.push(format!("log-integrability bidisc {:?}, thullen all finite {thullen_ok}", b.verdict));

    let a = 0.5;
    let grid = make_torus_grid(1, 4096)?;
    let w = WeightField::from_fn(&grid, Provenance::User, move |z| (C64::new(1.0, 0.0) + z[0] * a).norm())?;
    let sol = herglotz_solve(&grid, &w)?;
    let shell = sol.shells.iter().find(|s| s.r == 0.999).map(|s| s.residual_l1).unwrap_or(f64::NAN);
    ok &= shell < 1e-3;
    parts.push(format!("herglotz r=0.999 residual {shell:.2e}"));

    let grid2 = make_torus_grid(2, 32)?;
    let w2 = WeightField::from_fn(&grid2, Provenance::User, |z| (C64::new(1.0, 0.0) + z[0] * z[1] * 0.4).norm_sqr())?;
    let rep = fourier_construct_polydisc(&grid2, &w2, &Group::trivial(2))?;
    let res = rep.herglotz.as_ref().map(|h| h.boundary_residual_sup).unwrap_or(f64::INFINITY);
    ok &= res < 1e-6 && !rep.fourier_support.needs_singular_measure;
    let wb = density_from_jacobian(&ProperMapSpec::symmetrized_bidisc(), &grid2)?;
    let bd = fourier_construct_polydisc(&grid2, &wb, &Group::swap2())?;
    ok &= bd.fourier_support.needs_singular_measure && bd.fourier_support.outside_mass > 0.0;
    parts.push(format!(
        "orthant residual {res:.2e}; bidisc off-orthant mass {:.3e} flagged {}",
        bd.fourier_support.outside_mass, bd.fourier_support.needs_singular_measure
    ));
    Ok((ok, parts.join("; ")))
}

fn structural_invariants() -> Outcome {
    let mut worst_proj = 0.0f64;
    let torus = make_torus_grid(2, 16)?;
    let sphere = make_sphere3_grid(24, 24, 16)?;
    for grid in [&torus, &sphere] {
        let proj = SzegoProjector::new(grid, 6)?;
        let f = BoundaryField::from_fn(grid, |z| (z[0] * 1.3 - z[1].conj()).exp() + z[1].norm_sqr())?;
        let g = BoundaryField::from_fn(grid, |z| (z[0].conj() * z[1] + 0.2).powu(3))?;
        let pf = proj.apply(f.values())?;
        let ppf = proj.apply(&pf)?;
        let pg = proj.apply(g.values())?;
        worst_proj = worst_proj.max(pf.iter().zip(&ppf).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        let lhs = inner(grid, &pf, g.values())?;
        let rhs = inner(grid, f.values(), &pg)?;
        worst_proj = worst_proj.max((lhs - rhs).norm());
    }
    let product = product_power_context(2, 2, 32)?;
    let onedim = power1d_context(2, 64)?;
    let mut commute = 0.0f64;
    let mut gap = 0.0f64;
    for ctx in [&product, &onedim] {
        let f = BoundaryField::from_fn(&ctx.grid, |z| z.iter().map(|v| (v * 0.7).exp() + v.conj().powu(2)).sum::<C64>())?;
        commute = commute.max(commutation_residual(ctx, &f)?);
        let fam = random_invariant_family(ctx, 5, 3)?;
        for p in [2.0, 3.0] {
            gap = gap.max(weighted_equivalence_check(ctx, p, &fam)?.max_relative_gap);
        }
    }
    Ok((
        worst_proj < 1e-10 && commute < 1e-8 && gap < 1e-10,
        format!("projector {worst_proj:.2e}, commutation {commute:.2e}, equivalence gap {gap:.2e}"),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 density oracle equivalence", density_oracles),
        ("2 reproducing identities", reproducing_identities),
        ("3 A_p interval detection on T", circle_intervals),
        ("4 bidisc sharp interval", bidisc_sharp_interval),
        ("5 Thullen intervals", thullen_intervals),
        ("6 boundary-layer asymptotics", intsize_asymptotics),
        ("7 metric geometry", metric_geometry),
        ("8 admissibility", admissibility),
        ("9 structural invariants", structural_invariants),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
