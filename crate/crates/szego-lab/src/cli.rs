//! Command-line front end. Every subcommand prints a JSON envelope carrying
//! the command, library version, seed and grid metadata; tables go to CSV.
//!
//! Settings resolve as: command-line flag, then the `[<subcommand>]` section
//! of the `--config` file, then its `[defaults]` section, then built-ins.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ini::Ini;
use serde::Serialize;
use serde_json::{json, Value};

use crate::admissibility::{fourier_construct_polydisc, herglotz_solve, log_integrability_domain, Verdict};
use crate::boundary_geometry::{make_sphere3_grid, make_torus_grid, BoundaryGrid, ManifoldId};
use crate::error::{LabError, Result};
use crate::numeric::{fmt17, C64};
use crate::quotient_maps::{closed_form_density, density_from_jacobian, pushforward_mass_check, DomainId, Provenance, WeightField};
use crate::quotient_szego::{
    power1d_context, product_power_context, project_quotient, random_invariant_family, weighted_equivalence_check, QuadrupleContext,
    QuotientFunction,
};
use crate::regularity_lab::{
    ap_interval_detect, asymptotic_check, bidisc_ap_scan, bidisc_interval_detect, circle_power_scan, endpoint_witness_bidisc,
    endpoint_witness_thullen, intsize_refinement, thullen_interval_scan, triangle_check, ApScanReport, BidiscWeight, GrowthClass,
};
use crate::szego_core::{BoundaryField, SzegoProjector};

pub const THREADS_ENV: &str = "SZEGO_LAB_THREADS";
/// Pipeline-versus-closed-form tolerance for the `density` command.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "szego-lab", version, about = "Szegő projections and Hardy-space experiments on quotient domains")]
pub struct Cli {
    /// INI file with [defaults] and per-command sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Random seed, recorded in every output.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for <command>.json and <command>.csv.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit a boundary grid.
    Grid(GridArgs),
    /// Pullback density by the Jacobian pipeline against the closed form.
    Density(DomainArgs),
    /// Log-integrability, orthant construction or Herglotz solve.
    Admissibility(AdmissibilityArgs),
    /// Quotient Szegő projection of a field read from JSON.
    Project(ProjectArgs),
    /// Muckenhoupt A_p scan.
    ApScan(ApScanArgs),
    /// Endpoint witness ratios across grid refinements.
    Endpoint(EndpointArgs),
    /// Boundary-layer integral asymptotics.
    Asymptotics(AsymptoticsArgs),
    /// Aggregate run of all acceptance checks at reduced resolution.
    Report,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// torus_1, torus_2, … or sphere3.
    #[arg(long)]
    pub manifold: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Third sphere axis (φ3) resolution.
    #[arg(long)]
    pub n3: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DomainArgs {
    /// symmetrized_bidisc, thullen, minimal_ball or product_power.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AdmissibilityArgs {
    #[command(flatten)]
    pub domain: DomainArgs,
    /// Refinement levels for the log-integrability verdict.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<usize>>,
    /// Solve for w = |1 + a z| on T instead of a domain density.
    #[arg(long)]
    pub outer: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// power1d or product_power.
    #[arg(long)]
    pub context: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    /// JSON file {"values": [[re, im], …]} in grid node order.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ApScanArgs {
    /// power, bidisc, bidisc_comparable or thullen.
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Sphere grid resolution per axis for thullen scans.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// bidisc or thullen.
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Sphere projector degree.
    #[arg(long)]
    pub degree: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub deltas: Option<Vec<f64>>,
}

/// Resolved settings source for one subcommand.
struct Settings {
    ini: Option<Ini>,
    section: &'static str,
}

impl Settings {
    fn load(path: Option<&Path>, section: &'static str) -> Result<Self> {
        let ini = match path {
            Some(p) => Some(Ini::load_from_file(p).map_err(|e| LabError::Configuration(format!("cannot read config {}: {e}", p.display())))?),
            None => None,
        };
        Ok(Self { ini, section })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let ini = self.ini.as_ref()?;
        ini.get_from(Some(self.section), key).or_else(|| ini.get_from(Some("defaults"), key))
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s.trim().parse().map_err(|_| LabError::Configuration(format!("config key {key} = {s:?} does not parse"))),
            None => Ok(default),
        }
    }

    fn get_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.raw(key)
            .map(|s| s.trim().parse().map_err(|_| LabError::Configuration(format!("config key {key} = {s:?} does not parse"))))
            .transpose()
    }

    fn list<T: FromStr>(&self, flag: Option<Vec<T>>, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| LabError::Configuration(format!("config key {key} has bad entry {x:?}"))))
                .collect(),
            None => Ok(default),
        }
    }
}

/// Result of one command: JSON body, optional CSV table and pass flag.
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    /// Name of the violated invariant, if a numerical check failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(json: Value, csv: Option<String>) -> Self {
        Self { json, csv, failure: None }
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: Option<String>,
    passed: bool,
    failure: Option<String>,
    result: &'a Value,
}

fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

fn grid_meta(grid: &BoundaryGrid) -> Value {
    json!({ "manifold_id": grid.manifold().label(), "resolutions": grid.resolutions(), "nodes": grid.len() })
}

fn domain_from(s: &Settings, a: &DomainArgs) -> Result<DomainId> {
    let label: String = s.get(a.domain.clone(), "domain", "symmetrized_bidisc".to_string())?;
    let m = s.get(a.m, "m", 2)?;
    let k = s.get(a.k, "k", 2)?;
    DomainId::parse(&label, m, k)
}

fn grid_for(domain: &DomainId, n: usize) -> Result<BoundaryGrid> {
    match domain.manifold() {
        ManifoldId::Torus(d) => make_torus_grid(d, n),
        ManifoldId::Sphere3 => make_sphere3_grid(n, n, n),
    }
}

fn run_grid(s: &Settings, a: &GridArgs) -> Result<Outcome> {
    let manifold = ManifoldId::parse(&s.get(a.manifold.clone(), "manifold", "torus_2".to_string())?)?;
    let n = s.get(a.n, "n", 16)?;
    let grid = match manifold {
        ManifoldId::Torus(d) => make_torus_grid(d, n)?,
        ManifoldId::Sphere3 => make_sphere3_grid(n, n, s.get(a.n3, "n3", n)?)?,
    };
    let doc = grid.to_document();
    let csv = csv_table(
        &["index", "params", "weight"],
        doc.nodes.iter().zip(&doc.weights).enumerate().map(|(i, (x, w))| {
            vec![i.to_string(), x.iter().map(|v| fmt17(*v)).collect::<Vec<_>>().join(" "), fmt17(*w)]
        }),
    );
    Ok(Outcome::ok(serde_json::to_value(&doc).map_err(|e| LabError::Io(e.to_string()))?, Some(csv)))
}

fn run_density(s: &Settings, a: &DomainArgs) -> Result<Outcome> {
    let domain = domain_from(s, a)?;
    let n = s.get(a.n, "n", 32)?;
    let grid = grid_for(&domain, n)?;
    let spec = domain.map_spec()?;
    let w = density_from_jacobian(&spec, &grid)?;
    let oracle = closed_form_density(&domain, &grid)?;
    let diffs: Vec<f64> = w.values().iter().zip(oracle.values()).map(|(x, y)| (x - y).abs()).collect();
    let max_dev = diffs.iter().copied().fold(0.0, f64::max);
    let mass = pushforward_mass_check(&spec, &grid, &w)?;
    let csv = csv_table(
        &["index", "pipeline", "closed_form", "abs_error"],
        (0..grid.len()).map(|i| vec![i.to_string(), fmt17(w.values()[i]), fmt17(oracle.values()[i]), fmt17(diffs[i])]),
    );
    let json = json!({
        "domain": domain,
        "grid": grid_meta(&grid),
        "max_deviation": max_dev,
        "tolerance": DENSITY_TOL,
        "mass_check": mass,
    });
    let failure = (max_dev >= DENSITY_TOL).then(|| format!("pipeline density equals the closed form (deviation {max_dev:e})"));
    Ok(Outcome { json, csv: Some(csv), failure })
}

fn run_admissibility(s: &Settings, a: &AdmissibilityArgs) -> Result<Outcome> {
    if let Some(alpha) = s.get_opt(a.outer, "outer")? {
        let n = s.get(a.domain.n, "n", 4096)?;
        let grid = make_torus_grid(1, n)?;
        let w = WeightField::from_fn(&grid, Provenance::User, move |z| (C64::new(1.0, 0.0) + z[0] * alpha).norm())?;
        let sol = herglotz_solve(&grid, &w)?;
        let csv = csv_table(
            &["r", "residual_l1", "residual_sup", "min_abs_g"],
            sol.shells.iter().map(|r| vec![fmt17(r.r), fmt17(r.residual_l1), fmt17(r.residual_sup), fmt17(r.min_abs_g)]),
        );
        let json = json!({
            "weight": format!("|1 + {alpha} z|"),
            "grid": grid_meta(&grid),
            "shells": sol.shells,
            "boundary_residual_l1": sol.boundary_residual_l1,
            "boundary_residual_sup": sol.boundary_residual_sup,
            "min_abs_g": sol.min_abs_g,
        });
        return Ok(Outcome::ok(json, Some(csv)));
    }
    let domain = domain_from(s, &a.domain)?;
    let default_levels = match domain.manifold() {
        ManifoldId::Torus(_) => vec![32, 64, 128, 256],
        ManifoldId::Sphere3 => vec![16, 32, 64],
    };
    let levels = s.list(a.levels.clone(), "levels", default_levels)?;
    let li = log_integrability_domain(&domain, &levels)?;
    let mut json = json!({ "domain": domain, "log_integrability": li });
    let mut csv = csv_table(
        &["level", "log_l1", "relative_increment"],
        li.levels.iter().enumerate().map(|(i, l)| {
            vec![
                l.to_string(),
                fmt17(li.estimates[i]),
                if i == 0 { String::new() } else { fmt17(li.relative_increments[i - 1]) },
            ]
        }),
    );
    if let ManifoldId::Torus(_) = domain.manifold() {
        let n = s.get(a.domain.n, "n", 64)?;
        let grid = grid_for(&domain, n)?;
        let spec = domain.map_spec()?;
        let w = density_from_jacobian(&spec, &grid)?;
        let rep = fourier_construct_polydisc(&grid, &w, &spec.group)?;
        if let Some(h) = &rep.herglotz {
            csv = csv_table(
                &["r", "residual_l1", "residual_sup", "min_abs_g"],
                h.shells.iter().map(|r| vec![fmt17(r.r), fmt17(r.residual_l1), fmt17(r.residual_sup), fmt17(r.min_abs_g)]),
            );
        }
        json["grid"] = grid_meta(&grid);
        json["fourier_support"] = serde_json::to_value(&rep.fourier_support).map_err(|e| LabError::Io(e.to_string()))?;
        json["constructed"] = json!(rep.herglotz.is_some());
        if let Some(h) = rep.herglotz {
            json["herglotz_boundary_residual_sup"] = json!(h.boundary_residual_sup);
        }
    }
    let failure = (li.verdict == Verdict::Divergent).then(|| "log w is integrable".to_string());
    Ok(Outcome { json, csv: Some(csv), failure })
}

fn read_field(path: &Path, len: usize) -> Result<Vec<C64>> {
    let text = fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| LabError::Configuration(format!("input is not JSON: {e}")))?;
    let arr = doc
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| LabError::Configuration("input needs a \"values\" array".into()))?;
    let values = arr
        .iter()
        .map(|v| match v.as_array().map(|p| (p.first().and_then(Value::as_f64), p.get(1).and_then(Value::as_f64))) {
            Some((Some(re), Some(im))) => Ok(C64::new(re, im)),
            _ => v.as_f64().map(|re| C64::new(re, 0.0)).ok_or_else(|| LabError::Configuration("values must be numbers or [re, im] pairs".into())),
        })
        .collect::<Result<Vec<C64>>>()?;
    if values.len() != len {
        return Err(LabError::GridMismatch { field: values.len(), grid: len });
    }
    Ok(values)
}

fn context_from(s: &Settings, kind: &str, m: Option<u32>, k: Option<u32>, n: Option<usize>) -> Result<QuadrupleContext> {
    match kind {
        "power1d" => power1d_context(s.get(m, "m", 2)?, s.get(n, "n", 64)?),
        "product_power" => product_power_context(s.get(m, "m", 2)?, s.get(k, "k", 2)?, s.get(n, "n", 32)?),
        other => Err(LabError::Parameter(format!("unknown projection context {other:?}"))),
    }
}

fn run_project(s: &Settings, a: &ProjectArgs) -> Result<Outcome> {
    let kind: String = s.get(a.context.clone(), "context", "product_power".to_string())?;
    let ctx = context_from(s, &kind, a.m, a.k, a.n)?;
    let input: PathBuf = s
        .get_opt(a.input.clone(), "input")?
        .ok_or_else(|| LabError::Configuration("project needs --input".into()))?;
    let values = read_field(&input, ctx.grid.len())?;
    let f = QuotientFunction::new(&ctx, BoundaryField::from_values(values)?)?;
    let t = project_quotient(&ctx, &f)?;
    let tt = project_quotient(&ctx, &t)?;
    let idem = t.values().iter().zip(tt.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let csv = csv_table(
        &["index", "re", "im"],
        t.values().iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt17(v.re), fmt17(v.im)]),
    );
    let json = json!({
        "context": kind,
        "grid": grid_meta(&ctx.grid),
        "group_order": ctx.spec.group.order(),
        "g_residual": ctx.g_residual,
        "input_invariance_residual": f.invariance_residual,
        "output_invariance_residual": t.invariance_residual,
        "idempotence_residual": idem,
        "values": t.values().iter().map(|v| [v.re, v.im]).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(json, Some(csv)))
}

fn scan_rows(scans: &[ApScanReport]) -> String {
    csv_table(
        &["p", "center_id", "delta", "characteristic"],
        scans.iter().flat_map(|sc| {
            sc.entries
                .iter()
                .map(move |e| vec![fmt17(sc.p), e.center_id.clone(), fmt17(e.delta), fmt17(e.characteristic)])
        }),
    )
}

fn scan_summary(scans: &[ApScanReport]) -> Value {
    Value::Array(
        scans
            .iter()
            .map(|sc| {
                json!({
                    "p": sc.p,
                    "verdict": sc.verdict,
                    "sup_characteristic": sc.running_sup.last(),
                    "log_slope": sc.log_slope,
                    "shell_tests": sc.shell_tests.iter().map(|t| json!({"factor": t.factor, "tail_log_ratio": t.tail_log_ratio, "integrable": t.integrable})).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn run_ap_scan(s: &Settings, a: &ApScanArgs) -> Result<Outcome> {
    let weight: String = s.get(a.weight.clone(), "weight", "power".to_string())?;
    let ps = s.list(a.p.clone(), "p", vec![2.0])?;
    if let Some(bad) = ps.iter().find(|p| !(**p > 1.0 && p.is_finite())) {
        return Err(LabError::Parameter(format!("p = {bad} must lie in (1, ∞)")));
    }
    let (scans, detection) = match weight.as_str() {
        "power" => {
            let alpha = s.get(a.alpha, "alpha", 0.5)?;
            let scans = ps.iter().map(|&p| circle_power_scan(alpha, p)).collect::<Result<Vec<_>>>()?;
            (scans, serde_json::to_value(ap_interval_detect(alpha)?))
        }
        "bidisc" | "bidisc_comparable" => {
            let w = if weight == "bidisc" { BidiscWeight::Density } else { BidiscWeight::Comparable };
            let scans = ps.iter().map(|&p| bidisc_ap_scan(w, p)).collect::<Result<Vec<_>>>()?;
            (scans, serde_json::to_value(bidisc_interval_detect(w)))
        }
        "thullen" => {
            let (m, k) = (s.get(a.m, "m", 2)?, s.get(a.k, "k", 2)?);
            let n = s.get(a.n, "n", 64)?;
            let r = thullen_interval_scan(m, k, &ps, [n, n, n])?;
            let det = json!({ "predicted": r.predicted, "detected": r.detected, "max_endpoint_error": r.max_endpoint_error, "grid": r.grid });
            (r.scans, Ok(det))
        }
        other => return Err(LabError::Parameter(format!("unknown weight {other:?}"))),
    };
    let detection = detection.map_err(|e| LabError::Io(e.to_string()))?;
    let json = json!({ "weight": weight, "scans": scan_summary(&scans), "interval": detection });
    Ok(Outcome::ok(json, Some(scan_rows(&scans))))
}

fn run_endpoint(s: &Settings, a: &EndpointArgs) -> Result<Outcome> {
    let domain: String = s.get(a.domain.clone(), "domain", "bidisc".to_string())?;
    let p = s.get(a.p, "p", 4.0)?;
    let report = match domain.as_str() {
        "bidisc" | "symmetrized_bidisc" => endpoint_witness_bidisc(p, &s.list(a.sizes.clone(), "sizes", vec![32, 64, 128, 256])?)?,
        "thullen" => {
            let (m, k) = (s.get(a.m, "m", 2)?, s.get(a.k, "k", 2)?);
            let degree = s.get(a.degree, "degree", 8)?;
            endpoint_witness_thullen(m, k, p, &s.list(a.sizes.clone(), "sizes", vec![16, 32, 64, 128])?, degree)?
        }
        other => return Err(LabError::Parameter(format!("unknown endpoint domain {other:?}"))),
    };
    let csv = csv_table(
        &["n", "ratio", "projected_constant", "projection_deviation"],
        (0..report.grid_sizes.len()).map(|i| {
            vec![
                report.grid_sizes[i].to_string(),
                fmt17(report.ratios[i]),
                fmt17(report.projected_constant[i]),
                fmt17(report.projection_deviation[i]),
            ]
        }),
    );
    Ok(Outcome::ok(serde_json::to_value(&report).map_err(|e| LabError::Io(e.to_string()))?, Some(csv)))
}

fn run_asymptotics(s: &Settings, a: &AsymptoticsArgs) -> Result<Outcome> {
    let alpha = s.get(a.alpha, "alpha", 0.0)?;
    let deltas = s.list(a.deltas.clone(), "deltas", vec![0.4, 0.2, 0.1, 0.05])?;
    let r = asymptotic_check(alpha, &deltas)?;
    let csv = match (&r.divergence, r.gamma) {
        (Some(d), _) => csv_table(
            &["cutoff", "estimate"],
            d.cutoffs.iter().zip(&d.estimates).map(|(c, e)| vec![fmt17(*c), fmt17(*e)]),
        ),
        (None, Some(g)) => csv_table(
            &["delta", "ratio", "gamma", "relative_error"],
            r.deltas.iter().zip(&r.ratios).map(|(d, q)| vec![fmt17(*d), fmt17(*q), fmt17(g), fmt17((q - g).abs() / g)]),
        ),
        (None, None) => String::new(),
    };
    Ok(Outcome::ok(serde_json::to_value(&r).map_err(|e| LabError::Io(e.to_string()))?, Some(csv)))
}

fn check(name: &str, passed: bool, detail: String) -> Value {
    json!({ "check": name, "passed": passed, "detail": detail })
}

fn run_report(seed: u64) -> Result<Outcome> {
    let mut checks = Vec::new();

    let mut dev = 0.0f64;
    for domain in [DomainId::SymmetrizedBidisc, DomainId::Thullen { m: 2, k: 3 }, DomainId::MinimalBall] {
        let grid = grid_for(&domain, 32)?;
        let w = density_from_jacobian(&domain.map_spec()?, &grid)?;
        let o = closed_form_density(&domain, &grid)?;
        dev = dev.max(w.values().iter().zip(o.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
    }
    checks.push(check("density_oracle", dev < DENSITY_TOL, format!("max deviation {dev:e}")));

    let grid = make_torus_grid(2, 32)?;
    let h = BoundaryField::from_fn(&grid, |z| C64::new((z[0] - z[1]).norm_sqr(), 0.0))?;
    let sh = SzegoProjector::for_grid(&grid)?.project(&h)?;
    let d = sh.values().iter().map(|v| (v - C64::new(2.0, 0.0)).norm()).fold(0.0, f64::max);
    checks.push(check("torus_reproducing_identity", d < 1e-10, format!("max |S h − 2| = {d:e}")));

    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        worst = worst.max(ap_interval_detect(alpha)?.max_endpoint_error);
    }
    checks.push(check("circle_ap_intervals", worst <= 0.05, format!("max endpoint error {worst:.4}")));

    let b = bidisc_interval_detect(BidiscWeight::Density);
    let w4 = endpoint_witness_bidisc(4.0, &[32, 64, 128])?;
    checks.push(check(
        "bidisc_interval",
        b.max_endpoint_error <= 0.1 && w4.classification == GrowthClass::Growing,
        format!("endpoint error {:.4}, p = 4 witness {:?}", b.max_endpoint_error, w4.classification),
    ));

    let t = thullen_interval_scan(2, 2, &[3.0], [48, 48, 48])?;
    checks.push(check("thullen_interval", t.max_endpoint_error <= 0.15, format!("(2,2) endpoint error {:.4}", t.max_endpoint_error)));

    let a = asymptotic_check(0.0, &[0.4, 0.2, 0.1, 0.05])?;
    let dv = intsize_refinement(-1.0, 0.3);
    checks.push(check(
        "boundary_layer_asymptotics",
        a.converged && a.monotone && dv.verdict == Verdict::Divergent,
        format!("alpha 0 error {:?}, alpha −1 {:?}", a.final_relative_error, dv.verdict),
    ));

    let tri = triangle_check(10_000, seed);
    checks.push(check("triangle_inequality", tri.violations == 0, format!("worst excess {:e}", tri.worst_excess)));

    let g1 = make_torus_grid(1, 4096)?;
    let w = WeightField::from_fn(&g1, Provenance::User, |z| (C64::new(1.0, 0.0) + z[0] * 0.5).norm())?;
    let sol = herglotz_solve(&g1, &w)?;
    let r = sol.shells.last().map(|s| s.residual_l1).unwrap_or(f64::NAN);
    checks.push(check("herglotz_residual", r < 1e-3, format!("r = 0.999 residual {r:e}")));

    let ctx = product_power_context(2, 2, 16)?;
    let fam = random_invariant_family(&ctx, 5, seed)?;
    let gap = weighted_equivalence_check(&ctx, 2.0, &fam)?.max_relative_gap;
    checks.push(check("weighted_equivalence", gap < 1e-10, format!("max relative gap {gap:e}")));

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["passed"] == json!(false))
        .filter_map(|c| c["check"].as_str().map(String::from))
        .collect();
    let csv = csv_table(
        &["check", "passed"],
        checks.iter().map(|c| vec![c["check"].as_str().unwrap_or("").to_string(), c["passed"].to_string()]),
    );
    let failure = (!failed.is_empty()).then(|| failed.join(", "));
    Ok(Outcome { json: Value::Array(checks), csv: Some(csv), failure })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Grid(_) => "grid",
        Command::Density(_) => "density",
        Command::Admissibility(_) => "admissibility",
        Command::Project(_) => "project",
        Command::ApScan(_) => "ap-scan",
        Command::Endpoint(_) => "endpoint",
        Command::Asymptotics(_) => "asymptotics",
        Command::Report => "report",
    }
}

/// Cap rayon parallelism from the environment.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| LabError::Configuration(format!("{THREADS_ENV} = {v:?} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Configuration(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Run a parsed command line; returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    let name = command_name(&cli.command);
    let s = Settings::load(cli.config.as_deref(), name)?;
    let seed = s.get(cli.seed, "seed", 0u64)?;
    let format = match s.get_opt(cli.format.map(|f| if f == Format::Csv { "csv".to_string() } else { "json".to_string() }), "format")? {
        Some(f) if f == "csv" => Format::Csv,
        Some(f) if f == "json" => Format::Json,
        Some(f) => return Err(LabError::Configuration(format!("unknown format {f:?}"))),
        None => Format::Json,
    };
    let out_dir: Option<PathBuf> = s.get_opt(cli.out.clone(), "out")?;
    let outcome = match &cli.command {
        Command::Grid(a) => run_grid(&s, a)?,
        Command::Density(a) => run_density(&s, a)?,
        Command::Admissibility(a) => run_admissibility(&s, a)?,
        Command::Project(a) => run_project(&s, a)?,
        Command::ApScan(a) => run_ap_scan(&s, a)?,
        Command::Endpoint(a) => run_endpoint(&s, a)?,
        Command::Asymptotics(a) => run_asymptotics(&s, a)?,
        Command::Report => run_report(seed)?,
    };
    let envelope = Envelope {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config: cli.config.as_ref().map(|p| p.display().to_string()),
        passed: outcome.failure.is_none(),
        failure: outcome.failure.clone(),
        result: &outcome.json,
    };
    let json = serde_json::to_string_pretty(&envelope).map_err(|e| LabError::Io(e.to_string()))?;
    let csv = outcome.csv.as_ref().map(|body| {
        let mut s = String::new();
        let _ = writeln!(s, "# command={name} seed={seed} version={}", env!("CARGO_PKG_VERSION"));
        s.push_str(body);
        s
    });
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir).map_err(|e| LabError::Io(format!("{}: {e}", dir.display())))?;
        fs::write(dir.join(format!("{name}.json")), &json).map_err(|e| LabError::Io(e.to_string()))?;
        if let Some(c) = &csv {
            fs::write(dir.join(format!("{name}.csv")), c).map_err(|e| LabError::Io(e.to_string()))?;
        }
    }
    match (format, &csv) {
        (Format::Csv, Some(c)) => print!("{c}"),
        _ => println!("{json}"),
    }
    if let Some(f) = &outcome.failure {
        eprintln!("numerical check failed: {f}");
        return Ok(1);
    }
    Ok(0)
}
