//! Subcommands and the shared run loop.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirquant_core::contour::{fixed_tau_region, probability_contents, sweep};
use dirquant_core::depth::{depth_2d, depth_kd_approx, depth_region_bruteforce_2d};
use dirquant_core::directional::{
    figure2_scenario, kkt_reconstruction, lambda_scan, mass_center_gap, tau_u_quantile, MAX_ELL,
};
use dirquant_core::envelope::{compare_regions, km_envelope, EnvelopeConfig};
use dirquant_core::geometry::{equispaced_directions, point_in_region, Location};
use dirquant_core::qr::check_tau;
use dirquant_core::regression::{
    coverage_diagnostic, direction_grid, fixed_x_cut, regression_grid, regression_quantile,
};
use dirquant_core::{Direction, Error as CoreError, PointCloud};
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::ingest::{apply_jitter, ingest_csv, Dataset};
use crate::report::{counts_json, region_json, region_table, swept_json, Table};
use crate::svg::Plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "dirquant",
    version,
    about = "Directional quantiles, exact depth contours and multiplier outlier scans"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Input CSV with a header row.
    #[arg(short, long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Jitter amplitude applied when the data are not in general position; 0 disables.
    #[arg(long, global = true, default_value_t = 1e-5)]
    pub jitter: f64,
    #[arg(short, long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Report errors on standard error as JSON.
    #[arg(long, global = true)]
    pub json_errors: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TauArg {
    #[arg(long)]
    pub tau: f64,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// One τu-quantile hyperplane with its multiplier.
    Quantile {
        #[command(flatten)]
        tau: TauArg,
        /// Direction, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        u: String,
    },
    /// Exact bivariate depth contour from the direction sweep.
    Contour {
        #[command(flatten)]
        tau: TauArg,
    },
    /// Halfspace depth of query points, and optionally the brute-force region.
    Depth {
        /// Query point, comma separated; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
        #[arg(long)]
        tau: Option<f64>,
        /// Random directions used when the dimension exceeds two.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Envelope of projection quantiles against the exact region.
    Km {
        #[command(flatten)]
        tau: TauArg,
        #[arg(long, default_value_t = 201)]
        k: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
    },
    /// Multipliers over equispaced directions with outlier flags.
    Scan {
        #[command(flatten)]
        tau: TauArg,
        #[arg(long, default_value_t = 36)]
        directions: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
        #[arg(long, default_value_t = dirquant_core::directional::DEFAULT_FLAG_C)]
        flag_c: f64,
    },
    /// Regression quantile, fixed-x cut and coverage diagnostic.
    Regress {
        #[command(flatten)]
        tau: TauArg,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        /// Regressor value for the response-space cut.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
        #[arg(long, default_value_t = dirquant_core::regression::DEFAULT_GRID)]
        grid: usize,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Outlier experiment: multiplier against outlier distance.
    Fig2 {
        #[arg(long, default_value_t = 2.5 / 99.0)]
        tau: f64,
        /// Directory for the two SVG panels.
        #[arg(long, default_value = ".")]
        svg_dir: PathBuf,
    },
}

/// What a command produces before formatting.
pub struct Artifact {
    pub result: Value,
    pub table: Table,
    pub svg: Option<String>,
}

/// Messages for standard error.
#[derive(Debug, Default)]
pub struct Outcome {
    pub warnings: Vec<String>,
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| CliError::Usage(format!("not a number: {t:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Usage(format!("not finite: {t:?}")))
            }
        })
        .collect()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Quantile { .. } => "quantile",
        Command::Contour { .. } => "contour",
        Command::Depth { .. } => "depth",
        Command::Km { .. } => "km",
        Command::Scan { .. } => "scan",
        Command::Regress { .. } => "regress",
        Command::Fig2 { .. } => "fig2",
    }
}

fn tau_of(c: &Command) -> Option<f64> {
    match c {
        Command::Quantile { tau, .. } | Command::Contour { tau } | Command::Km { tau, .. } => Some(tau.tau),
        Command::Scan { tau, .. } | Command::Regress { tau, .. } => Some(tau.tau),
        Command::Depth { tau, .. } => *tau,
        Command::Fig2 { tau, .. } => Some(*tau),
    }
}

fn is_degenerate(e: &CliError) -> bool {
    matches!(e, CliError::Core(c) if matches!(c.root(), CoreError::DegenerateData { .. } | CoreError::DegenerateDesign { .. }))
}

/// Runs a command and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    if !cfg.jitter.is_finite() || cfg.jitter < 0.0 {
        return Err(CliError::Usage(format!("--jitter must be finite and >= 0, got {}", cfg.jitter)));
    }
    let mut out = Outcome::default();
    let tau = tau_of(&cfg.command);
    let (artifact, meta_n, jittered) = if let Command::Fig2 { tau, svg_dir } = &cfg.command {
        check_tau(99, *tau)?;
        let (artifact, panels) = fig2(cfg.seed, *tau)?;
        std::fs::create_dir_all(svg_dir).map_err(|source| CliError::Io { path: svg_dir.clone(), source })?;
        for (name, body) in panels {
            write_file(&svg_dir.join(name), body.as_bytes())?;
        }
        (artifact, 99, false)
    } else {
        let path = cfg.input.as_ref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
        let ing = ingest_csv(path, cfg.seed)?;
        if let Some(t) = tau {
            check_tau(ing.dataset.n(), t)?;
        }
        out.warnings.extend(ing.warnings);
        let mut data = ing.dataset;
        let mut jittered = false;
        if let Some(indices) = ing.degenerate {
            if cfg.jitter == 0.0 {
                return Err(CoreError::DegenerateData { indices }.into());
            }
            data = apply_jitter(&data, cfg.jitter, cfg.seed)?;
            jittered = true;
            out.warnings.push(format!(
                "data not in general position (observations {indices:?}); jitter {} applied",
                cfg.jitter
            ));
        }
        let artifact = match execute(&cfg.command, &data, cfg.seed) {
            Err(e) if is_degenerate(&e) && !jittered && cfg.jitter > 0.0 => {
                data = apply_jitter(&data, cfg.jitter, cfg.seed)?;
                jittered = true;
                out.warnings.push(format!("{e}; jitter {} applied", cfg.jitter));
                execute(&cfg.command, &data, cfg.seed)?
            }
            r => r?,
        };
        (artifact, data.n(), jittered)
    };
    let bytes = match cfg.format {
        Format::Json => {
            let meta = json!({
                "tool": "dirquant",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command_name(&cfg.command),
                "input": cfg.input.as_ref().map(|p| p.display().to_string()),
                "n": meta_n,
                "tau": tau,
                "seed": cfg.seed,
                "jitter_amplitude": cfg.jitter,
                "jitter_applied": jittered,
            });
            let mut s = serde_json::to_string_pretty(&json!({ "meta": meta, "result": artifact.result }))
                .expect("serialisable values");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => artifact.table.to_bytes()?,
        Format::Svg => artifact
            .svg
            .ok_or_else(|| {
                CliError::Usage(format!("{} has no SVG rendering for this input", command_name(&cfg.command)))
            })?
            .into_bytes(),
    };
    match &cfg.output {
        Some(p) => write_file(p, &bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
        }
    }
    Ok(out)
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(p, bytes).map_err(|source| CliError::Io { path: p.to_path_buf(), source })
}

fn direction(s: &str, k: usize) -> Result<Direction> {
    let v = parse_vector(s)?;
    if v.len() != k {
        return Err(CliError::Usage(format!("direction has {} components, data have {k}", v.len())));
    }
    Ok(Direction::new(v)?)
}

fn points2(c: &PointCloud) -> Vec<[f64; 2]> {
    (0..c.n()).map(|i| c.point2(i)).collect()
}

fn execute(cmd: &Command, data: &Dataset, seed: u64) -> Result<Artifact> {
    match cmd {
        Command::Quantile { tau, u } => quantile(data.location()?, tau.tau, u),
        Command::Contour { tau } => contour(data.location()?, tau.tau),
        Command::Depth { at, tau, samples } => depth(data.location()?, at, *tau, *samples, seed),
        Command::Km { tau, k, phase } => km(data.location()?, tau.tau, *k, *phase),
        Command::Scan { tau, directions, phase, flag_c } => {
            scan(data.location()?, tau.tau, *directions, *phase, *flag_c)
        }
        Command::Regress { tau, u, at, grid, bins } => regress(data, tau.tau, u, at.as_deref(), *grid, *bins),
        Command::Fig2 { .. } => unreachable!("handled without input"),
    }
}

fn quantile(c: &PointCloud, tau: f64, u: &str) -> Result<Artifact> {
    let u = direction(u, c.dim())?;
    let q = tau_u_quantile(c, tau, &u)?;
    let kkt = kkt_reconstruction(&q, c)?;
    let mc = mass_center_gap(&q, c).ok();
    let result = json!({
        "tau": tau,
        "u": u.as_slice(),
        "a": q.a,
        "b": q.b,
        "c": q.c,
        "lambda": q.lambda,
        "objective": q.objective,
        "fitted": q.fitted,
        "counts": counts_json(&q.counts),
        "kkt": { "lambda": kkt.lambda, "weights": kkt.weights, "stationarity_residual": kkt.stationarity_residual },
        "mass_centers": mc.map(|m| json!({ "mu_plus": m.mu_plus, "mu_minus": m.mu_minus, "gap": m.gap })),
    });
    let mut header = vec!["a".to_string()];
    header.extend((1..=q.b.len()).map(|j| format!("b{j}")));
    header.extend(["lambda", "objective", "below", "on", "above"].map(String::from));
    let mut table = Table::new(header);
    let mut row = vec![q.a.to_string()];
    row.extend(q.b.iter().map(f64::to_string));
    row.extend([q.lambda, q.objective].map(|v| v.to_string()));
    row.extend([q.counts.below, q.counts.on, q.counts.above].map(|v| v.to_string()));
    table.push(row);
    let svg =
        (c.dim() == 2).then(|| {
            let mut p = Plot::new(&format!("tau = {tau}, lambda = {:.6}", q.lambda));
            p.points(points2(c), 3.0, "black")
                .points(q.fitted.iter().map(|&i| c.point2(i)).collect(), 5.0, "red")
                .line([q.b[0], q.b[1]], q.a, "red");
            p.render()
        });
    Ok(Artifact { result, table, svg })
}

fn contour(c: &PointCloud, tau: f64) -> Result<Artifact> {
    let s = sweep(c, tau)?;
    let r = fixed_tau_region(&s)?;
    let content = probability_contents(&r, c)?;
    let result = json!({
        "tau": tau,
        "n_pivots": s.n_pivots,
        "hyperplanes": s.hyperplanes.iter().map(swept_json).collect::<Vec<_>>(),
        "region": region_json(&r),
        "probability_content": content,
    });
    let mut p = Plot::new(&format!("tau = {tau}: {} hyperplanes, {} facets", s.hyperplanes.len(), r.facet_count()));
    p.points(points2(c), 3.0, "black");
    for h in &s.hyperplanes {
        p.line(h.normal, h.offset, "lightgray");
    }
    p.region(&r, "blue", "blue");
    Ok(Artifact { result, table: region_table(&r), svg: Some(p.render()) })
}

fn depth(c: &PointCloud, at: &[String], tau: Option<f64>, samples: usize, seed: u64) -> Result<Artifact> {
    let mut rows = Vec::new();
    let mut header: Vec<String> = (1..=c.dim()).map(|j| format!("x{j}")).collect();
    header.extend(["count", "depth"].map(String::from));
    let mut table = Table::new(header);
    for s in at {
        let x = parse_vector(s)?;
        if x.len() != c.dim() {
            return Err(CliError::Usage(format!(
                "query point {s:?} has {} components, data have {}",
                x.len(),
                c.dim()
            )));
        }
        let d = if c.dim() == 2 { depth_2d(c, [x[0], x[1]])? } else { depth_kd_approx(c, &x, samples, seed)? };
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.extend([d.count.to_string(), d.normalized().to_string()]);
        table.push(row);
        rows.push(json!({ "x": x, "count": d.count, "depth": d.normalized(), "exact": c.dim() == 2 }));
    }
    let region = match tau {
        Some(t) if c.dim() == 2 => Some(depth_region_bruteforce_2d(c, t)?),
        _ => None,
    };
    let svg = (c.dim() == 2).then(|| {
        let mut p = Plot::new("halfspace depth");
        p.points(points2(c), 3.0, "black");
        if let Some(r) = &region {
            p.region(r, "green", "green");
        }
        p.points(rows.iter().map(|r| [r["x"][0].as_f64().unwrap(), r["x"][1].as_f64().unwrap()]).collect(), 5.0, "red");
        p.render()
    });
    let result = json!({ "points": rows, "region": region.as_ref().map(region_json) });
    Ok(Artifact { result, table, svg })
}

fn km(c: &PointCloud, tau: f64, k: usize, phase: f64) -> Result<Artifact> {
    let env = km_envelope(c, &EnvelopeConfig::new(k, tau)?.with_phase(phase))?;
    let exact = fixed_tau_region(&sweep(c, tau)?)?;
    let cmp = match compare_regions(&exact, &env) {
        Ok(m) => Some(json!({
            "facets_exact": m.facets_exact,
            "facets_km": m.facets_km,
            "area_gap": m.area_gap,
            "hausdorff": m.hausdorff,
            "km_contains_exact": m.km_contains_exact,
        })),
        Err(CoreError::NotBounded) => None,
        Err(e) => return Err(e.into()),
    };
    let result = json!({
        "tau": tau,
        "k_directions": k,
        "phase": phase,
        "region": region_json(&env),
        "exact": region_json(&exact),
        "comparison": cmp,
    });
    let mut p = Plot::new(&format!("tau = {tau}, K = {k}"));
    p.points(points2(c), 3.0, "black").region(&env, "orange", "orange").region(&exact, "blue", "blue");
    Ok(Artifact { result, table: region_table(&env), svg: Some(p.render()) })
}

fn scan(c: &PointCloud, tau: f64, k: usize, phase: f64, flag_c: f64) -> Result<Artifact> {
    if c.dim() != 2 {
        return Err(CliError::Usage("scan uses planar direction grids; data must have two columns".into()));
    }
    if k == 0 {
        return Err(CliError::Usage("--directions must be positive".into()));
    }
    let series = lambda_scan(c, tau, &equispaced_directions(k, phase), flag_c)?;
    let mut table = Table::new(["index", "angle", "lambda", "flagged"]);
    let entries: Vec<Value> = series
        .entries
        .iter()
        .map(|e| {
            let flagged = series.flagged.contains(&e.index);
            table.push(vec![
                e.index.to_string(),
                e.angle.unwrap_or(f64::NAN).to_string(),
                e.lambda.to_string(),
                flagged.to_string(),
            ]);
            json!({ "index": e.index, "angle": e.angle, "lambda": e.lambda, "flagged": flagged })
        })
        .collect();
    let result = json!({
        "tau": tau,
        "entries": entries,
        "median": series.median,
        "mad": series.mad,
        "flag_c": series.flag_c,
        "flagged": series.flagged,
    });
    let pts: Vec<[f64; 2]> = series.entries.iter().map(|e| [e.angle.unwrap_or(0.0), e.lambda]).collect();
    let mut p = Plot::new(&format!("lambda against direction angle, tau = {tau}"));
    p.polyline(pts.clone(), "black").points(pts, 3.0, "black").points(
        series.flagged.iter().map(|&i| [series.entries[i].angle.unwrap_or(0.0), series.entries[i].lambda]).collect(),
        5.0,
        "red",
    );
    Ok(Artifact { result, table, svg: Some(p.render()) })
}

fn regress(data: &Dataset, tau: f64, u: &str, at: Option<&str>, grid: usize, bins: Option<usize>) -> Result<Artifact> {
    let d = data.regression()?;
    let rp = d.problem(tau, direction(u, d.k)?)?;
    let m = regression_quantile(&rp)?;
    let cut = match at {
        Some(s) => {
            let x0 = parse_vector(s)?;
            if d.k != 2 {
                return Err(CliError::Usage("cuts need exactly two responses".into()));
            }
            if grid == 0 {
                return Err(CliError::Usage("--grid must be positive".into()));
            }
            let models = regression_grid(&rp, &direction_grid(grid))?;
            Some((x0.clone(), fixed_x_cut(&models, &x0)?))
        }
        None => None,
    };
    let coverage = match bins {
        Some(b) => Some(coverage_diagnostic(&rp, &m, b)?),
        None => None,
    };
    let mut header = vec!["a".to_string()];
    header.extend((1..=m.b.len()).map(|j| format!("b{j}")));
    header.extend((1..=m.c.len()).map(|j| format!("c{j}")));
    header.extend(["lambda", "below", "on", "above"].map(String::from));
    let mut table = Table::new(header);
    let mut row = vec![m.a.to_string()];
    row.extend(m.b.iter().chain(&m.c).map(f64::to_string));
    row.push(m.lambda.to_string());
    row.extend([m.counts.below, m.counts.on, m.counts.above].map(|v| v.to_string()));
    table.push(row);
    let result = json!({
        "model": {
            "tau": tau,
            "u": m.u.as_slice(),
            "a": m.a,
            "b": m.b,
            "c": m.c,
            "lambda": m.lambda,
            "objective": m.objective,
            "fitted": m.fitted,
            "counts": counts_json(&m.counts),
        },
        "cut": cut.as_ref().map(|(x0, r)| json!({ "x0": x0, "grid": grid, "region": region_json(r) })),
        "coverage": coverage.as_ref().map(|c| json!({
            "global_below_fraction": c.global_below_fraction,
            "global_deviation": c.global_deviation,
            "bins": c.bins.iter().map(|b| json!({
                "lo": b.lo,
                "hi": b.hi,
                "count": b.count,
                "below_fraction": b.below_fraction,
                "deviation": b.deviation,
                "tolerance": b.tolerance,
                "flagged": b.flagged(),
            })).collect::<Vec<_>>(),
        })),
    });
    let svg = cut.as_ref().map(|(x0, r)| {
        let mut p = Plot::new(&format!("response cut at x = {x0:?}, tau = {tau}"));
        p.points((0..d.n()).map(|i| [d.y[2 * i], d.y[2 * i + 1]]).collect(), 2.0, "gray").region(r, "blue", "blue");
        p.render()
    });
    Ok(Artifact { result, table, svg })
}

/// Multiplier table over ℓ = 0..=14 and the two panels.
fn fig2(seed: u64, tau: f64) -> Result<(Artifact, Vec<(&'static str, String)>)> {
    let u = Direction::new(vec![0.0, -1.0])?;
    let hull_tau = 0.5 / 99.0;
    let mut table = Table::new(["ell", "lambda", "a", "b1", "b2", "outlier_in_region"]);
    let mut rows = Vec::new();
    let mut left = Plot::new(&format!("quantile hyperplanes, tau = {tau:.6}, u = (0, -1)"));
    let mut curve = Vec::new();
    for ell in 0..=MAX_ELL {
        let c = figure2_scenario(seed, ell)?;
        let q = tau_u_quantile(&c, tau, &u)?;
        let hull = fixed_tau_region(&sweep(&c, hull_tau)?)?;
        let inside = point_in_region(&hull, c.point2(98))? != Location::Outside;
        if ell == 0 {
            left.points((0..98).map(|i| c.point2(i)).collect(), 2.5, "black");
        }
        left.points(vec![c.point2(98)], 4.0, "red").line([q.b[0], q.b[1]], q.a, "steelblue");
        curve.push([ell as f64, q.lambda]);
        table.push(vec![
            ell.to_string(),
            q.lambda.to_string(),
            q.a.to_string(),
            q.b[0].to_string(),
            q.b[1].to_string(),
            inside.to_string(),
        ]);
        rows.push(json!({ "ell": ell, "lambda": q.lambda, "a": q.a, "b": q.b, "fitted": q.fitted, "outlier_in_region": inside }));
    }
    let nondecreasing = curve.windows(2).all(|w| w[1][1] >= w[0][1]);
    let mut right = Plot::new("lagrange multiplier against outlier offset");
    right.polyline(curve.clone(), "black").points(curve, 3.0, "black");
    let result = json!({ "tau": tau, "direction": [0.0, -1.0], "rows": rows, "lambda_nondecreasing": nondecreasing });
    let artifact = Artifact { result, table, svg: Some(right.render()) };
    Ok((artifact, vec![("fig2_hyperplanes.svg", left.render()), ("fig2_lambda.svg", right.render())]))
}
