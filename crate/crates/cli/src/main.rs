use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use finsmooth::catalog::{catalog, lookup, CatalogEntry};
use finsmooth::field::Analytic;
use finsmooth::geometry::{curvature, flag_formula, GeometryEval};
use finsmooth::harness::{
    emit_piecewise, emit_sweep, run_piecewise, run_sweep, smoothing_options, verify_suite, GridSpec, ModeSetting,
    PiecewiseConfig, SweepConfig,
};
use finsmooth::horizontal::SmoothingPlan;
use finsmooth::kernel::QuadOrders;
use finsmooth::norm::compute_chart_bounds;
use finsmooth::vertical::VerticalConfig;

#[derive(Parser)]
#[command(name = "finsmooth", version, about = "Mollifier smoothing of C0-Finsler structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Sample grid as `points,directions[,flags]`.
    #[arg(long, global = true)]
    grid: Option<GridSpec>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Base Gauss-Legendre order for the kernels.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in structures.
    Catalog,
    /// Norm bounds r_U, r_u and tau of each chart.
    Bounds { entry: String },
    /// Evaluate F and F_eps at a point of the tangent bundle.
    Smooth {
        entry: String,
        #[arg(long)]
        eps: f64,
        /// Base point followed by the tangent vector, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Force the vertical stage for smooth inputs.
        #[arg(long)]
        vertical: bool,
    },
    /// Connection and curvature of F_eps at a point, with a flag.
    Geometry {
        entry: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
        /// Transverse edge z of the flag.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        flag: Vec<f64>,
        #[arg(long)]
        vertical: bool,
    },
    /// Epsilon sweep from a TOML config.
    Sweep { config: PathBuf },
    /// Interface curvature experiment from a TOML config.
    Piecewise { config: PathBuf },
    /// Quick invariant suite.
    Verify,
}

fn split_point(entry: &CatalogEntry, at: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = entry.dim();
    if at.len() != 2 * n {
        bail!("--at needs {} numbers (point then vector), got {}", 2 * n, at.len());
    }
    Ok((at[..n].to_vec(), at[n..].to_vec()))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn plan_for(cli: &Cli, entry: &CatalogEntry, vertical: bool) -> Result<SmoothingPlan> {
    let mode = if vertical {
        ModeSetting::Always
    } else {
        ModeSetting::Auto
    };
    Ok(SmoothingPlan::new(
        entry.field.clone(),
        entry.charts.clone(),
        smoothing_options(entry.dim(), mode, cli.quad_order),
    )?)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Catalog => {
            for e in catalog() {
                let class = match &e.class_check {
                    Ok(()) => "ok".to_string(),
                    Err(m) => format!("FAILED ({m})"),
                };
                println!(
                    "{:<26} dim {}  {:<15} class {:<4} {}",
                    e.name,
                    e.dim(),
                    format!("{:?}", e.smoothness),
                    class,
                    e.summary
                );
            }
            Ok(catalog().iter().all(|e| e.class_check.is_ok()))
        }
        Command::Bounds { entry } => {
            let e = lookup(entry)?;
            for (k, c) in e.charts.iter().enumerate() {
                let b = compute_chart_bounds(e.field.as_ref(), &c.domain)?;
                let cfg = VerticalConfig::new(e.dim(), b, Default::default(), QuadOrders::default_for(e.dim()))?;
                println!(
                    "chart {k}: lo {} hi {} margin {}  r_U {:.12} r_u {:.12} tau {:.6e}",
                    fmt_vec(&c.domain.lo),
                    fmt_vec(&c.domain.hi),
                    c.margin,
                    b.r_max,
                    b.r_min,
                    cfg.tau
                );
            }
            Ok(true)
        }
        Command::Smooth {
            entry,
            eps,
            at,
            vertical,
        } => {
            let e = lookup(entry)?;
            let (x, y) = split_point(e, at)?;
            let s = plan_for(cli, e, *vertical)?.at(*eps)?;
            let f = e.field.eval(&x, &y);
            let fe = s.f_eps(&x, &y)?;
            println!("F      {f:.15e}");
            println!("F_eps  {fe:.15e}");
            println!("diff   {:.3e}", (fe - f).abs());
            println!("radii  {}", fmt_vec(&s.radii()));
            let t = s.fundamental_tensor(&x, &y)?;
            for row in &t.g {
                println!("g_eps  {}", fmt_vec(row));
            }
            println!("min eigenvalue {:.6e}", t.min_eigenvalue);
            Ok(true)
        }
        Command::Geometry {
            entry,
            eps,
            at,
            flag,
            vertical,
        } => {
            let e = lookup(entry)?;
            let (x, y) = split_point(e, at)?;
            if flag.len() != e.dim() {
                bail!("--flag needs {} numbers", e.dim());
            }
            let s = plan_for(cli, e, *vertical)?.at(*eps)?;
            let geo = GeometryEval::at(&s, &x, &y)?;
            let cartan = geo.c.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            println!(
                "F_eps {:.15e}  condition {:.3e}  max |C| {cartan:.3e}",
                geo.f, geo.condition
            );
            for (i, m) in geo.chern.iter().enumerate() {
                for (j, row) in m.iter().enumerate() {
                    println!("Gamma^{i}_{j}. {}", fmt_vec(row));
                }
            }
            for (i, row) in geo.n.iter().enumerate() {
                println!("N^{i}_.     {}", fmt_vec(row));
            }
            let k_of = |src: &dyn finsmooth::field::DerivativeSource| -> Result<f64> {
                let c = curvature(src, &x, &y, None)?;
                let g = &c.geometry.g;
                let ip = |u: &[f64], v: &[f64]| -> f64 {
                    (0..u.len())
                        .map(|i| (0..u.len()).map(|j| g[i][j] * u[i] * v[j]).sum::<f64>())
                        .sum()
                };
                let a = ip(&y, flag) / ip(&y, &y);
                let z: Vec<f64> = flag.iter().zip(&y).map(|(p, q)| p - a * q).collect();
                Ok(flag_formula(&c.r_low, g, &y, &z)?)
            };
            let k = k_of(&s)?;
            println!("K_eps {k:.12e}");
            if e.field.f2_jets(&x, &y, 1, 3).is_some() {
                let k0 = k_of(&Analytic::new(e.field.clone()))?;
                println!("K     {k0:.12e}  diff {:.3e}", (k - k0).abs());
            }
            Ok(true)
        }
        Command::Sweep { config } => {
            let mut cfg = SweepConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
            if let Some(g) = cli.grid {
                cfg.grid = g;
            }
            if cli.quad_order.is_some() {
                cfg.quad_order = cli.quad_order;
            }
            let report = run_sweep(&cfg)?;
            let dir = cli
                .out
                .clone()
                .or(cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            for p in emit_sweep(&report, &dir)? {
                println!("wrote {}", p.display());
            }
            for s in &report.series {
                println!(
                    "{:<6} final {:.3e}  decreasing {}  bound {}  {}",
                    s.quantity.name(),
                    s.errors.last().copied().unwrap_or(f64::NAN),
                    s.decreasing,
                    s.final_bound.map_or("-".into(), |b| format!("{b:e}")),
                    if s.passed() { "PASS" } else { "FAIL" }
                );
            }
            Ok(report.passed())
        }
        Command::Piecewise { config } => {
            let cfg = PiecewiseConfig::load(config).with_context(|| format!("reading {}", config.display()))?;
            let report = run_piecewise(&cfg)?;
            let dir = cli
                .out
                .clone()
                .or(cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            for p in emit_piecewise(&report, &dir)? {
                println!("wrote {}", p.display());
            }
            for s in &report.strips {
                println!(
                    "eps {:.4e}  strip {:.12e}  peak {:.12e}  target {:.6e}",
                    s.epsilon, s.value, s.peak, s.target
                );
            }
            for (name, ok) in report.verdicts() {
                println!("{name:<18} {}", if ok { "PASS" } else { "FAIL" });
            }
            Ok(report.passed())
        }
        Command::Verify => {
            let checks = verify_suite();
            for c in &checks {
                println!(
                    "{:<22} {}  {}",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.detail
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
