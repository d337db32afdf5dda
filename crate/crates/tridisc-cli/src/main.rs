//! `tridisc` binary: periodic orbits, weighted zeta functions,
//! resonance scans and invariant-distribution images of the symmetric
//! three-disc billiard, driven by a JSON config with flag overrides.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tridisc_cli::commands::{
    cmd_distribution, cmd_orbits, cmd_resonances, cmd_zeta, parse_complex_pair, provenance,
    with_workers,
};
use tridisc_cli::{CliError, DomainChoice, RunConfig};

#[derive(Parser)]
#[command(
    name = "tridisc",
    version,
    about = "Resonances and invariant distributions of the symmetric three-disc billiard"
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Disc spacing in units of the disc radius.
    #[arg(long = "d-over-r", global = true, value_name = "X")]
    d_over_r: Option<f64>,

    /// Longest cycle length in tables and expansions.
    #[arg(long, global = true, value_name = "N")]
    nmax: Option<usize>,

    /// Number of determinant bands.
    #[arg(long, global = true, value_name = "K")]
    kmax: Option<usize>,

    /// Symbolic domain of the cycle enumeration.
    #[arg(long, global = true, value_enum)]
    domain: Option<DomainChoice>,

    /// Scan rectangle as `re0,re1,im0,im1`.
    #[arg(long, global = true, value_parser = parse_rect, value_name = "RECT", allow_hyphen_values = true)]
    rect: Option<Rect4>,

    /// Smoothing widths (comma-separated or repeated).
    #[arg(long, global = true, value_delimiter = ',', value_name = "S")]
    sigma: Option<Vec<f64>>,

    /// Distribution grid shape as `NQxNP`.
    #[arg(long, global = true, value_parser = parse_grid, value_name = "NQxNP")]
    grid: Option<Grid2>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (0 = library default).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and list the prime periodic orbits.
    Orbits,
    /// Evaluate the constant-weight zeta assembly at given points.
    Zeta {
        /// Evaluation point `re,im`; repeatable. Defaults to `2,0`.
        #[arg(long = "lambda", value_parser = parse_point, value_name = "RE,IM", allow_hyphen_values = true)]
        lambda: Vec<(f64, f64)>,
    },
    /// Scan the rectangle for resonances and their residues.
    Resonances,
    /// Render smoothed invariant-distribution grids on the section.
    Distribution {
        /// Which resonance: `leading`, an index, or `re,im`.
        #[arg(
            long,
            default_value = "leading",
            value_name = "SEL",
            allow_hyphen_values = true
        )]
        resonance: String,
    },
}

/// Newtypes so clap's derived value parsers have unambiguous targets.
#[derive(Clone)]
struct Rect4([f64; 4]);
#[derive(Clone)]
struct Grid2([usize; 2]);

fn parse_rect(text: &str) -> Result<Rect4, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err("expected four comma-separated numbers: re0,re1,im0,im1".into());
    }
    let mut rect = [0.0; 4];
    for (slot, part) in rect.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("'{}': {e}", part.trim()))?;
    }
    Ok(Rect4(rect))
}

fn parse_grid(text: &str) -> Result<Grid2, String> {
    let (w, h) = text
        .split_once(['x', 'X'])
        .ok_or("expected WIDTHxHEIGHT, e.g. 400x200")?;
    let n_q = w
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("'{w}': {e}"))?;
    let n_p = h
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("'{h}': {e}"))?;
    Ok(Grid2([n_q, n_p]))
}

fn parse_point(text: &str) -> Result<(f64, f64), String> {
    parse_complex_pair(text).ok_or_else(|| format!("'{text}' is not 're,im'"))
}

/// Config file (or defaults) with flag overrides applied on top.
fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(x) = cli.d_over_r {
        cfg.d_over_r = x;
    }
    if let Some(n) = cli.nmax {
        cfg.n_max = n;
    }
    if let Some(k) = cli.kmax {
        cfg.k_max = k;
    }
    if let Some(d) = cli.domain {
        cfg.domain = d;
    }
    if let Some(Rect4(r)) = cli.rect {
        cfg.rect = r;
    }
    if let Some(s) = &cli.sigma {
        cfg.sigma = s.clone();
    }
    if let Some(Grid2(g)) = cli.grid {
        cfg.grid = g;
    }
    if let Some(dir) = &cli.out {
        cfg.out = dir.to_string_lossy().into_owned();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let prov = provenance(&cfg);
    with_workers(cfg.workers, || match &cli.command {
        Command::Orbits => cmd_orbits(&cfg, &prov),
        Command::Zeta { lambda } => cmd_zeta(&cfg, &prov, lambda),
        Command::Resonances => cmd_resonances(&cfg, &prov),
        Command::Distribution { resonance } => cmd_distribution(&cfg, &prov, resonance),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
