//! The four subcommands. Each builds what it needs from the config,
//! computes, and writes files into the output directory; nothing is
//! cached between invocations.

use std::path::PathBuf;

use num_complex::Complex64;
use tridisc::{
    build_weighted_expansions, distribution_grid, residue, scan, weighted_zeta, CycleExpansion,
    DiscSystem, Error, OrbitTable, Rect, Resonance, WeightSpec,
};

use crate::config::RunConfig;
use crate::output::{
    csv_body, f17, pgm_bytes, sidecar_json, write_file, Provenance, DISTRIBUTION_HEADER,
    ORBITS_HEADER, RESONANCES_HEADER, ZETA_HEADER,
};
use crate::CliError;

/// Builds the provenance stamp for one run.
pub fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        version: tridisc::VERSION,
        config_hash: cfg.content_hash(),
        n_max: cfg.n_max,
    }
}

/// Solves the orbit table, reporting (not failing on) unrealizable
/// words; warnings go to stderr, the run continues with what solved.
fn solve_table(cfg: &RunConfig) -> Result<(OrbitTable, Vec<(String, Error)>), CliError> {
    let sys = DiscSystem::new(cfg.d_over_r, 1.0)?;
    if let Some(warning) = sys.spacing_warning() {
        eprintln!("warning: {warning}");
    }
    let (table, failures) = OrbitTable::build_lenient(&sys, cfg.domain.to_domain(), cfg.n_max)?;
    for (word, err) in &failures {
        eprintln!("warning: orbit '{word}' skipped: {err}");
    }
    Ok((table, failures))
}

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    Ok(dir)
}

fn scan_rect(cfg: &RunConfig) -> Result<Rect, CliError> {
    Ok(Rect::new(
        cfg.rect[0],
        cfg.rect[1],
        cfg.rect[2],
        cfg.rect[3],
    )?)
}

/// Constant-weight band expansions `1..=k_max`, ready for scans,
/// residues and zeta assembly.
fn unit_expansions(cfg: &RunConfig, table: &OrbitTable) -> Result<Vec<CycleExpansion>, CliError> {
    Ok(build_weighted_expansions(
        table,
        &WeightSpec::ConstantOne,
        cfg.k_max,
        cfg.n_max,
    )?)
}

/// Scans each band separately so one band's failure (reported to
/// stderr) does not discard the others, then restores the global
/// ordering: imaginary part, then real part, then band.
fn scan_per_band(expansions: &[CycleExpansion], rect: &Rect, cell: f64) -> Vec<Resonance> {
    let mut found = Vec::new();
    for (i, exp) in expansions.iter().enumerate() {
        match scan(std::slice::from_ref(exp), rect, cell) {
            Ok(mut band_hits) => found.append(&mut band_hits),
            Err(e) => eprintln!("warning: resonance scan failed for band {}: {e}", i + 1),
        }
    }
    found.sort_by(|a, b| {
        a.lambda0
            .im
            .total_cmp(&b.lambda0.im)
            .then(a.lambda0.re.total_cmp(&b.lambda0.re))
            .then(a.band.cmp(&b.band))
    });
    found
}

/// `orbits`: one CSV row per realized prime cycle, sorted by length
/// then word; unrealizable words become trailing comment rows.
pub fn cmd_orbits(cfg: &RunConfig, prov: &Provenance) -> Result<(), CliError> {
    let out = ensure_out_dir(cfg)?;
    let (table, failures) = solve_table(cfg)?;
    let mut orbits: Vec<_> = table.orbits().iter().collect();
    orbits.sort_by_key(|o| (o.cycle.len(), o.cycle.word()));
    let mut rows: Vec<String> = orbits
        .iter()
        .map(|o| {
            format!(
                "{},{},{},{},{},{},{}",
                o.cycle.word(),
                o.cycle.domain(),
                o.m,
                f17(o.t_p),
                f17(o.lambda),
                o.sigma,
                f17(o.newton_residual)
            )
        })
        .collect();
    for (word, err) in &failures {
        rows.push(format!("# unrealizable {word}: {err}"));
    }
    write_file(
        &out.join("orbits.csv"),
        csv_body(prov, ORBITS_HEADER, &rows).as_bytes(),
    )
}

/// `zeta`: evaluates the constant-weight zeta assembly on a list of
/// points; each row carries the value and the truncation tail bound.
pub fn cmd_zeta(
    cfg: &RunConfig,
    prov: &Provenance,
    lambdas: &[(f64, f64)],
) -> Result<(), CliError> {
    let out = ensure_out_dir(cfg)?;
    let (table, _) = solve_table(cfg)?;
    let expansions = unit_expansions(cfg, &table)?;
    let points: Vec<(f64, f64)> = if lambdas.is_empty() {
        vec![(2.0, 0.0)]
    } else {
        lambdas.to_vec()
    };
    let mut rows = Vec::with_capacity(points.len());
    for &(re, im) in &points {
        let z = weighted_zeta(&expansions, Complex64::new(re, im))?;
        rows.push(format!(
            "{},{},{},{},{}",
            f17(re),
            f17(im),
            f17(z.value.re),
            f17(z.value.im),
            f17(z.tail)
        ));
    }
    write_file(
        &out.join("zeta.csv"),
        csv_body(prov, ZETA_HEADER, &rows).as_bytes(),
    )
}

/// `resonances`: scans the configured rectangle and writes one row per
/// zero with its constant-weight residue. A rectangle containing no
/// zeros yields a header-only file.
pub fn cmd_resonances(cfg: &RunConfig, prov: &Provenance) -> Result<(), CliError> {
    let out = ensure_out_dir(cfg)?;
    let (table, _) = solve_table(cfg)?;
    let expansions = unit_expansions(cfg, &table)?;
    let rect = scan_rect(cfg)?;
    let found = scan_per_band(&expansions, &rect, cfg.cell);
    let rows: Vec<String> = found
        .iter()
        .map(|r| {
            let res_z1 = if r.order == 1 {
                residue(&expansions, r).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
            } else {
                Complex64::new(f64::NAN, f64::NAN)
            };
            format!(
                "{},{},{},{},{},{},{}",
                f17(r.lambda0.re),
                f17(r.lambda0.im),
                r.band,
                r.order,
                f17(r.newton_residual),
                f17(res_z1.re),
                f17(res_z1.im)
            )
        })
        .collect();
    write_file(
        &out.join("resonances.csv"),
        csv_body(prov, RESONANCES_HEADER, &rows).as_bytes(),
    )
}

/// Picks the resonance a distribution run renders. Selectors: `leading`
/// (the real zero with the largest real part), a zero-based index into
/// the scan ordering, or `re,im` matched within `1e-3`.
fn select_resonance(found: &[Resonance], selector: &str) -> Result<Resonance, CliError> {
    let trimmed = selector.trim();
    if trimmed.eq_ignore_ascii_case("leading") {
        return found
            .iter()
            .filter(|r| r.lambda0.im == 0.0)
            .max_by(|a, b| a.lambda0.re.total_cmp(&b.lambda0.re))
            .cloned()
            .ok_or_else(|| {
                CliError::Lib(Error::NoMatch(
                    "no real resonance in the scan rectangle".into(),
                ))
            });
    }
    if let Ok(index) = trimmed.parse::<usize>() {
        return found.get(index).cloned().ok_or_else(|| {
            CliError::Lib(Error::NoMatch(format!(
                "resonance index {index} out of range: {} found",
                found.len()
            )))
        });
    }
    if let Some(target) = parse_complex_pair(trimmed) {
        let target = Complex64::new(target.0, target.1);
        let nearest = found
            .iter()
            .min_by(|a, b| {
                (a.lambda0 - target)
                    .norm()
                    .total_cmp(&(b.lambda0 - target).norm())
            })
            .cloned();
        return match nearest {
            Some(r) if (r.lambda0 - target).norm() <= 1e-3 => Ok(r),
            _ => Err(CliError::Lib(Error::NoMatch(format!(
                "no resonance within 1e-3 of {},{}",
                target.re, target.im
            )))),
        };
    }
    Err(CliError::Config(format!(
        "resonance selector '{selector}' is not 'leading', an index, or 're,im'"
    )))
}

/// Parses "a,b" into two floats.
pub fn parse_complex_pair(text: &str) -> Option<(f64, f64)> {
    let (a, b) = text.split_once(',')?;
    match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
        (Ok(re), Ok(im)) if re.is_finite() && im.is_finite() => Some((re, im)),
        _ => None,
    }
}

/// `distribution`: renders the smoothed invariant-distribution grid of
/// one selected resonance, once per configured smoothing width. Each
/// width produces a CSV of node values, a PGM image of the real part,
/// and a JSON sidecar with the normalization.
pub fn cmd_distribution(
    cfg: &RunConfig,
    prov: &Provenance,
    selector: &str,
) -> Result<(), CliError> {
    let out = ensure_out_dir(cfg)?;
    let (table, _) = solve_table(cfg)?;
    let expansions = unit_expansions(cfg, &table)?;
    let rect = scan_rect(cfg)?;
    let found = scan_per_band(&expansions, &rect, cfg.cell);
    let chosen = select_resonance(&found, selector)?;
    for &sigma in &cfg.sigma {
        let grid = distribution_grid(
            table.system(),
            &table,
            &chosen,
            cfg.grid[0],
            cfg.grid[1],
            sigma,
        )?;
        let stem = format!("distribution_sigma{sigma}");

        let mut rows = Vec::with_capacity(grid.n_q() * grid.n_p());
        for j in 0..grid.n_p() {
            for i in 0..grid.n_q() {
                let v = grid.value(i, j);
                rows.push(format!(
                    "{},{},{},{},{}",
                    f17(grid.q_node(i)),
                    f17(grid.p_node(j)),
                    f17(v.re),
                    f17(v.im),
                    u8::from(grid.in_mask(i, j))
                ));
            }
        }
        write_file(
            &out.join(format!("{stem}.csv")),
            csv_body(prov, DISTRIBUTION_HEADER, &rows).as_bytes(),
        )?;

        let re: Vec<f64> = grid.values().iter().map(|v| v.re).collect();
        let (png, v_min, v_max) = pgm_bytes(grid.n_q(), grid.n_p(), &re, prov)?;
        write_file(&out.join(format!("{stem}.pgm")), &png)?;

        let sidecar = sidecar_json(prov, chosen.lambda0, sigma, v_min, v_max);
        write_file(&out.join(format!("{stem}.json")), sidecar.as_bytes())?;
    }
    Ok(())
}

/// Runs a closure inside a dedicated thread pool when a worker count is
/// configured; `workers = 0` keeps the process-global default pool.
pub fn with_workers<T>(
    workers: usize,
    work: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError>
where
    T: Send,
{
    if workers == 0 {
        return work();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a {workers}-thread pool: {e}")))?;
    pool.install(work)
}
