//! Subcommand implementations. Each returns the process status on success.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use reebkit::bookkeeping::{sigma_gap, validate_tree, BubblingTree, PeriodCatalog};
use reebkit::knots::classification_table;
use reebkit::orbits::{catalog, orbit_index_with, IndexOptions};
use reebkit::report::{format_float, to_json};
use reebkit::section::{
    build_page, return_map, sample_starts, verify_main3, Direction, Main3Report, VerifyOptions,
};
use reebkit::{ClosedOrbit, ContactSystem, OrbitLabel};
use serde::Serialize;

use crate::config::{parse_floats, RunConfig};
use crate::svg;
use crate::UsageError;

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Ran, but a check or validation failed.
    Failed,
}

/// Writes `text` to `--out` if given, else to stdout.
pub fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())).into())
}

fn sibling(cfg: &RunConfig, ext: &str, flag: &str) -> Result<PathBuf> {
    match &cfg.out {
        Some(p) => Ok(p.with_extension(ext)),
        None => bail!(UsageError(format!("{flag} needs --out to name the output files"))),
    }
}

#[derive(Serialize)]
struct IndexRow {
    iterate: u32,
    period: f64,
    contractible: bool,
    mu: Option<i64>,
    rho: Option<f64>,
    degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_spectral: Option<i64>,
}

#[derive(Serialize)]
struct IndexTable {
    system: ContactSystem,
    orbit: OrbitLabel,
    seed: u64,
    rows: Vec<IndexRow>,
}

pub fn index(cfg: &RunConfig, label: OrbitLabel, k: u32, spectral: bool) -> Result<Status> {
    if k == 0 {
        bail!(UsageError("-k must be at least 1".into()));
    }
    let sys = cfg.require_system()?;
    let orbit = ClosedOrbit::principal(sys, label, 1)?;
    // Refuses systems whose orbits up to this action are not isolated.
    catalog(&sys, orbit.period() * k as f64 * (1.0 + 1e-12))?;
    let opts = IndexOptions {
        spectral,
        ..Default::default()
    };
    let rows = (1..=k)
        .into_par_iter()
        .map(|j| {
            let period = orbit.period() * j as f64;
            if !orbit.is_contractible(j) {
                return Ok(IndexRow {
                    iterate: j,
                    period,
                    contractible: false,
                    mu: None,
                    rho: None,
                    degenerate: orbit.is_degenerate(j),
                    mu_spectral: None,
                });
            }
            let ix = orbit_index_with(&orbit, j, &opts)?;
            Ok(IndexRow {
                iterate: j,
                period: ix.period,
                contractible: true,
                mu: Some(ix.mu),
                rho: Some(ix.rho),
                degenerate: ix.degenerate,
                mu_spectral: ix.mu_spectral,
            })
        })
        .collect::<reebkit::Result<Vec<_>>>()?;

    let text = if cfg.csv {
        let opt_i = |x: Option<i64>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut s = String::from("iterate,period,contractible,mu,rho,degenerate");
        if spectral {
            s.push_str(",mu_spectral");
        }
        s.push('\n');
        for r in &rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}",
                r.iterate,
                format_float(r.period),
                r.contractible,
                opt_i(r.mu),
                r.rho.map(format_float).unwrap_or_default(),
                r.degenerate
            ));
            if spectral {
                s.push_str(&format!(",{}", opt_i(r.mu_spectral)));
            }
            s.push('\n');
        }
        s
    } else {
        to_json(&IndexTable {
            system: sys,
            orbit: label,
            seed: cfg.seed,
            rows,
        })?
    };
    emit(cfg, &text)?;
    Ok(Status::Success)
}

fn samples_csv(report: &Main3Report) -> String {
    let f = format_float;
    let mut s = String::from("index,r,theta,forward_time,forward_r,forward_theta,backward_time,backward_r,backward_theta,failure\n");
    for (i, rec) in report.dynamics.samples.iter().enumerate() {
        let leg = |x: Option<(f64, (f64, f64))>| match x {
            Some((t, (r, th))) => format!("{},{},{}", f(t), f(r), f(th)),
            None => ",,".to_string(),
        };
        let failure = rec.failure.as_deref().unwrap_or("").replace(['"', ','], " ");
        s.push_str(&format!(
            "{i},{},{},{},{},{failure}\n",
            f(rec.start.0),
            f(rec.start.1),
            leg(rec.forward),
            leg(rec.backward)
        ));
    }
    s
}

pub fn verify(cfg: &RunConfig, action: f64, samples: usize) -> Result<Status> {
    if !(action > 0.0 && action.is_finite()) {
        bail!(UsageError(format!("action bound must be positive, got {action}")));
    }
    let sys = cfg.require_system()?;
    if sys.lens_or_sphere().p() < 2 {
        bail!(UsageError(
            "verify needs a lens-space quotient (p ≥ 2); pass --lens P,Q".into()
        ));
    }
    let svg_path = cfg.svg.then(|| sibling(cfg, "svg", "--svg")).transpose()?;
    let csv_path = cfg.csv.then(|| sibling(cfg, "csv", "--csv")).transpose()?;
    let opts = VerifyOptions {
        seed: cfg.seed,
        tol: cfg.tol,
        ..Default::default()
    };
    let report = verify_main3(&sys, action, samples, &opts)?;
    emit(cfg, &to_json(&report)?)?;
    if let Some(path) = svg_path {
        let pairs: Vec<_> = report
            .dynamics
            .samples
            .iter()
            .filter_map(|s| s.forward.map(|(_, img)| (s.start, img)))
            .collect();
        write_file(&path, &svg::scatter("forward return map on the page", &pairs))?;
    }
    if let Some(path) = csv_path {
        write_file(&path, &samples_csv(&report))?;
    }
    for c in report.failures() {
        log::warn!("check {} failed: {}", c.name, c.detail);
    }
    if report.passed {
        Ok(Status::Success)
    } else {
        eprintln!(
            "verification failed: {} check(s) did not pass",
            report.failures().len()
        );
        Ok(Status::Failed)
    }
}

pub fn lens(cfg: &RunConfig, p: u32) -> Result<Status> {
    if p < 2 {
        bail!(UsageError(format!("lens needs p ≥ 2, got {p}")));
    }
    let table = classification_table(p)?;
    let text = if cfg.csv {
        let mut s = String::new();
        for (name, m) in [
            ("homeomorphic", &table.homeomorphic),
            ("homotopy_equivalent", &table.homotopy_equivalent),
        ] {
            s.push_str(name);
            for q in &table.residues {
                s.push_str(&format!(",{q}"));
            }
            s.push('\n');
            for (q, row) in table.residues.iter().zip(m) {
                s.push_str(&q.to_string());
                for &b in row {
                    s.push_str(if b { ",1" } else { ",0" });
                }
                s.push('\n');
            }
        }
        s
    } else {
        #[derive(Serialize)]
        struct Out<'a> {
            seed: u64,
            #[serde(flatten)]
            table: &'a reebkit::knots::ClassificationTable,
        }
        to_json(&Out {
            seed: cfg.seed,
            table: &table,
        })?
    };
    emit(cfg, &text)?;
    Ok(Status::Success)
}

fn read_json_arg(spec: &str, what: &str) -> Result<String> {
    let t = spec.trim();
    if t.starts_with('{') {
        return Ok(t.to_string());
    }
    let path = Path::new(t);
    if !path.is_file() {
        bail!(UsageError(format!("{what} file {} not found", path.display())));
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn catalog_periods(cfg: &RunConfig, action: Option<f64>) -> Result<PeriodCatalog> {
    let sys = cfg.require_system()?;
    let c = match action.or(cfg.action_bound) {
        Some(c) => c,
        None => bail!(UsageError(
            "an action bound is needed to catalogue periods (--action)".into()
        )),
    };
    let orbits = catalog(&sys, c)?;
    Ok(PeriodCatalog::from_orbits(&orbits, c)?)
}

pub fn tree_validate(cfg: &RunConfig, tree: &str, sigma: Option<f64>, action: Option<f64>) -> Result<Status> {
    let text = read_json_arg(tree, "tree")?;
    let tree: BubblingTree =
        serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid tree JSON: {e}")))?;
    let sigma = match sigma {
        Some(s) => s,
        None if cfg.system.is_some() => sigma_gap(&catalog_periods(cfg, action.or(Some(tree.bound)))?)?,
        None => bail!(UsageError("pass --sigma, or a system to derive it from".into())),
    };
    let report = validate_tree(&tree, sigma)?;
    #[derive(Serialize)]
    struct Out<'a> {
        seed: u64,
        #[serde(flatten)]
        report: &'a reebkit::bookkeeping::TreeReport,
    }
    emit(
        cfg,
        &to_json(&Out {
            seed: cfg.seed,
            report: &report,
        })?,
    )?;
    Ok(if report.passed {
        Status::Success
    } else {
        Status::Failed
    })
}

pub fn sigma(cfg: &RunConfig, periods: Option<&str>, action: Option<f64>) -> Result<Status> {
    let cat = match periods {
        Some(list) => {
            let ps = parse_floats(list)?;
            let bound = match action {
                Some(c) => c,
                None => ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            };
            let entries = ps
                .iter()
                .enumerate()
                .map(|(i, &t)| (format!("T{}", i + 1), t))
                .collect();
            PeriodCatalog::new(entries, bound)?
        }
        None => catalog_periods(cfg, action)?,
    };
    let sigma = sigma_gap(&cat)?;
    #[derive(Serialize)]
    struct Out<'a> {
        seed: u64,
        bound: f64,
        sigma: f64,
        periods: &'a [(String, f64)],
    }
    emit(
        cfg,
        &to_json(&Out {
            seed: cfg.seed,
            bound: cat.bound(),
            sigma,
            periods: cat.entries(),
        })?,
    )?;
    Ok(Status::Success)
}

/// Where `return-map` starts: one point, or seeded random page points.
pub enum Starts {
    Point(f64, f64),
    Random(usize),
}

#[derive(Serialize)]
struct ReturnRow {
    index: usize,
    start: (f64, f64),
    return_time: Option<f64>,
    image: Option<(f64, f64)>,
    failure: Option<String>,
}

pub fn return_map_cmd(cfg: &RunConfig, starts: Starts, direction: Direction, phase: f64) -> Result<Status> {
    let sys = cfg.require_system()?;
    let page = build_page(&sys, phase)?;
    let points = match starts {
        Starts::Point(r, theta) => vec![(r, theta)],
        Starts::Random(n) => sample_starts(cfg.seed, n),
    };
    if let [start] = points.as_slice() {
        // A single requested start reports its failure as an error.
        return_map(&page, *start, direction, cfg.tol)?;
    }
    let rows: Vec<ReturnRow> = points
        .par_iter()
        .enumerate()
        .map(
            |(index, &start)| match return_map(&page, start, direction, cfg.tol) {
                Ok(rec) => ReturnRow {
                    index,
                    start,
                    return_time: Some(rec.return_time),
                    image: Some(rec.image),
                    failure: None,
                },
                Err(e) => ReturnRow {
                    index,
                    start,
                    return_time: None,
                    image: None,
                    failure: Some(e.to_string()),
                },
            },
        )
        .collect();

    let text = if cfg.csv {
        let f = format_float;
        let mut s = String::from("index,r,theta,return_time,image_r,image_theta,failure\n");
        for r in &rows {
            let (t, ir, it) = match (r.return_time, r.image) {
                (Some(t), Some((a, b))) => (f(t), f(a), f(b)),
                _ => Default::default(),
            };
            let failure = r.failure.as_deref().unwrap_or("").replace(['"', ','], " ");
            s.push_str(&format!(
                "{},{},{},{t},{ir},{it},{failure}\n",
                r.index,
                f(r.start.0),
                f(r.start.1)
            ));
        }
        s
    } else {
        #[derive(Serialize)]
        struct Out<'a> {
            system: ContactSystem,
            seed: u64,
            phase: f64,
            direction: Direction,
            tol: f64,
            returns: &'a [ReturnRow],
        }
        to_json(&Out {
            system: sys,
            seed: cfg.seed,
            phase,
            direction,
            tol: cfg.tol,
            returns: &rows,
        })?
    };
    emit(cfg, &text)?;
    if cfg.svg {
        let pairs: Vec<_> = rows
            .iter()
            .filter_map(|r| r.image.map(|img| (r.start, img)))
            .collect();
        write_file(
            &sibling(cfg, "svg", "--svg")?,
            &svg::scatter("return map on the page", &pairs),
        )?;
    }
    Ok(if rows.iter().all(|r| r.failure.is_none()) {
        Status::Success
    } else {
        Status::Failed
    })
}
