//! Command implementations. Each returns after printing its JSON result.

use std::path::Path;

use serde_json::{json, Value};

use wefpe::analysis::{
    bin_table, cosine_similarity_matrix, decay_report_from_samples, fuse_with_noise,
    pairwise_samples, pca_grid,
};
use wefpe::config::{Periods, RunConfig};
use wefpe::convergence::convergence_benchmark;
use wefpe::encoding::{
    generate_encoding_grid, hybrid_blend, EncodingConfig, EncodingGrid, HybridParams,
};
use wefpe::gridfile;
use wefpe::identities::identity_report;
use wefpe::{Error, Result};

use crate::output::{csv, num, print_json, sha256_hex, write_text};
use crate::{Cli, Command, Outcome};

pub fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match cli.config.as_deref() {
        Some(path) => with_path(path, RunConfig::load(Some(path)))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Gen { enc, out } => {
            enc.apply(&mut cfg);
            gen(&cfg, &out)
        }
        Command::Verify {
            lattice,
            samples,
            seed,
        } => {
            lattice.apply(&mut cfg);
            if let Some(s) = samples {
                cfg.verify.samples = s;
            }
            if let Some(s) = seed {
                cfg.verify.seed = s;
            }
            verify(&cfg)
        }
        Command::Decay {
            enc,
            bins,
            noise_seed,
            csv,
        } => {
            enc.apply(&mut cfg);
            if let Some(b) = bins {
                cfg.decay.bins = b;
            }
            if noise_seed.is_some() {
                cfg.decay.noise_seed = noise_seed;
            }
            decay(&cfg, csv.as_deref())
        }
        Command::Bench {
            lattice,
            k_list,
            points,
            seed,
            oracle_truncation,
            out,
        } => {
            lattice.apply(&mut cfg);
            if let Some(k) = k_list {
                cfg.bench.k_list = k;
            }
            if let Some(p) = points {
                cfg.bench.points = p;
            }
            if let Some(s) = seed {
                cfg.bench.seed = s;
            }
            if let Some(t) = oracle_truncation {
                cfg.bench.oracle_truncation = t;
            }
            bench(&cfg, out.as_deref())
        }
        Command::Similarity {
            enc,
            include_cls,
            out,
        } => {
            enc.apply(&mut cfg);
            similarity(&cfg, include_cls, &out)
        }
        Command::Pca { enc, out } => {
            enc.apply(&mut cfg);
            pca(&cfg, &out)
        }
        Command::Hybrid {
            wef,
            learned,
            lambda_raw,
            out,
        } => {
            if let Some(l) = lambda_raw {
                cfg.hybrid.lambda_raw = l;
            }
            hybrid(&cfg, &wef, &learned, &out)
        }
        Command::Config => {
            print_json(&serde_json::to_value(&cfg).expect("config serializes"));
            Ok(Outcome::Ok)
        }
    }
}

/// Prefixes I/O and format errors with the file they concern.
fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn grid_for(cfg: &RunConfig) -> Result<(EncodingConfig, EncodingGrid)> {
    let enc = cfg.resolved_encoding()?;
    let grid = generate_encoding_grid(&enc)?;
    Ok((enc, grid))
}

fn write_grid(path: &Path, grid: &EncodingGrid) -> Result<Value> {
    let bytes = gridfile::encode(grid)?;
    with_path(path, gridfile::write_atomic(path, &bytes))?;
    eprintln!("wrote {} ({} bytes)", path.display(), bytes.len());
    Ok(json!({
        "path": path.display().to_string(),
        "rows": grid.rows(),
        "cols": grid.cols(),
        "bytes": bytes.len(),
        "sha256": sha256_hex(&bytes),
    }))
}

fn gen(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (_, grid) = grid_for(cfg)?;
    print_json(&write_grid(out, &grid)?);
    Ok(Outcome::Ok)
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let lattice = cfg.resolved_lattice(Periods::Exact)?;
    let report = identity_report(&lattice, cfg.verify.samples, cfg.verify.seed)?;
    let failures = report.failures();
    let mut value = serde_json::to_value(&report).expect("report serializes");
    value["passed"] = json!(failures.is_empty());
    value["failures"] = json!(failures);
    value["lattice"] = json!({
        "g2": lattice.g2,
        "g3": lattice.g3,
        "omega1": [lattice.omega1.re, lattice.omega1.im],
        "omega3": [lattice.omega3.re, lattice.omega3.im],
        "max_m": lattice.max_m,
        "max_n": lattice.max_n,
    });
    print_json(&value);
    if failures.is_empty() {
        Ok(Outcome::Ok)
    } else {
        eprintln!("identity checks failed: {}", failures.join(", "));
        Ok(Outcome::CheckFailed)
    }
}

fn decay(cfg: &RunConfig, csv_path: Option<&Path>) -> Result<Outcome> {
    let (enc, mut grid) = grid_for(cfg)?;
    if let Some(seed) = cfg.decay.noise_seed {
        grid = fuse_with_noise(&grid, seed, enc.model_dim)?;
    }
    let samples = pairwise_samples(&grid, enc.height, enc.width)?;
    if let Some(path) = csv_path {
        let bins = bin_table(&samples, cfg.decay.bins)?;
        let rows = bins.iter().map(|b| {
            vec![
                num(b.bin_center),
                num(b.mean_similarity),
                num(b.mapped_similarity),
                b.count.to_string(),
            ]
        });
        let text = csv(
            Some(&[
                "bin_center",
                "mean_similarity",
                "mapped_similarity",
                "count",
            ]),
            rows,
        );
        with_path(path, write_text(path, &text))?;
        eprintln!("wrote {}", path.display());
    }
    let report = decay_report_from_samples(&samples, cfg.decay.bins)?;
    print_json(&serde_json::to_value(&report).expect("report serializes"));
    Ok(Outcome::Ok)
}

fn bench(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome> {
    let lattice = cfg.resolved_lattice(Periods::Exact)?;
    let b = &cfg.bench;
    let rows = convergence_benchmark(&lattice, &b.k_list, b.points, b.seed, b.oracle_truncation)?;
    if let Some(path) = out {
        let text = csv(
            Some(&["k", "ordering", "mean_abs_error", "max_abs_error", "bound"]),
            rows.iter().map(|r| {
                vec![
                    r.k.to_string(),
                    r.ordering.name().to_string(),
                    num(r.mean_abs_error),
                    num(r.max_abs_error),
                    r.bound.map(num).unwrap_or_default(),
                ]
            }),
        );
        with_path(path, write_text(path, &text))?;
        eprintln!("wrote {}", path.display());
    }
    let violations: Vec<usize> = rows
        .iter()
        .filter(|r| r.bound.is_some_and(|bound| r.max_abs_error > bound))
        .map(|r| r.k)
        .collect();
    print_json(&json!({
        "rows": rows,
        "bound_violations": violations,
    }));
    if violations.is_empty() {
        Ok(Outcome::Ok)
    } else {
        eprintln!("truncation bound exceeded at k = {violations:?}");
        Ok(Outcome::CheckFailed)
    }
}

fn similarity(cfg: &RunConfig, include_cls: bool, out: &Path) -> Result<Outcome> {
    let (_, grid) = grid_for(cfg)?;
    let sim = cosine_similarity_matrix(&grid, include_cls)?;
    let text = csv(
        None,
        (0..sim.n).map(|i| sim.row(i).iter().map(|&x| num(x)).collect()),
    );
    with_path(out, write_text(out, &text))?;
    eprintln!("wrote {}", out.display());
    print_json(&json!({
        "path": out.display().to_string(),
        "n": sim.n,
        "include_cls": include_cls,
    }));
    Ok(Outcome::Ok)
}

fn pca(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (enc, grid) = grid_for(cfg)?;
    let p = pca_grid(&grid)?;
    let rows = p.coords.iter().enumerate().map(|(k, c)| {
        vec![
            (k / enc.width).to_string(),
            (k % enc.width).to_string(),
            num(c[0]),
            num(c[1]),
        ]
    });
    with_path(
        out,
        write_text(out, &csv(Some(&["i", "j", "pc1", "pc2"]), rows)),
    )?;
    eprintln!("wrote {}", out.display());
    print_json(&json!({
        "path": out.display().to_string(),
        "rows": p.coords.len(),
        "explained_variance": p.explained_variance,
        "explained_ratio": p.explained_ratio,
    }));
    Ok(Outcome::Ok)
}

fn hybrid(cfg: &RunConfig, wef: &Path, learned: &Path, out: &Path) -> Result<Outcome> {
    let wef_grid = with_path(wef, gridfile::read(wef))?;
    let learned_grid = with_path(learned, gridfile::read(learned))?;
    if wef_grid.shape() != learned_grid.shape() {
        return Err(Error::Argument(format!(
            "shape mismatch: {} is {:?}, {} is {:?}",
            wef.display(),
            wef_grid.shape(),
            learned.display(),
            learned_grid.shape()
        )));
    }
    let params = HybridParams {
        lambda_raw: cfg.hybrid.lambda_raw,
        learned: learned_grid,
    };
    let blended = hybrid_blend(&wef_grid, &params)?;
    let mut value = write_grid(out, &blended)?;
    value["lambda"] = json!(params.lambda());
    print_json(&value);
    Ok(Outcome::Ok)
}
