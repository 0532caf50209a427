//! Partial-sum convergence of the lattice series against a deep-truncation
//! reference, for both summation orders.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{
    first_excluded_radius, truncation_bound, Lattice, LatticeConfig, SummationOrder,
};
use crate::identities::sample_cell;
use crate::util::seeded_rng;
use crate::{Error, Result};

/// Truncation index of the reference evaluation.
pub const ORACLE_TRUNCATION: usize = 48;
/// Number of fixed sample points.
pub const BENCH_POINTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub k: usize,
    pub ordering: SummationOrder,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// `max 2|z|/R_max²` over the points, with `R_max` the smallest modulus of
    /// the first excluded shell. Only set when the `k` terms are the whole
    /// truncation box, the one case where the term set is a full shell.
    pub bound: Option<f64>,
}

/// Per-point absolute errors of ℘ for one `(k, ordering)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PointErrors {
    pub k: usize,
    pub ordering: SummationOrder,
    pub errors: Vec<f64>,
}

/// Seeded sample points in the fundamental cell, kept away from the lattice.
pub fn bench_points(cfg: &LatticeConfig, count: usize, seed: u64) -> Vec<Complex64> {
    sample_cell(cfg, count, &mut seeded_rng(seed))
}

/// ℘ at each point from the modulus-sorted sum truncated at `truncation`.
pub fn oracle_values(
    cfg: &LatticeConfig,
    points: &[Complex64],
    truncation: usize,
) -> Vec<Complex64> {
    let deep = Lattice::new(
        &cfg.clone().with_truncation(truncation, truncation),
        SummationOrder::ModulusSorted,
    );
    points.iter().map(|&z| deep.wp_pair(z).wp).collect()
}

/// Absolute errors of the `k`-term partial sums of `cfg`'s lattice, for every
/// `k` in `k_list` and both orderings.
pub fn partial_sum_errors(
    cfg: &LatticeConfig,
    k_list: &[usize],
    points: &[Complex64],
    oracle: &[Complex64],
) -> Result<Vec<PointErrors>> {
    if k_list.is_empty() {
        return Err(Error::Argument("k_list must not be empty".into()));
    }
    if let Some(&k) = k_list.iter().find(|&&k| k == 0 || k > cfg.term_count()) {
        return Err(Error::Argument(format!(
            "k = {k} outside 1..={} for this truncation",
            cfg.term_count()
        )));
    }
    let mut out = Vec::with_capacity(2 * k_list.len());
    for order in [SummationOrder::ModulusSorted, SummationOrder::Lexicographic] {
        let lattice = Lattice::new(cfg, order);
        for &k in k_list {
            let errors = points
                .iter()
                .zip(oracle)
                .map(|(&z, &o)| (lattice.partial_wp_pair(z, k).wp - o).norm())
                .collect();
            out.push(PointErrors {
                k,
                ordering: order,
                errors,
            });
        }
    }
    Ok(out)
}

/// Full benchmark table: rows ordered by `k` within each ordering, sorted
/// ordering first.
pub fn convergence_benchmark(
    cfg: &LatticeConfig,
    k_list: &[usize],
    point_count: usize,
    seed: u64,
    oracle_truncation: usize,
) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    if point_count == 0 {
        return Err(Error::Argument("benchmark needs at least one point".into()));
    }
    if oracle_truncation <= cfg.max_m.max(cfg.max_n) {
        return Err(Error::Argument(format!(
            "oracle truncation {oracle_truncation} must exceed the evaluated truncation"
        )));
    }
    let points = bench_points(cfg, point_count, seed);
    let oracle = oracle_values(cfg, &points, oracle_truncation);
    let r_max = first_excluded_radius(cfg);
    let full_bound = points
        .iter()
        .map(|&z| truncation_bound(z, r_max))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(partial_sum_errors(cfg, k_list, &points, &oracle)?
        .into_iter()
        .map(|pe| BenchRow {
            k: pe.k,
            ordering: pe.ordering,
            mean_abs_error: pe.errors.iter().sum::<f64>() / pe.errors.len() as f64,
            max_abs_error: pe.errors.iter().copied().fold(0.0, f64::max),
            bound: (pe.k == cfg.term_count()).then_some(full_bound),
        })
        .collect())
}
