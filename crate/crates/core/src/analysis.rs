//! Structural statistics of encoding grids: cosine similarity, distance decay
//! over binned patch pairs, noise fusion and a two-component PCA.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::encoding::EncodingGrid;
use crate::linalg::symmetric_eigen;
use crate::util::seeded_rng;
use crate::{Error, Result};

/// Default bin count for decay analysis.
pub const DEFAULT_BINS: usize = 80;
/// Band onto which bin means are min-max mapped for the decay magnitude.
pub const MAPPED_RANGE: (f64, f64) = (13.5, 16.5);

/// Dense symmetric `n × n` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarities between patch rows (and the class row when
/// `include_cls`). Exactly symmetric with a unit diagonal.
pub fn cosine_similarity_matrix(
    grid: &EncodingGrid,
    include_cls: bool,
) -> Result<SimilarityMatrix> {
    let first = if include_cls { 0 } else { 1 };
    let rows: Vec<&[f64]> = (first..grid.rows()).map(|r| grid.row(r)).collect();
    let n = rows.len();
    let mut norms = Vec::with_capacity(n);
    for (k, r) in rows.iter().enumerate() {
        let norm = dot(r, r).sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateRow(k + first));
        }
        norms.push(norm);
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in i + 1..n {
            let s = dot(rows[i], rows[j]) / (norms[i] * norms[j]);
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix { n, values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    /// Euclidean distance in patch units.
    pub distance: f64,
    /// `100 · distance / max_distance`.
    pub rel_distance: f64,
    pub similarity: f64,
}

/// One sample per unordered pair of patches, in `(a, b)` order with `a < b`
/// over row-major patch indices.
pub fn pairwise_samples(
    grid: &EncodingGrid,
    height: usize,
    width: usize,
) -> Result<Vec<PairSample>> {
    if grid.rows() != height * width + 1 {
        return Err(Error::Argument(format!(
            "grid has {} rows, expected {} for a {height} x {width} patch grid",
            grid.rows(),
            height * width + 1
        )));
    }
    let sim = cosine_similarity_matrix(grid, false)?;
    let n = height * width;
    let max_distance = (((height - 1).pow(2) + (width - 1).pow(2)) as f64).sqrt();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for a in 0..n {
        let (ia, ja) = ((a / width) as f64, (a % width) as f64);
        for b in a + 1..n {
            let (ib, jb) = ((b / width) as f64, (b % width) as f64);
            let distance = ((ia - ib).powi(2) + (ja - jb).powi(2)).sqrt();
            out.push(PairSample {
                distance,
                rel_distance: 100.0 * (distance / max_distance),
                similarity: sim.get(a, b),
            });
        }
    }
    Ok(out)
}

/// Aggregate of one nonempty distance bin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinMean {
    pub index: usize,
    pub center: f64,
    pub mean_similarity: f64,
    pub count: usize,
}

/// Equal-width bins over `rel_distance ∈ [0, 100]`; empty bins are dropped.
/// Means are summed in sample order, so chunking never changes the result.
pub fn bin_and_aggregate(samples: &[PairSample], n_bins: usize) -> Result<Vec<BinMean>> {
    if n_bins == 0 {
        return Err(Error::Argument("n_bins must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::Argument("no samples to bin".into()));
    }
    let width = 100.0 / n_bins as f64;
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for s in samples {
        let idx = ((s.rel_distance / width) as usize).min(n_bins - 1);
        sums[idx] += s.similarity;
        counts[idx] += 1;
    }
    Ok((0..n_bins)
        .filter(|&k| counts[k] > 0)
        .map(|k| BinMean {
            index: k,
            center: (k as f64 + 0.5) * width,
            mean_similarity: sums[k] / counts[k] as f64,
            count: counts[k],
        })
        .collect())
}

/// Spread within `CONSTANT_TOLERANCE` of the magnitude: rounding noise only.
fn is_constant(x: &[f64]) -> bool {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    !(hi - lo > CONSTANT_TOLERANCE * lo.abs().max(hi.abs()))
}

/// Relative spread below which [`pearson`] treats an input as constant.
pub const CONSTANT_TOLERANCE: f64 = 1e-12;

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Argument(format!(
            "pearson needs two equal-length inputs of at least 2 values (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if is_constant(x) || is_constant(y) {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// One row of the decay table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub bin_center: f64,
    pub mean_similarity: f64,
    /// Bin mean min-max mapped onto [`MAPPED_RANGE`].
    pub mapped_similarity: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub n_pairs: usize,
    pub n_bins: usize,
    pub bins: Vec<BinStat>,
    /// Correlation of bin centres with bin means.
    pub pearson_rho: f64,
    /// Correlation of `rel_distance` with similarity over all pairs.
    pub pearson_rho_raw: f64,
    /// Fraction of consecutive nonempty-bin transitions whose mean strictly
    /// decreases.
    pub monotonicity: f64,
    /// `(first - last) / first` on the mapped bin means.
    pub decay_magnitude: f64,
    /// Same ratio on raw bin means; `None` when the first mean is not positive.
    pub decay_magnitude_raw: Option<f64>,
    pub initial_strength: f64,
    pub final_strength: f64,
}

pub fn decay_report(
    grid: &EncodingGrid,
    height: usize,
    width: usize,
    n_bins: usize,
) -> Result<DecayReport> {
    let samples = pairwise_samples(grid, height, width)?;
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "grid has fewer than two patches".into(),
        ));
    }
    decay_report_from_samples(&samples, n_bins)
}

/// Bin means with their min-max mapping onto [`MAPPED_RANGE`]. When all means
/// are equal every bin maps to the top of the band.
pub fn bin_table(samples: &[PairSample], n_bins: usize) -> Result<Vec<BinStat>> {
    let bins = bin_and_aggregate(samples, n_bins)?;
    let lo = bins
        .iter()
        .map(|b| b.mean_similarity)
        .fold(f64::INFINITY, f64::min);
    let hi = bins
        .iter()
        .map(|b| b.mean_similarity)
        .fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = MAPPED_RANGE;
    Ok(bins
        .iter()
        .map(|bm| BinStat {
            bin_center: bm.center,
            mean_similarity: bm.mean_similarity,
            mapped_similarity: if hi > lo {
                a + (b - a) * (bm.mean_similarity - lo) / (hi - lo)
            } else {
                b
            },
            count: bm.count,
        })
        .collect())
}

pub fn decay_report_from_samples(samples: &[PairSample], n_bins: usize) -> Result<DecayReport> {
    let bins = bin_table(samples, n_bins)?;
    if bins.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} nonempty bin(s); at least 2 are needed",
            bins.len()
        )));
    }
    let centers: Vec<f64> = bins.iter().map(|b| b.bin_center).collect();
    let means: Vec<f64> = bins.iter().map(|b| b.mean_similarity).collect();
    let pearson_rho = pearson(&centers, &means)?;
    let rel: Vec<f64> = samples.iter().map(|s| s.rel_distance).collect();
    let sims: Vec<f64> = samples.iter().map(|s| s.similarity).collect();
    let pearson_rho_raw = pearson(&rel, &sims)?;

    let decreasing = means.windows(2).filter(|w| w[1] < w[0]).count();
    let monotonicity = decreasing as f64 / (means.len() - 1) as f64;

    let first = bins[0].mapped_similarity;
    let last = bins[bins.len() - 1].mapped_similarity;
    let decay_magnitude = (first - last) / first;
    let raw_first = means[0];
    let decay_magnitude_raw =
        (raw_first > 0.0).then(|| (raw_first - means[means.len() - 1]) / raw_first);

    Ok(DecayReport {
        n_pairs: samples.len(),
        n_bins,
        bins,
        pearson_rho,
        pearson_rho_raw,
        monotonicity,
        decay_magnitude,
        decay_magnitude_raw,
        initial_strength: first,
        final_strength: last,
    })
}

/// Adds a fresh standard-normal vector to every patch row; the class row is
/// left as is. Noise is drawn row by row from one seeded stream.
pub fn fuse_with_noise(grid: &EncodingGrid, noise_seed: u64, dim: usize) -> Result<EncodingGrid> {
    if dim != grid.cols() {
        return Err(Error::Argument(format!(
            "noise dimension {dim} does not match grid width {}",
            grid.cols()
        )));
    }
    let mut rng = seeded_rng(noise_seed);
    let mut out = grid.clone();
    for r in 1..out.rows() {
        for x in out.row_mut(r).iter_mut() {
            let noise: f64 = StandardNormal.sample(&mut rng);
            *x += noise;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Per-row projections onto the top two principal axes.
    pub coords: Vec<[f64; 2]>,
    /// Variances along the two axes (covariance eigenvalues, `N - 1` scaling).
    pub explained_variance: [f64; 2],
    /// Those variances as fractions of the total variance.
    pub explained_ratio: [f64; 2],
    /// Unit principal axes; the first nonzero coordinate of each is positive.
    pub components: [Vec<f64>; 2],
}

/// Top-two principal components of the `rows` (all the same length).
///
/// Works in whichever of the `d × d` covariance or `N × N` Gram matrix is
/// smaller; both have the same nonzero spectrum.
pub fn pca_top2(rows: &[&[f64]]) -> Result<PcaResult> {
    let n = rows.len();
    if n < 3 {
        return Err(Error::Argument(format!(
            "PCA needs at least 3 rows, got {n}"
        )));
    }
    let d = rows[0].len();
    if d < 2 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Argument(
            "PCA rows must share a width of at least 2".into(),
        ));
    }
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(*r) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let scale = 1.0 / (n - 1) as f64;
    let total_var: f64 = centered.iter().map(|r| dot(r, r)).sum::<f64>() * scale;

    let mut components: [Vec<f64>; 2] = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [0.0; 2];
    if d <= n {
        let mut cov = vec![0.0; d * d];
        for r in &centered {
            for i in 0..d {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                for j in i..d {
                    cov[i * d + j] += ri * r[j];
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[i * d + j] * scale;
                cov[i * d + j] = v;
                cov[j * d + i] = v;
            }
        }
        let eig = symmetric_eigen(&cov, d);
        for k in 0..2 {
            variances[k] = eig.values[k].max(0.0);
            components[k] = eig.vectors[k].clone();
        }
    } else {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&centered[i], &centered[j]) * scale;
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        let eig = symmetric_eigen(&gram, n);
        for k in 0..2 {
            variances[k] = eig.values[k].max(0.0);
            // axis = Xᵀu / ‖Xᵀu‖
            let mut axis = vec![0.0; d];
            for (r, &uk) in centered.iter().zip(&eig.vectors[k]) {
                for (a, x) in axis.iter_mut().zip(r) {
                    *a += uk * x;
                }
            }
            let norm = dot(&axis, &axis).sqrt();
            if norm > 0.0 {
                axis.iter_mut().for_each(|a| *a /= norm);
            }
            components[k] = axis;
        }
    }
    for c in components.iter_mut() {
        if let Some(&first) = c.iter().find(|x| **x != 0.0) {
            if first < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
        }
    }
    let coords = centered
        .iter()
        .map(|r| [dot(r, &components[0]), dot(r, &components[1])])
        .collect();
    let ratio = |v: f64| if total_var > 0.0 { v / total_var } else { 0.0 };
    Ok(PcaResult {
        coords,
        explained_variance: variances,
        explained_ratio: [ratio(variances[0]), ratio(variances[1])],
        components,
    })
}

/// PCA over the patch rows of a grid.
pub fn pca_grid(grid: &EncodingGrid) -> Result<PcaResult> {
    let rows: Vec<&[f64]> = grid.patch_rows().collect();
    pca_top2(&rows)
}
