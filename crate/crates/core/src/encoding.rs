//! Patch grid → positional-encoding matrix.
//!
//! For patch `(i, j)` of an `H × W` grid:
//!
//! 1. `u = (j + 0.5)/W`, `v = (i + 0.5)/H`;
//! 2. `z = α_u·u·2Re(ω1) + i·α_v·v·2Im(ω3)`;
//! 3. raw features `[Re ℘, Im ℘, Re ℘′, Im ℘′]` (or the fast-mode features);
//! 4. `f̃_j = tanh(σ·μ_j·f_j)`;
//! 5. `LayerNorm(W_proj·f̃ + b_proj)`, scaled by `β_pos`.
//!
//! Row 0 of the result is the class-token encoding; patch rows follow in
//! row-major `(i, j)` order.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{Lattice, LatticeConfig, SummationOrder};
use crate::fast::{fast_features, FastParams};
use crate::util::{seeded_rng, sigmoid, softplus, softplus_inv};
use crate::{Error, Result};

/// Variance floor of the layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;
/// Standard deviation of the stand-in class-token row.
pub const CLASS_TOKEN_SCALE: f64 = 0.02;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    #[default]
    DirectLattice,
    FastApprox,
}

/// Per-feature modulation `μ` and the shared scale `σ`. A `sigma` of `None`
/// uses `α_scale` from the encoding config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulationParams {
    pub mu: [f64; 4],
    pub sigma: Option<f64>,
}

impl Default for ModulationParams {
    fn default() -> Self {
        Self {
            mu: [1.0; 4],
            sigma: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodingConfig {
    pub height: usize,
    pub width: usize,
    pub alpha_u: f64,
    pub alpha_v: f64,
    /// `α_scale = softplus(alpha_scale_raw)`.
    pub alpha_scale_raw: f64,
    /// When set, `Im(ω3) = softplus(alpha_learn_raw)` replaces the lattice's
    /// own ω3.
    pub alpha_learn_raw: Option<f64>,
    pub beta_pos: f64,
    pub model_dim: usize,
    pub projection_seed: u64,
    pub mode: EncodingMode,
    pub modulation: ModulationParams,
    pub lattice: LatticeConfig,
    pub fast: FastParams,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            height: 14,
            width: 14,
            alpha_u: 0.5,
            alpha_v: 0.5,
            alpha_scale_raw: softplus_inv(0.15),
            alpha_learn_raw: None,
            beta_pos: 1.0,
            model_dim: 192,
            projection_seed: 0,
            mode: EncodingMode::DirectLattice,
            modulation: ModulationParams::default(),
            lattice: LatticeConfig::reference(),
            fast: FastParams::default(),
        }
    }
}

impl EncodingConfig {
    pub fn alpha_scale(&self) -> f64 {
        softplus(self.alpha_scale_raw)
    }

    pub fn sigma(&self) -> f64 {
        self.modulation.sigma.unwrap_or_else(|| self.alpha_scale())
    }

    /// The lattice actually evaluated, with ω3 taken from `alpha_learn_raw`
    /// when that is set.
    pub fn effective_lattice(&self) -> LatticeConfig {
        let mut lattice = self.lattice.clone();
        if let Some(raw) = self.alpha_learn_raw {
            lattice.omega3 = Complex64::new(0.0, softplus(raw));
        }
        lattice
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 1 || self.width < 1 {
            return Err(Error::Config("height and width must be at least 1".into()));
        }
        if self.model_dim < 4 {
            return Err(Error::Config(format!(
                "model_dim must be at least 4, got {}",
                self.model_dim
            )));
        }
        if !(self.alpha_u > 0.0 && self.alpha_v > 0.0) {
            return Err(Error::Config("alpha_u and alpha_v must be positive".into()));
        }
        if !(self.alpha_scale() > 0.0) {
            return Err(Error::Config("alpha_scale must be positive".into()));
        }
        if !self.beta_pos.is_finite() || !self.sigma().is_finite() {
            return Err(Error::Config("beta_pos and sigma must be finite".into()));
        }
        if self.modulation.mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("modulation mu must be finite".into()));
        }
        self.effective_lattice().validate()?;
        self.fast.validate()
    }
}

/// Compressed features, each component in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector4(pub [f64; 4]);

/// Row-major `rows × cols` matrix of encodings. Row 0 is the class token.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingGrid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EncodingGrid {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Argument(format!(
                "grid data has {} values, expected {rows} x {cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Grid of independent standard-normal entries.
    pub fn random_normal(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let data = (0..rows * cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Rows `1..`, i.e. everything but the class token.
    pub fn patch_rows(&self) -> impl Iterator<Item = &[f64]> {
        (1..self.rows).map(move |r| self.row(r))
    }
}

/// Patch-centre coordinates in `(0, 1)²`.
pub fn normalize_coords(i: usize, j: usize, height: usize, width: usize) -> Result<(f64, f64)> {
    if i >= height || j >= width {
        return Err(Error::Argument(format!(
            "patch ({i}, {j}) is outside a {height} x {width} grid"
        )));
    }
    Ok((
        (j as f64 + 0.5) / width as f64,
        (i as f64 + 0.5) / height as f64,
    ))
}

pub fn map_to_complex(u: f64, v: f64, cfg: &EncodingConfig) -> Complex64 {
    let lattice = cfg.effective_lattice();
    map_with(u, v, cfg.alpha_u, cfg.alpha_v, &lattice)
}

fn map_with(u: f64, v: f64, alpha_u: f64, alpha_v: f64, lattice: &LatticeConfig) -> Complex64 {
    Complex64::new(
        alpha_u * u * 2.0 * lattice.omega1.re,
        alpha_v * v * 2.0 * lattice.omega3.im,
    )
}

/// Evaluator shared across all patches of one grid.
enum FeatureSource {
    Direct(Lattice),
    Fast(FastParams),
}

impl FeatureSource {
    fn new(cfg: &EncodingConfig) -> Self {
        match cfg.mode {
            EncodingMode::DirectLattice => FeatureSource::Direct(Lattice::new(
                &cfg.effective_lattice(),
                SummationOrder::ModulusSorted,
            )),
            EncodingMode::FastApprox => FeatureSource::Fast(cfg.fast.clone()),
        }
    }

    fn features(&self, z: Complex64) -> [f64; 4] {
        match self {
            FeatureSource::Direct(lattice) => {
                let p = lattice.wp_pair(z);
                [p.wp.re, p.wp.im, p.wp_prime.re, p.wp_prime.im]
            }
            FeatureSource::Fast(params) => fast_features(z, params),
        }
    }
}

/// Raw (uncompressed) four-wide features at `z`.
pub fn extract_features(z: Complex64, cfg: &EncodingConfig) -> [f64; 4] {
    FeatureSource::new(cfg).features(z)
}

pub fn modulate_and_compress(raw: [f64; 4], mu: [f64; 4], sigma: f64) -> FeatureVector4 {
    let mut out = [0.0; 4];
    for ((o, r), m) in out.iter_mut().zip(raw).zip(mu) {
        *o = (sigma * m * r).tanh();
    }
    FeatureVector4(out)
}

/// Seeded linear map `ℝ⁴ → ℝᵈ` plus the stand-in class-token row.
///
/// Both come from one ChaCha8 stream seeded with the projection seed: first
/// the `d × 4` weights (standard normal × 1/2, row-major), then the class row
/// (standard normal × 0.02). The bias is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub weights: Vec<[f64; 4]>,
    pub bias: Vec<f64>,
    pub class_token: Vec<f64>,
}

impl Projection {
    pub fn seeded(dim: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
        let weights = (0..dim)
            .map(|_| {
                let mut w = [0.0; 4];
                for x in w.iter_mut() {
                    *x = 0.5 * normal();
                }
                w
            })
            .collect();
        let class_token = (0..dim).map(|_| CLASS_TOKEN_SCALE * normal()).collect();
        Self {
            weights,
            bias: vec![0.0; dim],
            class_token,
        }
    }

    pub fn from_config(cfg: &EncodingConfig) -> Self {
        Self::seeded(cfg.model_dim, cfg.projection_seed)
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Layer normalization without affine parameters.
pub fn layer_norm(y: &mut [f64]) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    for v in y.iter_mut() {
        *v = (*v - mean) * inv;
    }
}

pub fn project_and_norm(f: &FeatureVector4, proj: &Projection) -> Vec<f64> {
    let mut y: Vec<f64> = proj
        .weights
        .iter()
        .zip(&proj.bias)
        .map(|(w, b)| w[0] * f.0[0] + w[1] * f.0[1] + w[2] * f.0[2] + w[3] * f.0[3] + b)
        .collect();
    layer_norm(&mut y);
    y
}

/// Full pipeline for one configuration. Patches are evaluated in parallel;
/// the result does not depend on scheduling.
pub fn generate_encoding_grid(cfg: &EncodingConfig) -> Result<EncodingGrid> {
    cfg.validate()?;
    let (h, w, d) = (cfg.height, cfg.width, cfg.model_dim);
    let lattice = cfg.effective_lattice();
    let source = FeatureSource::new(cfg);
    let proj = Projection::from_config(cfg);
    let (mu, sigma) = (cfg.modulation.mu, cfg.sigma());

    let patches: Vec<Vec<f64>> = (0..h * w)
        .into_par_iter()
        .map(|p| {
            let (i, j) = (p / w, p % w);
            let u = (j as f64 + 0.5) / w as f64;
            let v = (i as f64 + 0.5) / h as f64;
            let z = map_with(u, v, cfg.alpha_u, cfg.alpha_v, &lattice);
            let f = modulate_and_compress(source.features(z), mu, sigma);
            let mut row = project_and_norm(&f, &proj);
            for x in row.iter_mut() {
                *x *= cfg.beta_pos;
            }
            row
        })
        .collect();

    let mut data = Vec::with_capacity((h * w + 1) * d);
    data.extend_from_slice(&proj.class_token);
    for row in patches {
        data.extend(row);
    }
    EncodingGrid::new(h * w + 1, d, data)
}

/// Gate between a generated grid and pre-trained embeddings of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridParams {
    pub lambda_raw: f64,
    pub learned: EncodingGrid,
}

impl HybridParams {
    pub fn lambda(&self) -> f64 {
        sigmoid(self.lambda_raw)
    }
}

/// Patch rows `λ·wef + (1 - λ)·learned`; the class row is copied from
/// `learned` unchanged.
pub fn hybrid_blend(wef: &EncodingGrid, h: &HybridParams) -> Result<EncodingGrid> {
    if wef.shape() != h.learned.shape() {
        return Err(Error::Argument(format!(
            "hybrid shapes differ: {:?} vs {:?}",
            wef.shape(),
            h.learned.shape()
        )));
    }
    let lambda = h.lambda();
    let mut out = h.learned.clone();
    for r in 1..out.rows() {
        for (o, &a) in out.row_mut(r).iter_mut().zip(wef.row(r)) {
            *o = lambda * a + (1.0 - lambda) * *o;
        }
    }
    Ok(out)
}
