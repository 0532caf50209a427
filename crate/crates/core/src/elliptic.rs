//! Direct lattice summation of the Weierstrass ℘ function and its derivative.
//!
//! ```text
//! ℘(z)  = 1/z² + Σ' [ 1/(z - ω)² - 1/ω² ]
//! ℘′(z) = -2/z³ + Σ' [ -2/(z - ω)³ ]
//! ```
//!
//! where ω = 2m·ω1 + 2n·ω3 runs over the truncated index box `|m| ≤ M, |n| ≤ N`
//! without the origin. Terms are accumulated in a fixed order (modulus-sorted by
//! default), each term is clamped component-wise to `±term_clip` and the final
//! values to `±final_clip`. Inputs within `15·eps` of an enumerated lattice point
//! (or the origin) return `pole_value` for both outputs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::{Error, Result};

/// Real half-period of the square reference lattice used by the encoder.
///
/// This lattice has invariants `g2 = 1/4, g3 = 0`; the half-period of the
/// `g2 = 1` square lattice is `REFERENCE_HALF_PERIOD / √2`, see
/// [`LatticeConfig::lemniscatic`].
pub const REFERENCE_HALF_PERIOD: f64 = 2.62205755429212;

/// Multiplier on `eps` for the pole-proximity test.
pub const POLE_RADIUS_FACTOR: f64 = 15.0;

/// Lattice, truncation and clamping constants for one evaluation regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub g2: f64,
    pub g3: f64,
    pub omega1: Complex64,
    pub omega3: Complex64,
    pub eps: f64,
    pub max_m: usize,
    pub max_n: usize,
    pub term_clip: f64,
    pub final_clip: f64,
    pub pole_value: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl LatticeConfig {
    /// The encoder's reference regime: `g2 = 1, g3 = 0` with the half-periods
    /// returned by [`lemniscatic_half_periods`].
    pub fn reference() -> Self {
        let periods = lemniscatic_half_periods(1.0, 0.0, 1e-8)
            .expect("reference invariants are non-degenerate");
        Self {
            g2: 1.0,
            g3: 0.0,
            omega1: periods.omega1,
            omega3: periods.omega3,
            eps: 1e-8,
            max_m: 12,
            max_n: 12,
            term_clip: 5e3,
            final_clip: 1e4,
            pole_value: 5e2,
        }
    }

    /// Square lattice whose invariants really are `(g2, 0)`.
    ///
    /// Uses ω1 = Γ(1/4)² / (4√π) · g2^(-1/4), ω3 = i·ω1. All other constants
    /// are the reference defaults.
    pub fn lemniscatic(g2: f64) -> Result<Self> {
        if !(g2 > 0.0 && g2.is_finite()) {
            return Err(Error::Config(format!(
                "lemniscatic lattice needs g2 > 0, got {g2}"
            )));
        }
        let g = gamma(0.25);
        let omega = g * g / (4.0 * std::f64::consts::PI.sqrt()) * g2.powf(-0.25);
        Ok(Self {
            g2,
            g3: 0.0,
            omega1: Complex64::new(omega, 0.0),
            omega3: Complex64::new(0.0, omega),
            ..Self::reference()
        })
    }

    pub fn with_truncation(mut self, max_m: usize, max_n: usize) -> Self {
        self.max_m = max_m;
        self.max_n = max_n;
        self
    }

    pub fn discriminant(&self) -> f64 {
        self.g2.powi(3) - 27.0 * self.g3 * self.g3
    }

    pub fn validate(&self) -> Result<()> {
        let disc = self.discriminant();
        if !(disc.abs() > self.eps) {
            return Err(Error::DegenerateDiscriminant(disc));
        }
        if !(self.omega1.re > 0.0) {
            return Err(Error::Config(format!(
                "Re(omega1) must be positive, got {}",
                self.omega1.re
            )));
        }
        if !(self.omega3.im > 0.0) {
            return Err(Error::Config(format!(
                "Im(omega3) must be positive, got {}",
                self.omega3.im
            )));
        }
        if self.max_m < 1 || self.max_n < 1 {
            return Err(Error::Config("max_m and max_n must be at least 1".into()));
        }
        for (name, v) in [
            ("eps", self.eps),
            ("term_clip", self.term_clip),
            ("final_clip", self.final_clip),
            ("pole_value", self.pole_value),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Number of lattice points in the truncated box, origin excluded.
    pub fn term_count(&self) -> usize {
        (2 * self.max_m + 1) * (2 * self.max_n + 1) - 1
    }

    pub fn pole_radius(&self) -> f64 {
        POLE_RADIUS_FACTOR * self.eps
    }

    pub fn point(&self, m: i64, n: i64) -> Complex64 {
        2.0 * m as f64 * self.omega1 + 2.0 * n as f64 * self.omega3
    }
}

/// Half-periods selected from the invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPeriods {
    pub omega1: Complex64,
    pub omega3: Complex64,
    /// Set when `g3 ≠ 0`: the returned values are placeholders `(1, i)`
    /// because periods of a general lattice are not computed.
    pub general_case: bool,
}

/// Half-periods for the invariants `(g2, g3)`.
///
/// For `|g3| < eps` this returns the reference square lattice
/// `(2.62205755429212, 2.62205755429212·i)`; otherwise the placeholder `(1, i)`
/// with `general_case` set.
pub fn lemniscatic_half_periods(g2: f64, g3: f64, eps: f64) -> Result<HalfPeriods> {
    let disc = g2.powi(3) - 27.0 * g3 * g3;
    if !(disc.abs() > eps) {
        return Err(Error::DegenerateDiscriminant(disc));
    }
    if g3.abs() < eps {
        Ok(HalfPeriods {
            omega1: Complex64::new(REFERENCE_HALF_PERIOD, 0.0),
            omega3: Complex64::new(0.0, REFERENCE_HALF_PERIOD),
            general_case: false,
        })
    } else {
        Ok(HalfPeriods {
            omega1: Complex64::new(1.0, 0.0),
            omega3: Complex64::new(0.0, 1.0),
            general_case: true,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummationOrder {
    /// Ascending |ω|; ties keep row-major index order.
    #[default]
    ModulusSorted,
    /// Row-major over `(m, n)`, `m` outermost, both ascending.
    Lexicographic,
}

impl SummationOrder {
    pub fn name(self) -> &'static str {
        match self {
            SummationOrder::ModulusSorted => "modulus_sorted",
            SummationOrder::Lexicographic => "lexicographic",
        }
    }
}

/// `(℘(z), ℘′(z))` after clamping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpPair {
    pub wp: Complex64,
    pub wp_prime: Complex64,
}

/// Lattice points of the truncated box in summation order.
pub fn enumerate_lattice(cfg: &LatticeConfig, order: SummationOrder) -> Vec<Complex64> {
    let (mm, nn) = (cfg.max_m as i64, cfg.max_n as i64);
    let mut points = Vec::with_capacity(cfg.term_count());
    for m in -mm..=mm {
        for n in -nn..=nn {
            if m == 0 && n == 0 {
                continue;
            }
            points.push(cfg.point(m, n));
        }
    }
    if order == SummationOrder::ModulusSorted {
        // stable, so equal moduli stay in row-major order
        points.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    }
    points
}

/// Modulus of the farthest point of the truncation box.
pub fn farthest_included_radius(cfg: &LatticeConfig) -> f64 {
    let (mm, nn) = (cfg.max_m as i64, cfg.max_n as i64);
    [(mm, nn), (mm, -nn), (-mm, nn), (-mm, -nn)]
        .iter()
        .map(|&(m, n)| cfg.point(m, n).norm())
        .fold(0.0, f64::max)
}

/// Smallest modulus among the lattice points just outside the truncation box.
pub fn first_excluded_radius(cfg: &LatticeConfig) -> f64 {
    let (mm, nn) = (cfg.max_m as i64 + 1, cfg.max_n as i64 + 1);
    let mut best = f64::INFINITY;
    for m in -mm..=mm {
        for n in -nn..=nn {
            if m.abs() == mm || n.abs() == nn {
                best = best.min(cfg.point(m, n).norm());
            }
        }
    }
    best
}

fn clamp_c(c: Complex64, bound: f64) -> Complex64 {
    Complex64::new(c.re.clamp(-bound, bound), c.im.clamp(-bound, bound))
}

/// A lattice prepared for repeated evaluation: points enumerated and ordered
/// once, `1/ω²` cached.
#[derive(Clone, Debug)]
pub struct Lattice {
    cfg: LatticeConfig,
    order: SummationOrder,
    points: Vec<Complex64>,
    inv_sq: Vec<Complex64>,
}

impl Lattice {
    pub fn new(cfg: &LatticeConfig, order: SummationOrder) -> Self {
        let points = enumerate_lattice(cfg, order);
        let inv_sq = points.iter().map(|w| w.inv().powi(2)).collect();
        Self {
            cfg: cfg.clone(),
            order,
            points,
            inv_sq,
        }
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.cfg
    }

    pub fn order(&self) -> SummationOrder {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// True if `z` is within the pole radius of the origin or of an enumerated
    /// lattice point.
    pub fn near_pole(&self, z: Complex64) -> bool {
        let r = self.cfg.pole_radius();
        z.norm() < r || self.points.iter().any(|w| (z - w).norm() < r)
    }

    fn pole_pair(&self) -> WpPair {
        let v = Complex64::new(self.cfg.pole_value, 0.0);
        WpPair {
            wp: clamp_c(v, self.cfg.final_clip),
            wp_prime: clamp_c(v, self.cfg.final_clip),
        }
    }

    /// ℘ and ℘′ from the principal part plus the full truncated series.
    pub fn wp_pair(&self, z: Complex64) -> WpPair {
        self.partial_wp_pair(z, self.points.len())
    }

    /// Like [`Lattice::wp_pair`] but summing only the first `k` points of the
    /// ordering. The pole test still covers every enumerated point.
    pub fn partial_wp_pair(&self, z: Complex64, k: usize) -> WpPair {
        let cfg = &self.cfg;
        if !(z.re.is_finite() && z.im.is_finite()) || self.near_pole(z) {
            return self.pole_pair();
        }
        let zi = z.inv();
        let mut wp = zi * zi;
        let mut wp_prime = -2.0 * zi * zi * zi;
        for (w, w_inv_sq) in self.points.iter().zip(&self.inv_sq).take(k) {
            let d = (z - w).inv();
            let d2 = d * d;
            wp += clamp_c(d2 - w_inv_sq, cfg.term_clip);
            wp_prime += clamp_c(-2.0 * d2 * d, cfg.term_clip);
        }
        WpPair {
            wp: clamp_c(wp, cfg.final_clip),
            wp_prime: clamp_c(wp_prime, cfg.final_clip),
        }
    }
}

/// One-shot evaluation of `(℘(z), ℘′(z))`. Prefer [`Lattice`] for many points.
pub fn wp_pair(z: Complex64, cfg: &LatticeConfig, order: SummationOrder) -> WpPair {
    Lattice::new(cfg, order).wp_pair(z)
}

/// Upper bound `2|z| / r_max²` on the tail of the series beyond radius `r_max`.
pub fn truncation_bound(z: Complex64, r_max: f64) -> Result<f64> {
    if !(r_max > 0.0) {
        return Err(Error::Argument(format!(
            "r_max must be positive, got {r_max}"
        )));
    }
    Ok(2.0 * z.norm() / (r_max * r_max))
}

/// Relative tolerance on `|℘(z1) - ℘(z2)|` below which the addition formula is
/// rejected.
pub const ADDITION_DENOMINATOR_TOL: f64 = 1e-6;

/// Right-hand side of the addition formula,
/// `-℘(z1) - ℘(z2) + ¼·((℘′(z1) - ℘′(z2)) / (℘(z1) - ℘(z2)))²`,
/// on a prepared lattice.
pub fn addition_rhs_on(lattice: &Lattice, z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let sum = z1 + z2;
    if lattice.near_pole(sum) {
        return Err(Error::Pole {
            re: sum.re,
            im: sum.im,
        });
    }
    let a = lattice.wp_pair(z1);
    let b = lattice.wp_pair(z2);
    let denom = a.wp - b.wp;
    let scale = a.wp.norm() + b.wp.norm() + 1.0;
    if denom.norm() < ADDITION_DENOMINATOR_TOL * scale {
        return Err(Error::DegeneratePair(denom.norm()));
    }
    let slope = (a.wp_prime - b.wp_prime) / denom;
    Ok(-a.wp - b.wp + 0.25 * slope * slope)
}

pub fn addition_rhs(z1: Complex64, z2: Complex64, cfg: &LatticeConfig) -> Result<Complex64> {
    addition_rhs_on(&Lattice::new(cfg, SummationOrder::ModulusSorted), z1, z2)
}
