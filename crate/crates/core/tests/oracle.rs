//! The lattice evaluator against two independent references: values frozen
//! from a 40-digit Jacobi-elliptic evaluation (`℘ = e3 + (e1 - e3)/sn²`), and
//! a row-summed cosecant series evaluated here.

use std::f64::consts::PI;

use num_complex::Complex64;

use wefpe::elliptic::{Lattice, LatticeConfig, SummationOrder, REFERENCE_HALF_PERIOD};
use wefpe::encoding::{extract_features, map_to_complex, normalize_coords, EncodingConfig};
use wefpe::identities::sample_cell;
use wefpe::util::seeded_rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// (z, ℘(z), ℘′(z)) on the square lattice with g2 = 1, g3 = 0.
const FROZEN_G2_ONE: [(Complex64, Complex64, Complex64); 4] = [
    (
        Complex64::new(0.7, 0.4),
        Complex64::new(0.797_336_660_376_667_3, -1.297_438_331_767_171_3),
        Complex64::new(0.017_565_408_939_397_52, 3.856_987_881_301_383_6),
    ),
    (
        Complex64::new(1.3, 0.9),
        Complex64::new(0.173_914_529_060_254_2, -0.263_666_323_018_182_8),
        Complex64::new(0.206_694_969_299_332_14, 0.583_680_213_108_762_8),
    ),
    (
        Complex64::new(2.0, 1.3),
        Complex64::new(0.071_413_445_449_193_8, 0.039_985_486_299_112_07),
        Complex64::new(-0.068_536_088_355_671_29, 0.275_724_471_369_032),
    ),
    (
        Complex64::new(0.3, 1.1),
        Complex64::new(-0.718_651_619_291_570_6, -0.355_691_560_127_653_8),
        Complex64::new(1.006_272_653_076_460_4, -0.829_154_626_871_378_5),
    ),
];

/// ℘ and ℘′ from rows of the lattice summed in closed form:
/// `Σ_m (z - 2mω1 - 2nω3)⁻² = (π/2ω1)² csc²(π(z - 2nω3)/2ω1)`.
fn row_series(z: Complex64, omega1: f64, omega3: Complex64, rows: i64) -> (Complex64, Complex64) {
    let k = PI / (2.0 * omega1);
    let csc2 = |x: Complex64| x.sin().powi(-2);
    let tau = omega3 / omega1;
    let mut wp = csc2(k * z) - 1.0 / 3.0;
    let mut wpp = Complex64::new(0.0, 0.0);
    for n in -rows..=rows {
        let x = k * (z - 2.0 * n as f64 * omega3);
        let s2 = csc2(x);
        wpp += -2.0 * s2 * x.cos() / x.sin();
        if n != 0 {
            wp += s2 - csc2(PI * n as f64 * tau);
        }
    }
    (k * k * wp, k * k * k * wpp)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (b.norm() + 1.0)
}

#[test]
fn row_series_matches_frozen_values() {
    let cfg = LatticeConfig::lemniscatic(1.0).unwrap();
    for (z, wp, wpp) in FROZEN_G2_ONE {
        let (s, sp) = row_series(z, cfg.omega1.re, cfg.omega3, 12);
        assert!(rel(s, wp) < 1e-12, "{z}: {s} vs {wp}");
        assert!(rel(sp, wpp) < 1e-12, "{z}: {sp} vs {wpp}");
    }
}

#[test]
fn lattice_sum_matches_frozen_values() {
    let cfg = LatticeConfig::lemniscatic(1.0).unwrap();
    let t12 = Lattice::new(&cfg, SummationOrder::ModulusSorted);
    let t48 = Lattice::new(
        &cfg.clone().with_truncation(48, 48),
        SummationOrder::ModulusSorted,
    );
    for (z, wp, wpp) in FROZEN_G2_ONE {
        let p = t12.wp_pair(z);
        assert!(rel(p.wp, wp) < 1e-2 && rel(p.wp_prime, wpp) < 1e-2, "{z}");
        let p = t48.wp_pair(z);
        assert!(rel(p.wp, wp) < 1e-4 && rel(p.wp_prime, wpp) < 1e-4, "{z}");
    }
}

#[test]
fn half_period_values() {
    let cfg = LatticeConfig::lemniscatic(1.0).unwrap();
    let p = Lattice::new(
        &cfg.clone().with_truncation(48, 48),
        SummationOrder::ModulusSorted,
    )
    .wp_pair(cfg.omega1);
    assert!((p.wp - c(0.5, 0.0)).norm() < 1e-3);
    assert!(p.wp_prime.norm() < 1e-3);
    // the reference lattice is the g2 = 1/4 square lattice: ℘(ω1) = 1/4
    let r = LatticeConfig::reference();
    let p = Lattice::new(
        &r.clone().with_truncation(48, 48),
        SummationOrder::ModulusSorted,
    )
    .wp_pair(r.omega1);
    assert!((p.wp - c(0.25, 0.0)).norm() < 1e-3);
}

#[test]
fn lattice_sum_converges_to_row_series() {
    let cfg = LatticeConfig::lemniscatic(1.0).unwrap();
    let points = sample_cell(&cfg, 40, &mut seeded_rng(11));
    let errors: Vec<f64> = [2usize, 4, 8, 12, 24]
        .iter()
        .map(|&t| {
            let lattice = Lattice::new(
                &cfg.clone().with_truncation(t, t),
                SummationOrder::ModulusSorted,
            );
            points
                .iter()
                .map(|&z| {
                    (lattice.wp_pair(z).wp - row_series(z, cfg.omega1.re, cfg.omega3, 12).0).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
    assert!(errors[3] < 1e-3, "{errors:?}");
}

#[test]
fn reference_lattice_against_row_series() {
    let cfg = LatticeConfig::reference();
    let lattice = Lattice::new(
        &cfg.clone().with_truncation(48, 48),
        SummationOrder::ModulusSorted,
    );
    for z in sample_cell(&cfg, 30, &mut seeded_rng(5)) {
        let (wp, wpp) = row_series(z, REFERENCE_HALF_PERIOD, cfg.omega3, 12);
        let p = lattice.wp_pair(z);
        assert!(rel(p.wp, wp) < 1e-4 && rel(p.wp_prime, wpp) < 1e-4, "{z}");
    }
}

#[test]
fn encoding_features_against_frozen_values() {
    // raw features [Re ℘, Im ℘, Re ℘′, Im ℘′] of the default 14 × 14 encoder
    let frozen = [
        (
            (7, 7),
            [
                0.0,
                -0.207_187_084_632_970_44,
                0.209_011_993_434_984_4,
                0.209_011_993_434_984_4,
            ],
        ),
        (
            (13, 13),
            [
                0.0,
                -0.001_096_175_423_120_469_3,
                0.011_705_749_109_734_9,
                0.011_705_749_109_734_9,
            ],
        ),
        (
            (3, 10),
            [
                0.227_544_930_281_113_65,
                -0.103_553_390_593_273_74,
                -0.079_800_242_352_008_2,
                0.213_092_976_461_444_2,
            ],
        ),
        (
            (0, 0),
            [
                0.0,
                -57.016_421_534_138_86,
                608.862_333_105_022_4,
                608.862_333_105_022_4,
            ],
        ),
    ];
    let cfg = EncodingConfig::default();
    for ((i, j), expected) in frozen {
        let (u, v) = normalize_coords(i, j, 14, 14).unwrap();
        let f = extract_features(map_to_complex(u, v, &cfg), &cfg);
        for (a, b) in f.iter().zip(expected) {
            assert!(a.is_finite());
            assert!(
                (a - b).abs() / (b.abs() + 1.0) < 1e-2,
                "patch ({i}, {j}): {f:?} vs {expected:?}"
            );
        }
    }
}
