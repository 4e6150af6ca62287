//! Fixtures shared by the criterion benchmarks.

use moire_core::ergodic::FourierSeries;
use moire_core::{BilayerGeometry, DisplacementField, FourierField, SublatticeSpec};
use num_complex::Complex64;

pub fn twisted(theta_deg: f64) -> BilayerGeometry {
    BilayerGeometry::graphene(theta_deg.to_radians()).expect("valid twist")
}

/// Deterministic Hermitian series on the mode square `|n_i| ≤ h`.
pub fn smooth_series(geom: &BilayerGeometry, h: i64) -> FourierSeries {
    let mut modes = Vec::new();
    for a in -h..=h {
        for b in -h..=h {
            let w = 1.0 / (1.0 + (a * a + b * b) as f64);
            let phase = 0.7 * a as f64 - 0.3 * b as f64;
            modes.push(([a, b], Complex64::from_polar(w, phase)));
        }
    }
    let conj: Vec<_> = modes
        .iter()
        .map(|(n, c)| ([-n[0], -n[1]], c.conj()))
        .collect();
    let sym = modes
        .iter()
        .zip(conj.iter().rev())
        .map(|((n, c), (_, d))| (*n, 0.5 * (c + d)))
        .collect();
    FourierSeries::new(geom, sym)
}

/// Small opposite in-plane modulations on the two layers.
pub fn smooth_displacement(geom: &BilayerGeometry) -> DisplacementField {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let one = FourierField::from_coefficients(
        geom,
        &[
            ([1, 0], [c(0.0, 0.02), c(0.01, 0.0), c(0.0, 0.0)]),
            ([0, 1], [c(-0.01, 0.0), c(0.0, 0.015), c(0.0, 0.0)]),
        ],
    )
    .expect("valid modes");
    let two = FourierField::from_coefficients(
        geom,
        &[
            ([1, 0], [c(0.0, -0.02), c(-0.01, 0.0), c(0.0, 0.0)]),
            ([0, 1], [c(0.01, 0.0), c(0.0, -0.015), c(0.0, 0.0)]),
        ],
    )
    .expect("valid modes");
    DisplacementField::uniform(&SublatticeSpec::default(), [one, two])
}
