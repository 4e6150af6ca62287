//! Diophantine quality of a twist angle.
//!
//! The ergodic error of a lattice average is governed by how closely the
//! twist map `A_1^T A_2^{-T}` (and its counterpart for the other layer) sends
//! integer vectors to integer vectors. A finite exhaustive scan gives an
//! empirical constant `K_hat = min |n|^{2σ} dist(M n, Z^2)`; every bound
//! built from it is only as good as the scan range and is labelled as such.

use crate::error::{Error, Result};
use crate::lattice::{
    distance_to_integers, half_plane_shells, moire_scale_of, rotation, spectral_norm,
    BilayerGeometry, Mat2, Vec2,
};
use crate::zeta::zeta;
use serde::Serialize;
use std::f64::consts::PI;

/// Distances below this are treated as exact commensuration.
pub const COMMENSURATE_TOL: f64 = 1e-12;

pub const BOUND_LABEL: &str = "empirical (n_max-limited)";

/// Lower end of the admissible σ interval.
pub const SIGMA_MIN: f64 = 1433.0 / 1248.0;

pub fn diophantine_distance(geom: &BilayerGeometry, n: [i64; 2], sign: i8) -> f64 {
    let m = geom.twist_map(sign);
    distance_to_integers(m * Vec2::new(n[0] as f64, n[1] as f64))
}

/// One scanned integer vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub n: [i64; 2],
    pub sign: i8,
    pub distance: f64,
}

/// Distances for all `0 < |n|_∞ ≤ n_max` (one of each `±n`) on one branch.
pub fn scan_distances(geom: &BilayerGeometry, n_max: usize, sign: i8) -> Vec<ScanPoint> {
    map_distances(&geom.twist_map(sign), n_max, sign)
}

fn map_distances(m: &Mat2, n_max: usize, sign: i8) -> Vec<ScanPoint> {
    half_plane_shells(n_max)
        .into_iter()
        .map(|n| ScanPoint {
            n,
            sign,
            distance: distance_to_integers(m * Vec2::new(n[0] as f64, n[1] as f64)),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchScan {
    pub sign: i8,
    pub k_hat: f64,
    pub argmin: [i64; 2],
    pub witness: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiophantineScan {
    pub sigma: f64,
    pub n_max: usize,
    pub k_hat: f64,
    pub argmin: [i64; 2],
    pub argmin_sign: i8,
    pub witness: Option<[i64; 2]>,
    pub branches: [BranchScan; 2],
    /// `None` when the twist has no moiré lattice (for instance θ = 0, q = 1).
    pub moire_scale: Option<f64>,
    pub reference_norm: f64,
}

fn weight(n: [i64; 2], sigma: f64) -> f64 {
    ((n[0] * n[0] + n[1] * n[1]) as f64).powf(sigma)
}

fn scan_branch(points: &[ScanPoint], sigma: f64, sign: i8) -> BranchScan {
    let witness = points
        .iter()
        .find(|p| p.distance < COMMENSURATE_TOL)
        .map(|p| p.n);
    let mut best = (f64::INFINITY, [0, 0]);
    for p in points {
        let k = weight(p.n, sigma) * p.distance;
        if k < best.0 {
            best = (k, p.n);
        }
    }
    BranchScan {
        sign,
        k_hat: if witness.is_some() { 0.0 } else { best.0 },
        argmin: witness.unwrap_or(best.1),
        witness,
    }
}

pub fn diophantine_scan(
    geom: &BilayerGeometry,
    sigma: f64,
    n_max: usize,
) -> Result<DiophantineScan> {
    scan_maps(
        [geom.twist_map(1), geom.twist_map(-1)],
        sigma,
        n_max,
        Some(geom.moire_scale()?),
        spectral_norm(geom.reference_basis()),
    )
}

/// The same scan built from `(A, θ, q)` directly, so that commensurate
/// twists without a moiré lattice can be scanned too.
pub fn diophantine_scan_twist(
    a: &Mat2,
    theta: f64,
    q: f64,
    sigma: f64,
    n_max: usize,
) -> Result<DiophantineScan> {
    if !(q > 0.0) || !q.is_finite() || !theta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need finite theta and q > 0, got theta = {theta}, q = {q}"
        )));
    }
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::SingularBasis("reference basis A has zero determinant".into()))?;
    let a1 = rotation(-0.5 * theta) * a / q.sqrt();
    let a2 = rotation(0.5 * theta) * a * q.sqrt();
    let a1_inv = a_inv * rotation(0.5 * theta) * q.sqrt();
    let a2_inv = a_inv * rotation(-0.5 * theta) / q.sqrt();
    let plus = a1.transpose() * a2_inv.transpose();
    let minus = a2.transpose() * a1_inv.transpose();
    scan_maps(
        [plus, minus],
        sigma,
        n_max,
        moire_scale_of(theta, q).ok(),
        spectral_norm(a),
    )
}

fn scan_maps(
    maps: [Mat2; 2],
    sigma: f64,
    n_max: usize,
    moire_scale: Option<f64>,
    reference_norm: f64,
) -> Result<DiophantineScan> {
    if !(sigma > 1.0) {
        return Err(Error::InvalidInput(format!(
            "sigma must exceed 1, got {sigma}"
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let plus = scan_branch(&map_distances(&maps[0], n_max, 1), sigma, 1);
    let minus = scan_branch(&map_distances(&maps[1], n_max, -1), sigma, -1);
    let pick = if minus.k_hat < plus.k_hat {
        &minus
    } else {
        &plus
    };
    Ok(DiophantineScan {
        sigma,
        n_max,
        k_hat: pick.k_hat,
        argmin: pick.argmin,
        argmin_sign: pick.sign,
        witness: plus.witness.or(minus.witness),
        moire_scale,
        reference_norm,
        branches: [plus, minus],
    })
}

fn zeta_pair(s: f64) -> Result<f64> {
    Ok(zeta(2.0 * s)? + 2f64.powf(-s) * zeta(s)?.powi(2))
}

/// `4 (ρ_M ‖A‖₂ / 2π)^{2s} (ζ(2s) + 2^{-s} ζ(s)^2)`, an upper bound for
/// `Σ_{G_M ≠ 0} |G_M|^{-2s}`.
pub fn zeta_tail_bound(geom: &BilayerGeometry, s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::DivergentTail(s));
    }
    let scale = geom.moire_scale()? * spectral_norm(geom.reference_basis()) / (2.0 * PI);
    Ok(4.0 * scale.powf(2.0 * s) * zeta_pair(s)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorPrefactor {
    pub sigma: f64,
    pub s: f64,
    pub k_hat: f64,
    pub fourier_decay_sup: f64,
    pub coefficient: f64,
    pub label: &'static str,
}

impl ErrorPrefactor {
    /// The bound `C / (2N+1)` at truncation `N`.
    pub fn bound(&self, n: usize) -> f64 {
        self.coefficient / (2 * n + 1) as f64
    }
}

pub fn error_prefactor(
    scan: &DiophantineScan,
    s: f64,
    fourier_decay_sup: f64,
) -> Result<ErrorPrefactor> {
    if !(s > 1.0) {
        return Err(Error::DivergentTail(s));
    }
    if scan.k_hat <= 0.0 {
        return Err(Error::NotDiophantine);
    }
    if !(fourier_decay_sup >= 0.0) {
        return Err(Error::InvalidInput(
            "Fourier decay supremum must be nonnegative".into(),
        ));
    }
    let rho = scan.moire_scale.ok_or(Error::DegenerateScale)?;
    let scale = rho * scan.reference_norm / (2.0 * PI);
    let coefficient = 2.0 * 2f64.sqrt() / scan.k_hat
        * scale.powf(2.0 * (scan.sigma + s))
        * zeta_pair(s)?
        * fourier_decay_sup;
    Ok(ErrorPrefactor {
        sigma: scan.sigma,
        s,
        k_hat: scan.k_hat,
        fourier_decay_sup,
        coefficient,
        label: BOUND_LABEL,
    })
}

/// `sup_{G_M ≠ 0} |G_M|^{2(σ+s)} |f̂(G_M)|` over a finite coefficient list.
pub fn fourier_decay_sup<'a, I>(geom: &BilayerGeometry, modes: I, sigma: f64, s: f64) -> f64
where
    I: IntoIterator<Item = (&'a [i64; 2], f64)>,
{
    modes
        .into_iter()
        .filter(|(n, _)| **n != [0, 0])
        .map(|(n, amp)| geom.moire_wavevector(*n).norm().powf(2.0 * (sigma + s)) * amp)
        .fold(0.0, f64::max)
}

/// The kernel bound `|n|^{2σ} / (√2 K_hat (2N+1))` for the mode `B_M n`.
pub fn kernel_bound(scan: &DiophantineScan, n: [i64; 2], big_n: usize) -> f64 {
    weight(n, scan.sigma) / (2f64.sqrt() * scan.k_hat * (2 * big_n + 1) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairConstant {
    pub value: f64,
    pub sigma: f64,
    pub label: &'static str,
}

/// Surrogate for `inf_σ K(σ)^{-1} (ζ(6−2σ) + 2^{σ−3} ζ(3−σ)^2)` using scanned
/// constants on a 32-point σ grid strictly inside `(1433/1248, 2)`.
pub fn pair_constant_surrogate(geom: &BilayerGeometry, n_max: usize) -> Result<PairConstant> {
    let pts: Vec<ScanPoint> = scan_distances(geom, n_max, 1)
        .into_iter()
        .chain(scan_distances(geom, n_max, -1))
        .collect();
    if pts.iter().any(|p| p.distance < COMMENSURATE_TOL) {
        return Err(Error::NotDiophantine);
    }
    let grid = 32;
    let mut best = PairConstant {
        value: f64::INFINITY,
        sigma: f64::NAN,
        label: BOUND_LABEL,
    };
    for i in 0..grid {
        let sigma = SIGMA_MIN + (2.0 - SIGMA_MIN) * (i as f64 + 0.5) / grid as f64;
        let k = pts
            .iter()
            .map(|p| weight(p.n, sigma) * p.distance)
            .fold(f64::INFINITY, f64::min);
        let value =
            (zeta(6.0 - 2.0 * sigma)? + 2f64.powf(sigma - 3.0) * zeta(3.0 - sigma)?.powi(2)) / k;
        if value < best.value {
            best.value = value;
            best.sigma = sigma;
        }
    }
    Ok(best)
}
