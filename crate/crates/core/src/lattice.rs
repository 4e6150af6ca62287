//! Bilayer lattice algebra.
//!
//! A twisted bilayer is described by a reference basis `A`, a twist angle
//! `theta` and a lattice-constant mismatch `q`. Layer one is `A` rotated by
//! `-theta/2` and shrunk by `q^{-1/2}`, layer two is rotated by `+theta/2` and
//! stretched by `q^{1/2}`. Everything else (reciprocal bases, the moire
//! superlattice, disregistry matrices) is derived from those three inputs.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Mat2 = Matrix2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Lattice constant of graphene in angstrom.
pub const GRAPHENE_LATTICE_CONSTANT: f64 = 2.46;

const SINGULAR_RELATIVE: f64 = 1e-14;
const SNAP_ULPS: f64 = 64.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    One,
    Two,
}

impl Layer {
    pub const BOTH: [Layer; 2] = [Layer::One, Layer::Two];

    pub fn other(self) -> Layer {
        match self {
            Layer::One => Layer::Two,
            Layer::Two => Layer::One,
        }
    }

    /// Zero-based index, handy for `[T; 2]` storage.
    pub fn index(self) -> usize {
        match self {
            Layer::One => 0,
            Layer::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(j: u8) -> Option<Layer> {
        match j {
            1 => Some(Layer::One),
            2 => Some(Layer::Two),
            _ => None,
        }
    }
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

pub fn rotation(phi: f64) -> Mat2 {
    let (s, c) = phi.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// Largest singular value of a 2x2 matrix.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let g = m.transpose() * m;
    let tr = g.trace();
    let det = g.determinant();
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr + disc).max(0.0).sqrt()
}

/// The graphene reference basis `a0 [[√3/2, √3/2], [-1/2, 1/2]]`.
pub fn graphene_basis(a0: f64) -> Mat2 {
    let h = 3f64.sqrt() / 2.0;
    Mat2::new(h, h, -0.5, 0.5) * a0
}

/// A point split into a lattice translation and a remainder in the unit cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellDecomposition {
    pub frac: Vec2,
    pub coords: [i64; 2],
}

impl CellDecomposition {
    pub fn lattice_vector(&self, basis: &Mat2) -> Vec2 {
        basis * Vec2::new(self.coords[0] as f64, self.coords[1] as f64)
    }
}

/// Split `x = basis * n + frac` with `basis^{-1} frac ∈ [0,1)^2`.
///
/// Lattice coordinates within a few ulps of an integer are snapped onto it,
/// so lattice points decompose with zero remainder despite round-off in
/// `basis^{-1} x`.
pub fn decompose(basis: &Mat2, basis_inv: &Mat2, x: Vec2) -> CellDecomposition {
    let c = basis_inv * x;
    let mut n = [0.0; 2];
    let mut f = [0.0; 2];
    for k in 0..2 {
        let r = c[k].round();
        if (c[k] - r).abs() <= SNAP_ULPS * f64::EPSILON * (1.0 + c[k].abs()) {
            n[k] = r;
            f[k] = 0.0;
        } else {
            n[k] = c[k].floor();
            f[k] = c[k] - n[k];
            if f[k] >= 1.0 {
                f[k] -= 1.0;
                n[k] += 1.0;
            }
        }
    }
    CellDecomposition {
        frac: basis * Vec2::new(f[0], f[1]),
        coords: [n[0] as i64, n[1] as i64],
    }
}

/// All lattice points `basis * n` within `radius` of `center`.
pub fn lattice_points_within(
    basis: &Mat2,
    basis_inv: &Mat2,
    center: Vec2,
    radius: f64,
) -> Vec<Vec2> {
    let c = basis_inv * center;
    let mut out = Vec::new();
    let r0 = basis_inv.row(0).norm() * radius;
    let r1 = basis_inv.row(1).norm() * radius;
    let (lo0, hi0) = ((c[0] - r0).floor() as i64, (c[0] + r0).ceil() as i64);
    let (lo1, hi1) = ((c[1] - r1).floor() as i64, (c[1] + r1).ceil() as i64);
    let r2 = radius * radius;
    for i in lo0..=hi0 {
        for k in lo1..=hi1 {
            let p = basis * Vec2::new(i as f64, k as f64);
            if (p - center).norm_squared() <= r2 {
                out.push(p);
            }
        }
    }
    out
}

/// The moire length-scale ratio `[(q^{1/2} - q^{-1/2})^2 + 4 sin^2(θ/2)]^{-1/2}`.
pub fn moire_scale_of(theta: f64, q: f64) -> Result<f64> {
    let sq = q.sqrt();
    let d = sq - 1.0 / sq;
    let s = (0.5 * theta).sin();
    let bracket = d * d + 4.0 * s * s;
    if !(bracket > f64::MIN_POSITIVE) {
        return Err(Error::DegenerateScale);
    }
    Ok(bracket.sqrt().recip())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BilayerGeometry {
    a: Mat2,
    theta: f64,
    q: f64,
    layer: [Mat2; 2],
    layer_inv: [Mat2; 2],
    recip: [Mat2; 2],
    moire: Mat2,
    moire_inv: Mat2,
    moire_recip: Mat2,
}

impl BilayerGeometry {
    pub fn new(a: Mat2, theta: f64, q: f64) -> Result<Self> {
        if !a.iter().all(|v| v.is_finite()) || !theta.is_finite() {
            return Err(Error::InvalidInput("non-finite geometry input".into()));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mismatch q must be positive, got {q}"
            )));
        }
        let det = a.determinant();
        if det == 0.0 || det.abs() < SINGULAR_RELATIVE * a.norm_squared() {
            return Err(Error::SingularBasis(
                "reference basis A has zero determinant".into(),
            ));
        }
        let sq = q.sqrt();
        let a1 = rotation(-0.5 * theta) * a / sq;
        let a2 = rotation(0.5 * theta) * a * sq;
        let inv = |m: &Mat2| {
            m.try_inverse()
                .ok_or_else(|| Error::SingularBasis("layer basis".into()))
        };
        let a1_inv = inv(&a1)?;
        let a2_inv = inv(&a2)?;
        let b1 = 2.0 * PI * a1_inv.transpose();
        let b2 = 2.0 * PI * a2_inv.transpose();
        let bm = b1 - b2;
        if bm.determinant().abs() < SINGULAR_RELATIVE * b1.norm_squared() {
            return Err(Error::SingularBasis(
                "moire reciprocal basis B1 - B2 is singular (commensurate-degenerate twist)".into(),
            ));
        }
        let bm_inv = inv(&bm)?;
        let am = 2.0 * PI * bm_inv.transpose();
        let am_inv = bm.transpose() / (2.0 * PI);
        Ok(Self {
            a,
            theta,
            q,
            layer: [a1, a2],
            layer_inv: [a1_inv, a2_inv],
            recip: [b1, b2],
            moire: am,
            moire_inv: am_inv,
            moire_recip: bm,
        })
    }

    /// Graphene bilayer with lattice constant 2.46 Å and no mismatch.
    pub fn graphene(theta: f64) -> Result<Self> {
        Self::new(graphene_basis(GRAPHENE_LATTICE_CONSTANT), theta, 1.0)
    }

    pub fn reference_basis(&self) -> &Mat2 {
        &self.a
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn basis(&self, j: Layer) -> &Mat2 {
        &self.layer[j.index()]
    }
    pub fn basis_inverse(&self, j: Layer) -> &Mat2 {
        &self.layer_inv[j.index()]
    }
    pub fn reciprocal(&self, j: Layer) -> &Mat2 {
        &self.recip[j.index()]
    }
    pub fn moire_basis(&self) -> &Mat2 {
        &self.moire
    }
    pub fn moire_basis_inverse(&self) -> &Mat2 {
        &self.moire_inv
    }
    pub fn moire_reciprocal(&self) -> &Mat2 {
        &self.moire_recip
    }
    pub fn cell_area(&self, j: Layer) -> f64 {
        self.layer[j.index()].determinant().abs()
    }
    pub fn moire_area(&self) -> f64 {
        self.moire.determinant().abs()
    }

    /// Moire reciprocal vector `B_M n`.
    pub fn moire_wavevector(&self, n: [i64; 2]) -> Vec2 {
        self.moire_recip * Vec2::new(n[0] as f64, n[1] as f64)
    }

    pub fn moire_frac(&self, x: Vec2) -> CellDecomposition {
        decompose(&self.moire, &self.moire_inv, x)
    }

    pub fn layer_frac(&self, x: Vec2, j: Layer) -> CellDecomposition {
        decompose(&self.layer[j.index()], &self.layer_inv[j.index()], x)
    }

    /// `D_{j→3-j} = I - A_{3-j} A_j^{-1}`.
    pub fn disregistry_matrix(&self, j: Layer) -> Mat2 {
        Mat2::identity() - self.layer[j.other().index()] * self.layer_inv[j.index()]
    }

    pub fn moire_scale(&self) -> Result<f64> {
        moire_scale_of(self.theta, self.q)
    }

    /// The linear map whose integer fixed points witness commensuration.
    ///
    /// `sign = +1` gives `A_1^T A_2^{-T}` (equal to `q^{-1} A^T R_θ A^{-T}`) and
    /// `sign = -1` gives `A_2^T A_1^{-T}` (equal to `q A^T R_{-θ} A^{-T}`).
    /// A reciprocal relation `B_1 n + B_2 m = 0` holds exactly when the
    /// `+1` map sends an integer vector to an integer vector.
    pub fn twist_map(&self, sign: i8) -> Mat2 {
        let (a, b) = if sign >= 0 { (0, 1) } else { (1, 0) };
        self.layer[a].transpose() * self.layer_inv[b].transpose()
    }

    pub fn commensuration_scan(&self, n_max: usize, tol: f64) -> CommensurationVerdict {
        let m = self.twist_map(1);
        let mut best: Option<([i64; 2], f64)> = None;
        for n in half_plane_shells(n_max) {
            let d = distance_to_integers(m * Vec2::new(n[0] as f64, n[1] as f64));
            if d < tol {
                best = Some((n, d));
                break;
            }
        }
        CommensurationVerdict {
            n_max,
            witness: best.map(|b| b.0),
            distance: best.map(|b| b.1),
        }
    }
}

/// Euclidean distance from `v` to the nearest point of `Z^2`.
pub fn distance_to_integers(v: Vec2) -> f64 {
    let dx = v[0] - v[0].round();
    let dy = v[1] - v[1].round();
    dx.hypot(dy)
}

/// Nonzero integer vectors with `|n|_∞ ≤ n_max`, one from each `±n` pair,
/// ordered by sup-norm shell, then Euclidean length, then descending first
/// entry, then ascending second entry.
pub fn half_plane_shells(n_max: usize) -> Vec<[i64; 2]> {
    let m = n_max as i64;
    let mut v = Vec::with_capacity((2 * n_max + 1).pow(2) / 2);
    for i in 0..=m {
        for k in -m..=m {
            if i > 0 || k > 0 {
                v.push([i, k]);
            }
        }
    }
    v.sort_by_key(|n| {
        (
            n[0].abs().max(n[1].abs()),
            n[0] * n[0] + n[1] * n[1],
            -n[0],
            n[1],
        )
    });
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommensurationVerdict {
    pub n_max: usize,
    pub witness: Option<[i64; 2]>,
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sublattice {
    pub label: String,
    pub tau: [f64; 2],
}

/// Sublattice shifts per layer and the optional whole-layer offsets `γ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SublatticeSpec {
    layers: [Vec<Sublattice>; 2],
    gamma: [Vec2; 2],
}

impl Default for SublatticeSpec {
    fn default() -> Self {
        let one = || {
            vec![Sublattice {
                label: "A".into(),
                tau: [0.0, 0.0],
            }]
        };
        Self {
            layers: [one(), one()],
            gamma: [Vec2::zeros(); 2],
        }
    }
}

impl SublatticeSpec {
    pub fn new(
        geom: &BilayerGeometry,
        layer1: Vec<Sublattice>,
        layer2: Vec<Sublattice>,
        gamma: [Vec2; 2],
    ) -> Result<Self> {
        for (j, subs) in [(Layer::One, &layer1), (Layer::Two, &layer2)] {
            if subs.is_empty() {
                return Err(Error::InvalidInput(format!("layer {j} has no sublattices")));
            }
            for (i, s) in subs.iter().enumerate() {
                if !s.tau.iter().all(|t| t.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "layer {j} sublattice {} has a non-finite shift",
                        s.label
                    )));
                }
                if subs[..i].iter().any(|o| o.label == s.label) {
                    return Err(Error::InvalidInput(format!(
                        "layer {j} repeats sublattice label {}",
                        s.label
                    )));
                }
            }
            let g = gamma[j.index()];
            let c = geom.basis_inverse(j) * g;
            if !(c.iter().all(|x| (0.0..1.0).contains(x))) {
                return Err(Error::InvalidInput(format!(
                    "layer {j} shift gamma must lie in the half-open unit cell"
                )));
            }
        }
        Ok(Self {
            layers: [layer1, layer2],
            gamma,
        })
    }

    pub fn sublattices(&self, j: Layer) -> &[Sublattice] {
        &self.layers[j.index()]
    }

    pub fn count(&self, j: Layer) -> usize {
        self.layers[j.index()].len()
    }

    pub fn tau(&self, j: Layer, alpha: usize) -> Vec2 {
        let t = self.layers[j.index()][alpha].tau;
        Vec2::new(t[0], t[1])
    }

    pub fn gamma(&self, j: Layer) -> Vec2 {
        self.gamma[j.index()]
    }

    /// `d = max |τ_1^{α} − τ_2^{β}|` over all sublattice pairs.
    pub fn shift_spread(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in 0..self.count(Layer::One) {
            for b in 0..self.count(Layer::Two) {
                d = d.max((self.tau(Layer::One, a) - self.tau(Layer::Two, b)).norm());
            }
        }
        d
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SublatticeFile {
    pub layer1: Vec<Sublattice>,
    pub layer2: Vec<Sublattice>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaFile {
    pub layer1: [f64; 2],
    pub layer2: [f64; 2],
}

/// On-disk geometry description. `A` is written row by row.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    #[serde(rename = "A")]
    pub a: [[f64; 2]; 2],
    pub theta_deg: f64,
    #[serde(default = "unit_mismatch")]
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublattices: Option<SublatticeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaFile>,
}

fn unit_mismatch() -> f64 {
    1.0
}

impl GeometryFile {
    pub fn graphene(theta_deg: f64) -> Self {
        let b = graphene_basis(GRAPHENE_LATTICE_CONSTANT);
        Self {
            a: [[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]],
            theta_deg,
            q: 1.0,
            sublattices: None,
            gamma: None,
        }
    }

    pub fn build(&self) -> Result<(BilayerGeometry, SublatticeSpec)> {
        let a = Mat2::new(self.a[0][0], self.a[0][1], self.a[1][0], self.a[1][1]);
        let geom = BilayerGeometry::new(a, self.theta_deg.to_radians(), self.q)?;
        let default = SublatticeSpec::default();
        let (l1, l2) = match &self.sublattices {
            Some(s) => (s.layer1.clone(), s.layer2.clone()),
            None => (
                default.sublattices(Layer::One).to_vec(),
                default.sublattices(Layer::Two).to_vec(),
            ),
        };
        let gamma = match &self.gamma {
            Some(g) => [Vec2::from(g.layer1), Vec2::from(g.layer2)],
            None => [Vec2::zeros(); 2],
        };
        let spec = SublatticeSpec::new(&geom, l1, l2, gamma)?;
        Ok((geom, spec))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: &Mat2, b: &Mat2) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    fn g5() -> BilayerGeometry {
        BilayerGeometry::graphene(5f64.to_radians()).unwrap()
    }

    #[test]
    fn layer_bases_follow_definition() {
        let a = Mat2::new(1.3, 0.2, -0.4, 0.9);
        let (t, q) = (0.3, 1.07);
        let g = BilayerGeometry::new(a, t, q).unwrap();
        assert!(rel(g.basis(Layer::One), &(rotation(-t / 2.0) * a / q.sqrt())) < 1e-15);
        assert!(rel(g.basis(Layer::Two), &(rotation(t / 2.0) * a * q.sqrt())) < 1e-15);
        let bm = g.reciprocal(Layer::One) - g.reciprocal(Layer::Two);
        assert!(rel(g.moire_reciprocal(), &bm) < 1e-15);
        let am_alt = (g.basis_inverse(Layer::One) - g.basis_inverse(Layer::Two))
            .try_inverse()
            .unwrap();
        assert!(rel(g.moire_basis(), &am_alt) < 1e-12);
        let am_recip = 2.0 * PI * bm.try_inverse().unwrap().transpose();
        assert!(rel(g.moire_basis(), &am_recip) < 1e-14);
        assert!((g.cell_area(Layer::One) - a.determinant().abs() / q).abs() < 1e-14);
        assert!((g.moire_area() - g.moire_basis().determinant().abs()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_invalid_inputs_fail() {
        assert!(matches!(
            BilayerGeometry::new(Mat2::identity(), 0.0, 1.0),
            Err(Error::SingularBasis(_))
        ));
        assert!(matches!(
            BilayerGeometry::new(Mat2::zeros(), 0.1, 1.0),
            Err(Error::SingularBasis(_))
        ));
        assert!(BilayerGeometry::new(Mat2::identity(), 0.1, 0.0).is_err());
        assert!(BilayerGeometry::new(Mat2::identity(), f64::NAN, 1.0).is_err());
    }

    #[test]
    fn quarter_turn_moire_basis() {
        let g = BilayerGeometry::new(Mat2::identity(), PI / 2.0, 1.0).unwrap();
        let direct = (g.basis_inverse(Layer::One) - g.basis_inverse(Layer::Two))
            .try_inverse()
            .unwrap();
        assert!(rel(g.moire_basis(), &direct) < 1e-14);
        let via_recip = 2.0 * PI * g.moire_reciprocal().try_inverse().unwrap().transpose();
        assert!(rel(g.moire_basis(), &via_recip) < 1e-14);
    }

    #[test]
    fn graphene_example_bases() {
        let g = BilayerGeometry::graphene(1.1f64.to_radians()).unwrap();
        let a = graphene_basis(2.46);
        assert!((a.column(0).norm() - 2.46).abs() < 1e-14);
        assert!((a.column(1).norm() - 2.46).abs() < 1e-14);
        let rho = g.moire_scale().unwrap();
        assert!((rho - 1.0 / (2.0 * (0.55f64).to_radians().sin())).abs() < 1e-9);
        assert!((rho - 52.09).abs() < 0.01);
    }

    #[test]
    fn moire_frac_examples() {
        let g = g5();
        let am = *g.moire_basis();
        let z = g.moire_frac(Vec2::zeros());
        assert_eq!(z.coords, [0, 0]);
        assert_eq!(z.frac, Vec2::zeros());
        let p = g.moire_frac(am * Vec2::new(3.0, -2.0));
        assert_eq!(p.coords, [3, -2]);
        assert!(p.frac.norm() < 1e-9 * am.norm());
        let inner = am * Vec2::new(0.25, 0.75);
        let d = g.moire_frac(inner + am * Vec2::new(1.0, 1.0));
        assert_eq!(d.coords, [1, 1]);
        assert!((d.frac - inner).norm() < 1e-12 * am.norm());
    }

    #[test]
    fn layer_frac_examples() {
        let g = g5();
        let a1 = *g.basis(Layer::One);
        let a2 = *g.basis(Layer::Two);
        let d = g.layer_frac(a1 * Vec2::new(5.0, 5.0), Layer::One);
        assert!(d.frac.norm() < 1e-13);
        let h = a2 * Vec2::new(0.5, 0.5);
        let d = g.layer_frac(h, Layer::Two);
        assert_eq!(d.coords, [0, 0]);
        assert!((d.frac - h).norm() < 1e-15);
    }

    #[test]
    fn decomposition_is_half_open() {
        let b = Mat2::identity();
        let d = decompose(&b, &b, Vec2::new(-1e-17, 2.0));
        assert_eq!(d.coords, [0, 2]);
        assert_eq!(d.frac, Vec2::zeros());
        let d = decompose(&b, &b, Vec2::new(1.0, -1.0));
        assert_eq!(d.coords, [1, -1]);
    }

    #[test]
    fn disregistry_examples() {
        let g = BilayerGeometry::new(Mat2::identity() * 2.0, PI / 2.0, 1.0).unwrap();
        let d = g.disregistry_matrix(Layer::One);
        assert!(rel(&d, &Mat2::new(1.0, 1.0, -1.0, 1.0)) < 1e-15);
        let tiny = BilayerGeometry::new(Mat2::identity(), 1e-6, 1.0).unwrap();
        assert!(tiny.disregistry_matrix(Layer::One).norm() < 2e-6);
    }

    #[test]
    fn disregistry_matches_moire_form() {
        for (t, q) in [(0.087, 1.0), (0.3, 1.1), (-0.2, 0.95)] {
            let g = BilayerGeometry::new(graphene_basis(2.46), t, q).unwrap();
            let am_inv = g.moire_basis().try_inverse().unwrap();
            let d12 = -g.basis(Layer::Two) * am_inv;
            let d21 = g.basis(Layer::One) * am_inv;
            assert!(rel(&g.disregistry_matrix(Layer::One), &d12) < 1e-12);
            assert!(rel(&g.disregistry_matrix(Layer::Two), &d21) < 1e-12);
            let lhs = -g.disregistry_matrix(Layer::Two)
                * g.disregistry_matrix(Layer::One).try_inverse().unwrap();
            let a1a2 = g.basis(Layer::One) * g.basis_inverse(Layer::Two);
            assert!(rel(&lhs, &a1a2) < 1e-12);
            assert!(
                rel(
                    &(Mat2::identity() - g.disregistry_matrix(Layer::Two)),
                    &a1a2
                ) < 1e-12
            );
        }
    }

    #[test]
    fn disregistry_maps_moire_cell_vertices_onto_layer_cell() {
        let g = BilayerGeometry::new(graphene_basis(2.46), 0.2, 1.04).unwrap();
        for j in Layer::BOTH {
            let d = g.disregistry_matrix(j);
            let sign = if j == Layer::One { -1.0 } else { 1.0 };
            let target = g.basis(j.other()) * sign;
            for v in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                let img = d * g.moire_basis() * Vec2::from(v);
                let want = target * Vec2::from(v);
                assert!((img - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn moire_scale_examples() {
        assert!((moire_scale_of(PI, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(moire_scale_of(0.0, 1.0), Err(Error::DegenerateScale));
        let g = g5();
        let rho = g.moire_scale().unwrap();
        assert!((rho - 1.0 / (2.0 * (2.5f64).to_radians().sin())).abs() < 1e-12);
    }

    #[test]
    fn unit_mismatch_moire_basis_is_scaled_quarter_turn() {
        let t = 0.13;
        let g = BilayerGeometry::graphene(t).unwrap();
        let j = Mat2::new(0.0, -1.0, 1.0, 0.0);
        let am = *g.moire_basis();
        let a = *g.reference_basis();
        let closed = j.try_inverse().unwrap() * a / (2.0 * (t / 2.0).sin());
        assert!(rel(&am, &closed) < 1e-12);
        for v in [[1.0, 0.0], [0.3, -0.7]] {
            let x = Vec2::from(v);
            let ratio = (am * x).norm() / (a * x).norm();
            assert!((ratio - g.moire_scale().unwrap()).abs() < 1e-10 * ratio);
        }
    }

    #[test]
    fn commensuration_examples() {
        let quarter = BilayerGeometry::new(Mat2::identity(), PI / 2.0, 1.0).unwrap();
        let v = quarter.commensuration_scan(4, 1e-9);
        assert_eq!(v.witness, Some([1, 0]));
        let g = g5();
        assert_eq!(g.commensuration_scan(64, 1e-6).witness, None);
        let m = g.twist_map(1);
        let a = *g.reference_basis();
        let alt = a.transpose() * rotation(g.theta()) * a.try_inverse().unwrap().transpose();
        assert!(rel(&m, &alt) < 1e-13);
    }

    #[test]
    fn twist_map_tracks_mismatch() {
        let a = graphene_basis(2.46);
        let (t, q) = (0.2, 1.3);
        let g = BilayerGeometry::new(a, t, q).unwrap();
        let at = a.transpose();
        let ait = a.try_inverse().unwrap().transpose();
        assert!(rel(&g.twist_map(1), &(at * rotation(t) * ait / q)) < 1e-13);
        assert!(rel(&g.twist_map(-1), &(at * rotation(-t) * ait * q)) < 1e-13);
    }

    #[test]
    fn shells_are_ordered_and_complete() {
        let s = half_plane_shells(2);
        assert_eq!(s.len(), 12);
        assert_eq!(s[0], [1, 0]);
        assert!(s.iter().all(|n| n[0] > 0 || (n[0] == 0 && n[1] > 0)));
    }

    #[test]
    fn lattice_points_within_disk() {
        let b = Mat2::identity();
        let pts = lattice_points_within(&b, &b, Vec2::new(0.5, 0.5), 1.0);
        assert_eq!(pts.len(), 4);
        let pts = lattice_points_within(&b, &b, Vec2::zeros(), 2.0);
        assert_eq!(pts.len(), 13);
    }

    #[test]
    fn geometry_file_round_trip_and_validation() {
        let f = GeometryFile::graphene(5.0);
        let text = serde_json::to_string(&f).unwrap();
        let back: GeometryFile = serde_json::from_str(&text).unwrap();
        let (g, spec) = back.build().unwrap();
        assert!((g.theta() - 5f64.to_radians()).abs() < 1e-15);
        assert_eq!(spec.count(Layer::One), 1);
        let bad = r#"{"A": [[1,0],[0,1]], "theta_deg": 3.0, "gamma": {"layer1": [2.0, 0.0], "layer2": [0,0]}}"#;
        let f: GeometryFile = serde_json::from_str(bad).unwrap();
        assert!(f.build().is_err());
        let dup = r#"{"A": [[1,0],[0,1]], "theta_deg": 3.0,
            "sublattices": {"layer1": [{"label":"A","tau":[0,0]},{"label":"A","tau":[0.5,0]}], "layer2": [{"label":"A","tau":[0,0]}]}}"#;
        let f: GeometryFile = serde_json::from_str(dup).unwrap();
        assert!(f.build().is_err());
    }

    #[test]
    fn shift_spread_is_max_pair_distance() {
        let g = g5();
        let s = SublatticeSpec::new(
            &g,
            vec![
                Sublattice {
                    label: "A".into(),
                    tau: [0.0, 0.0],
                },
                Sublattice {
                    label: "B".into(),
                    tau: [1.42, 0.0],
                },
            ],
            vec![Sublattice {
                label: "A".into(),
                tau: [0.0, -0.5],
            }],
            [Vec2::zeros(); 2],
        )
        .unwrap();
        assert!((s.shift_spread() - (1.42f64.powi(2) + 0.25).sqrt()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn frac_round_trip(x in -1e3f64..1e3, y in -1e3f64..1e3, which in 0u8..3) {
            let g = g5();
            let p = Vec2::new(x, y);
            let (basis, d) = match which {
                0 => (*g.moire_basis(), g.moire_frac(p)),
                1 => (*g.basis(Layer::One), g.layer_frac(p, Layer::One)),
                _ => (*g.basis(Layer::Two), g.layer_frac(p, Layer::Two)),
            };
            let back = d.lattice_vector(&basis) + d.frac;
            prop_assert!((back - p).norm() <= 1e-12 * p.norm().max(basis.norm()));
            let c = basis.try_inverse().unwrap() * d.frac;
            prop_assert!(c.iter().all(|v| *v >= -1e-12 && *v < 1.0 + 1e-12));
        }

        #[test]
        fn disregistry_scales_lengths(x in -10f64..10.0, y in -10f64..10.0,
                                      t in 0.01f64..1.5, q in 0.8f64..1.25) {
            prop_assume!(x.hypot(y) > 1e-3);
            let g = BilayerGeometry::new(graphene_basis(2.46), t, q).unwrap();
            let v = Vec2::new(x, y);
            let rho = g.moire_scale().unwrap();
            let d12 = g.disregistry_matrix(Layer::One);
            let d21 = g.disregistry_matrix(Layer::Two);
            let e12 = q.sqrt() / rho * v.norm();
            let e21 = 1.0 / (q.sqrt() * rho) * v.norm();
            prop_assert!(((d12 * v).norm() - e12).abs() <= 1e-12 * e12);
            prop_assert!(((d21 * v).norm() - e21).abs() <= 1e-12 * e21);
            let inv = d12.try_inverse().unwrap();
            prop_assert!(((inv * v).norm() - v.norm() / e12 * v.norm()).abs() <= 1e-11 * (inv * v).norm());
        }

        #[test]
        fn moire_scale_is_length_ratio(x in -5f64..5.0, y in -5f64..5.0, t in 0.01f64..3.0, q in 0.8f64..1.25) {
            prop_assume!(x.hypot(y) > 1e-3);
            let g = BilayerGeometry::new(graphene_basis(2.46), t, q).unwrap();
            let v = Vec2::new(x, y);
            let ratio = (g.moire_basis() * v).norm() / (g.reference_basis() * v).norm();
            prop_assert!((ratio - g.moire_scale().unwrap()).abs() <= 1e-11 * ratio);
        }
    }
}
