//! Moiré-periodic displacement fields stored as truncated Fourier series.

use crate::error::{Error, Result};
use crate::lattice::{BilayerGeometry, Layer, Mat2, SublatticeSpec, Vec2, Vec3};
use nalgebra::Matrix3x2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Whether `n` is the representative of the pair `{n, -n}`.
pub fn in_half_plane(n: [i64; 2]) -> bool {
    n[0] > 0 || (n[0] == 0 && n[1] > 0)
}

/// `e^{i n·t}` with `t = B_Mᵀ x` for all `|n_1|, |n_2| ≤ k`, built by
/// repeated multiplication from two complex exponentials.
#[derive(Clone, Debug)]
pub struct PhaseTable {
    k: i64,
    p1: Vec<Complex64>,
    p2: Vec<Complex64>,
}

impl PhaseTable {
    pub const MAX_INDEX: i64 = 16;

    pub fn new(bm: &Mat2, x: Vec2, k: i64) -> Self {
        let t = bm.transpose() * x;
        let powers = |theta: f64| {
            let e = Complex64::from_polar(1.0, theta);
            let mut pos = vec![Complex64::new(1.0, 0.0); k as usize + 1];
            for m in 1..=k as usize {
                pos[m] = pos[m - 1] * e;
            }
            let mut all: Vec<Complex64> = pos[1..].iter().rev().map(|z| z.conj()).collect();
            all.extend_from_slice(&pos);
            all
        };
        Self {
            k,
            p1: powers(t[0]),
            p2: powers(t[1]),
        }
    }

    pub fn phase(&self, n: [i64; 2]) -> Complex64 {
        self.p1[(n[0] + self.k) as usize] * self.p2[(n[1] + self.k) as usize]
    }
}

/// A field with its phases referred to a fixed anchor point.
#[derive(Clone, Debug)]
pub(crate) struct Anchored {
    zero: Vec3,
    re: [Vec<f64>; 3],
    im: [Vec<f64>; 3],
    active: [bool; 3],
}

impl Anchored {
    /// Field value at `anchor + s`, where `row` holds `e^{iG_n·s}`.
    pub(crate) fn eval(&self, row: &[Complex64]) -> Vec3 {
        let mut out = self.zero;
        for k in 0..3 {
            if self.active[k] {
                let s: f64 = self.re[k]
                    .iter()
                    .zip(&self.im[k])
                    .zip(row)
                    .map(|((a, b), e)| a * e.re - b * e.im)
                    .sum();
                out[k] += 2.0 * s;
            }
        }
        out
    }
}

/// Real field `c0 + Σ_n (c_n e^{iG_n·x} + conj(c_n) e^{-iG_n·x})` with
/// `G_n = B_M n` and `n` ranging over half-plane representatives.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    bm: Mat2,
    zero: Vec3,
    modes: Vec<([i64; 2], [Complex64; 3])>,
}

impl FourierField {
    pub fn zero(geom: &BilayerGeometry) -> Self {
        Self {
            bm: *geom.moire_reciprocal(),
            zero: Vec3::zeros(),
            modes: Vec::new(),
        }
    }

    /// Builds the field from full coefficients `c(G_n)`. A mode given without
    /// its `-n` partner implies the conjugate partner; if both are given they
    /// must be conjugate to within `1e-12`.
    pub fn from_coefficients(
        geom: &BilayerGeometry,
        entries: &[([i64; 2], [Complex64; 3])],
    ) -> Result<Self> {
        let mut map: BTreeMap<[i64; 2], [Complex64; 3]> = BTreeMap::new();
        for (n, c) in entries {
            if map.insert(*n, *c).is_some() {
                return Err(Error::InvalidInput(format!("mode {n:?} listed twice")));
            }
        }
        let mut zero = Vec3::zeros();
        let mut modes = Vec::new();
        for (n, c) in &map {
            let neg = [-n[0], -n[1]];
            if *n == [0, 0] {
                if c.iter().any(|z| z.im.abs() > 1e-12) {
                    return Err(Error::InvalidInput("mean mode must be real".into()));
                }
                zero = Vec3::new(c[0].re, c[1].re, c[2].re);
            } else if in_half_plane(*n) {
                if let Some(p) = map.get(&neg) {
                    if (0..3).any(|k| (p[k] - c[k].conj()).norm() > 1e-12) {
                        return Err(Error::InvalidInput(format!(
                            "modes {n:?} and {neg:?} are not conjugate"
                        )));
                    }
                }
                modes.push((*n, *c));
            } else if !map.contains_key(&neg) {
                modes.push((neg, [c[0].conj(), c[1].conj(), c[2].conj()]));
            }
        }
        modes.sort_by_key(|(n, _)| *n);
        Ok(Self {
            bm: *geom.moire_reciprocal(),
            zero,
            modes,
        })
    }

    /// `Re(c e^{iG_n·x})`, i.e. half of the Hermitian pair.
    pub fn plane_wave(geom: &BilayerGeometry, n: [i64; 2], c: [Complex64; 3]) -> Result<Self> {
        let half = |z: Complex64| 0.5 * z;
        if n == [0, 0] {
            return Self::from_coefficients(geom, &[(n, c.map(|z| Complex64::new(z.re, 0.0)))]);
        }
        Self::from_coefficients(geom, &[(n, c.map(half))])
    }

    pub fn constant(geom: &BilayerGeometry, c: Vec3) -> Self {
        Self {
            zero: c,
            ..Self::zero(geom)
        }
    }

    pub fn mean(&self) -> Vec3 {
        self.zero
    }

    /// Half-plane modes with their full coefficients.
    pub fn modes(&self) -> &[([i64; 2], [Complex64; 3])] {
        &self.modes
    }

    pub fn wavevector(&self, n: [i64; 2]) -> Vec2 {
        self.bm * Vec2::new(n[0] as f64, n[1] as f64)
    }

    /// Full coefficient `c(G_n)` for any `n`.
    pub fn coefficient(&self, n: [i64; 2]) -> [Complex64; 3] {
        if n == [0, 0] {
            return self.zero.map(|x| Complex64::new(x, 0.0)).into();
        }
        let (key, conj) = if in_half_plane(n) {
            (n, false)
        } else {
            ([-n[0], -n[1]], true)
        };
        match self.modes.iter().find(|(m, _)| *m == key) {
            Some((_, c)) if conj => c.map(|z| z.conj()),
            Some((_, c)) => *c,
            None => [Complex64::new(0.0, 0.0); 3],
        }
    }

    /// `e^{iG_n·x}` for every stored mode, in storage order.
    fn phases(&self, x: Vec2) -> Vec<Complex64> {
        let k = self.max_index();
        if self.modes.len() >= 6 && k <= PhaseTable::MAX_INDEX {
            let t = PhaseTable::new(&self.bm, x, k);
            self.modes.iter().map(|(n, _)| t.phase(*n)).collect()
        } else {
            self.modes
                .iter()
                .map(|(n, _)| Complex64::from_polar(1.0, self.wavevector(*n).dot(&x)))
                .collect()
        }
    }

    pub fn eval(&self, x: Vec2) -> Vec3 {
        let mut out = self.zero;
        for ((_, c), e) in self.modes.iter().zip(self.phases(x)) {
            for k in 0..3 {
                out[k] += 2.0 * (c[k] * e).re;
            }
        }
        out
    }

    /// Per-mode phases `e^{iG_n·s}` for every shift `s`, shift-major.
    pub(crate) fn shift_table(&self, shifts: &[Vec2]) -> Vec<Complex64> {
        shifts.iter().flat_map(|s| self.phases(*s)).collect()
    }

    /// The coefficients `c_n e^{iG_n·x0}`, ready for evaluation at `x0 + s`
    /// against one row of [`FourierField::shift_table`].
    pub(crate) fn anchor(&self, x0: Vec2) -> Anchored {
        let mut a = Anchored {
            zero: self.zero,
            re: Default::default(),
            im: Default::default(),
            active: [false; 3],
        };
        for k in 0..3 {
            a.active[k] = self
                .modes
                .iter()
                .any(|(_, c)| c[k] != Complex64::new(0.0, 0.0));
        }
        for ((_, c), e) in self.modes.iter().zip(self.phases(x0)) {
            for k in 0..3 {
                if a.active[k] {
                    let d = c[k] * e;
                    a.re[k].push(d.re);
                    a.im[k].push(d.im);
                }
            }
        }
        a
    }

    /// `∂_b u_a` as a 3×2 matrix.
    pub fn jacobian(&self, x: Vec2) -> Matrix3x2<f64> {
        let mut out = Matrix3x2::zeros();
        for ((n, c), e) in self.modes.iter().zip(self.phases(x)) {
            let g = self.wavevector(*n);
            for a in 0..3 {
                let d = 2.0 * (Complex64::i() * c[a] * e).re;
                out[(a, 0)] += d * g[0];
                out[(a, 1)] += d * g[1];
            }
        }
        out
    }

    /// Componentwise upper bound on `sup |u_k|`.
    pub fn sup_bound(&self) -> Vec3 {
        let mut b = self.zero.abs();
        for (_, c) in &self.modes {
            for k in 0..3 {
                b[k] += 2.0 * c[k].norm();
            }
        }
        b
    }

    /// Upper bound on `Σ_{k≤order} ‖D^k u‖_∞`.
    pub fn sobolev_bound(&self, order: u32) -> f64 {
        let mut total = self.zero.norm();
        for (n, c) in &self.modes {
            let g = self.wavevector(*n).norm();
            let amp = 2.0 * c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            total += amp * (0..=order).map(|k| g.powi(k as i32)).sum::<f64>();
        }
        total
    }

    pub fn max_index(&self) -> i64 {
        self.modes
            .iter()
            .map(|(n, _)| n[0].abs().max(n[1].abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.zero == Vec3::zeros()
            && self
                .modes
                .iter()
                .all(|(_, c)| c.iter().all(|z| *z == Complex64::new(0.0, 0.0)))
    }

    pub(crate) fn from_parts(bm: Mat2, zero: Vec3, modes: Vec<([i64; 2], [Complex64; 3])>) -> Self {
        Self { bm, zero, modes }
    }
}

/// Displacements of both layers, one series per sublattice.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    layers: [Vec<FourierField>; 2],
}

impl DisplacementField {
    pub fn zero(geom: &BilayerGeometry, subl: &SublatticeSpec) -> Self {
        Self::uniform(subl, [FourierField::zero(geom), FourierField::zero(geom)])
    }

    /// The same series for every sublattice of a layer.
    pub fn uniform(subl: &SublatticeSpec, fields: [FourierField; 2]) -> Self {
        let [f1, f2] = fields;
        Self {
            layers: [
                vec![f1; subl.count(Layer::One)],
                vec![f2; subl.count(Layer::Two)],
            ],
        }
    }

    pub fn per_sublattice(
        layer1: Vec<FourierField>,
        layer2: Vec<FourierField>,
        subl: &SublatticeSpec,
    ) -> Result<Self> {
        if layer1.len() != subl.count(Layer::One) || layer2.len() != subl.count(Layer::Two) {
            return Err(Error::InvalidInput(
                "one series per sublattice is required".into(),
            ));
        }
        Ok(Self {
            layers: [layer1, layer2],
        })
    }

    pub fn series(&self, j: Layer, alpha: usize) -> &FourierField {
        &self.layers[j.index()][alpha]
    }

    pub fn layer(&self, j: Layer) -> &[FourierField] {
        &self.layers[j.index()]
    }

    /// `Some(field)` when every sublattice of layer `j` carries the same series.
    pub fn layer_field(&self, j: Layer) -> Option<&FourierField> {
        let l = &self.layers[j.index()];
        l.iter().all(|f| f == &l[0]).then(|| &l[0])
    }

    pub fn eval(&self, j: Layer, alpha: usize, x: Vec2) -> Vec3 {
        self.series(j, alpha).eval(x)
    }

    /// Componentwise bound on `sup |u_j|` over all sublattices.
    pub fn sup_bound(&self, j: Layer) -> Vec3 {
        self.layers[j.index()]
            .iter()
            .fold(Vec3::zeros(), |acc, f| acc.sup(&f.sup_bound()))
    }

    /// Bound on the horizontal sup-norm of layer `j`.
    pub fn horizontal_sup(&self, j: Layer) -> f64 {
        let b = self.sup_bound(j);
        b[0].hypot(b[1])
    }

    pub fn sobolev_bound(&self, j: Layer, order: u32) -> f64 {
        self.layers[j.index()]
            .iter()
            .map(|f| f.sobolev_bound(order))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.layers.iter().flatten().all(FourierField::is_zero)
    }

    /// Exchange the roles of the two layers.
    pub fn swapped(&self) -> Self {
        Self {
            layers: [self.layers[1].clone(), self.layers[0].clone()],
        }
    }

    pub fn to_file(&self, subl: &SublatticeSpec) -> DisplacementFile {
        let mut entries = Vec::new();
        for j in Layer::BOTH {
            if let Some(f) = self.layer_field(j) {
                entries.push(DisplacementEntry::from_field(j, None, f));
            } else {
                for (a, s) in subl.sublattices(j).iter().enumerate() {
                    entries.push(DisplacementEntry::from_field(
                        j,
                        Some(s.label.clone()),
                        self.series(j, a),
                    ));
                }
            }
        }
        DisplacementFile::Many(entries)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub n: [i64; 2],
    /// `[re, im]` for the x, y and z components.
    pub c: [[f64; 2]; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementEntry {
    pub layer: u8,
    /// Omitted: the entry applies to every sublattice of the layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sublattice: Option<String>,
    pub modes: Vec<ModeEntry>,
}

impl DisplacementEntry {
    fn from_field(j: Layer, sublattice: Option<String>, f: &FourierField) -> Self {
        let z = f.mean();
        let mut modes = Vec::new();
        if z != Vec3::zeros() {
            modes.push(ModeEntry {
                n: [0, 0],
                c: [[z[0], 0.0], [z[1], 0.0], [z[2], 0.0]],
            });
        }
        for (n, c) in f.modes() {
            modes.push(ModeEntry {
                n: *n,
                c: c.map(|z| [z.re, z.im]),
            });
        }
        Self {
            layer: j.number(),
            sublattice,
            modes,
        }
    }

    fn field(&self, geom: &BilayerGeometry) -> Result<FourierField> {
        let entries: Vec<_> = self
            .modes
            .iter()
            .map(|m| (m.n, m.c.map(|[re, im]| Complex64::new(re, im))))
            .collect();
        if entries
            .iter()
            .flat_map(|(_, c)| c.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidInput(
                "non-finite displacement coefficient".into(),
            ));
        }
        FourierField::from_coefficients(geom, &entries)
    }
}

/// Displacement file: one entry object or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DisplacementFile {
    One(DisplacementEntry),
    Many(Vec<DisplacementEntry>),
}

impl DisplacementFile {
    pub fn entries(&self) -> &[DisplacementEntry] {
        match self {
            DisplacementFile::One(e) => std::slice::from_ref(e),
            DisplacementFile::Many(v) => v,
        }
    }

    /// Layers or sublattices without an entry are undisplaced; an entry
    /// naming a sublattice overrides a layer-wide entry.
    pub fn build(
        &self,
        geom: &BilayerGeometry,
        subl: &SublatticeSpec,
    ) -> Result<DisplacementField> {
        let mut layers: [Vec<Option<FourierField>>; 2] = [
            vec![None; subl.count(Layer::One)],
            vec![None; subl.count(Layer::Two)],
        ];
        let mut wide: [Option<FourierField>; 2] = [None, None];
        for e in self.entries() {
            let j = Layer::from_number(e.layer).ok_or_else(|| {
                Error::InvalidInput(format!("layer must be 1 or 2, got {}", e.layer))
            })?;
            let f = e.field(geom)?;
            let slot = match &e.sublattice {
                None => &mut wide[j.index()],
                Some(label) => {
                    let a = subl
                        .sublattices(j)
                        .iter()
                        .position(|s| &s.label == label)
                        .ok_or_else(|| {
                            Error::InvalidInput(format!("layer {j} has no sublattice `{label}`"))
                        })?;
                    &mut layers[j.index()][a]
                }
            };
            if slot.replace(f).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate displacement entry for layer {j}"
                )));
            }
        }
        let [l1, l2] = layers;
        let [w1, w2] = wide;
        let fill = |l: Vec<Option<FourierField>>, w: Option<FourierField>| -> Vec<FourierField> {
            l.into_iter()
                .map(|f| {
                    f.or_else(|| w.clone())
                        .unwrap_or_else(|| FourierField::zero(geom))
                })
                .collect()
        };
        DisplacementField::per_sublattice(fill(l1, w1), fill(l2, w2), subl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Sublattice;
    use proptest::prelude::*;

    fn g5() -> BilayerGeometry {
        BilayerGeometry::graphene(5f64.to_radians()).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample(geom: &BilayerGeometry) -> FourierField {
        FourierField::from_coefficients(
            geom,
            &[
                ([1, 0], [c(0.1, 0.2), c(-0.05, 0.0), c(0.0, 0.01)]),
                ([-1, 2], [c(0.0, -0.03), c(0.02, 0.02), c(0.0, 0.0)]),
                ([0, 0], [c(0.3, 0.0), c(0.0, 0.0), c(0.1, 0.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hermitian_pairs_give_real_series() {
        let g = g5();
        let f = sample(&g);
        let x = Vec2::new(3.0, -7.0);
        // direct complex sum over the full coefficient set
        let mut full = [c(0.0, 0.0); 3];
        for n in [[1, 0], [-1, 0], [-1, 2], [1, -2], [0, 0]] {
            let e = Complex64::from_polar(1.0, f.wavevector(n).dot(&x));
            let cf = f.coefficient(n);
            for k in 0..3 {
                full[k] += cf[k] * e;
            }
        }
        let u = f.eval(x);
        for k in 0..3 {
            assert!(full[k].im.abs() < 1e-15);
            assert!((full[k].re - u[k]).abs() < 1e-15);
        }
        assert_eq!(f.coefficient([-1, 0])[0], c(0.1, -0.2));
    }

    #[test]
    fn coefficient_validation() {
        let g = g5();
        let z = c(0.0, 0.0);
        assert!(FourierField::from_coefficients(&g, &[([0, 0], [c(1.0, 0.5), z, z])]).is_err());
        assert!(FourierField::from_coefficients(
            &g,
            &[
                ([1, 0], [c(1.0, 0.5), z, z]),
                ([-1, 0], [c(1.0, 0.5), z, z])
            ]
        )
        .is_err());
        let ok = FourierField::from_coefficients(
            &g,
            &[
                ([1, 0], [c(1.0, 0.5), z, z]),
                ([-1, 0], [c(1.0, -0.5), z, z]),
            ],
        )
        .unwrap();
        let lone = FourierField::from_coefficients(&g, &[([-1, 0], [c(1.0, -0.5), z, z])]).unwrap();
        assert_eq!(ok, lone);
    }

    #[test]
    fn plane_wave_is_real_part() {
        let g = g5();
        let cc = [c(0.3, -0.4), c(0.0, 1.0), c(0.2, 0.0)];
        let f = FourierField::plane_wave(&g, [2, -1], cc).unwrap();
        let x = Vec2::new(1.3, 40.0);
        let e = Complex64::from_polar(1.0, f.wavevector([2, -1]).dot(&x));
        for k in 0..3 {
            assert!(((cc[k] * e).re - f.eval(x)[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = g5();
        let f = sample(&g);
        let x = Vec2::new(5.0, 11.0);
        let jac = f.jacobian(x);
        for b in 0..2 {
            let mut e = Vec2::zeros();
            e[b] = 1e-5;
            let fd = (f.eval(x + e) - f.eval(x - e)) / 2e-5;
            for a in 0..3 {
                assert!((jac[(a, b)] - fd[a]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn file_round_trip_and_sublattice_overrides() {
        let g = g5();
        let subl = SublatticeSpec::new(
            &g,
            vec![
                Sublattice {
                    label: "A".into(),
                    tau: [0.0, 0.0],
                },
                Sublattice {
                    label: "B".into(),
                    tau: [1.23, 0.71],
                },
            ],
            vec![Sublattice {
                label: "A".into(),
                tau: [0.0, 0.0],
            }],
            [Vec2::zeros(); 2],
        )
        .unwrap();
        let text = r#"[
            {"layer": 1, "modes": [{"n": [1, 0], "c": [[0.1, 0.2], [0, 0], [0, 0]]}]},
            {"layer": 1, "sublattice": "B", "modes": [{"n": [0, 1], "c": [[0, 0], [0.3, 0], [0, 0]]}]}
        ]"#;
        let file: DisplacementFile = serde_json::from_str(text).unwrap();
        let u = file.build(&g, &subl).unwrap();
        assert_eq!(u.series(Layer::One, 0).coefficient([1, 0])[0], c(0.1, 0.2));
        assert_eq!(u.series(Layer::One, 1).coefficient([1, 0])[0], c(0.0, 0.0));
        assert!(u.series(Layer::Two, 0).is_zero());
        let back = u.to_file(&subl).build(&g, &subl).unwrap();
        assert_eq!(back, u);

        let single: DisplacementFile = serde_json::from_str(
            r#"{"layer": 2, "modes": [{"n": [0, 0], "c": [[0.5, 0], [0, 0], [0, 0]]}]}"#,
        )
        .unwrap();
        let u = single.build(&g, &subl).unwrap();
        assert_eq!(
            u.eval(Layer::Two, 0, Vec2::new(1.0, 2.0)),
            Vec3::new(0.5, 0.0, 0.0)
        );
        let bad: DisplacementFile =
            serde_json::from_str(r#"{"layer": 2, "sublattice": "Q", "modes": []}"#).unwrap();
        assert!(bad.build(&g, &subl).is_err());
        let dup: DisplacementFile =
            serde_json::from_str(r#"[{"layer": 1, "modes": []}, {"layer": 1, "modes": []}]"#)
                .unwrap();
        assert!(dup.build(&g, &subl).is_err());
    }

    #[test]
    fn phase_table_agrees_with_direct_exponentials() {
        let g = g5();
        let entries: Vec<_> = crate::lattice::half_plane_shells(5)
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                (
                    n,
                    [
                        c(0.01 * i as f64, 0.02),
                        c(-0.01, 0.003 * i as f64),
                        c(0.001, 0.0),
                    ],
                )
            })
            .collect();
        let f = FourierField::from_coefficients(&g, &entries).unwrap();
        for x in [
            Vec2::new(0.3, -0.7),
            Vec2::new(140.0, 95.0),
            Vec2::new(-400.0, 12.5),
        ] {
            let mut direct = f.mean();
            for (n, cc) in f.modes() {
                let e = Complex64::from_polar(1.0, f.wavevector(*n).dot(&x));
                for k in 0..3 {
                    direct[k] += 2.0 * (cc[k] * e).re;
                }
            }
            assert!((direct - f.eval(x)).norm() < 1e-12, "{x:?}");
        }
    }

    proptest! {
        #[test]
        fn series_is_moire_periodic(x in -50f64..50.0, y in -50f64..50.0, m1 in -3i64..=3, m2 in -3i64..=3) {
            let g = g5();
            let f = sample(&g);
            let p = Vec2::new(x, y);
            let shift = g.moire_basis() * Vec2::new(m1 as f64, m2 as f64);
            let d = (f.eval(p + shift) - f.eval(p)).norm();
            prop_assert!(d < 1e-10);
        }

        #[test]
        fn sup_bound_dominates_values(x in -100f64..100.0, y in -100f64..100.0) {
            let g = g5();
            let f = sample(&g);
            let u = f.eval(Vec2::new(x, y));
            let b = f.sup_bound();
            for k in 0..3 {
                prop_assert!(u[k].abs() <= b[k] + 1e-15);
            }
        }
    }
}
