//! Misfit and interlayer energies, and the total energy breakdown.
//!
//! Layer 1 sits at height `z_offset` above layer 2. For a site `x` of layer
//! `j` the interlayer site energy depends on `x` only through its moiré
//! reduction `ξ` and its reduction `y` modulo the other layer, so finite-N
//! sums and the thermodynamic limit share one evaluation routine: the limit
//! is the moiré-cell average of that routine along `y = D_{j→3-j}(ξ − γ_j) + γ_j`.

use crate::diophantine::PairConstant;
use crate::elastic::{cauchy_born_energy, ElasticModuli};
use crate::ergodic::moire_node;
use crate::error::{Error, Result};
use crate::fields::DisplacementField;
use crate::lattice::{lattice_points_within, BilayerGeometry, Layer, SublatticeSpec, Vec2, Vec3};
use crate::parallel::ordered_sum;
use crate::potentials::{shifted_l1_constant, PairPotential, ProbeGrid, GRAPHITE_SPACING};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Bell number `B_6`.
pub const BELL_6: f64 = 203.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterlayerSettings {
    #[serde(default = "spacing")]
    pub z_offset_angstrom: f64,
    /// Potential values below this magnitude (meV) are dropped.
    #[serde(default = "decay_tol")]
    pub decay_tol_mev: f64,
    #[serde(default = "max_radius")]
    pub max_radius_angstrom: f64,
}

fn spacing() -> f64 {
    GRAPHITE_SPACING
}
fn decay_tol() -> f64 {
    1e-12
}
fn max_radius() -> f64 {
    crate::potentials::DEFAULT_MAX_RADIUS
}

impl Default for InterlayerSettings {
    fn default() -> Self {
        Self {
            z_offset_angstrom: spacing(),
            decay_tol_mev: decay_tol(),
            max_radius_angstrom: max_radius(),
        }
    }
}

fn probe_heights(z_offset: f64, extent: f64) -> Vec<f64> {
    (0..=8)
        .map(|i| z_offset - extent + 2.0 * extent * i as f64 / 8.0)
        .collect()
}

/// The misfit (stacking-fault) energy `Φ_j(x) = |Γ_j|^{-1} Σ_{R'} v(x − R', z_offset)`
/// over the other layer, truncated at the decay radius.
#[derive(Clone, Debug)]
pub struct Misfit<'a> {
    geom: &'a BilayerGeometry,
    v: &'a PairPotential,
    layer: Layer,
    z_offset: f64,
    radius: f64,
}

impl<'a> Misfit<'a> {
    pub fn new(
        geom: &'a BilayerGeometry,
        v: &'a PairPotential,
        j: Layer,
        settings: &InterlayerSettings,
    ) -> Result<Self> {
        let radius = v.decay_radius(
            settings.decay_tol_mev,
            &[settings.z_offset_angstrom],
            settings.max_radius_angstrom,
        )?;
        Ok(Self::with_radius(
            geom,
            v,
            j,
            settings.z_offset_angstrom,
            radius,
        ))
    }

    pub fn with_radius(
        geom: &'a BilayerGeometry,
        v: &'a PairPotential,
        j: Layer,
        z_offset: f64,
        radius: f64,
    ) -> Self {
        Self {
            geom,
            v,
            layer: j,
            z_offset,
            radius,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, x: Vec2) -> f64 {
        let other = self.layer.other();
        let pts = lattice_points_within(
            self.geom.basis(other),
            self.geom.basis_inverse(other),
            x,
            self.radius,
        );
        let s: f64 = pts
            .iter()
            .map(|r| {
                let d = x - r;
                self.v.evaluate(Vec3::new(d[0], d[1], self.z_offset))
            })
            .sum();
        s / self.geom.cell_area(self.layer)
    }

    /// Values at `A_{3-j}(a/n, b/n)`, row-major in `(a, b)`.
    pub fn map(&self, n: usize) -> Vec<MisfitSample> {
        let basis = self.geom.basis(self.layer.other());
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let frac = [(idx / n) as f64 / n as f64, (idx % n) as f64 / n as f64];
                let x = basis * Vec2::new(frac[0], frac[1]);
                MisfitSample {
                    frac,
                    x: [x[0], x[1]],
                    value: self.eval(x),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MisfitSample {
    pub frac: [f64; 2],
    pub x: [f64; 2],
    pub value: f64,
}

/// `Φ_j(x)` with the decay radius taken from `settings`.
pub fn misfit_energy(
    geom: &BilayerGeometry,
    v: &PairPotential,
    x: Vec2,
    j: Layer,
    settings: &InterlayerSettings,
) -> Result<f64> {
    Ok(Misfit::new(geom, v, j, settings)?.eval(x))
}

/// One pair interaction inside a site sum, used for gradients.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairTerm {
    /// Where the other layer's field was evaluated.
    pub other_at: Vec2,
    /// Index of the partner translation in the site's [`PartnerWindow`].
    pub offset: usize,
    /// `∇v` at the pair separation; `+grad` is the derivative with respect
    /// to the site's own displacement, `−grad` with respect to the partner's.
    pub grad: Vec3,
}

/// Translations of the other layer within reach of a site, with the phases
/// of every partner sublattice series on them.
pub(crate) struct PartnerWindow {
    radius: f64,
    offsets: Vec<Vec2>,
    tables: Vec<Vec<Complex64>>,
    modes: Vec<usize>,
}

impl PartnerWindow {
    pub(crate) fn offsets(&self) -> &[Vec2] {
        &self.offsets
    }
}

/// A pair potential coupled to a bilayer, with its decay radius fixed for
/// fields whose out-of-plane spread stays below `z_extent`.
#[derive(Clone, Debug)]
pub struct InterlayerModel<'a> {
    geom: &'a BilayerGeometry,
    subl: &'a SublatticeSpec,
    v: &'a PairPotential,
    z_offset: f64,
    z_extent: f64,
    decay_radius: f64,
}

impl<'a> InterlayerModel<'a> {
    pub fn new(
        geom: &'a BilayerGeometry,
        subl: &'a SublatticeSpec,
        v: &'a PairPotential,
        settings: &InterlayerSettings,
        z_extent: f64,
    ) -> Result<Self> {
        let decay_radius = if v.is_zero() {
            0.0
        } else {
            v.decay_radius(
                settings.decay_tol_mev,
                &probe_heights(settings.z_offset_angstrom, z_extent),
                settings.max_radius_angstrom,
            )?
        };
        Ok(Self {
            geom,
            subl,
            v,
            z_offset: settings.z_offset_angstrom,
            z_extent,
            decay_radius,
        })
    }

    /// Model whose height range covers `u` (and sublattice spread).
    pub fn for_field(
        geom: &'a BilayerGeometry,
        subl: &'a SublatticeSpec,
        v: &'a PairPotential,
        settings: &InterlayerSettings,
        u: &DisplacementField,
    ) -> Result<Self> {
        Self::new(geom, subl, v, settings, z_spread(u))
    }

    pub fn decay_radius(&self) -> f64 {
        self.decay_radius
    }

    pub fn potential(&self) -> &PairPotential {
        self.v
    }

    /// Cutoff on the undisplaced horizontal separation.
    pub fn truncation_radius(&self, u: &DisplacementField) -> f64 {
        self.decay_radius
            + u.horizontal_sup(Layer::One)
            + u.horizontal_sup(Layer::Two)
            + self.subl.shift_spread()
    }

    fn check(&self, u: &DisplacementField) -> Result<()> {
        let spread = z_spread(u);
        if spread > self.z_extent + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "out-of-plane spread {spread} exceeds the range {} the decay radius was computed for",
                self.z_extent
            )));
        }
        Ok(())
    }

    /// Partner translations and phase tables for layer-`j` sites of `u`.
    pub(crate) fn window(&self, j: Layer, u: &DisplacementField) -> PartnerWindow {
        let radius = self.truncation_radius(u);
        let other = j.other();
        let basis_o = self.geom.basis(other);
        let gamma_o = self.subl.gamma(other);
        let mut spread: f64 = 0.0;
        for a in 0..self.subl.count(j) {
            for b in 0..self.subl.count(other) {
                spread =
                    spread.max((self.subl.tau(j, a) - self.subl.tau(other, b) - gamma_o).norm());
            }
        }
        let reach = radius + spread + basis_o.column(0).norm() + basis_o.column(1).norm();
        let offsets = lattice_points_within(
            basis_o,
            self.geom.basis_inverse(other),
            Vec2::zeros(),
            reach,
        );
        let series: Vec<_> = (0..self.subl.count(other))
            .map(|b| u.series(other, b))
            .collect();
        PartnerWindow {
            radius,
            tables: series.iter().map(|f| f.shift_table(&offsets)).collect(),
            modes: series.iter().map(|f| f.modes().len()).collect(),
            offsets,
        }
    }

    /// `Σ_{α,β} Σ_{w} v(...)` for a layer-`j` site with moiré reduction `xi`
    /// and reduction `y` modulo the other layer.
    fn site<F: FnMut(PairTerm)>(
        &self,
        j: Layer,
        u: &DisplacementField,
        xi: Vec2,
        y: Vec2,
        win: &PartnerWindow,
        mut visit: Option<&mut F>,
    ) -> f64 {
        let other = j.other();
        let gamma_o = self.subl.gamma(other);
        let (basis_o, inv_o) = (self.geom.basis(other), self.geom.basis_inverse(other));
        let dz0 = match j {
            Layer::One => self.z_offset,
            Layer::Two => -self.z_offset,
        };
        let r2 = win.radius * win.radius;
        let w0 = basis_o * (inv_o * y).map(f64::floor);
        let own: Vec<Vec3> = (0..self.subl.count(j)).map(|a| u.eval(j, a, xi)).collect();
        let mut total = 0.0;
        for b in 0..self.subl.count(other) {
            let anchored = u.series(other, b).anchor(xi - y + w0 + gamma_o);
            let m = win.modes[b];
            let base: Vec<Vec2> = (0..own.len())
                .map(|a| y + self.subl.tau(j, a) - self.subl.tau(other, b) - gamma_o - w0)
                .collect();
            for (k, s) in win.offsets.iter().enumerate() {
                let mut partner: Option<Vec3> = None;
                for (a, c) in base.iter().enumerate() {
                    let h = c - s;
                    if h.norm_squared() > r2 {
                        continue;
                    }
                    let p = *partner
                        .get_or_insert_with(|| anchored.eval(&win.tables[b][k * m..(k + 1) * m]));
                    let d = own[a] - p;
                    let arg = Vec3::new(h[0] + d[0], h[1] + d[1], dz0 + d[2]);
                    match visit.as_deref_mut() {
                        None => total += self.v.evaluate(arg),
                        Some(f) => {
                            let (val, grad) = self.v.evaluate_with_gradient(arg);
                            total += val;
                            f(PairTerm {
                                other_at: xi - y + w0 + s + gamma_o,
                                offset: k,
                                grad,
                            });
                        }
                    }
                }
            }
        }
        total
    }

    pub(crate) fn site_value(
        &self,
        j: Layer,
        u: &DisplacementField,
        xi: Vec2,
        y: Vec2,
        win: &PartnerWindow,
    ) -> f64 {
        self.site::<fn(PairTerm)>(j, u, xi, y, win, None)
    }

    pub(crate) fn site_terms<F: FnMut(PairTerm)>(
        &self,
        j: Layer,
        u: &DisplacementField,
        xi: Vec2,
        y: Vec2,
        win: &PartnerWindow,
        visit: &mut F,
    ) -> f64 {
        self.site(j, u, xi, y, win, Some(visit))
    }

    /// The point `y` paired with moiré node `xi` in the limit average.
    pub(crate) fn paired_point(&self, j: Layer, xi: Vec2) -> Vec2 {
        let g = self.subl.gamma(j);
        self.geom.disregistry_matrix(j) * (xi - g) + g
    }

    /// `e^(inter)_{j,N}`.
    pub fn energy_n(&self, j: Layer, u: &DisplacementField, n: usize) -> Result<f64> {
        self.check(u)?;
        if self.v.is_zero() {
            return Ok(0.0);
        }
        let win = self.window(j, u);
        let side = 2 * n + 1;
        let basis = self.geom.basis(j);
        let gamma = self.subl.gamma(j);
        let total = ordered_sum(side * side, 0.0, |idx| {
            let i = (idx / side) as f64 - n as f64;
            let k = (idx % side) as f64 - n as f64;
            let x = basis * Vec2::new(i, k) + gamma;
            let xi = self.geom.moire_frac(x).frac;
            let y = self.geom.layer_frac(x, j.other()).frac;
            self.site_value(j, u, xi, y, &win)
        });
        Ok(total / (2.0 * self.geom.cell_area(j) * (side * side) as f64))
    }

    /// `e^(inter)_j` by the periodic trapezoid rule on a `grid × grid` moiré
    /// mesh, checked against the `grid/2` sub-mesh.
    pub fn energy_limit(
        &self,
        j: Layer,
        u: &DisplacementField,
        grid: usize,
        tol: f64,
    ) -> Result<LimitValue> {
        if grid < 4 || !grid.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "quadrature grid must be even and at least 4, got {grid}"
            )));
        }
        self.check(u)?;
        if self.v.is_zero() {
            return Ok(LimitValue {
                value: 0.0,
                coarse: 0.0,
                grid,
            });
        }
        let win = self.window(j, u);
        let vals: Vec<f64> = (0..grid * grid)
            .into_par_iter()
            .map(|idx| {
                let xi = moire_node(self.geom, grid, idx);
                self.site_value(j, u, xi, self.paired_point(j, xi), &win)
            })
            .collect();
        let scale = 1.0 / (2.0 * self.geom.cell_area(j));
        let fine = scale * vals.iter().sum::<f64>() / (grid * grid) as f64;
        let half = grid / 2;
        let coarse_sum: f64 = (0..half)
            .flat_map(|a| (0..half).map(move |b| (2 * a) * grid + 2 * b))
            .map(|idx| vals[idx])
            .sum();
        let coarse = scale * coarse_sum / (half * half) as f64;
        let change = (fine - coarse).abs();
        if change > 10.0 * tol {
            return Err(Error::QuadratureNotConverged {
                coarse: half,
                fine: grid,
                change,
            });
        }
        Ok(LimitValue {
            value: fine,
            coarse,
            grid,
        })
    }
}

/// `d + ‖u_{1,z}‖ + ‖u_{2,z}‖`.
pub fn z_spread(u: &DisplacementField) -> f64 {
    u.sup_bound(Layer::One)[2] + u.sup_bound(Layer::Two)[2]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitValue {
    pub value: f64,
    /// The same rule on the `grid/2` sub-mesh.
    pub coarse: f64,
    pub grid: usize,
}

pub fn interlayer_energy_n(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    v: &PairPotential,
    j: Layer,
    n: usize,
    settings: &InterlayerSettings,
) -> Result<f64> {
    InterlayerModel::for_field(geom, subl, v, settings, u)?.energy_n(j, u, n)
}

#[allow(clippy::too_many_arguments)]
pub fn interlayer_energy_limit(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    v: &PairPotential,
    j: Layer,
    grid: usize,
    tol: f64,
    settings: &InterlayerSettings,
) -> Result<f64> {
    Ok(InterlayerModel::for_field(geom, subl, v, settings, u)?
        .energy_limit(j, u, grid, tol)?
        .value)
}

/// How the interlayer term is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evaluation {
    Finite { n: usize },
    Limit { grid: usize, tol: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LayerEnergy {
    pub mono: f64,
    pub elastic: f64,
    /// Half of `e^(inter)_j`, so that the two layers together count the
    /// interlayer coupling once.
    pub inter: f64,
}

impl LayerEnergy {
    pub fn sum(&self) -> f64 {
        self.mono + self.elastic + self.inter
    }
}

/// Energy densities per Å² (meV/Å²).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub layers: [LayerEnergy; 2],
    /// `e^(inter)_j` for both layers.
    pub inter_density: [f64; 2],
    pub total: f64,
    pub evaluation: Evaluation,
    pub decay_radius: f64,
    pub truncation_radius: f64,
    pub elastic_grid: usize,
}

/// `e_tot = Σ_j ⟨W_j(Du_j)⟩ + ½ Σ_j e^(inter)_j`, with the elastic term in
/// Cauchy-Born form averaged over the sublattice series of each layer.
#[allow(clippy::too_many_arguments)]
pub fn total_energy(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    v: &PairPotential,
    moduli: &[ElasticModuli; 2],
    evaluation: Evaluation,
    elastic_grid: usize,
    settings: &InterlayerSettings,
) -> Result<EnergyBreakdown> {
    for m in moduli {
        m.validate()?;
    }
    let model = InterlayerModel::for_field(geom, subl, v, settings, u)?;
    let mut layers = [LayerEnergy::default(); 2];
    let mut inter_density = [0.0; 2];
    for j in Layer::BOTH {
        let m = &moduli[j.index()];
        let series = u.layer(j);
        let cb: f64 = series
            .iter()
            .map(|f| cauchy_born_energy(geom, f, m, elastic_grid))
            .sum::<f64>()
            / series.len() as f64;
        let e = match evaluation {
            Evaluation::Finite { n } => model.energy_n(j, u, n)?,
            Evaluation::Limit { grid, tol } => model.energy_limit(j, u, grid, tol)?.value,
        };
        inter_density[j.index()] = e;
        layers[j.index()] = LayerEnergy {
            mono: 0.0,
            elastic: cb * m.area_factor(geom.cell_area(j)),
            inter: 0.5 * e,
        };
    }
    Ok(EnergyBreakdown {
        total: layers.iter().map(LayerEnergy::sum).sum(),
        layers,
        inter_density,
        evaluation,
        decay_radius: model.decay_radius(),
        truncation_radius: model.truncation_radius(u),
        elastic_grid,
    })
}

/// Upper-bound estimate of the constant `C` in `|e_{j,N} − e_j| ≤ C/(2N+1)`
/// for pair potentials. Sup-norms of `v` and its derivatives come from
/// finite-difference probes on `grid` over the heights the fields reach, so
/// the result is an estimate rather than a rigorous bound.
#[allow(clippy::too_many_arguments)]
pub fn pair_error_constant(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    v: &PairPotential,
    pair: &PairConstant,
    z_offset: f64,
    grid: &ProbeGrid,
) -> Result<f64> {
    let rho = geom.moire_scale()?;
    let a = crate::lattice::spectral_norm(geom.reference_basis());
    let q = geom.q();
    let r = v.decay_exponent();
    let lz = subl.shift_spread() + z_spread(u);
    let v_norm = v.weighted_sobolev_estimate(r, 6, (z_offset - lz, z_offset + lz), grid);
    let pairs = (subl.count(Layer::One) * subl.count(Layer::Two)) as f64;
    let u_norm = u.sobolev_bound(Layer::One, 6) + u.sobolev_bound(Layer::Two, 6);
    Ok(BELL_6 * std::f64::consts::SQRT_2
        / (geom.cell_area(Layer::One) * geom.cell_area(Layer::Two))
        * (rho * a / (2.0 * std::f64::consts::PI)).powi(6)
        * pair.value
        * (q.powi(6) + q.powi(-6) + 1.0)
        * shifted_l1_constant(r)
        * (1.0 + subl.shift_spread() + u_norm).powf(6.0 + 2.0 * r)
        * pairs
        * v_norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FourierField;
    use crate::lattice::Sublattice;
    use num_complex::Complex64;

    fn g5() -> BilayerGeometry {
        BilayerGeometry::graphene(5f64.to_radians()).unwrap()
    }

    fn tight() -> InterlayerSettings {
        InterlayerSettings {
            decay_tol_mev: 1e-22,
            ..Default::default()
        }
    }

    fn small_field(geom: &BilayerGeometry, subl: &SublatticeSpec, scale: f64) -> DisplacementField {
        let c = |a: f64, b: f64| Complex64::new(scale * a, scale * b);
        let f1 = FourierField::from_coefficients(
            geom,
            &[
                ([1, 0], [c(0.3, 0.1), c(-0.1, 0.2), c(0.05, 0.0)]),
                ([0, 1], [c(0.0, -0.2), c(0.1, 0.1), c(0.0, 0.02)]),
            ],
        )
        .unwrap();
        let f2 = FourierField::from_coefficients(
            geom,
            &[
                ([1, -1], [c(-0.2, 0.05), c(0.1, -0.3), c(0.01, 0.01)]),
                ([0, 0], [c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            ],
        )
        .unwrap();
        DisplacementField::uniform(subl, [f1, f2])
    }

    #[test]
    fn zero_potential_gives_zero_everywhere() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::zero();
        let u = small_field(&g, &subl, 1.0);
        let s = InterlayerSettings::default();
        assert_eq!(
            misfit_energy(&g, &v, Vec2::new(0.3, 0.2), Layer::One, &s).unwrap(),
            0.0
        );
        assert_eq!(
            interlayer_energy_n(&g, &subl, &u, &v, Layer::One, 3, &s).unwrap(),
            0.0
        );
        assert_eq!(
            interlayer_energy_limit(&g, &subl, &u, &v, Layer::Two, 8, 1e-9, &s).unwrap(),
            0.0
        );
        let zero_u = DisplacementField::zero(&g, &subl);
        let moduli = [ElasticModuli::graphene(); 2];
        let b = total_energy(
            &g,
            &subl,
            &zero_u,
            &v,
            &moduli,
            Evaluation::Limit { grid: 8, tol: 1e-9 },
            8,
            &s,
        )
        .unwrap();
        assert_eq!(b.total, 0.0);
    }

    #[test]
    fn misfit_is_periodic_and_peaks_at_aa() {
        let g = g5();
        let v = PairPotential::gaussian_test();
        let m = Misfit::new(&g, &v, Layer::One, &tight()).unwrap();
        let a2 = g.basis(Layer::Two);
        let x = Vec2::new(0.37, -1.2);
        let shifted = x + a2.column(0);
        assert!((m.eval(x) - m.eval(shifted)).abs() < 1e-15);
        let aa = m.eval(Vec2::zeros());
        let ab = m.eval(a2 * Vec2::new(1.0 / 3.0, 1.0 / 3.0));
        let ba = m.eval(a2 * Vec2::new(2.0 / 3.0, 2.0 / 3.0));
        assert!(aa > ab);
        assert!((ab - ba).abs() <= 1e-9 * ab.abs());
        // brute force over a 4× larger neighbourhood
        let brute = |x: Vec2| {
            let mut s = 0.0;
            let r = 4.0 * m.radius();
            let k = (r / 2.0).ceil() as i64 + 2;
            for i in -k..=k {
                for l in -k..=k {
                    let d = x - a2 * Vec2::new(i as f64, l as f64);
                    s += v.evaluate(Vec3::new(d[0], d[1], GRAPHITE_SPACING));
                }
            }
            s / g.cell_area(Layer::One)
        };
        assert!((aa - brute(Vec2::zeros())).abs() < 1e-12 * aa);
        let p = a2 * Vec2::new(1.0 / 3.0, 1.0 / 3.0);
        assert!((ab - brute(p)).abs() < 1e-12 * aa);
    }

    /// Positions taken straight from the definition, summed over a generous
    /// box of the other layer.
    fn brute_interlayer(
        g: &BilayerGeometry,
        subl: &SublatticeSpec,
        u: &DisplacementField,
        v: &PairPotential,
        j: Layer,
        n: i64,
        reach: i64,
    ) -> f64 {
        let o = j.other();
        let z = |l: Layer| {
            if l == Layer::One {
                GRAPHITE_SPACING
            } else {
                0.0
            }
        };
        let mut total = 0.0;
        for i in -n..=n {
            for k in -n..=n {
                let x = g.basis(j) * Vec2::new(i as f64, k as f64) + subl.gamma(j);
                let center = g.basis_inverse(o) * x;
                for a in 0..subl.count(j) {
                    let uj = u.eval(j, a, x);
                    let p = x + subl.tau(j, a);
                    let yj = Vec3::new(p[0] + uj[0], p[1] + uj[1], z(j) + uj[2]);
                    for b in 0..subl.count(o) {
                        for m0 in -reach..=reach {
                            for m1 in -reach..=reach {
                                let r = g.basis(o)
                                    * Vec2::new(
                                        center[0].round() + m0 as f64,
                                        center[1].round() + m1 as f64,
                                    )
                                    + subl.gamma(o);
                                let uo = u.eval(o, b, r);
                                let q = r + subl.tau(o, b);
                                let yo = Vec3::new(q[0] + uo[0], q[1] + uo[1], z(o) + uo[2]);
                                total += 0.5 * v.evaluate(yj - yo);
                            }
                        }
                    }
                }
            }
        }
        let side = (2 * n + 1) as f64;
        total / (g.cell_area(j) * side * side)
    }

    #[test]
    fn finite_n_matches_brute_force() {
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
                tau: [0.2, -0.1],
            }],
            [
                g.basis(Layer::One) * Vec2::new(0.3, 0.1),
                g.basis(Layer::Two) * Vec2::new(0.15, 0.4),
            ],
        )
        .unwrap();
        let u = small_field(&g, &subl, 0.5);
        let v = PairPotential::gaussian_test();
        for j in Layer::BOTH {
            let got = interlayer_energy_n(&g, &subl, &u, &v, j, 2, &tight()).unwrap();
            let oracle = brute_interlayer(&g, &subl, &u, &v, j, 2, 6);
            assert!(
                (got - oracle).abs() < 1e-10 * oracle.abs(),
                "{j}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn undisplaced_finite_n_is_misfit_average() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::gaussian_test();
        let u = DisplacementField::zero(&g, &subl);
        let m = Misfit::new(&g, &v, Layer::One, &tight()).unwrap();
        let n = 3i64;
        let mut s = 0.0;
        for i in -n..=n {
            for k in -n..=n {
                let r = g.basis(Layer::One) * Vec2::new(i as f64, k as f64);
                s += m.eval(g.layer_frac(r, Layer::Two).frac);
            }
        }
        let oracle = 0.5 * s / 49.0;
        let got = interlayer_energy_n(&g, &subl, &u, &v, Layer::One, 3, &tight()).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn undisplaced_limit_is_misfit_cell_average() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::gaussian_test();
        let u = DisplacementField::zero(&g, &subl);
        let m = Misfit::new(&g, &v, Layer::One, &tight()).unwrap();
        let grid = 32;
        let d = g.disregistry_matrix(Layer::One);
        let mut s = 0.0;
        for idx in 0..grid * grid {
            s += m.eval(d * moire_node(&g, grid, idx));
        }
        let oracle = 0.5 * s / (grid * grid) as f64;
        let got =
            interlayer_energy_limit(&g, &subl, &u, &v, Layer::One, grid, 1e-9, &tight()).unwrap();
        assert!((got - oracle).abs() < 1e-12 * oracle);
        // which is the closed-form Gaussian integral over the plane
        let exact = 0.5 * std::f64::consts::PI * (-GRAPHITE_SPACING.powi(2)).exp()
            / (g.cell_area(Layer::One) * g.cell_area(Layer::Two));
        assert!((got - exact).abs() < 1e-9 * exact, "{got} vs {exact}");
    }

    #[test]
    fn layer_exchange_of_limit() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::gaussian_test();
        let u = small_field(&g, &subl, 1.0);
        let e1 =
            interlayer_energy_limit(&g, &subl, &u, &v, Layer::One, 32, 1e-6, &tight()).unwrap();
        let e2 =
            interlayer_energy_limit(&g, &subl, &u, &v, Layer::Two, 32, 1e-6, &tight()).unwrap();
        assert!((e1 - e2).abs() < 1e-8 * e1.abs(), "{e1} vs {e2}");
    }

    #[test]
    fn quadrature_check_reports_unresolved_integrands() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::gaussian_test();
        let u = small_field(&g, &subl, 1.0);
        let r = interlayer_energy_limit(&g, &subl, &u, &v, Layer::One, 4, 1e-16, &tight());
        assert!(
            matches!(r, Err(Error::QuadratureNotConverged { .. })),
            "{r:?}"
        );
        assert!(interlayer_energy_limit(&g, &subl, &u, &v, Layer::One, 7, 1e-6, &tight()).is_err());
    }

    #[test]
    fn total_energy_scaling_and_components() {
        let g = g5();
        let subl = SublatticeSpec::default();
        let v = PairPotential::gaussian_test();
        let u = small_field(&g, &subl, 1.0);
        let moduli = [ElasticModuli::graphene(); 2];
        let ev = Evaluation::Limit {
            grid: 32,
            tol: 1e-6,
        };
        let b1 = total_energy(&g, &subl, &u, &v, &moduli, ev, 16, &tight()).unwrap();
        let b2 = total_energy(&g, &subl, &u, &v.scaled(2.0), &moduli, ev, 16, &tight()).unwrap();
        let sum: f64 = b1.layers.iter().map(LayerEnergy::sum).sum();
        assert_eq!(b1.total, sum);
        for j in 0..2 {
            assert!(
                (b2.layers[j].inter - 2.0 * b1.layers[j].inter).abs()
                    < 1e-12 * b1.layers[j].inter.abs()
            );
            assert_eq!(b2.layers[j].elastic, b1.layers[j].elastic);
        }
        let zero = DisplacementField::zero(&g, &subl);
        let b0 = total_energy(&g, &subl, &zero, &v, &moduli, ev, 16, &tight()).unwrap();
        let misfit_avg =
            interlayer_energy_limit(&g, &subl, &zero, &v, Layer::One, 32, 1e-6, &tight()).unwrap();
        assert!((b0.total - misfit_avg).abs() < 1e-12 * misfit_avg);
    }

    #[test]
    fn shifting_gamma_by_a_lattice_vector_relabels_sites() {
        let g = g5();
        let a1 = g.basis(Layer::One);
        let gamma = a1 * Vec2::new(0.2, 0.1);
        let subl = SublatticeSpec::new(
            &g,
            vec![Sublattice {
                label: "A".into(),
                tau: [0.0, 0.0],
            }],
            vec![Sublattice {
                label: "A".into(),
                tau: [0.0, 0.0],
            }],
            [gamma, Vec2::zeros()],
        )
        .unwrap();
        let v = PairPotential::gaussian_test();
        let u = small_field(&g, &subl, 0.5);
        let e = interlayer_energy_n(&g, &subl, &u, &v, Layer::One, 2, &tight()).unwrap();
        // γ_1 + A_1(1, 0) with the index window moved back by one column
        let model = InterlayerModel::for_field(&g, &subl, &v, &tight(), &u).unwrap();
        let win = model.window(Layer::One, &u);
        let moved = gamma + a1.column(0);
        let mut s = 0.0;
        for i in -3..=1 {
            for k in -2..=2 {
                let x = a1 * Vec2::new(i as f64, k as f64) + moved;
                s += model.site_value(
                    Layer::One,
                    &u,
                    g.moire_frac(x).frac,
                    g.layer_frac(x, Layer::Two).frac,
                    &win,
                );
            }
        }
        let relabeled = s / (2.0 * g.cell_area(Layer::One) * 25.0);
        assert!(
            (e - relabeled).abs() < 1e-12 * e.abs(),
            "{e} vs {relabeled}"
        );
    }
}
