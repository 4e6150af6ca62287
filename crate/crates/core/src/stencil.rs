//! Finite-range monolayer site potentials and their energy densities.

use crate::ergodic::{moire_node, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::fields::DisplacementField;
use crate::lattice::{BilayerGeometry, Layer, SublatticeSpec, Vec2, Vec3};
use crate::parallel::ordered_sum;
use crate::potentials::PairPotential;

/// One neighbour `(R', α')` of a site, with `R' = A_j offset`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StencilTerm {
    pub offset: [i64; 2],
    pub target: usize,
}

/// A site potential that sees the displacement differences
/// `u(R + R', α') − u(R, α)` over a fixed finite set of neighbours.
pub trait StencilPotential: Sync {
    fn terms(&self, alpha: usize) -> &[StencilTerm];
    fn site_energy(&self, alpha: usize, differences: &[Vec3]) -> f64;
}

/// `½ Σ_{(R',α')} [w(R' + τ_α' − τ_α + Δu) − w(R' + τ_α' − τ_α)]` over all
/// neighbours within `cutoff`.
#[derive(Clone, Debug)]
pub struct PairStencil {
    w: PairPotential,
    terms: Vec<Vec<StencilTerm>>,
    rest: Vec<Vec<Vec3>>,
    cutoff: f64,
}

impl PairStencil {
    pub fn new(
        geom: &BilayerGeometry,
        subl: &SublatticeSpec,
        j: Layer,
        w: PairPotential,
        cutoff: f64,
    ) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidInput(
                "stencil cutoff must be positive and finite".into(),
            ));
        }
        let basis = geom.basis(j);
        let reach = (cutoff / basis.column(0).norm().min(basis.column(1).norm())).ceil() as i64 + 2;
        let mut terms = Vec::new();
        let mut rest = Vec::new();
        for a in 0..subl.count(j) {
            let mut t = Vec::new();
            let mut r = Vec::new();
            for m0 in -reach..=reach {
                for m1 in -reach..=reach {
                    for b in 0..subl.count(j) {
                        if m0 == 0 && m1 == 0 && a == b {
                            continue;
                        }
                        let d = basis * Vec2::new(m0 as f64, m1 as f64) + subl.tau(j, b)
                            - subl.tau(j, a);
                        if d.norm() <= cutoff {
                            t.push(StencilTerm {
                                offset: [m0, m1],
                                target: b,
                            });
                            r.push(Vec3::new(d[0], d[1], 0.0));
                        }
                    }
                }
            }
            terms.push(t);
            rest.push(r);
        }
        Ok(Self {
            w,
            terms,
            rest,
            cutoff,
        })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

impl StencilPotential for PairStencil {
    fn terms(&self, alpha: usize) -> &[StencilTerm] {
        &self.terms[alpha]
    }

    fn site_energy(&self, alpha: usize, differences: &[Vec3]) -> f64 {
        0.5 * self.rest[alpha]
            .iter()
            .zip(differences)
            .map(|(r, d)| self.w.evaluate(r + d) - self.w.evaluate(*r))
            .sum::<f64>()
    }
}

fn site_sum<V: StencilPotential + ?Sized>(
    geom: &BilayerGeometry,
    u: &DisplacementField,
    j: Layer,
    stencil: &V,
    x: Vec2,
    count: usize,
) -> f64 {
    let basis = geom.basis(j);
    let mut total = 0.0;
    let mut diffs = Vec::new();
    for a in 0..count {
        let here = u.eval(j, a, x);
        diffs.clear();
        diffs.extend(stencil.terms(a).iter().map(|t| {
            let p = x + basis * Vec2::new(t.offset[0] as f64, t.offset[1] as f64);
            u.eval(j, t.target, p) - here
        }));
        total += stencil.site_energy(a, &diffs);
    }
    total
}

/// `(|Γ_j|(2N+1)²)^{-1} Σ_α Σ_{R ∈ A_j[-N,N]²} V_α` with the field
/// evaluated at the moiré reduction of `R + γ_j`.
pub fn monolayer_energy_n<V: StencilPotential + ?Sized>(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    j: Layer,
    stencil: &V,
    n: usize,
) -> f64 {
    let side = 2 * n + 1;
    let basis = geom.basis(j);
    let gamma = subl.gamma(j);
    let total = ordered_sum(side * side, 0.0, |idx| {
        let i = (idx / side) as f64 - n as f64;
        let k = (idx % side) as f64 - n as f64;
        let x = geom.moire_frac(basis * Vec2::new(i, k) + gamma).frac;
        site_sum(geom, u, j, stencil, x, subl.count(j))
    });
    total / (geom.cell_area(j) * (side * side) as f64)
}

/// Periodic trapezoid average of the monolayer site potential over the moiré
/// cell; `grid` points per axis (defaults to [`DEFAULT_GRID`] when zero).
pub fn monolayer_energy_limit<V: StencilPotential + ?Sized>(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    j: Layer,
    stencil: &V,
    grid: usize,
) -> f64 {
    let grid = if grid == 0 { DEFAULT_GRID } else { grid };
    let total = ordered_sum(grid * grid, 0.0, |idx| {
        site_sum(
            geom,
            u,
            j,
            stencil,
            moire_node(geom, grid, idx),
            subl.count(j),
        )
    });
    total / (geom.cell_area(j) * (grid * grid) as f64)
}
