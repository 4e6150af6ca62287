//! Isotropic linear elasticity in the Cauchy-Born approximation.

use crate::ergodic::moire_node;
use crate::error::{Error, Result};
use crate::fields::FourierField;
use crate::lattice::{BilayerGeometry, Mat2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const GRAPHENE_LAMBDA: f64 = 37_950.0;
pub const GRAPHENE_MU: f64 = 47_352.0;

/// Area unit the Lamé parameters refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModuliUnit {
    /// Energy per layer unit cell; densities are divided by `|Γ_j|`.
    #[default]
    PerCell,
    /// Energy per square angstrom.
    PerArea,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticModuli {
    #[serde(rename = "lambda_mev")]
    pub lambda: f64,
    #[serde(rename = "mu_mev")]
    pub mu: f64,
    #[serde(default)]
    pub unit: ModuliUnit,
}

impl ElasticModuli {
    pub fn new(lambda: f64, mu: f64, unit: ModuliUnit) -> Result<Self> {
        let m = Self { lambda, mu, unit };
        m.validate()?;
        Ok(m)
    }

    pub fn graphene() -> Self {
        Self {
            lambda: GRAPHENE_LAMBDA,
            mu: GRAPHENE_MU,
            unit: ModuliUnit::PerCell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu > 0.0
            && self.lambda + self.mu > 0.0
            && self.lambda.is_finite()
            && self.mu.is_finite()
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "Lamé parameters need mu > 0 and lambda + mu > 0 (got {}, {})",
                self.lambda, self.mu
            )))
        }
    }

    /// Factor turning densities in moduli units into energy per Å².
    pub fn area_factor(&self, cell_area: f64) -> f64 {
        match self.unit {
            ModuliUnit::PerCell => 1.0 / cell_area,
            ModuliUnit::PerArea => 1.0,
        }
    }
}

/// `½ M:𝓔:M = ½[λ (tr M)² + μ (Σ M_ab² + Σ M_ab M_ba)]`.
pub fn elastic_density(m: &Mat2, moduli: &ElasticModuli) -> f64 {
    let tr = m.trace();
    let sq: f64 = m.iter().map(|x| x * x).sum();
    let cross: f64 = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .map(|(a, b)| m[(a, b)] * m[(b, a)])
        .sum();
    0.5 * (moduli.lambda * tr * tr + moduli.mu * (sq + cross))
}

/// Cell average of `elastic_density(Du)` for the in-plane part of `u` on a
/// `grid × grid` periodic trapezoid rule, with `Du` differentiated exactly.
pub fn cauchy_born_energy(
    geom: &BilayerGeometry,
    u: &FourierField,
    moduli: &ElasticModuli,
    grid: usize,
) -> f64 {
    let vals: Vec<f64> = (0..grid * grid)
        .into_par_iter()
        .map(|idx| {
            let j = u.jacobian(moire_node(geom, grid, idx));
            let m = Mat2::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]);
            elastic_density(&m, moduli)
        })
        .collect();
    vals.iter().sum::<f64>() / (grid * grid) as f64
}

/// Exact cell average via Parseval:
/// `Σ_n [(λ+μ)|G_n·c_n|² + μ|G_n|²|c_n|²]` over half-plane modes.
pub fn cauchy_born_parseval(u: &FourierField, moduli: &ElasticModuli) -> f64 {
    u.modes()
        .iter()
        .map(|(n, c)| {
            let g = u.wavevector(*n);
            let gc = c[0] * g[0] + c[1] * g[1];
            let cc = c[0].norm_sqr() + c[1].norm_sqr();
            (moduli.lambda + moduli.mu) * gc.norm_sqr() + moduli.mu * g.norm_squared() * cc
        })
        .sum()
}
