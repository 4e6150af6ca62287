//! Even interlayer pair potentials.
//!
//! A [`PairPotential`] is either spherical, `v(x) = f(|x|)`, or a product
//! `v(x) = h(|x_h|) g(|z|)` of a horizontal and a vertical radial factor.
//! Both forms are even in `x` by construction. Radial factors that are not
//! smooth even functions at the origin (Morse, Lennard-Jones, tables) are
//! replaced inside a core radius by `a + b r^2 + c r^4`, matching value,
//! slope and curvature at the core radius, so every evaluation is finite
//! and `C^2`.

use crate::error::{Error, Result};
use crate::lattice::Vec3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const DEFAULT_CORE_RADIUS: f64 = 0.5;
pub const DEFAULT_DECAY_EXPONENT: f64 = 1.5;
pub const DEFAULT_MAX_RADIUS: f64 = 1000.0;

pub const GRAPHENE_MORSE_E0: f64 = 2.8437;
pub const GRAPHENE_MORSE_KAPPA0: f64 = 1.8168;
pub const GRAPHENE_MORSE_R0: f64 = 3.6891;
pub const GRAPHENE_LJ_SIGMA: f64 = 3.41;
/// Interlayer spacing of graphite in angstrom.
pub const GRAPHITE_SPACING: f64 = 3.35;

/// A sampled radial profile with local polynomial interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    nodes: Vec<f64>,
    values: Vec<f64>,
    order: usize,
    end: f64,
}

impl Table {
    /// `radii` must be nonnegative and strictly increasing; `order` is 1 or 3.
    pub fn new(radii: Vec<f64>, values: Vec<f64>, order: usize) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 4 {
            return Err(Error::InvalidInput(
                "table needs at least 4 (radius, value) rows".into(),
            ));
        }
        if order != 1 && order != 3 {
            return Err(Error::InvalidInput(format!(
                "interpolation order must be 1 or 3, got {order}"
            )));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "table radii must be nonnegative and strictly increasing".into(),
            ));
        }
        if !values.iter().chain(&radii).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "table contains non-finite entries".into(),
            ));
        }
        let end = *radii.last().unwrap();
        // Mirror the table through r = 0 so that the interpolant is even.
        let skip = usize::from(radii[0] == 0.0);
        let mut nodes: Vec<f64> = radii[skip..].iter().rev().map(|r| -r).collect();
        let mut vals: Vec<f64> = values[skip..].iter().rev().copied().collect();
        nodes.extend_from_slice(&radii);
        vals.extend_from_slice(&values);
        Ok(Self {
            nodes,
            values: vals,
            order,
            end,
        })
    }

    /// Read a two-column CSV of `radius, value`; a non-numeric first row is
    /// taken as a header and lines starting with `#` are ignored.
    pub fn from_csv(path: &Path, order: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| {
                Error::InvalidInput(format!("cannot read table {}: {e}", path.display()))
            })?;
        let (mut r, mut v) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            let parse = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(a), Some(b)) => {
                    r.push(a);
                    v.push(b);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "{}: row {} is not two numbers",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::new(r, v, order)
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    fn eval(&self, r: f64) -> [f64; 3] {
        if r > self.end {
            return [0.0; 3];
        }
        let k = self.order + 1;
        let i = self.nodes.partition_point(|x| *x <= r).saturating_sub(1);
        let lo = (i + 1).saturating_sub(k / 2).min(self.nodes.len() - k);
        lagrange(&self.nodes[lo..lo + k], &self.values[lo..lo + k], r)
    }
}

/// Value, first and second derivative of the interpolating polynomial.
fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..xs.len() {
        let mut denom = 1.0;
        let roots: Vec<f64> = (0..xs.len()).filter(|&k| k != i).map(|k| xs[k]).collect();
        for r in &roots {
            denom *= xs[i] - r;
        }
        let d: Vec<f64> = roots.iter().map(|r| x - r).collect();
        let (p, dp, ddp) = match d.len() {
            1 => (d[0], 1.0, 0.0),
            3 => (
                d[0] * d[1] * d[2],
                d[1] * d[2] + d[0] * d[2] + d[0] * d[1],
                2.0 * (d[0] + d[1] + d[2]),
            ),
            _ => unreachable!("only linear and cubic tables"),
        };
        out[0] += ys[i] * p / denom;
        out[1] += ys[i] * dp / denom;
        out[2] += ys[i] * ddp / denom;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum RadialRule {
    /// `E0 [(e^{-κ0 (r - r0)} - 1)^2 - 1]`
    Morse {
        e0: f64,
        kappa0: f64,
        r0: f64,
    },
    /// `4 ε0 [(σ/r)^12 - (σ/r)^6]`
    LennardJones {
        eps0: f64,
        sigma: f64,
    },
    /// `a exp(-r^2 / w^2)`
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `a (1 - r^2/R^2)^3` for `r < R`, zero outside.
    Bump {
        amplitude: f64,
        radius: f64,
    },
    Constant {
        value: f64,
    },
    Tabulated(Table),
}

impl RadialRule {
    /// Value, first and second derivative at `r ≥ 0`.
    fn raw(&self, r: f64) -> [f64; 3] {
        match *self {
            RadialRule::Morse { e0, kappa0, r0 } => {
                let e = (-kappa0 * (r - r0)).exp();
                [
                    e0 * ((e - 1.0).powi(2) - 1.0),
                    -2.0 * e0 * kappa0 * e * (e - 1.0),
                    2.0 * e0 * kappa0 * kappa0 * e * (2.0 * e - 1.0),
                ]
            }
            RadialRule::LennardJones { eps0, sigma } => {
                let s6 = (sigma / r).powi(6);
                let s12 = s6 * s6;
                [
                    4.0 * eps0 * (s12 - s6),
                    4.0 * eps0 * (-12.0 * s12 + 6.0 * s6) / r,
                    4.0 * eps0 * (156.0 * s12 - 42.0 * s6) / (r * r),
                ]
            }
            RadialRule::Gaussian { amplitude, width } => {
                let w2 = width * width;
                let e = amplitude * (-r * r / w2).exp();
                [
                    e,
                    -2.0 * r / w2 * e,
                    (4.0 * r * r / (w2 * w2) - 2.0 / w2) * e,
                ]
            }
            RadialRule::Bump { amplitude, radius } => {
                if r >= radius {
                    return [0.0; 3];
                }
                let t = 1.0 - r * r / (radius * radius);
                let dt = -2.0 * r / (radius * radius);
                let ddt = -2.0 / (radius * radius);
                [
                    amplitude * t.powi(3),
                    amplitude * 3.0 * t * t * dt,
                    amplitude * (6.0 * t * dt * dt + 3.0 * t * t * ddt),
                ]
            }
            RadialRule::Constant { value } => [value, 0.0, 0.0],
            RadialRule::Tabulated(ref t) => t.eval(r),
        }
    }

    /// Whether `r ↦ f(|r|)` is already a smooth even function at the origin.
    fn smooth_at_origin(&self) -> bool {
        matches!(
            self,
            RadialRule::Gaussian { .. } | RadialRule::Bump { .. } | RadialRule::Constant { .. }
        )
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialRule::Morse { e0, kappa0, r0 } => {
                e0.is_finite() && kappa0 > 0.0 && r0.is_finite()
            }
            RadialRule::LennardJones { eps0, sigma } => eps0.is_finite() && sigma > 0.0,
            RadialRule::Gaussian { amplitude, width } => amplitude.is_finite() && width > 0.0,
            RadialRule::Bump { amplitude, radius } => amplitude.is_finite() && radius > 0.0,
            RadialRule::Constant { value } => value.is_finite(),
            RadialRule::Tabulated(_) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid radial parameters: {self:?}"
            )))
        }
    }
}

/// A radial factor with its optional core polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct Radial {
    rule: RadialRule,
    core: Option<(f64, [f64; 3])>,
}

impl Radial {
    fn new(rule: RadialRule, core_radius: f64) -> Result<Self> {
        rule.validate()?;
        if rule.smooth_at_origin() {
            return Ok(Self { rule, core: None });
        }
        if !(core_radius > 0.0) {
            if matches!(rule, RadialRule::LennardJones { .. }) {
                return Err(Error::InvalidInput(
                    "Lennard-Jones factors need a positive core radius".into(),
                ));
            }
            return Ok(Self { rule, core: None });
        }
        let rho = core_radius;
        let [f, f1, f2] = rule.raw(rho);
        let c = (f2 * rho - f1) / (8.0 * rho.powi(3));
        let b = (f1 - 4.0 * c * rho.powi(3)) / (2.0 * rho);
        let a = f - b * rho * rho - c * rho.powi(4);
        Ok(Self {
            rule,
            core: Some((rho, [a, b, c])),
        })
    }

    pub fn rule(&self) -> &RadialRule {
        &self.rule
    }

    /// Value and radial derivative at `r ≥ 0`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if let Some((rho, [a, b, c])) = self.core {
            if r < rho {
                let r2 = r * r;
                return (a + b * r2 + c * r2 * r2, 2.0 * b * r + 4.0 * c * r2 * r);
            }
        }
        let [f, f1, _] = self.rule.raw(r);
        (f, f1)
    }

    fn sup_beyond(&self, r: f64) -> Option<f64> {
        match self.rule {
            RadialRule::Bump { radius, .. } if r >= radius => Some(0.0),
            RadialRule::Tabulated(ref t) if r > t.end() => Some(0.0),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Spherical(Radial),
    Product {
        horizontal: Radial,
        vertical: Radial,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairPotential {
    shape: Shape,
    core_radius: f64,
    decay_exponent: f64,
    scale: f64,
}

impl PairPotential {
    pub fn spherical(rule: RadialRule, core_radius: f64, decay_exponent: f64) -> Result<Self> {
        Self::checked(
            Shape::Spherical(Radial::new(rule, core_radius)?),
            core_radius,
            decay_exponent,
        )
    }

    pub fn product(
        horizontal: RadialRule,
        vertical: RadialRule,
        core_radius: f64,
        decay_exponent: f64,
    ) -> Result<Self> {
        let shape = Shape::Product {
            horizontal: Radial::new(horizontal, core_radius)?,
            vertical: Radial::new(vertical, core_radius)?,
        };
        Self::checked(shape, core_radius, decay_exponent)
    }

    fn checked(shape: Shape, core_radius: f64, decay_exponent: f64) -> Result<Self> {
        if !(decay_exponent > 1.0) {
            return Err(Error::InvalidInput(format!(
                "decay exponent r must exceed 1, got {decay_exponent}"
            )));
        }
        if !(core_radius >= 0.0) {
            return Err(Error::InvalidInput(
                "core radius must be nonnegative".into(),
            ));
        }
        Ok(Self {
            shape,
            core_radius,
            decay_exponent,
            scale: 1.0,
        })
    }

    /// Spherical Morse potential with the graphene interlayer parameters.
    pub fn graphene_morse() -> Self {
        Self::spherical(
            RadialRule::Morse {
                e0: GRAPHENE_MORSE_E0,
                kappa0: GRAPHENE_MORSE_KAPPA0,
                r0: GRAPHENE_MORSE_R0,
            },
            DEFAULT_CORE_RADIUS,
            DEFAULT_DECAY_EXPONENT,
        )
        .expect("valid parameters")
    }

    /// Horizontal graphene Morse factor times a dimensionless vertical
    /// Lennard-Jones factor (`ε0 = 1`, `σ = 3.41 Å`).
    pub fn graphene_morse_lj() -> Self {
        Self::product(
            RadialRule::Morse {
                e0: GRAPHENE_MORSE_E0,
                kappa0: GRAPHENE_MORSE_KAPPA0,
                r0: GRAPHENE_MORSE_R0,
            },
            RadialRule::LennardJones {
                eps0: 1.0,
                sigma: GRAPHENE_LJ_SIGMA,
            },
            DEFAULT_CORE_RADIUS,
            DEFAULT_DECAY_EXPONENT,
        )
        .expect("valid parameters")
    }

    /// `exp(-|x|^2)` in three dimensions.
    pub fn gaussian_test() -> Self {
        Self::spherical(
            RadialRule::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
            DEFAULT_CORE_RADIUS,
            DEFAULT_DECAY_EXPONENT,
        )
        .expect("valid parameters")
    }

    pub fn zero() -> Self {
        Self::spherical(
            RadialRule::Constant { value: 0.0 },
            0.0,
            DEFAULT_DECAY_EXPONENT,
        )
        .expect("valid parameters")
    }

    /// The same potential multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    pub fn core_radius(&self) -> f64 {
        self.core_radius
    }
    pub fn decay_exponent(&self) -> f64 {
        self.decay_exponent
    }

    pub fn is_zero(&self) -> bool {
        if self.scale == 0.0 {
            return true;
        }
        let zero = |r: &Radial| r.rule == RadialRule::Constant { value: 0.0 };
        match &self.shape {
            Shape::Spherical(f) => zero(f),
            Shape::Product {
                horizontal,
                vertical,
            } => zero(horizontal) || zero(vertical),
        }
    }

    pub fn evaluate(&self, x: Vec3) -> f64 {
        match &self.shape {
            Shape::Spherical(f) => self.scale * f.eval(x.norm()).0,
            Shape::Product {
                horizontal,
                vertical,
            } => self.scale * horizontal.eval(x[0].hypot(x[1])).0 * vertical.eval(x[2].abs()).0,
        }
    }

    /// Value and gradient.
    pub fn evaluate_with_gradient(&self, x: Vec3) -> (f64, Vec3) {
        match &self.shape {
            Shape::Spherical(f) => {
                let r = x.norm();
                let (v, d) = f.eval(r);
                let g = if r > 0.0 { x * (d / r) } else { Vec3::zeros() };
                (self.scale * v, g * self.scale)
            }
            Shape::Product {
                horizontal,
                vertical,
            } => {
                let rh = x[0].hypot(x[1]);
                let (h, dh) = horizontal.eval(rh);
                let (g, dg) = vertical.eval(x[2].abs());
                let gh = if rh > 0.0 { dh * g / rh } else { 0.0 };
                let gz = h * dg * x[2].signum() * f64::from(x[2] != 0.0);
                let s = self.scale;
                (s * h * g, Vec3::new(s * gh * x[0], s * gh * x[1], s * gz))
            }
        }
    }

    /// `sup |v|` over horizontal radii in `[r, r_end]` and the probed heights.
    fn tail_sup(&self, r: f64, r_end: f64, z_probe: &[f64], samples: usize) -> f64 {
        if let Shape::Product { horizontal, .. } = &self.shape {
            if horizontal.sup_beyond(r) == Some(0.0) {
                return 0.0;
            }
        }
        let mut m: f64 = 0.0;
        for i in 0..=samples {
            let rr = r + (r_end - r) * i as f64 / samples as f64;
            for &z in z_probe {
                m = m.max(self.evaluate(Vec3::new(rr, 0.0, z)).abs());
            }
        }
        m
    }

    /// Smallest horizontal radius beyond which `|v| < tol` at every probed
    /// height, located by doubling and then bisection.
    pub fn decay_radius(&self, tol: f64, z_probe: &[f64], max_radius: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(
                "decay tolerance must be positive".into(),
            ));
        }
        let z_probe = if z_probe.is_empty() {
            &[0.0][..]
        } else {
            z_probe
        };
        let r_end = 2.0 * max_radius;
        let samples = 8192;
        let outside = |r: f64| self.tail_sup(r, r_end, z_probe, samples) < tol;
        if outside(0.0) {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        while !outside(hi) {
            hi *= 2.0;
            if hi > max_radius {
                return Err(Error::NoDecay { tol, max_radius });
            }
        }
        let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if outside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `max ⟨x_h⟩^{2r} |v(x_h, z)|` over a probe grid; a lower estimate of
    /// the weighted sup-norm.
    pub fn weighted_norm_estimate(&self, r: f64, z_range: (f64, f64), grid: &ProbeGrid) -> f64 {
        grid.max_over(z_range, |x, w| (1.0 + w).powf(r) * self.evaluate(x).abs())
    }

    /// Estimate of `Σ_{k≤order} ‖⟨x_h⟩^{2r} D^k v‖_∞` using central finite
    /// differences of order `k` along a fixed set of directions.
    pub fn weighted_sobolev_estimate(
        &self,
        r: f64,
        order: usize,
        z_range: (f64, f64),
        grid: &ProbeGrid,
    ) -> f64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dirs = [
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(s, s, 0.0),
            Vec3::new(s, 0.0, s),
            Vec3::new(0.0, s, s),
        ];
        let h = 0.05;
        (0..=order)
            .map(|k| {
                let binom: Vec<f64> = (0..=k).map(|i| binomial(k, i)).collect();
                grid.max_over(z_range, |x, w| {
                    let mut best: f64 = 0.0;
                    for e in &dirs {
                        let mut d = 0.0;
                        for (i, c) in binom.iter().enumerate() {
                            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                            let off = (0.5 * k as f64 - i as f64) * h;
                            d += sign * c * self.evaluate(x + e * off);
                        }
                        best = best.max((d / h.powi(k as i32)).abs());
                    }
                    (1.0 + w).powf(r) * best
                })
            })
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `∫_{R^2} ⟨x⟩^{-2r} dx = π / (r − 1)`.
pub fn bracket_integral(r: f64) -> f64 {
    PI / (r - 1.0)
}

/// Constant in `∫ |f(x + g(x))| dx ≤ C (1 + ‖g‖_∞)^{2r} ‖⟨·⟩^{2r} f‖_∞`,
/// `C = 2·5^{r-1}·∫⟨x⟩^{-2r}dx`.
pub fn shifted_l1_constant(r: f64) -> f64 {
    2.0 * 5f64.powf(r - 1.0) * bracket_integral(r)
}

/// A uniform probe grid `[-extent, extent]^2 × [z_min, z_max]`; the
/// horizontal grid has `n + 1` points per axis, so it contains the origin
/// whenever `n` is even.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub extent: f64,
    pub n: usize,
    pub nz: usize,
}

impl ProbeGrid {
    fn max_over<F: Fn(Vec3, f64) -> f64>(&self, z_range: (f64, f64), f: F) -> f64 {
        let mut m: f64 = 0.0;
        let nz = self.nz.max(1);
        for iz in 0..nz {
            let z = if nz == 1 {
                z_range.0
            } else {
                z_range.0 + (z_range.1 - z_range.0) * iz as f64 / (nz - 1) as f64
            };
            for i in 0..=self.n {
                let x = -self.extent + 2.0 * self.extent * i as f64 / self.n as f64;
                for k in 0..=self.n {
                    let y = -self.extent + 2.0 * self.extent * k as f64 / self.n as f64;
                    m = m.max(f(Vec3::new(x, y, z), x * x + y * y));
                }
            }
        }
        m
    }
}

/// Radial rule as written in potential files. Field names carry units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialRuleFile {
    Morse {
        e0_mev: f64,
        kappa0_per_angstrom: f64,
        r0_angstrom: f64,
    },
    LennardJones {
        eps0: f64,
        sigma_angstrom: f64,
    },
    Gaussian {
        amplitude: f64,
        width_angstrom: f64,
    },
    Bump {
        amplitude: f64,
        radius_angstrom: f64,
    },
    Constant {
        value: f64,
    },
    Tabulated {
        file: String,
        #[serde(default = "cubic")]
        order: usize,
    },
}

fn cubic() -> usize {
    3
}

impl RadialRuleFile {
    pub fn build(&self, base: &Path) -> Result<RadialRule> {
        Ok(match self {
            RadialRuleFile::Morse {
                e0_mev,
                kappa0_per_angstrom,
                r0_angstrom,
            } => RadialRule::Morse {
                e0: *e0_mev,
                kappa0: *kappa0_per_angstrom,
                r0: *r0_angstrom,
            },
            RadialRuleFile::LennardJones {
                eps0,
                sigma_angstrom,
            } => RadialRule::LennardJones {
                eps0: *eps0,
                sigma: *sigma_angstrom,
            },
            RadialRuleFile::Gaussian {
                amplitude,
                width_angstrom,
            } => RadialRule::Gaussian {
                amplitude: *amplitude,
                width: *width_angstrom,
            },
            RadialRuleFile::Bump {
                amplitude,
                radius_angstrom,
            } => RadialRule::Bump {
                amplitude: *amplitude,
                radius: *radius_angstrom,
            },
            RadialRuleFile::Constant { value } => RadialRule::Constant { value: *value },
            RadialRuleFile::Tabulated { file, order } => {
                RadialRule::Tabulated(Table::from_csv(&base.join(file), *order)?)
            }
        })
    }
}

/// Potential file: `{variant, params, core_radius_angstrom, decay_exponent_r}`.
///
/// `variant` is `spherical` (params: one radial rule) or `product` (params:
/// `{horizontal, vertical}`). `morse`, `lennard_jones`, `gaussian` and
/// `tabulated` are accepted as shorthands for a spherical potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialFile {
    pub variant: String,
    pub params: serde_json::Value,
    #[serde(default = "default_core", alias = "core_radius")]
    pub core_radius_angstrom: f64,
    #[serde(default = "default_decay")]
    pub decay_exponent_r: f64,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn default_core() -> f64 {
    DEFAULT_CORE_RADIUS
}
fn default_decay() -> f64 {
    DEFAULT_DECAY_EXPONENT
}
fn unit_scale() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductParams {
    horizontal: RadialRuleFile,
    vertical: RadialRuleFile,
}

impl PotentialFile {
    pub fn build(&self, base: &Path) -> Result<PairPotential> {
        let bad = |e: serde_json::Error| Error::InvalidInput(format!("potential params: {e}"));
        let pot = match self.variant.as_str() {
            "product" => {
                let p: ProductParams = serde_json::from_value(self.params.clone()).map_err(bad)?;
                PairPotential::product(
                    p.horizontal.build(base)?,
                    p.vertical.build(base)?,
                    self.core_radius_angstrom,
                    self.decay_exponent_r,
                )?
            }
            v @ ("spherical" | "morse" | "lennard_jones" | "gaussian" | "tabulated"
            | "constant") => {
                let mut params = self.params.clone();
                if v != "spherical" {
                    if let Some(obj) = params.as_object_mut() {
                        obj.entry("rule")
                            .or_insert_with(|| serde_json::Value::String(v.to_string()));
                    }
                }
                let rule: RadialRuleFile = serde_json::from_value(params).map_err(bad)?;
                PairPotential::spherical(
                    rule.build(base)?,
                    self.core_radius_angstrom,
                    self.decay_exponent_r,
                )?
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown potential variant `{other}`"
                )))
            }
        };
        Ok(pot.scaled(self.scale))
    }
}
