//! Spectral relaxation of the Cauchy-Born plus interlayer energy.
//!
//! Each layer carries one in-plane field shared by all of its sublattices,
//! parametrised by the real and imaginary parts of its Fourier coefficients
//! on the half-plane modes `|n|_∞ ≤ n_cut` plus the mean. Out-of-plane
//! components are frozen at their initial values.

use crate::elastic::ElasticModuli;
use crate::energy::{z_spread, InterlayerModel, InterlayerSettings, PairTerm};
use crate::ergodic::moire_node;
use crate::error::{Error, Result};
use crate::fields::{DisplacementField, FourierField, PhaseTable};
use crate::lattice::{half_plane_shells, BilayerGeometry, Layer, Mat2, SublatticeSpec, Vec2, Vec3};
use crate::parallel::ordered_vec_sum;
use crate::potentials::PairPotential;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Search-direction rule. Both use the elastic preconditioner and the same
/// backtracking line search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Descent,
    Lbfgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxConfig {
    pub n_cut: usize,
    pub grid: usize,
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub backtrack: f64,
    pub armijo: f64,
    /// Energy increases up to `armijo_slack·(1 + |E|)` count as round-off.
    pub armijo_slack: f64,
    pub min_step: f64,
    /// Largest change of the displacement sup bound allowed in one trial step.
    pub max_displacement_angstrom: f64,
    pub report_epsilon: bool,
    pub method: Method,
    /// Number of stored curvature pairs for [`Method::Lbfgs`].
    pub memory: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self {
            n_cut: 6,
            grid: 64,
            max_iterations: 500,
            grad_tol: 1e-6,
            backtrack: 0.5,
            armijo: 1e-4,
            armijo_slack: 1e-13,
            min_step: 1e-14,
            max_displacement_angstrom: 0.25,
            report_epsilon: true,
            method: Method::Descent,
            memory: 8,
        }
    }
}

impl RelaxConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("gradient tolerance must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtracking factor must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if self.n_cut == 0 || self.n_cut as i64 > PhaseTable::MAX_INDEX {
            return bad("mode cutoff must lie in 1..=16");
        }
        if self.grid < 2 * self.n_cut + 2 || !self.grid.is_multiple_of(2) {
            return bad("quadrature grid must be even and exceed twice the mode cutoff");
        }
        if !(self.min_step > 0.0)
            || !(self.armijo_slack >= 0.0)
            || !(self.max_displacement_angstrom > 0.0)
        {
            return bad("line-search limits must be positive");
        }
        if self.method == Method::Lbfgs && self.memory == 0 {
            return bad("quasi-Newton memory must be at least 1");
        }
        Ok(())
    }
}

/// Index map between coefficient vectors and fields. Per layer: mean `x, y`,
/// then for each mode `Re c_x, Im c_x, Re c_y, Im c_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeLayout {
    n_cut: usize,
    modes: Vec<[i64; 2]>,
}

impl ModeLayout {
    pub fn new(n_cut: usize) -> Self {
        Self {
            n_cut,
            modes: half_plane_shells(n_cut),
        }
    }

    pub fn modes(&self) -> &[[i64; 2]] {
        &self.modes
    }

    pub fn per_layer(&self) -> usize {
        2 + 4 * self.modes.len()
    }

    pub fn len(&self) -> usize {
        2 * self.per_layer()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn offset(&self, j: Layer) -> usize {
        j.index() * self.per_layer()
    }

    /// Position of `(layer, mode, component, imaginary?)` in the vector.
    pub fn index(&self, j: Layer, mode: usize, component: usize, imaginary: bool) -> usize {
        self.offset(j) + 2 + 4 * mode + 2 * component + usize::from(imaginary)
    }

    fn layer_fields<'f>(&self, u: &'f DisplacementField) -> Result<[&'f FourierField; 2]> {
        let get = |j: Layer| {
            u.layer_field(j).ok_or_else(|| {
                Error::InvalidInput(format!("layer {j} has sublattice-dependent displacements"))
            })
        };
        let f = [get(Layer::One)?, get(Layer::Two)?];
        for (j, field) in Layer::BOTH.iter().zip(f) {
            if field.max_index() > self.n_cut as i64 {
                return Err(Error::InvalidInput(format!(
                    "initial field of layer {j} has modes beyond the cutoff {}",
                    self.n_cut
                )));
            }
        }
        Ok(f)
    }

    pub fn pack(&self, u: &DisplacementField) -> Result<Vec<f64>> {
        let fields = self.layer_fields(u)?;
        let mut x = vec![0.0; self.len()];
        for j in Layer::BOTH {
            let f = fields[j.index()];
            let o = self.offset(j);
            x[o] = f.mean()[0];
            x[o + 1] = f.mean()[1];
            for (m, n) in self.modes.iter().enumerate() {
                let c = f.coefficient(*n);
                for k in 0..2 {
                    x[self.index(j, m, k, false)] = c[k].re;
                    x[self.index(j, m, k, true)] = c[k].im;
                }
            }
        }
        Ok(x)
    }
}

/// Frozen out-of-plane data of one layer.
#[derive(Clone, Debug)]
struct Vertical {
    mean: f64,
    coeffs: Vec<Complex64>,
}

/// The discretised energy as a function of the coefficient vector.
pub struct RelaxProblem<'a> {
    geom: &'a BilayerGeometry,
    subl: &'a SublatticeSpec,
    model: InterlayerModel<'a>,
    moduli: [ElasticModuli; 2],
    layout: ModeLayout,
    vertical: [Vertical; 2],
    grid: usize,
    shift: [f64; 2],
}

/// Energy and gradient in coefficient space.
#[derive(Clone, Debug)]
pub struct CoefficientGradient {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub layout: ModeLayout,
}

impl<'a> RelaxProblem<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        geom: &'a BilayerGeometry,
        subl: &'a SublatticeSpec,
        v: &'a PairPotential,
        moduli: [ElasticModuli; 2],
        u0: &DisplacementField,
        n_cut: usize,
        grid: usize,
        settings: &InterlayerSettings,
    ) -> Result<Self> {
        for m in &moduli {
            m.validate()?;
        }
        let layout = ModeLayout::new(n_cut);
        let fields = layout.layer_fields(u0)?;
        let vertical = fields.map(|f| Vertical {
            mean: f.mean()[2],
            coeffs: layout.modes.iter().map(|n| f.coefficient(*n)[2]).collect(),
        });
        let model = InterlayerModel::new(geom, subl, v, settings, z_spread(u0))?;
        let g_min = layout
            .modes
            .iter()
            .map(|n| geom.moire_wavevector(*n).norm_squared())
            .fold(f64::INFINITY, f64::min);
        let shift = Layer::BOTH.map(|j| {
            if v.is_zero() {
                0.0
            } else {
                let m = &moduli[j.index()];
                2.0 * m.mu * g_min * m.area_factor(geom.cell_area(j))
            }
        });
        Ok(Self {
            geom,
            subl,
            model,
            moduli,
            layout,
            vertical,
            grid,
            shift,
        })
    }

    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    pub fn field(&self, x: &[f64]) -> DisplacementField {
        let bm: Mat2 = *self.geom.moire_reciprocal();
        let make = |j: Layer| {
            let o = self.layout.offset(j);
            let vz = &self.vertical[j.index()];
            let modes = self
                .layout
                .modes
                .iter()
                .enumerate()
                .map(|(m, n)| {
                    let c = |k: usize| {
                        Complex64::new(
                            x[self.layout.index(j, m, k, false)],
                            x[self.layout.index(j, m, k, true)],
                        )
                    };
                    (*n, [c(0), c(1), vz.coeffs[m]])
                })
                .collect();
            FourierField::from_parts(bm, Vec3::new(x[o], x[o + 1], vz.mean), modes)
        };
        DisplacementField::uniform(self.subl, [make(Layer::One), make(Layer::Two)])
    }

    fn elastic(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let mut e = 0.0;
        let mut grad = grad;
        for j in Layer::BOTH {
            let m = &self.moduli[j.index()];
            let f = m.area_factor(self.geom.cell_area(j));
            for (k, n) in self.layout.modes.iter().enumerate() {
                let g = self.geom.moire_wavevector(*n);
                for imag in [false, true] {
                    let a = Vec2::new(
                        x[self.layout.index(j, k, 0, imag)],
                        x[self.layout.index(j, k, 1, imag)],
                    );
                    let ga = g.dot(&a);
                    e += f
                        * ((m.lambda + m.mu) * ga * ga
                            + m.mu * g.norm_squared() * a.norm_squared());
                    if let Some(buf) = grad.as_deref_mut() {
                        let d = (g * ((m.lambda + m.mu) * ga) + a * (m.mu * g.norm_squared()))
                            * (2.0 * f);
                        buf[self.layout.index(j, k, 0, imag)] += d[0];
                        buf[self.layout.index(j, k, 1, imag)] += d[1];
                    }
                }
            }
        }
        e
    }

    fn project(&self, j: Layer, at: Vec2, g: [f64; 2], buf: &mut [f64]) {
        let o = self.layout.offset(j);
        buf[o] += g[0];
        buf[o + 1] += g[1];
        let t = PhaseTable::new(self.geom.moire_reciprocal(), at, self.layout.n_cut as i64);
        for (m, n) in self.layout.modes.iter().enumerate() {
            let e = t.phase(*n);
            let b = o + 2 + 4 * m;
            buf[b] += 2.0 * g[0] * e.re;
            buf[b + 1] -= 2.0 * g[0] * e.im;
            buf[b + 2] += 2.0 * g[1] * e.re;
            buf[b + 3] -= 2.0 * g[1] * e.im;
        }
    }

    /// Adds `Σ_k g_k ∂u(anchor + s_k)/∂x` for the partner forces `g_k`
    /// gathered per translation `s_k`; `rows` holds `e^{iG_n·s_k}`.
    fn project_offsets(
        &self,
        j: Layer,
        anchor: Vec2,
        forces: &[[f64; 2]],
        rows: &[Complex64],
        buf: &mut [f64],
    ) {
        let m = self.layout.modes.len();
        let mut sx = vec![Complex64::new(0.0, 0.0); m];
        let mut sy = vec![Complex64::new(0.0, 0.0); m];
        let mut total = [0.0; 2];
        for (k, g) in forces.iter().enumerate() {
            if g[0] == 0.0 && g[1] == 0.0 {
                continue;
            }
            total[0] += g[0];
            total[1] += g[1];
            for ((x, y), e) in sx
                .iter_mut()
                .zip(sy.iter_mut())
                .zip(&rows[k * m..(k + 1) * m])
            {
                *x += e * g[0];
                *y += e * g[1];
            }
        }
        let o = self.layout.offset(j);
        buf[o] += total[0];
        buf[o + 1] += total[1];
        let t = PhaseTable::new(
            self.geom.moire_reciprocal(),
            anchor,
            self.layout.n_cut as i64,
        );
        for (i, n) in self.layout.modes.iter().enumerate() {
            let p = t.phase(*n);
            let (ex, ey) = (p * sx[i], p * sy[i]);
            let b = o + 2 + 4 * i;
            buf[b] += 2.0 * ex.re;
            buf[b + 1] -= 2.0 * ex.im;
            buf[b + 2] += 2.0 * ey.re;
            buf[b + 3] -= 2.0 * ey.im;
        }
    }

    /// `½ Σ_j e^(inter)_j` on the quadrature grid, optionally with gradient.
    fn interlayer(&self, u: &DisplacementField, want_grad: bool) -> (f64, Vec<f64>) {
        let len = self.layout.len();
        if self.model.potential().is_zero() {
            return (0.0, vec![0.0; len]);
        }
        let nodes = self.grid * self.grid;
        let wins = [
            self.model.window(Layer::One, u),
            self.model.window(Layer::Two, u),
        ];
        let rows: Vec<Vec<Complex64>> = if want_grad {
            wins.iter()
                .map(|win| {
                    win.offsets()
                        .iter()
                        .flat_map(|s| {
                            let t = PhaseTable::new(
                                self.geom.moire_reciprocal(),
                                *s,
                                self.layout.n_cut as i64,
                            );
                            self.layout.modes.iter().map(move |n| t.phase(*n))
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let out = ordered_vec_sum(2 * nodes, len + 1, |idx, buf| {
            let j = if idx < nodes { Layer::One } else { Layer::Two };
            let win = &wins[j.index()];
            let w = 1.0 / (4.0 * self.geom.cell_area(j) * nodes as f64);
            let xi = moire_node(self.geom, self.grid, idx % nodes);
            let y = self.model.paired_point(j, xi);
            if want_grad {
                let mut own = [0.0; 2];
                let mut forces = vec![[0.0; 2]; win.offsets().len()];
                let mut anchor = None;
                let e = self.model.site_terms(j, u, xi, y, win, &mut |t: PairTerm| {
                    own[0] += t.grad[0];
                    own[1] += t.grad[1];
                    forces[t.offset][0] -= w * t.grad[0];
                    forces[t.offset][1] -= w * t.grad[1];
                    anchor.get_or_insert(t.other_at - win.offsets()[t.offset]);
                });
                buf[len] += w * e;
                self.project(j, xi, [w * own[0], w * own[1]], buf);
                if let Some(a) = anchor {
                    self.project_offsets(j.other(), a, &forces, &rows[j.index()], buf);
                }
            } else {
                buf[len] += w * self.model.site_value(j, u, xi, y, win);
            }
        });
        let mut g = out;
        let e = g.pop().unwrap_or(0.0);
        (e, g)
    }

    /// Bound on the largest in-plane displacement the direction `d` produces
    /// per unit step.
    pub fn displacement_bound(&self, d: &[f64]) -> f64 {
        Layer::BOTH
            .iter()
            .map(|&j| {
                let o = self.layout.offset(j);
                let mut b = d[o].hypot(d[o + 1]);
                for m in 0..self.layout.modes.len() {
                    let c = &d[o + 2 + 4 * m..o + 6 + 4 * m];
                    b += 2.0 * c.iter().map(|x| x * x).sum::<f64>().sqrt();
                }
                b
            })
            .fold(0.0, f64::max)
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.elastic(x, None) + self.interlayer(&self.field(x), false).0
    }

    pub fn energy_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (ei, mut g) = self.interlayer(&self.field(x), true);
        let ee = self.elastic(x, Some(&mut g));
        (ee + ei, g)
    }

    /// Applies the inverse of the elastic Hessian plus a diagonal shift.
    pub fn precondition(&self, g: &[f64]) -> Vec<f64> {
        let mut d = g.to_vec();
        for j in Layer::BOTH {
            let m = &self.moduli[j.index()];
            let f = m.area_factor(self.geom.cell_area(j));
            let s = self.shift[j.index()];
            let o = self.layout.offset(j);
            for k in 0..2 {
                d[o + k] = if s > 0.0 { g[o + k] / s } else { 0.0 };
            }
            for (k, n) in self.layout.modes.iter().enumerate() {
                let q = self.geom.moire_wavevector(*n);
                let h = (q * q.transpose() * (m.lambda + m.mu)
                    + Mat2::identity() * (m.mu * q.norm_squared()))
                    * (2.0 * f)
                    + Mat2::identity() * s;
                let inv = h.try_inverse().unwrap_or_else(Mat2::zeros);
                for imag in [false, true] {
                    let (a, b) = (
                        self.layout.index(j, k, 0, imag),
                        self.layout.index(j, k, 1, imag),
                    );
                    let r = inv * Vec2::new(g[a], g[b]);
                    d[a] = r[0];
                    d[b] = r[1];
                }
            }
        }
        d
    }
}

/// Gradient of the relaxation energy with respect to the real and imaginary
/// parts of all in-plane coefficients of `u`.
#[allow(clippy::too_many_arguments)]
pub fn energy_gradient(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u: &DisplacementField,
    v: &PairPotential,
    moduli: [ElasticModuli; 2],
    n_cut: usize,
    grid: usize,
    settings: &InterlayerSettings,
) -> Result<CoefficientGradient> {
    let p = RelaxProblem::new(geom, subl, v, moduli, u, n_cut, grid, settings)?;
    let x = p.layout.pack(u)?;
    let (energy, gradient) = p.energy_and_gradient(&x);
    Ok(CoefficientGradient {
        energy,
        gradient,
        layout: p.layout.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelaxStep {
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Clone, Debug)]
pub struct RelaxTrace {
    pub steps: Vec<RelaxStep>,
    pub field: DisplacementField,
    pub converged: bool,
    /// `2 sin(θ/2)` when requested.
    pub epsilon: Option<f64>,
}

impl RelaxTrace {
    pub fn final_energy(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.energy)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quasi-Newton direction from stored `(s, y, 1/sᵀy)` pairs. The initial
/// inverse Hessian is the preconditioner rescaled by `sᵀy / yᵀP⁻¹y` of the
/// newest pair.
fn two_loop(p: &RelaxProblem, pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let mut r = p.precondition(&q);
    if let Some((s, y, _)) = pairs.back() {
        let py = p.precondition(y);
        let gamma = dot(s, y) / dot(y, &py);
        r.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Preconditioned gradient descent with Armijo backtracking.
#[allow(clippy::too_many_arguments)]
pub fn relax(
    geom: &BilayerGeometry,
    subl: &SublatticeSpec,
    u0: &DisplacementField,
    v: &PairPotential,
    moduli: [ElasticModuli; 2],
    config: &RelaxConfig,
    settings: &InterlayerSettings,
) -> Result<RelaxTrace> {
    config.validate()?;
    let p = RelaxProblem::new(
        geom,
        subl,
        v,
        moduli,
        u0,
        config.n_cut,
        config.grid,
        settings,
    )?;
    let mut x = p.layout.pack(u0)?;
    let (mut e, mut g) = p.energy_and_gradient(&x);
    let mut steps = vec![RelaxStep {
        iter: 0,
        energy: e,
        grad_norm: norm(&g),
        step: 0.0,
    }];
    let mut converged = norm(&g) < config.grad_tol;
    let mut trial = 1.0f64;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iter = 0;
    while !converged && iter < config.max_iterations {
        iter += 1;
        let descent = |g: &[f64]| -> Vec<f64> { p.precondition(g).iter().map(|v| -v).collect() };
        let mut d = match config.method {
            Method::Descent => descent(&g),
            Method::Lbfgs => two_loop(&p, &pairs, &g),
        };
        let mut slope = dot(&g, &d);
        if config.method == Method::Lbfgs && !(slope < 0.0) {
            pairs.clear();
            d = descent(&g);
            slope = dot(&g, &d);
        }
        if !(slope < 0.0) {
            return Err(Error::LineSearchStalled {
                iteration: iter,
                min_step: config.min_step,
            });
        }
        if config.method == Method::Lbfgs {
            trial = 1.0;
        }
        let reach = p.displacement_bound(&d);
        let mut t = if reach * trial > config.max_displacement_angstrom {
            config.max_displacement_angstrom / reach
        } else {
            trial
        };
        let slack = config.armijo_slack * (1.0 + e.abs());
        let (x_new, e_new) = loop {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let ec = p.energy(&cand);
            if ec <= e + config.armijo * t * slope + slack {
                break (cand, ec);
            }
            t *= config.backtrack;
            if t < config.min_step {
                return Err(Error::LineSearchStalled {
                    iteration: iter,
                    min_step: config.min_step,
                });
            }
        };
        let (e2, g2) = p.energy_and_gradient(&x_new);
        if config.method == Method::Lbfgs {
            let sv: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g2.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&sv, &yv);
            if sy > 1e-12 * norm(&sv) * norm(&yv) {
                pairs.push_back((sv, yv, 1.0 / sy));
                if pairs.len() > config.memory {
                    pairs.pop_front();
                }
            }
        }
        x = x_new;
        debug_assert!((e2 - e_new).abs() <= 1e-9 * (1.0 + e_new.abs()));
        e = e2;
        g = g2;
        trial = (2.0 * t).min(1.0);
        let gn = norm(&g);
        steps.push(RelaxStep {
            iter,
            energy: e,
            grad_norm: gn,
            step: t,
        });
        converged = gn < config.grad_tol;
    }
    Ok(RelaxTrace {
        steps,
        field: p.field(&x),
        converged,
        epsilon: config.report_epsilon.then(|| epsilon(geom)),
    })
}

/// `ε = 2 sin(θ/2)`.
pub fn epsilon(geom: &BilayerGeometry) -> f64 {
    2.0 * (0.5 * geom.theta()).sin()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileSample {
    pub t: f64,
    pub x: [f64; 2],
    pub disregistry: [f64; 2],
}

/// Samples `D_{1→2}x + u_1(x) − u_2(x)` (in-plane, first sublattice of each
/// layer) at `k` equally spaced points from `a` to `b`.
pub fn domain_wall_profile(
    geom: &BilayerGeometry,
    u: &DisplacementField,
    a: Vec2,
    b: Vec2,
    k: usize,
) -> Result<Vec<ProfileSample>> {
    if k < 2 {
        return Err(Error::InvalidInput(
            "profile needs at least 2 samples".into(),
        ));
    }
    let d = geom.disregistry_matrix(Layer::One);
    Ok((0..k)
        .map(|i| {
            let t = i as f64 / (k - 1) as f64;
            let x = a + (b - a) * t;
            let w = d * x + (u.eval(Layer::One, 0, x) - u.eval(Layer::Two, 0, x)).xy();
            ProfileSample {
                t,
                x: [x[0], x[1]],
                disregistry: [w[0], w[1]],
            }
        })
        .collect())
}

/// Largest `|Δ disregistry| / |Δ x|` between consecutive samples.
pub fn max_profile_slope(samples: &[ProfileSample]) -> f64 {
    samples
        .windows(2)
        .filter_map(|w| {
            let dx = Vec2::new(w[1].x[0] - w[0].x[0], w[1].x[1] - w[0].x[1]).norm();
            let dd = Vec2::new(
                w[1].disregistry[0] - w[0].disregistry[0],
                w[1].disregistry[1] - w[0].disregistry[1],
            )
            .norm();
            (dx > 0.0).then(|| dd / dx)
        })
        .fold(0.0, f64::max)
}
