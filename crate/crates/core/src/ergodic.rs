//! Lattice averages of moire-periodic observables.
//!
//! For a layer lattice `R_j` truncated to `A_j[-N,N]^2`, the average of a
//! plane wave `e^{iG·x}` is the product Dirichlet kernel `δ_N(G)`. Finite
//! averages of moire-periodic observables converge to their cell averages,
//! which are computed here with the periodic trapezoid rule.

use crate::lattice::{BilayerGeometry, Layer, Mat2, Vec2};
use crate::parallel::ordered_sum;
use num_complex::Complex64;
use std::f64::consts::PI;

const POLE_SINE: f64 = 1e-9;

/// Default quadrature resolution per lattice direction.
pub const DEFAULT_GRID: usize = 128;

fn dirichlet_factor(t: f64, m: f64) -> f64 {
    let t = t - 2.0 * PI * (t / (2.0 * PI)).round();
    let s = (0.5 * t).sin();
    if s.abs() < POLE_SINE && (m * t).abs() < 1e-3 {
        return 1.0 - (m * m - 1.0) * t * t / 24.0;
    }
    (0.5 * m * t).sin() / (m * s)
}

/// `δ_N(G) = Π_ℓ sin((2N+1) t_ℓ / 2) / ((2N+1) sin(t_ℓ / 2))` with `t = A_j^T G`.
pub fn dirichlet_kernel(basis: &Mat2, g: Vec2, n: usize) -> f64 {
    let t = basis.transpose() * g;
    let m = (2 * n + 1) as f64;
    dirichlet_factor(t[0], m) * dirichlet_factor(t[1], m)
}

/// A moire-periodic function `f: R^2 → C`.
///
/// Implementations must be pure so that averages can evaluate them from
/// several threads at once.
pub trait PeriodicObservable: Sync {
    fn eval(&self, x: Vec2) -> Complex64;

    /// Known Fourier coefficients `(n, f̂(B_M n))`, if any.
    fn coefficients(&self) -> Option<&[([i64; 2], Complex64)]> {
        None
    }
}

impl<F> PeriodicObservable for F
where
    F: Fn(Vec2) -> Complex64 + Sync,
{
    fn eval(&self, x: Vec2) -> Complex64 {
        self(x)
    }
}

/// A function `h(x, y)` periodic in `x` over `R_M` and in `y` over `R_{3-j}`.
pub trait DoubleObservable: Sync {
    fn eval(&self, x: Vec2, y: Vec2) -> Complex64;
}

impl<F> DoubleObservable for F
where
    F: Fn(Vec2, Vec2) -> Complex64 + Sync,
{
    fn eval(&self, x: Vec2, y: Vec2) -> Complex64 {
        self(x, y)
    }
}

/// A finite moire Fourier series `Σ c_n e^{i (B_M n)·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    bm: Mat2,
    modes: Vec<([i64; 2], Complex64)>,
}

impl FourierSeries {
    pub fn new(geom: &BilayerGeometry, modes: Vec<([i64; 2], Complex64)>) -> Self {
        Self {
            bm: *geom.moire_reciprocal(),
            modes,
        }
    }

    pub fn plane_wave(geom: &BilayerGeometry, n: [i64; 2]) -> Self {
        Self::new(geom, vec![(n, Complex64::new(1.0, 0.0))])
    }

    pub fn modes(&self) -> &[([i64; 2], Complex64)] {
        &self.modes
    }

    pub fn mean(&self) -> Complex64 {
        self.modes
            .iter()
            .filter(|(n, _)| *n == [0, 0])
            .map(|(_, c)| *c)
            .sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.modes.iter().all(|(n, c)| {
            let partner: Complex64 = self
                .modes
                .iter()
                .filter(|(m, _)| m[0] == -n[0] && m[1] == -n[1])
                .map(|(_, d)| *d)
                .sum();
            (partner - c.conj()).norm() <= tol
        })
    }
}

impl PeriodicObservable for FourierSeries {
    fn eval(&self, x: Vec2) -> Complex64 {
        self.modes
            .iter()
            .map(|(n, c)| {
                let g = self.bm * Vec2::new(n[0] as f64, n[1] as f64);
                c * Complex64::from_polar(1.0, g.dot(&x))
            })
            .sum()
    }

    fn coefficients(&self) -> Option<&[([i64; 2], Complex64)]> {
        Some(&self.modes)
    }
}

fn lattice_site(basis: &Mat2, n: usize, idx: usize) -> Vec2 {
    let side = 2 * n + 1;
    let i = (idx / side) as f64 - n as f64;
    let k = (idx % side) as f64 - n as f64;
    basis * Vec2::new(i, k)
}

/// `(2N+1)^{-2} Σ_{R ∈ A_j[-N,N]^2} f(moire_frac(R + γ))`.
pub fn ergodic_average<F: PeriodicObservable + ?Sized>(
    geom: &BilayerGeometry,
    j: Layer,
    f: &F,
    n: usize,
    offset: Vec2,
) -> Complex64 {
    let side = 2 * n + 1;
    let basis = geom.basis(j);
    let total = ordered_sum(side * side, Complex64::new(0.0, 0.0), |idx| {
        let r = lattice_site(basis, n, idx);
        f.eval(geom.moire_frac(r + offset).frac)
    });
    total / (side * side) as f64
}

/// `(2N+1)^{-2} Σ_R h(moire_frac(R + ω_M), layer_frac(R + ω_{3-j}, 3-j))`.
pub fn ergodic_average_double<H: DoubleObservable + ?Sized>(
    geom: &BilayerGeometry,
    j: Layer,
    h: &H,
    n: usize,
    omega_m: Vec2,
    omega_other: Vec2,
) -> Complex64 {
    let side = 2 * n + 1;
    let basis = geom.basis(j);
    let total = ordered_sum(side * side, Complex64::new(0.0, 0.0), |idx| {
        let r = lattice_site(basis, n, idx);
        let x = geom.moire_frac(r + omega_m).frac;
        let y = geom.layer_frac(r + omega_other, j.other()).frac;
        h.eval(x, y)
    });
    total / (side * side) as f64
}

/// Quadrature nodes `A_M (a/n, b/n)` of the periodic trapezoid rule.
pub fn moire_node(geom: &BilayerGeometry, grid: usize, idx: usize) -> Vec2 {
    let a = (idx / grid) as f64 / grid as f64;
    let b = (idx % grid) as f64 / grid as f64;
    geom.moire_basis() * Vec2::new(a, b)
}

/// Periodic trapezoid average of `f` over the moire cell.
pub fn limit_average<F: PeriodicObservable + ?Sized>(
    geom: &BilayerGeometry,
    f: &F,
    grid: usize,
) -> Complex64 {
    let total = ordered_sum(grid * grid, Complex64::new(0.0, 0.0), |idx| {
        f.eval(moire_node(geom, grid, idx))
    });
    total / (grid * grid) as f64
}

/// Cell average of `x ↦ h(x, D_{j→3-j}(x − ω_M) + ω_{3-j})`.
pub fn limit_average_double<H: DoubleObservable + ?Sized>(
    geom: &BilayerGeometry,
    j: Layer,
    h: &H,
    omega_m: Vec2,
    omega_other: Vec2,
    grid: usize,
) -> Complex64 {
    let d = geom.disregistry_matrix(j);
    let total = ordered_sum(grid * grid, Complex64::new(0.0, 0.0), |idx| {
        let x = moire_node(geom, grid, idx);
        h.eval(x, d * (x - omega_m) + omega_other)
    });
    total / (grid * grid) as f64
}

/// Samples `u(moire_frac(γ + R))` for `R ∈ A_j[-N,N]^2`, row-major in the
/// lattice indices.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSamples {
    pub layer: Layer,
    pub n: usize,
    pub offset: Vec2,
    pub values: Vec<Complex64>,
}

impl LatticeSamples {
    pub fn collect<F: PeriodicObservable + ?Sized>(
        geom: &BilayerGeometry,
        j: Layer,
        u: &F,
        n: usize,
        offset: Vec2,
    ) -> Self {
        let side = 2 * n + 1;
        let basis = geom.basis(j);
        let values = (0..side * side)
            .map(|idx| u.eval(geom.moire_frac(lattice_site(basis, n, idx) + offset).frac))
            .collect();
        Self {
            layer: j,
            n,
            offset,
            values,
        }
    }
}

/// `(2N+1)^{-2} Σ_R e^{-iG·(γ+R)} u(moire_frac(γ+R))`.
pub fn reconstruct_fourier(geom: &BilayerGeometry, samples: &LatticeSamples, g: Vec2) -> Complex64 {
    let side = 2 * samples.n + 1;
    assert_eq!(
        samples.values.len(),
        side * side,
        "sample count does not match N"
    );
    let basis = geom.basis(samples.layer);
    let total = ordered_sum(side * side, Complex64::new(0.0, 0.0), |idx| {
        let p = lattice_site(basis, samples.n, idx) + samples.offset;
        samples.values[idx] * Complex64::from_polar(1.0, -g.dot(&p))
    });
    total / (side * side) as f64
}
