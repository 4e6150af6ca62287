//! Dispatch of validated experiments to the library and artifact emission.

use crate::config::{ExperimentConfig, Kind, Observable, Params};
use crate::error::CliError;
use moire_core::diophantine::{
    diophantine_scan_twist, error_prefactor, fourier_decay_sup, pair_constant_surrogate,
    DiophantineScan,
};
use moire_core::energy::{pair_error_constant, InterlayerModel, Misfit};
use moire_core::ergodic::{dirichlet_kernel, ergodic_average, moire_node, FourierSeries};
use moire_core::relax::{domain_wall_profile, max_profile_slope};
use moire_core::{
    fit_rate, lattice, relax, total_energy, BilayerGeometry, ConvergenceRecord, DisplacementField,
    FourierField, Layer, Mat2, PairPotential, ProbeGrid, RelaxConfig, SublatticeSpec, Vec2,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;

/// Files written by one run and the summary document.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Full-precision decimal rendering used in every CSV cell.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct Sink {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Sink {
    fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

fn rows(m: &Mat2) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn layer(n: u8) -> Layer {
    Layer::from_number(n).expect("validated layer")
}

struct Built {
    geom: BilayerGeometry,
    subl: SublatticeSpec,
}

impl Built {
    fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let (geom, subl) = cfg.geometry.build()?;
        Ok(Self { geom, subl })
    }

    fn displacement(&self, cfg: &ExperimentConfig) -> Result<DisplacementField, CliError> {
        match &cfg.displacement {
            Some(f) => Ok(f.build(&self.geom, &self.subl)?),
            None => Ok(DisplacementField::zero(&self.geom, &self.subl)),
        }
    }
}

fn potential(cfg: &ExperimentConfig) -> Result<PairPotential, CliError> {
    let p = cfg.potential.as_ref().expect("validated potential");
    Ok(p.build(&cfg.potential_dir)?)
}

/// Runs the experiment and writes its artifacts plus `summary.json` into
/// `cfg.output_dir`. Outputs depend only on the config and its inputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let mut sink = Sink {
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let result = match (&cfg.params, cfg.kind) {
        (Params::Geometry(p), Kind::Geometry) => geometry(cfg, p, &mut sink)?,
        (Params::Dirichlet(p), Kind::Dirichlet) => dirichlet(cfg, p, &mut sink)?,
        (Params::Diophantine(p), Kind::Diophantine) => diophantine(cfg, p, &mut sink)?,
        (Params::Converge(p), Kind::Converge) => converge(cfg, p, &mut sink)?,
        (Params::Misfit(p), Kind::Misfit) => misfit(cfg, p, &mut sink)?,
        (Params::Energy(p), Kind::Energy) => energy(cfg, p, &mut sink)?,
        (Params::Relax(p), Kind::Relax) => relaxation(cfg, p, &mut sink)?,
        (Params::Profile(p), Kind::Profile) => profile(cfg, p, &mut sink)?,
        _ => {
            return Err(CliError::Validation {
                field: "params".into(),
                line: None,
                message: format!("parameters do not belong to a `{}` experiment", cfg.kind),
            })
        }
    };
    let names: Vec<String> = sink
        .written
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .chain(std::iter::once(SUMMARY_FILE.to_string()))
        .collect();
    let summary = json!({
        "kind": cfg.kind,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "inputs": cfg.inputs,
        "geometry": cfg.geometry,
        "settings": cfg.settings,
        "moduli": cfg.moduli,
        "params": cfg.params,
        "outputs": names,
        "result": result,
    });
    sink.json(SUMMARY_FILE, &summary)?;
    Ok(RunReport {
        outputs: sink.written,
        summary,
    })
}

#[derive(Serialize)]
struct GeometryReport {
    theta_deg: f64,
    q: f64,
    reference_basis: [[f64; 2]; 2],
    layer_bases: [[[f64; 2]; 2]; 2],
    reciprocal_bases: [[[f64; 2]; 2]; 2],
    moire_basis: [[f64; 2]; 2],
    moire_reciprocal: [[f64; 2]; 2],
    cell_areas_angstrom2: [f64; 2],
    moire_area_angstrom2: f64,
    moire_scale: f64,
    commensuration: lattice::CommensurationVerdict,
}

fn geometry(
    cfg: &ExperimentConfig,
    p: &crate::config::GeometryParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let g = &b.geom;
    let report = GeometryReport {
        theta_deg: g.theta().to_degrees(),
        q: g.q(),
        reference_basis: rows(g.reference_basis()),
        layer_bases: [rows(g.basis(Layer::One)), rows(g.basis(Layer::Two))],
        reciprocal_bases: [
            rows(g.reciprocal(Layer::One)),
            rows(g.reciprocal(Layer::Two)),
        ],
        moire_basis: rows(g.moire_basis()),
        moire_reciprocal: rows(g.moire_reciprocal()),
        cell_areas_angstrom2: [g.cell_area(Layer::One), g.cell_area(Layer::Two)],
        moire_area_angstrom2: g.moire_area(),
        moire_scale: g.moire_scale()?,
        commensuration: g.commensuration_scan(p.commensuration_n_max, p.commensuration_tol),
    };
    sink.json("geometry.json", &report)?;
    Ok(serde_json::to_value(&report)?)
}

fn direct_lattice_sum(basis: &Mat2, g: Vec2, n: usize) -> Complex64 {
    let n = n as i64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in -n..=n {
        for k in -n..=n {
            let r = basis * Vec2::new(i as f64, k as f64);
            total += Complex64::from_polar(1.0, g.dot(&r));
        }
    }
    total / ((2 * n + 1) * (2 * n + 1)) as f64
}

fn dirichlet(
    cfg: &ExperimentConfig,
    p: &crate::config::DirichletParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let j = layer(p.layer);
    let basis = b.geom.basis(j);
    let waves: Vec<Vec2> = p
        .moire_modes
        .iter()
        .map(|n| b.geom.moire_wavevector(*n))
        .chain(
            p.wavevectors_per_angstrom
                .iter()
                .map(|g| Vec2::new(g[0], g[1])),
        )
        .collect();
    let mut out = Vec::new();
    let mut worst: f64 = 0.0;
    for g in &waves {
        for &n in &p.n_list {
            let k = dirichlet_kernel(basis, *g, n);
            let d = direct_lattice_sum(basis, *g, n);
            let err = (d - k).norm();
            worst = worst.max(err);
            out.push(vec![
                fmt_f64(g[0]),
                fmt_f64(g[1]),
                n.to_string(),
                fmt_f64(k),
                fmt_f64(d.re),
                fmt_f64(d.im),
                fmt_f64(err),
            ]);
        }
    }
    sink.csv(
        "dirichlet.csv",
        &[
            "g_x",
            "g_y",
            "N",
            "kernel",
            "direct_re",
            "direct_im",
            "abs_error",
        ],
        out,
    )?;
    Ok(json!({ "layer": p.layer, "wavevectors": waves.len(), "max_abs_error": worst }))
}

fn scan_for(cfg: &ExperimentConfig, sigma: f64, n_max: usize) -> Result<DiophantineScan, CliError> {
    let g = &cfg.geometry;
    let a = Mat2::new(g.a[0][0], g.a[0][1], g.a[1][0], g.a[1][1]);
    Ok(diophantine_scan_twist(
        &a,
        g.theta_deg.to_radians(),
        g.q,
        sigma,
        n_max,
    )?)
}

fn diophantine(
    cfg: &ExperimentConfig,
    p: &crate::config::DiophantineParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let scan = scan_for(cfg, p.sigma, p.n_max)?;
    sink.json("diophantine.json", &scan)?;
    Ok(json!({
        "k_hat": scan.k_hat,
        "argmin": scan.argmin,
        "witness": scan.witness,
        "diophantine": scan.k_hat > 0.0,
    }))
}

fn random_series(
    geom: &BilayerGeometry,
    half_width: usize,
    amplitude: f64,
    seed: u64,
) -> FourierSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = half_width as i64;
    let mut modes = Vec::new();
    for n1 in -h..=h {
        for n2 in -h..=h {
            if n1 > 0 || (n1 == 0 && n2 > 0) {
                let c = Complex64::new(
                    rng.random_range(-amplitude..=amplitude),
                    rng.random_range(-amplitude..=amplitude),
                );
                modes.push(([n1, n2], c));
                modes.push(([-n1, -n2], c.conj()));
            } else if n1 == 0 && n2 == 0 {
                modes.push((
                    [0, 0],
                    Complex64::new(rng.random_range(-amplitude..=amplitude), 0.0),
                ));
            }
        }
    }
    FourierSeries::new(geom, modes)
}

const PROBE: ProbeGrid = ProbeGrid {
    extent: 20.0,
    n: 64,
    nz: 3,
};

fn converge(
    cfg: &ExperimentConfig,
    p: &crate::config::ConvergeParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let g = &b.geom;
    let j = layer(p.layer);
    let offset = Vec2::new(p.offset_angstrom[0], p.offset_angstrom[1]);
    let mut records: Vec<(ConvergenceRecord, Complex64, Complex64)> = Vec::new();
    let mut bound_label = None;
    match &p.observable {
        Observable::PlaneWave { .. } | Observable::RandomFourier { .. } => {
            let f = match &p.observable {
                Observable::PlaneWave { mode } => FourierSeries::plane_wave(g, *mode),
                Observable::RandomFourier {
                    half_width,
                    amplitude,
                } => random_series(g, *half_width, *amplitude, cfg.seed),
                Observable::InterlayerEnergy { .. } => unreachable!(),
            };
            let reference = f.mean();
            let prefactor = match &p.bound {
                Some(bp) => {
                    let scan = scan_for(cfg, bp.sigma, bp.n_max)?;
                    let sup = fourier_decay_sup(
                        g,
                        f.modes().iter().map(|(n, c)| (n, c.norm())),
                        bp.sigma,
                        bp.s,
                    );
                    Some(error_prefactor(&scan, bp.s, sup)?)
                }
                None => None,
            };
            bound_label = prefactor.as_ref().map(|pf| pf.label);
            for &n in &p.n_list {
                let value = ergodic_average(g, j, &f, n, offset);
                let bound = prefactor.as_ref().map(|pf| pf.bound(n));
                let r = ConvergenceRecord {
                    n,
                    value: value.re,
                    reference: reference.re,
                    abs_error: (value - reference).norm(),
                    theoretical_bound: bound,
                };
                records.push((r, value, reference));
            }
        }
        Observable::InterlayerEnergy {
            limit_grid,
            limit_tol,
        } => {
            let v = potential(cfg)?;
            let u = b.displacement(cfg)?;
            let model = InterlayerModel::for_field(g, &b.subl, &v, &cfg.settings, &u)?;
            let reference = model.energy_limit(j, &u, *limit_grid, *limit_tol)?.value;
            let constant = match &p.bound {
                Some(bp) => {
                    let pc = pair_constant_surrogate(g, bp.n_max)?;
                    bound_label = Some(pc.label);
                    Some(pair_error_constant(
                        g,
                        &b.subl,
                        &u,
                        &v,
                        &pc,
                        cfg.settings.z_offset_angstrom,
                        &PROBE,
                    )?)
                }
                None => None,
            };
            for &n in &p.n_list {
                let value = model.energy_n(j, &u, n)?;
                let bound = constant.map(|c| c / (2 * n + 1) as f64);
                let r = ConvergenceRecord::new(n, value, reference, bound);
                records.push((
                    r,
                    Complex64::new(value, 0.0),
                    Complex64::new(reference, 0.0),
                ));
            }
        }
    }
    sink.csv(
        "convergence.csv",
        &[
            "N",
            "value_re",
            "value_im",
            "reference_re",
            "reference_im",
            "abs_error",
            "bound",
        ],
        records.iter().map(|(r, v, re)| {
            vec![
                r.n.to_string(),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(re.re),
                fmt_f64(re.im),
                fmt_f64(r.abs_error),
                r.theoretical_bound.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )?;
    let plain: Vec<ConvergenceRecord> = records.iter().map(|(r, _, _)| *r).collect();
    let fit = match fit_rate(&plain) {
        Ok(f) => {
            json!({ "slope": f.slope, "intercept": f.intercept, "max_residual": f.max_residual, "points": f.points, "degenerate": false })
        }
        Err(e) => json!({ "slope": "-inf", "degenerate": true, "reason": e.to_string() }),
    };
    let within = plain
        .iter()
        .all(|r| r.theoretical_bound.is_none_or(|b| r.abs_error <= b));
    Ok(json!({ "fit": fit, "bound_label": bound_label, "errors_within_bound": within }))
}

fn misfit(
    cfg: &ExperimentConfig,
    p: &crate::config::MisfitParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let v = potential(cfg)?;
    let j = layer(p.layer);
    let phi = Misfit::new(&b.geom, &v, j, &cfg.settings)?;
    let samples = phi.map(p.grid_n);
    let (imax, max) = samples
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
            if s.value > acc.1 {
                (i, s.value)
            } else {
                acc
            }
        });
    let min = samples
        .iter()
        .map(|s| s.value)
        .fold(f64::INFINITY, f64::min);
    let other = b.geom.basis(j.other());
    let at = |a: f64, c: f64| phi.eval(other * Vec2::new(a, c));
    sink.csv(
        "misfit.csv",
        &["frac_a", "frac_b", "x", "y", "value"],
        samples.iter().map(|s| {
            vec![
                fmt_f64(s.frac[0]),
                fmt_f64(s.frac[1]),
                fmt_f64(s.x[0]),
                fmt_f64(s.x[1]),
                fmt_f64(s.value),
            ]
        }),
    )?;
    Ok(json!({
        "layer": p.layer,
        "truncation_radius_angstrom": phi.radius(),
        "max": { "value": max, "frac": samples[imax].frac },
        "min": min,
        "aa": at(0.0, 0.0),
        "ab": at(1.0 / 3.0, 1.0 / 3.0),
        "ba": at(2.0 / 3.0, 2.0 / 3.0),
    }))
}

fn energy(
    cfg: &ExperimentConfig,
    p: &crate::config::EnergyParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let v = potential(cfg)?;
    let u = b.displacement(cfg)?;
    let e = total_energy(
        &b.geom,
        &b.subl,
        &u,
        &v,
        &cfg.moduli,
        p.evaluation,
        p.elastic_grid,
        &cfg.settings,
    )?;
    sink.json("energy.json", &e)?;
    Ok(json!({ "total_mev_per_angstrom2": e.total, "inter_density": e.inter_density }))
}

fn relaxation(cfg: &ExperimentConfig, p: &RelaxConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let v = potential(cfg)?;
    let u0 = b.displacement(cfg)?;
    let t = relax(&b.geom, &b.subl, &u0, &v, cfg.moduli, p, &cfg.settings)?;
    sink.csv(
        "trace.csv",
        &["iter", "energy", "grad_norm", "step"],
        t.steps.iter().map(|s| {
            vec![
                s.iter.to_string(),
                fmt_f64(s.energy),
                fmt_f64(s.grad_norm),
                fmt_f64(s.step),
            ]
        }),
    )?;
    sink.json("displacement.json", &t.field.to_file(&b.subl))?;
    let last = t.steps.last().expect("trace has the initial state");
    Ok(json!({
        "converged": t.converged,
        "iterations": last.iter,
        "initial_energy": t.steps[0].energy,
        "final_energy": last.energy,
        "final_grad_norm": last.grad_norm,
        "epsilon": t.epsilon,
        "mean_displacement_angstrom": Layer::BOTH.map(|j| {
            let m = t.field.series(j, 0).mean();
            [m[0], m[1]]
        }),
        "max_in_plane_relaxation_angstrom": Layer::BOTH.map(|j| sampled_oscillation(&b.geom, t.field.series(j, 0), 64)),
    }))
}

/// Largest in-plane `|u(x) − ū|` over a `grid × grid` moiré cell mesh.
fn sampled_oscillation(geom: &BilayerGeometry, f: &FourierField, grid: usize) -> f64 {
    let mean = f.mean();
    (0..grid * grid)
        .map(|i| {
            let d = f.eval(moire_node(geom, grid, i)) - mean;
            d[0].hypot(d[1])
        })
        .fold(0.0, f64::max)
}

fn profile(
    cfg: &ExperimentConfig,
    p: &crate::config::ProfileParams,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    let b = Built::new(cfg)?;
    let u = b.displacement(cfg)?;
    let am = b.geom.moire_basis();
    let from = am * Vec2::new(p.from_moire[0], p.from_moire[1]);
    let to = am * Vec2::new(p.to_moire[0], p.to_moire[1]);
    let samples = domain_wall_profile(&b.geom, &u, from, to, p.samples)?;
    sink.csv(
        "profile.csv",
        &["t", "x", "y", "disregistry_x", "disregistry_y"],
        samples.iter().map(|s| {
            vec![
                fmt_f64(s.t),
                fmt_f64(s.x[0]),
                fmt_f64(s.x[1]),
                fmt_f64(s.disregistry[0]),
                fmt_f64(s.disregistry[1]),
            ]
        }),
    )?;
    Ok(json!({ "samples": samples.len(), "max_slope": max_profile_slope(&samples) }))
}
