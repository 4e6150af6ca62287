use moire_core::relax::{domain_wall_profile, energy_gradient, max_profile_slope};
use moire_core::*;
use num_complex::Complex64;

fn conj_field(geom: &BilayerGeometry, f: &FourierField) -> FourierField {
    let entries: Vec<_> = f
        .modes()
        .iter()
        .map(|(n, c)| (*n, [c[0].conj(), c[1].conj(), c[2].conj()]))
        .chain(std::iter::once(([0, 0], f.coefficient([0, 0]))))
        .collect();
    FourierField::from_coefficients(geom, &entries).unwrap()
}

fn soft_potential() -> PairPotential {
    PairPotential::spherical(
        RadialRule::Gaussian {
            amplitude: 400.0,
            width: 1.2,
        },
        0.0,
        1.5,
    )
    .unwrap()
}

fn soft_settings() -> InterlayerSettings {
    InterlayerSettings {
        z_offset_angstrom: 2.0,
        ..Default::default()
    }
}

fn soft_moduli() -> [ElasticModuli; 2] {
    [ElasticModuli::new(3.0, 4.0, ModuliUnit::PerArea).unwrap(); 2]
}

#[test]
fn relabelling_the_layers_gives_the_same_relaxed_state() {
    let theta = 6f64.to_radians();
    let q = 1.02;
    let a = lattice::graphene_basis(lattice::GRAPHENE_LATTICE_CONSTANT);
    let g = BilayerGeometry::new(a, theta, q).unwrap();
    let swapped = BilayerGeometry::new(a, -theta, 1.0 / q).unwrap();
    for j in [Layer::One, Layer::Two] {
        assert!((g.basis(j) - swapped.basis(j.other())).norm() < 1e-14);
    }
    let subl = SublatticeSpec::default();
    let v = soft_potential();
    let cfg = RelaxConfig {
        n_cut: 2,
        grid: 16,
        grad_tol: 1e-6,
        method: Method::Lbfgs,
        ..Default::default()
    };
    let u0 = DisplacementField::zero(&g, &subl);
    let t = relax(&g, &subl, &u0, &v, soft_moduli(), &cfg, &soft_settings()).unwrap();
    let u0s = DisplacementField::zero(&swapped, &subl);
    let ts = relax(
        &swapped,
        &subl,
        &u0s,
        &v,
        soft_moduli(),
        &cfg,
        &soft_settings(),
    )
    .unwrap();
    assert!(t.converged && ts.converged);
    assert!((t.final_energy() - ts.final_energy()).abs() < 1e-11 * t.final_energy().abs());
    let moved = t.field.layer_field(Layer::One).unwrap().sup_bound().norm();
    assert!(
        moved > 1e-3,
        "relaxation should move the layers, got {moved}"
    );
    for j in [Layer::One, Layer::Two] {
        let mine = t.field.layer_field(j).unwrap();
        let theirs = conj_field(&swapped, ts.field.layer_field(j.other()).unwrap());
        for (n, c) in mine.modes() {
            let d = theirs.coefficient(*n);
            for k in 0..2 {
                assert!(
                    (c[k] - d[k]).norm() < 1e-5,
                    "layer {j} mode {n:?}: {} vs {}",
                    c[k],
                    d[k]
                );
            }
        }
    }
}

#[test]
fn accepted_steps_satisfy_sufficient_decrease() {
    let g = BilayerGeometry::graphene(4f64.to_radians()).unwrap();
    let subl = SublatticeSpec::default();
    let v = soft_potential();
    let cfg = RelaxConfig {
        n_cut: 3,
        grid: 16,
        grad_tol: 1e-5,
        method: Method::Lbfgs,
        ..Default::default()
    };
    let t = relax(
        &g,
        &subl,
        &DisplacementField::zero(&g, &subl),
        &v,
        soft_moduli(),
        &cfg,
        &soft_settings(),
    )
    .unwrap();
    assert!(t.converged);
    assert!(t.steps.len() > 2);
    for w in t.steps.windows(2) {
        assert!(w[1].energy <= w[0].energy + cfg.armijo_slack * (1.0 + w[0].energy.abs()));
        assert!(w[1].step > 0.0 && w[1].step <= 1.0);
    }
    let rerun = relax(
        &g,
        &subl,
        &DisplacementField::zero(&g, &subl),
        &v,
        soft_moduli(),
        &cfg,
        &soft_settings(),
    )
    .unwrap();
    assert_eq!(rerun.steps, t.steps);
}

#[test]
fn stalled_line_search_is_reported() {
    let g = BilayerGeometry::graphene(4f64.to_radians()).unwrap();
    let subl = SublatticeSpec::default();
    let cfg = RelaxConfig {
        n_cut: 2,
        grid: 8,
        grad_tol: 1e-300,
        armijo: 0.999,
        min_step: 0.9,
        ..Default::default()
    };
    let err = relax(
        &g,
        &subl,
        &DisplacementField::zero(&g, &subl),
        &PairPotential::graphene_morse_lj(),
        [ElasticModuli::graphene(); 2],
        &cfg,
        &InterlayerSettings::default(),
    );
    assert!(
        matches!(err, Err(Error::LineSearchStalled { iteration: 1, .. })),
        "{err:?}"
    );
}

#[test]
fn small_angle_graphene_relaxation() {
    let g = BilayerGeometry::graphene(1.1f64.to_radians()).unwrap();
    let subl = SublatticeSpec::default();
    let v = PairPotential::graphene_morse_lj();
    let cfg = RelaxConfig {
        n_cut: 2,
        grid: 16,
        max_iterations: 600,
        grad_tol: 0.1,
        method: Method::Lbfgs,
        ..Default::default()
    };
    let u0 = DisplacementField::zero(&g, &subl);
    let t = relax(
        &g,
        &subl,
        &u0,
        &v,
        [ElasticModuli::graphene(); 2],
        &cfg,
        &InterlayerSettings::default(),
    )
    .unwrap();
    assert!(t.converged, "{:?}", t.steps.last());
    for w in t.steps.windows(2) {
        assert!(w[1].energy <= w[0].energy + cfg.armijo_slack * (1.0 + w[0].energy.abs()));
    }
    assert!(t.final_energy() < t.steps[0].energy);
    let eps = t.epsilon.unwrap();
    assert!((eps - 2.0 * (0.55f64.to_radians()).sin()).abs() < 1e-15);
    let am = g.moire_basis();
    let a = Vec2::zeros();
    let b = am * Vec2::new(1.0, 1.0);
    let relaxed = max_profile_slope(&domain_wall_profile(&g, &t.field, a, b, 200).unwrap());
    let flat = max_profile_slope(&domain_wall_profile(&g, &u0, a, b, 200).unwrap());
    assert!(relaxed.is_finite() && flat > 0.0);
}

#[test]
fn plain_descent_reduces_the_energy_monotonically() {
    let g = BilayerGeometry::graphene(4f64.to_radians()).unwrap();
    let subl = SublatticeSpec::default();
    let cfg = RelaxConfig {
        n_cut: 2,
        grid: 16,
        max_iterations: 40,
        grad_tol: 1e-12,
        ..Default::default()
    };
    let t = relax(
        &g,
        &subl,
        &DisplacementField::zero(&g, &subl),
        &soft_potential(),
        soft_moduli(),
        &cfg,
        &soft_settings(),
    )
    .unwrap();
    assert_eq!(t.steps.len(), 41);
    for w in t.steps.windows(2) {
        assert!(w[1].energy <= w[0].energy + cfg.armijo_slack * (1.0 + w[0].energy.abs()));
    }
    assert!(t.steps[40].grad_norm < 0.05 * t.steps[0].grad_norm);
}

#[test]
fn gradient_of_rigid_translation_vanishes() {
    let g = BilayerGeometry::graphene(5f64.to_radians()).unwrap();
    let subl = SublatticeSpec::default();
    let f = FourierField::plane_wave(
        &g,
        [1, 1],
        [
            Complex64::new(0.03, 0.01),
            Complex64::new(0.0, -0.02),
            Complex64::new(0.0, 0.0),
        ],
    )
    .unwrap();
    let u = DisplacementField::uniform(&subl, [f, FourierField::zero(&g)]);
    let cg = energy_gradient(
        &g,
        &subl,
        &u,
        &soft_potential(),
        soft_moduli(),
        2,
        32,
        &soft_settings(),
    )
    .unwrap();
    let o1 = cg.layout.offset(Layer::One);
    let o2 = cg.layout.offset(Layer::Two);
    let scale = cg.gradient.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for k in 0..2 {
        assert!((cg.gradient[o1 + k] + cg.gradient[o2 + k]).abs() < 1e-12 * scale);
    }
}
