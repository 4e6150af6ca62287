//! Experiment configuration: one JSON document per run.

use crate::error::CliError;
use moire_core::energy::Evaluation;
use moire_core::fields::DisplacementFile;
use moire_core::lattice::GeometryFile;
use moire_core::potentials::PotentialFile;
use moire_core::{ElasticModuli, InterlayerSettings, RelaxConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Geometry,
    Dirichlet,
    Diophantine,
    Converge,
    Misfit,
    Energy,
    Relax,
    Profile,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Geometry,
        Kind::Dirichlet,
        Kind::Diophantine,
        Kind::Converge,
        Kind::Misfit,
        Kind::Energy,
        Kind::Relax,
        Kind::Profile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Geometry => "geometry",
            Kind::Dirichlet => "dirichlet",
            Kind::Diophantine => "diophantine",
            Kind::Converge => "converge",
            Kind::Misfit => "misfit",
            Kind::Energy => "energy",
            Kind::Relax => "relax",
            Kind::Profile => "profile",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryParams {
    pub commensuration_n_max: usize,
    pub commensuration_tol: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            commensuration_n_max: 16,
            commensuration_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletParams {
    #[serde(default = "first_layer")]
    pub layer: u8,
    pub n_list: Vec<usize>,
    /// Moiré reciprocal indices `n`, evaluated at `G = B_M n`.
    #[serde(default)]
    pub moire_modes: Vec<[i64; 2]>,
    #[serde(default)]
    pub wavevectors_per_angstrom: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiophantineParams {
    pub sigma: f64,
    pub n_max: usize,
}

impl Default for DiophantineParams {
    fn default() -> Self {
        Self {
            sigma: 1.15,
            n_max: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    PlaneWave {
        mode: [i64; 2],
    },
    /// Hermitian coefficients drawn uniformly from `[-amplitude, amplitude]`
    /// on the mode square `|n_i| ≤ half_width`.
    RandomFourier {
        #[serde(default = "three")]
        half_width: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    InterlayerEnergy {
        #[serde(default = "limit_grid")]
        limit_grid: usize,
        #[serde(default = "limit_tol")]
        limit_tol: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundParams {
    pub sigma: f64,
    pub s: f64,
    pub n_max: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            sigma: 1.15,
            s: 1.5,
            n_max: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeParams {
    pub observable: Observable,
    #[serde(default = "first_layer")]
    pub layer: u8,
    #[serde(default)]
    pub offset_angstrom: [f64; 2],
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub bound: Option<BoundParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MisfitParams {
    pub layer: u8,
    pub grid_n: usize,
}

impl Default for MisfitParams {
    fn default() -> Self {
        Self {
            layer: 1,
            grid_n: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    #[serde(default = "default_evaluation")]
    pub evaluation: Evaluation,
    #[serde(default = "elastic_grid")]
    pub elastic_grid: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileParams {
    /// Endpoints in moiré lattice coordinates.
    pub from_moire: [f64; 2],
    pub to_moire: [f64; 2],
    pub samples: usize,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self {
            from_moire: [0.0, 0.0],
            to_moire: [1.0, 1.0],
            samples: 200,
        }
    }
}

fn first_layer() -> u8 {
    1
}
fn three() -> usize {
    3
}
fn one() -> f64 {
    1.0
}
fn limit_grid() -> usize {
    128
}
fn limit_tol() -> f64 {
    1e-6
}
fn elastic_grid() -> usize {
    64
}
fn default_evaluation() -> Evaluation {
    Evaluation::Limit {
        grid: limit_grid(),
        tol: limit_tol(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Geometry(GeometryParams),
    Dirichlet(DirichletParams),
    Diophantine(DiophantineParams),
    Converge(ConvergeParams),
    Misfit(MisfitParams),
    Energy(EnergyParams),
    Relax(RelaxConfig),
    Profile(ProfileParams),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Kind,
    #[serde(default)]
    geometry: Option<GeometryFile>,
    #[serde(default)]
    geometry_file: Option<String>,
    #[serde(default)]
    potential: Option<PotentialFile>,
    #[serde(default)]
    potential_file: Option<String>,
    #[serde(default)]
    displacement_file: Option<String>,
    #[serde(default)]
    output_dir: Option<String>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    settings: InterlayerSettings,
    #[serde(default)]
    moduli: Option<ElasticModuli>,
    #[serde(default)]
    moduli_layer2: Option<ElasticModuli>,
    #[serde(default)]
    params: serde_json::Value,
}

/// SHA-256 of one input, keyed by the config field that referenced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InputHash {
    pub field: String,
    pub path: Option<String>,
    pub sha256: String,
}

/// A validated experiment. Every referenced file has been read and parsed.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub geometry: GeometryFile,
    pub potential: Option<PotentialFile>,
    pub displacement: Option<DisplacementFile>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub settings: InterlayerSettings,
    pub moduli: [ElasticModuli; 2],
    pub params: Params,
    /// Directory that relative paths inside the potential file resolve against.
    pub potential_dir: PathBuf,
    pub inputs: Vec<InputHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn line_of(text: &str, field: &str) -> Option<usize> {
    let leaf = field.rsplit('.').next().unwrap_or(field);
    let key = format!("\"{leaf}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

struct Validator<'a> {
    text: &'a str,
}

impl Validator<'_> {
    fn fail(&self, field: &str, message: impl Into<String>) -> CliError {
        CliError::Validation {
            field: field.to_string(),
            line: line_of(self.text, field),
            message: message.into(),
        }
    }

    fn check(&self, ok: bool, field: &str, message: &str) -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            Err(self.fail(field, message))
        }
    }

    fn layer(&self, layer: u8, field: &str) -> Result<(), CliError> {
        self.check(layer == 1 || layer == 2, field, "layer must be 1 or 2")
    }

    fn n_list(&self, ns: &[usize], field: &str) -> Result<(), CliError> {
        self.check(!ns.is_empty(), field, "N list is empty")?;
        self.check(
            ns.iter().all(|&n| n > 0),
            field,
            "N values must be positive",
        )?;
        self.check(
            ns.windows(2).all(|w| w[0] < w[1]),
            field,
            "N list not increasing",
        )
    }

    fn params<T: DeserializeOwned>(&self, value: &serde_json::Value) -> Result<T, CliError> {
        let value = if value.is_null() {
            serde_json::Value::Object(Default::default())
        } else {
            value.clone()
        };
        serde_json::from_value(value).map_err(|e| self.fail("params", e.to_string()))
    }

    fn read(&self, base: &Path, field: &str, name: &str) -> Result<(PathBuf, String), CliError> {
        let path = base.join(name);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok((path, text)),
            Err(e) => Err(self.fail(field, format!("cannot read {}: {e}", path.display()))),
        }
    }

    fn json<T: DeserializeOwned>(
        &self,
        field: &str,
        path: &Path,
        text: &str,
    ) -> Result<T, CliError> {
        serde_json::from_str(text).map_err(|e| self.fail(field, format!("{}: {e}", path.display())))
    }
}

/// Parses a config whose relative paths resolve against the current directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    parse_config_in(text, Path::new("."))
}

/// Parses a config whose relative paths resolve against `base`.
pub fn parse_config_in(text: &str, base: &Path) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let v = Validator { text };
    let mut inputs = vec![InputHash {
        field: "config".into(),
        path: None,
        sha256: sha256_hex(text.as_bytes()),
    }];

    let geometry = match (raw.geometry, &raw.geometry_file) {
        (Some(_), Some(_)) => {
            return Err(v.fail(
                "geometry_file",
                "give either `geometry` or `geometry_file`, not both",
            ))
        }
        (Some(g), None) => g,
        (None, Some(name)) => {
            let (path, body) = v.read(base, "geometry_file", name)?;
            inputs.push(InputHash {
                field: "geometry_file".into(),
                path: Some(name.clone()),
                sha256: sha256_hex(body.as_bytes()),
            });
            v.json("geometry_file", &path, &body)?
        }
        (None, None) => return Err(v.fail("geometry_file", "a geometry is required")),
    };
    let field = if raw.geometry_file.is_some() {
        "geometry_file"
    } else {
        "geometry"
    };
    let (geom, subl) = match (raw.kind, geometry.build()) {
        (_, Ok(built)) => (Some(built.0), Some(built.1)),
        (Kind::Diophantine, Err(_)) => (None, None),
        (_, Err(e)) => return Err(v.fail(field, e.to_string())),
    };

    let mut potential_dir = base.to_path_buf();
    let potential = match (raw.potential, &raw.potential_file) {
        (Some(_), Some(_)) => {
            return Err(v.fail(
                "potential_file",
                "give either `potential` or `potential_file`, not both",
            ))
        }
        (Some(p), None) => Some(p),
        (None, Some(name)) => {
            let (path, body) = v.read(base, "potential_file", name)?;
            inputs.push(InputHash {
                field: "potential_file".into(),
                path: Some(name.clone()),
                sha256: sha256_hex(body.as_bytes()),
            });
            potential_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            Some(v.json("potential_file", &path, &body)?)
        }
        (None, None) => None,
    };
    let pot_field = if raw.potential_file.is_some() {
        "potential_file"
    } else {
        "potential"
    };
    if let Some(p) = &potential {
        p.build(&potential_dir)
            .map_err(|e| v.fail(pot_field, e.to_string()))?;
    }

    let displacement = match &raw.displacement_file {
        Some(name) => {
            let (path, body) = v.read(base, "displacement_file", name)?;
            inputs.push(InputHash {
                field: "displacement_file".into(),
                path: Some(name.clone()),
                sha256: sha256_hex(body.as_bytes()),
            });
            let file: DisplacementFile = v.json("displacement_file", &path, &body)?;
            if let (Some(g), Some(s)) = (&geom, &subl) {
                file.build(g, s)
                    .map_err(|e| v.fail("displacement_file", e.to_string()))?;
            }
            Some(file)
        }
        None => None,
    };

    let s = &raw.settings;
    v.check(
        s.z_offset_angstrom.is_finite(),
        "settings.z_offset_angstrom",
        "must be finite",
    )?;
    v.check(
        s.decay_tol_mev > 0.0,
        "settings.decay_tol_mev",
        "must be positive",
    )?;
    v.check(
        s.max_radius_angstrom > 0.0,
        "settings.max_radius_angstrom",
        "must be positive",
    )?;
    let m1 = raw.moduli.unwrap_or_else(ElasticModuli::graphene);
    let m2 = raw.moduli_layer2.unwrap_or(m1);
    m1.validate().map_err(|e| v.fail("moduli", e.to_string()))?;
    m2.validate()
        .map_err(|e| v.fail("moduli_layer2", e.to_string()))?;

    let needs_potential = match raw.kind {
        Kind::Misfit | Kind::Energy | Kind::Relax => true,
        Kind::Converge => matches!(
            v.params::<ConvergeParams>(&raw.params)?.observable,
            Observable::InterlayerEnergy { .. }
        ),
        _ => false,
    };
    if needs_potential && potential.is_none() {
        return Err(v.fail(
            "potential_file",
            format!("a potential is required for `{}` experiments", raw.kind),
        ));
    }
    if raw.kind == Kind::Profile && displacement.is_none() {
        return Err(v.fail(
            "displacement_file",
            "a displacement field is required for `profile` experiments",
        ));
    }

    let params = match raw.kind {
        Kind::Geometry => {
            let p: GeometryParams = v.params(&raw.params)?;
            v.check(
                p.commensuration_n_max >= 1,
                "params.commensuration_n_max",
                "must be at least 1",
            )?;
            v.check(
                p.commensuration_tol > 0.0,
                "params.commensuration_tol",
                "must be positive",
            )?;
            Params::Geometry(p)
        }
        Kind::Dirichlet => {
            let p: DirichletParams = v.params(&raw.params)?;
            v.layer(p.layer, "params.layer")?;
            v.n_list(&p.n_list, "params.n_list")?;
            v.check(
                !p.moire_modes.is_empty() || !p.wavevectors_per_angstrom.is_empty(),
                "params.moire_modes",
                "at least one wavevector is required",
            )?;
            v.check(
                p.wavevectors_per_angstrom
                    .iter()
                    .flatten()
                    .all(|x| x.is_finite()),
                "params.wavevectors_per_angstrom",
                "wavevectors must be finite",
            )?;
            Params::Dirichlet(p)
        }
        Kind::Diophantine => {
            let p: DiophantineParams = v.params(&raw.params)?;
            v.check(
                p.sigma > 0.0 && p.sigma.is_finite(),
                "params.sigma",
                "must be positive",
            )?;
            v.check(p.n_max >= 1, "params.n_max", "must be at least 1")?;
            Params::Diophantine(p)
        }
        Kind::Converge => {
            let p: ConvergeParams = v.params(&raw.params)?;
            v.layer(p.layer, "params.layer")?;
            v.n_list(&p.n_list, "params.n_list")?;
            match &p.observable {
                Observable::RandomFourier {
                    half_width,
                    amplitude,
                } => {
                    v.check(
                        (1..=16).contains(half_width),
                        "params.observable.half_width",
                        "must lie in 1..=16",
                    )?;
                    v.check(
                        *amplitude > 0.0,
                        "params.observable.amplitude",
                        "must be positive",
                    )?;
                }
                Observable::InterlayerEnergy {
                    limit_grid,
                    limit_tol,
                } => {
                    v.check(
                        *limit_grid >= 4 && limit_grid % 2 == 0,
                        "params.observable.limit_grid",
                        "must be even and at least 4",
                    )?;
                    v.check(
                        *limit_tol > 0.0,
                        "params.observable.limit_tol",
                        "must be positive",
                    )?;
                }
                Observable::PlaneWave { .. } => {}
            }
            if let Some(b) = &p.bound {
                v.check(b.sigma > 0.0, "params.bound.sigma", "must be positive")?;
                v.check(b.s > 1.0, "params.bound.s", "must exceed 1")?;
                v.check(b.n_max >= 1, "params.bound.n_max", "must be at least 1")?;
            }
            Params::Converge(p)
        }
        Kind::Misfit => {
            let p: MisfitParams = v.params(&raw.params)?;
            v.layer(p.layer, "params.layer")?;
            v.check(p.grid_n >= 2, "params.grid_n", "must be at least 2")?;
            Params::Misfit(p)
        }
        Kind::Energy => {
            let p: EnergyParams = v.params(&raw.params)?;
            v.check(
                p.elastic_grid >= 2,
                "params.elastic_grid",
                "must be at least 2",
            )?;
            match p.evaluation {
                Evaluation::Finite { n } => {
                    v.check(n > 0, "params.evaluation.n", "must be positive")?
                }
                Evaluation::Limit { grid, tol } => {
                    v.check(
                        grid >= 4 && grid % 2 == 0,
                        "params.evaluation.grid",
                        "must be even and at least 4",
                    )?;
                    v.check(tol > 0.0, "params.evaluation.tol", "must be positive")?;
                }
            }
            Params::Energy(p)
        }
        Kind::Relax => {
            let p: RelaxConfig = v.params(&raw.params)?;
            p.validate().map_err(|e| v.fail("params", e.to_string()))?;
            Params::Relax(p)
        }
        Kind::Profile => {
            let p: ProfileParams = v.params(&raw.params)?;
            v.check(p.samples >= 2, "params.samples", "need at least 2 samples")?;
            v.check(
                p.from_moire != p.to_moire,
                "params.to_moire",
                "endpoints must differ",
            )?;
            Params::Profile(p)
        }
    };

    Ok(ExperimentConfig {
        kind: raw.kind,
        geometry,
        potential,
        displacement,
        output_dir: base.join(raw.output_dir.as_deref().unwrap_or("out")),
        seed: raw.seed,
        settings: raw.settings,
        moduli: [m1, m2],
        params,
        potential_dir,
        inputs,
    })
}
