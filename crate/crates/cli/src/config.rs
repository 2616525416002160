//! JSON run configuration. Every section is optional; see `README.md` for the
//! schema and defaults.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sdm_core::cloning::CloningConfig;
use sdm_core::mesh::{circle_loop, load_mesh, matched_circle_loop, rect_loop, BoundaryLoop, Point2};
use sdm_core::sdm::{frequency_grid, loop_probes, Excitation, RadiationProblem};
use sdm_core::Medium;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub medium: MediumSpec,
    pub geometry: GeometrySpec,
    pub cloning: CloningSpec,
    pub frequencies: FrequencySpec,
    pub excitation: ExcitationSpec,
    pub probes: ProbeSpec,
    pub ops: OpsSpec,
    pub paths: PathSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumSpec {
    pub rho0: f64,
    pub c: f64,
}

impl Default for MediumSpec {
    fn default() -> Self {
        let m = Medium::default();
        Self { rho0: m.rho0, c: m.c }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    Circle { radius: f64, n_nodes: usize },
    Rect { width: f64, height: f64, n_per_side: usize },
    /// Circle whose nodes follow the structure's perimeter parameter.
    MatchedCircle { radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySpec {
    pub structure: LoopSpec,
    pub bounding: LoopSpec,
    /// Radial layers of the structured region mesh.
    pub region_layers: usize,
    /// Optional externally generated region mesh (`acmesh v1`).
    pub region_mesh: Option<PathBuf>,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        Self {
            structure: LoopSpec::Rect { width: 0.6, height: 0.3, n_per_side: 16 },
            bounding: LoopSpec::MatchedCircle { radius: 0.55 },
            region_layers: 8,
            region_mesh: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloningSpec {
    pub g: f64,
    pub eta: f64,
    pub n_layers: usize,
    pub tail_ka: f64,
    pub max_kh: f64,
}

impl Default for CloningSpec {
    fn default() -> Self {
        let c = CloningConfig::default();
        Self { g: c.g, eta: c.eta, n_layers: c.n_layers, tail_ka: c.tail_ka, max_kh: c.max_kh }
    }
}

impl CloningSpec {
    pub fn to_config(&self) -> CloningConfig {
        CloningConfig { g: self.g, n_layers: self.n_layers, eta: self.eta, tail_ka: self.tail_ka, max_kh: self.max_kh }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrequencySpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self { min: 50.0, max: 800.0, count: 50, spacing: Spacing::Linear }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExcitationSpec {
    Uniform { amplitude: f64 },
    AngularMode { m: u32, amplitude: f64 },
    /// Text file with one `re im` pair (m/s) per structure node.
    Nodal { path: PathBuf },
}

impl Default for ExcitationSpec {
    fn default() -> Self {
        Self::Uniform { amplitude: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// `count` structure nodes at evenly spread polar angles.
    Structure { count: usize },
    Points { points: Vec<[f64; 2]> },
}

impl Default for ProbeSpec {
    fn default() -> Self {
        Self::Structure { count: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpsSpec {
    pub radius: f64,
    pub n_nodes: usize,
    pub frequency: f64,
    pub source: [f64; 2],
    pub gammas: Vec<f64>,
}

impl Default for OpsSpec {
    fn default() -> Self {
        Self { radius: 0.55, n_nodes: 64, frequency: 100.0, source: [0.11, 0.0], gammas: vec![1.05, 1.2, 1.5, 2.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheFormat {
    Binary,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSpec {
    pub cache: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub cache_format: CacheFormat,
}

impl Default for PathSpec {
    fn default() -> Self {
        Self { cache: None, output: None, cache_format: CacheFormat::Binary }
    }
}

fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Strict parse; errors name the offending key path.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(format!("at '{path}': {}", e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a config file; relative paths inside it resolve against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let Some(p) = cfg.geometry.region_mesh.as_mut() {
        resolve(p);
    }
    if let ExcitationSpec::Nodal { path } = &mut cfg.excitation {
        resolve(path);
    }
    for p in [cfg.paths.cache.as_mut(), cfg.paths.output.as_mut()].into_iter().flatten() {
        resolve(p);
    }
    cfg.check_files()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config always serializes")
    }

    pub fn medium(&self) -> Medium {
        Medium { rho0: self.medium.rho0, c: self.medium.c }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.medium().validate().map_err(|e| config_err(format!("medium: {e}")))?;
        self.cloning.to_config().validate().map_err(|e| config_err(format!("cloning: {e}")))?;
        let f = &self.frequencies;
        frequency_grid(f.min, f.max, f.count, f.spacing == Spacing::Log).map_err(|e| config_err(format!("frequencies: {e}")))?;
        if self.geometry.region_layers == 0 {
            return Err(config_err("geometry.region_layers: must be at least 1"));
        }
        if matches!(self.geometry.structure, LoopSpec::MatchedCircle { .. }) {
            return Err(config_err("geometry.structure: matched_circle is only valid for the bounding loop"));
        }
        match &self.probes {
            ProbeSpec::Structure { count } if *count == 0 => return Err(config_err("probes.count: must be at least 1")),
            ProbeSpec::Points { points } if points.iter().flatten().any(|v| !v.is_finite()) => {
                return Err(config_err("probes.points: non-finite coordinate"))
            }
            _ => {}
        }
        if let ExcitationSpec::Uniform { amplitude } | ExcitationSpec::AngularMode { amplitude, .. } = self.excitation {
            if !amplitude.is_finite() {
                return Err(config_err("excitation.amplitude: must be finite"));
            }
        }
        let o = &self.ops;
        if !(o.radius > 0.0 && o.frequency > 0.0) || o.n_nodes < 8 || o.gammas.is_empty() || o.gammas.iter().any(|g| !(*g > 1.0)) {
            return Err(config_err("ops: need radius > 0, frequency > 0, n_nodes >= 8 and gammas > 1"));
        }
        Ok(())
    }

    fn check_files(&self) -> Result<(), CliError> {
        let mut files = Vec::new();
        if let Some(p) = &self.geometry.region_mesh {
            files.push(("geometry.region_mesh", p));
        }
        if let ExcitationSpec::Nodal { path } = &self.excitation {
            files.push(("excitation.path", path));
        }
        for (key, p) in files {
            if !p.is_file() {
                return Err(config_err(format!("{key}: file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn frequency_list(&self) -> Vec<f64> {
        let f = &self.frequencies;
        frequency_grid(f.min, f.max, f.count, f.spacing == Spacing::Log).expect("validated at load")
    }

    pub fn structure_loop(&self) -> Result<BoundaryLoop, CliError> {
        build_loop(&self.geometry.structure, None).map_err(|e| config_err(format!("geometry.structure: {e}")))
    }

    pub fn bounding_loop(&self) -> Result<BoundaryLoop, CliError> {
        let s = self.structure_loop()?;
        build_loop(&self.geometry.bounding, Some(&s)).map_err(|e| config_err(format!("geometry.bounding: {e}")))
    }

    pub fn radiation_problem(&self) -> Result<RadiationProblem, CliError> {
        let s = self.structure_loop()?;
        let b = self.bounding_loop()?;
        let prob = match &self.geometry.region_mesh {
            Some(p) => {
                let mesh = load_mesh(p).map_err(|e| config_err(format!("geometry.region_mesh: {e}")))?;
                RadiationProblem::from_mesh(s, b, mesh, self.medium())
            }
            None => RadiationProblem::new(s, b, self.geometry.region_layers, self.medium()),
        };
        prob.map_err(|e| config_err(format!("geometry: {e}")))
    }

    pub fn excitation(&self, structure: &BoundaryLoop) -> Result<Excitation, CliError> {
        let exc = match &self.excitation {
            ExcitationSpec::Uniform { amplitude } => Excitation::uniform(structure, *amplitude),
            ExcitationSpec::AngularMode { m, amplitude } => Excitation::angular_mode(structure, *m, *amplitude),
            ExcitationSpec::Nodal { path } => {
                let values = read_nodal(path)?;
                Excitation::nodal(structure, values)
            }
        };
        exc.map_err(|e| config_err(format!("excitation: {e}")))
    }

    pub fn probe_points(&self, structure: &BoundaryLoop) -> Vec<Point2> {
        match &self.probes {
            ProbeSpec::Structure { count } => loop_probes(structure, *count),
            ProbeSpec::Points { points } => points.iter().map(|p| Point2::new(p[0], p[1])).collect(),
        }
    }
}

fn build_loop(spec: &LoopSpec, structure: Option<&BoundaryLoop>) -> sdm_core::Result<BoundaryLoop> {
    match *spec {
        LoopSpec::Circle { radius, n_nodes } => circle_loop(radius, n_nodes),
        LoopSpec::Rect { width, height, n_per_side } => rect_loop(width, height, n_per_side),
        LoopSpec::MatchedCircle { radius } => matched_circle_loop(structure.expect("bounding loops are built after the structure"), radius),
    }
}

fn read_nodal(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("excitation.path: {e}")))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| {
                config_err(format!("excitation.path: line {} is not 're im'", i + 1))
            })?;
            match v[..] {
                [re] => Ok(Complex64::new(re, 0.0)),
                [re, im] => Ok(Complex64::new(re, im)),
                _ => Err(config_err(format!("excitation.path: line {} is not 're im'", i + 1))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = parse_config("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.frequency_list().len(), 50);
        assert_eq!(cfg.medium(), Medium::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(r#"{"cloning": {"gama": 1.2}}"#).unwrap_err().to_string();
        assert!(err.contains("gama") && err.contains("cloning"), "{err}");
        let err = parse_config(r#"{"geometry": {"structure": {"kind": "rect", "width": 1}}}"#).unwrap_err().to_string();
        assert!(err.contains("geometry.structure"), "{err}");
    }

    #[test]
    fn dump_and_reload_is_identity() {
        let cfg = parse_config(r#"{"cloning": {"g": 1.2}, "excitation": {"kind": "angular_mode", "m": 2, "amplitude": 0.5}, "probes": {"kind": "points", "points": [[0.3, 0.0]]}}"#).unwrap();
        assert_eq!(parse_config(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn range_errors_are_config_errors() {
        assert!(parse_config(r#"{"cloning": {"g": 0.9}}"#).is_err());
        assert!(parse_config(r#"{"frequencies": {"min": -1}}"#).is_err());
        assert!(parse_config(r#"{"medium": {"c": 0}}"#).is_err());
    }
}
