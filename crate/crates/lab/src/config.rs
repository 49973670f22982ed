//! Experiment configuration as flat `section.key = value` text.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use solitonlab::arena::{AxisymSphereState, MetricState, RoundFamilyState, TorusGridState};
use solitonlab::entropy::SolverConfig;
use solitonlab::flow::{FlowConfig, FlowKind};
use solitonlab::perturb::{sphere_shape_mode, torus_anisotropic_mode, torus_conformal_mode, torus_random_metric};
use solitonlab::ArenaKind;

use crate::error::{config_err, LabError, Result};

pub const PRESETS: [&str; 7] = [
    "round-family-all-sigma",
    "torus-perturbed-flat",
    "sphere-axisym-shrinker",
    "identity-refinement",
    "dichotomy-static",
    "gauge-pair",
    "einstein-shortcut",
];

/// How the runs of an experiment are laid out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One flow from the configured initial data.
    Flow,
    /// One round-family flow per entry of `arena.sigmas`.
    RoundSweep,
    /// Static identity residuals over `arena.resolutions`.
    IdentityRefinement,
    /// Fixed points next to perturbed data.
    Dichotomy,
    /// Normalized and modified flows from the same data.
    GaugePair,
    /// Unweighted pipeline alongside the weighted one.
    Einstein,
}

impl ExperimentKind {
    const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Flow,
        ExperimentKind::RoundSweep,
        ExperimentKind::IdentityRefinement,
        ExperimentKind::Dichotomy,
        ExperimentKind::GaugePair,
        ExperimentKind::Einstein,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Flow => "flow",
            ExperimentKind::RoundSweep => "round-sweep",
            ExperimentKind::IdentityRefinement => "identity-refinement",
            ExperimentKind::Dichotomy => "dichotomy",
            ExperimentKind::GaugePair => "gauge-pair",
            ExperimentKind::Einstein => "einstein",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    None,
    Conformal,
    Anisotropic,
    Shape,
    Random,
}

impl Perturbation {
    const ALL: [Perturbation; 5] = [
        Perturbation::None,
        Perturbation::Conformal,
        Perturbation::Anisotropic,
        Perturbation::Shape,
        Perturbation::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Conformal => "conformal",
            Perturbation::Anisotropic => "anisotropic",
            Perturbation::Shape => "shape",
            Perturbation::Random => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArenaSpec {
    pub kind: ArenaKind,
    /// Grid size `N` on the torus, colatitude count `M` on the sphere.
    pub resolution: usize,
    pub resolutions: Vec<usize>,
    pub sigma: i8,
    pub sigmas: Vec<i8>,
    pub dim: usize,
    /// Torus side length.
    pub length: f64,
    pub order: usize,
    /// Round-family `c`, or the sphere scale.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialSpec {
    pub perturbation: Perturbation,
    pub mode: (i32, i32),
    pub eps: f64,
    pub kmax: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsToggles {
    pub spectral_gap: bool,
    pub lojasiewicz: bool,
    /// Limit entropy for the Lojasiewicz fit; `None` uses the arena's fixed point.
    pub mu_limit: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    pub arena: ArenaSpec,
    pub initial: InitialSpec,
    pub flow: FlowConfig,
    pub diagnostics: DiagnosticsToggles,
    pub output_dir: Option<PathBuf>,
}

/// One flow of an experiment, written to its own subdirectory.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub label: String,
    pub initial: MetricState,
    pub flow: FlowConfig,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(config_err(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_named<T: Copy>(key: &str, v: &str, all: &[T], name: impl Fn(T) -> &'static str) -> Result<T> {
    all.iter().copied().find(|x| name(*x) == v.trim()).ok_or_else(|| {
        let names: Vec<_> = all.iter().map(|x| name(*x)).collect();
        config_err(key, format!("`{v}` is not one of {}", names.join(", ")))
    })
}

/// Parse `key = value` lines; `#` starts a comment and `[section]` headers
/// prefix the keys that follow.
pub fn parse_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(&format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim();
        let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Baseline from which the presets are derived.
    pub fn base(name: &str) -> Self {
        ExperimentConfig {
            name: name.to_string(),
            experiment: ExperimentKind::Flow,
            arena: ArenaSpec {
                kind: ArenaKind::Torus,
                resolution: 32,
                resolutions: vec![16, 32, 64],
                sigma: 0,
                sigmas: vec![-1, 0, 1],
                dim: 2,
                length: 2.0 * PI,
                order: 4,
                scale: 1.0,
            },
            initial: InitialSpec {
                perturbation: Perturbation::None,
                mode: (1, 0),
                eps: 0.0,
                kmax: 1,
                seed: 0,
            },
            flow: FlowConfig {
                kind: FlowKind::Mrf,
                dt_init: 0.01,
                t_end: 1.0,
                cfl_safety: 0.5,
                output_stride: 10,
                entropy_cfg: SolverConfig {
                    tol: 1e-10,
                    max_iter: 500,
                    damping: 1.0,
                    w_floor: 1e-12,
                    multistart: 0,
                },
            },
            diagnostics: DiagnosticsToggles {
                spectral_gap: true,
                lojasiewicz: false,
                mu_limit: None,
            },
            output_dir: None,
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::base(name);
        match name {
            "round-family-all-sigma" => {
                c.experiment = ExperimentKind::RoundSweep;
                c.arena.kind = ArenaKind::Round;
                c.arena.scale = 1.5;
                c.flow.t_end = 5.0;
                c.flow.entropy_cfg.tol = 1e-12;
                c.diagnostics.lojasiewicz = true;
            }
            "torus-perturbed-flat" => {
                c.initial.perturbation = Perturbation::Conformal;
                c.initial.eps = 0.02;
                c.flow.dt_init = 0.005;
                c.flow.t_end = 5.0;
                c.diagnostics.lojasiewicz = true;
            }
            "sphere-axisym-shrinker" => {
                c.arena.kind = ArenaKind::Sphere;
                c.arena.resolution = 192;
                c.arena.sigma = -1;
                c.initial.perturbation = Perturbation::Shape;
                c.initial.eps = 0.05;
                c.flow.t_end = 2.5;
                c.flow.output_stride = 5;
                c.diagnostics.lojasiewicz = true;
            }
            "identity-refinement" => {
                c.experiment = ExperimentKind::IdentityRefinement;
                c.arena.sigma = 1;
                c.initial.perturbation = Perturbation::Random;
                c.initial.eps = 0.1;
                c.initial.seed = 7;
            }
            "dichotomy-static" => {
                c.experiment = ExperimentKind::Dichotomy;
                c.arena.resolution = 16;
                c.initial.perturbation = Perturbation::Conformal;
                c.initial.eps = 0.02;
                c.flow.t_end = 5.0;
            }
            "gauge-pair" => {
                c.experiment = ExperimentKind::GaugePair;
                c.arena.resolution = 24;
                c.initial.perturbation = Perturbation::Conformal;
                c.initial.mode = (1, 1);
                c.initial.eps = 0.05;
                c.flow.t_end = 2.0;
                c.flow.output_stride = 5;
            }
            "einstein-shortcut" => {
                c.experiment = ExperimentKind::Einstein;
                c.arena.kind = ArenaKind::Sphere;
                c.arena.resolution = 64;
                c.arena.sigma = -1;
                c.arena.sigmas = vec![-1, 1];
                c.arena.scale = 1.5;
                c.initial.perturbation = Perturbation::Shape;
                c.initial.eps = 0.05;
                c.flow.kind = FlowKind::Nrf;
                c.flow.t_end = 0.5;
                c.flow.output_stride = 5;
            }
            other => return Err(LabError::UnknownPreset(other.to_string())),
        }
        Ok(c)
    }

    /// Every key with its canonical rendering, sorted by key.
    pub fn to_pairs(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("name", self.name.clone());
        put("experiment", self.experiment.name().into());
        put("arena.kind", self.arena.kind.name().into());
        put("arena.resolution", self.arena.resolution.to_string());
        put("arena.resolutions", join(&self.arena.resolutions));
        put("arena.sigma", self.arena.sigma.to_string());
        put("arena.sigmas", join(&self.arena.sigmas));
        put("arena.dim", self.arena.dim.to_string());
        put("arena.length", fmt_f64(self.arena.length));
        put("arena.order", self.arena.order.to_string());
        put("arena.scale", fmt_f64(self.arena.scale));
        put("initial.perturbation", self.initial.perturbation.name().into());
        put("initial.mode", format!("{},{}", self.initial.mode.0, self.initial.mode.1));
        put("initial.eps", fmt_f64(self.initial.eps));
        put("initial.kmax", self.initial.kmax.to_string());
        put("initial.seed", self.initial.seed.to_string());
        let kind = match self.flow.kind {
            FlowKind::Nrf => "nrf",
            FlowKind::Mrf => "mrf",
            FlowKind::Unnormalized => "unnormalized",
        };
        put("flow.kind", kind.into());
        put("flow.dt", fmt_f64(self.flow.dt_init));
        put("flow.t_end", fmt_f64(self.flow.t_end));
        put("flow.cfl", fmt_f64(self.flow.cfl_safety));
        put("flow.stride", self.flow.output_stride.to_string());
        let s = &self.flow.entropy_cfg;
        put("solver.tol", fmt_f64(s.tol));
        put("solver.max_iter", s.max_iter.to_string());
        put("solver.damping", fmt_f64(s.damping));
        put("solver.w_floor", fmt_f64(s.w_floor));
        put("solver.multistart", s.multistart.to_string());
        put("diagnostics.spectral_gap", self.diagnostics.spectral_gap.to_string());
        put("diagnostics.lojasiewicz", self.diagnostics.lojasiewicz.to_string());
        put("diagnostics.mu_limit", self.diagnostics.mu_limit.map_or("auto".into(), fmt_f64));
        put(
            "output.dir",
            self.output_dir.as_ref().map_or(String::new(), |p| p.display().to_string()),
        );
        m
    }

    /// Canonical text form; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical text without `output.dir`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.to_pairs().into_iter().filter(|(k, _)| k != "output.dir") {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "name" => self.name = v.to_string(),
            "experiment" => self.experiment = parse_named(key, v, &ExperimentKind::ALL, ExperimentKind::name)?,
            "arena.kind" => {
                self.arena.kind = parse_named(key, v, &[ArenaKind::Round, ArenaKind::Torus, ArenaKind::Sphere], ArenaKind::name)?
            }
            "arena.resolution" => self.arena.resolution = parse_num(key, v)?,
            "arena.resolutions" => self.arena.resolutions = parse_list(key, v)?,
            "arena.sigma" => self.arena.sigma = parse_num(key, v)?,
            "arena.sigmas" => self.arena.sigmas = parse_list(key, v)?,
            "arena.dim" => self.arena.dim = parse_num(key, v)?,
            "arena.length" => self.arena.length = parse_num(key, v)?,
            "arena.order" => self.arena.order = parse_num(key, v)?,
            "arena.scale" => self.arena.scale = parse_num(key, v)?,
            "initial.perturbation" => self.initial.perturbation = parse_named(key, v, &Perturbation::ALL, Perturbation::name)?,
            "initial.mode" => {
                let m: Vec<i32> = parse_list(key, v)?;
                if m.len() != 2 {
                    return Err(config_err(key, "expected two wave numbers `mx,my`"));
                }
                self.initial.mode = (m[0], m[1]);
            }
            "initial.eps" => self.initial.eps = parse_num(key, v)?,
            "initial.kmax" => self.initial.kmax = parse_num(key, v)?,
            "initial.seed" => self.initial.seed = parse_num(key, v)?,
            "flow.kind" => {
                self.flow.kind = match v.trim() {
                    "nrf" => FlowKind::Nrf,
                    "mrf" => FlowKind::Mrf,
                    _ => return Err(config_err(key, format!("`{v}` is not one of nrf, mrf"))),
                }
            }
            "flow.dt" => self.flow.dt_init = parse_num(key, v)?,
            "flow.t_end" => self.flow.t_end = parse_num(key, v)?,
            "flow.cfl" => self.flow.cfl_safety = parse_num(key, v)?,
            "flow.stride" => self.flow.output_stride = parse_num(key, v)?,
            "solver.tol" => self.flow.entropy_cfg.tol = parse_num(key, v)?,
            "solver.max_iter" => self.flow.entropy_cfg.max_iter = parse_num(key, v)?,
            "solver.damping" => self.flow.entropy_cfg.damping = parse_num(key, v)?,
            "solver.w_floor" => self.flow.entropy_cfg.w_floor = parse_num(key, v)?,
            "solver.multistart" => self.flow.entropy_cfg.multistart = parse_num(key, v)?,
            "diagnostics.spectral_gap" => self.diagnostics.spectral_gap = parse_bool(key, v)?,
            "diagnostics.lojasiewicz" => self.diagnostics.lojasiewicz = parse_bool(key, v)?,
            "diagnostics.mu_limit" => {
                self.diagnostics.mu_limit = match v.trim() {
                    "auto" | "" => None,
                    x => Some(parse_num(key, x)?),
                }
            }
            "output.dir" => self.output_dir = (!v.trim().is_empty()).then(|| PathBuf::from(v.trim())),
            _ => return Err(config_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Build from text; a `preset` key selects the starting point, every
    /// other key overrides it.
    pub fn from_text(text: &str) -> Result<Self> {
        let pairs = parse_text(text)?;
        let mut cfg = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, p)) => Self::preset(p)?,
            None => Self::base("custom"),
        };
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.arena;
        let sigma_ok = |s: i8| (-1..=1).contains(&s);
        if !sigma_ok(a.sigma) {
            return Err(config_err("arena.sigma", "must be -1, 0 or 1"));
        }
        if let Some(s) = a.sigmas.iter().find(|s| !sigma_ok(**s)) {
            return Err(config_err("arena.sigmas", format!("{s} is not -1, 0 or 1")));
        }
        if a.kind != ArenaKind::Round {
            if a.resolution < 8 {
                return Err(config_err("arena.resolution", "grid arenas need at least 8 nodes per axis"));
            }
            if a.order != 2 && a.order != 4 {
                return Err(config_err("arena.order", "stencil order must be 2 or 4"));
            }
        }
        if a.dim < 2 {
            return Err(config_err("arena.dim", "dimension must be at least 2"));
        }
        if !(a.length > 0.0 && a.length.is_finite()) {
            return Err(config_err("arena.length", "must be positive"));
        }
        if !(a.scale > 0.0 && a.scale.is_finite()) {
            return Err(config_err("arena.scale", "must be positive"));
        }
        if !(self.initial.eps >= 0.0 && self.initial.eps.is_finite()) {
            return Err(config_err("initial.eps", "must be finite and non-negative"));
        }
        match self.experiment {
            ExperimentKind::RoundSweep if a.sigmas.is_empty() => {
                return Err(config_err("arena.sigmas", "round sweep needs at least one sigma"))
            }
            ExperimentKind::IdentityRefinement => {
                if a.resolutions.len() < 2 {
                    return Err(config_err("arena.resolutions", "refinement needs at least two resolutions"));
                }
                if a.kind == ArenaKind::Round {
                    return Err(config_err("arena.kind", "refinement needs a grid arena"));
                }
            }
            ExperimentKind::Dichotomy if a.kind == ArenaKind::Round => {
                return Err(config_err("arena.kind", "dichotomy needs a grid arena"))
            }
            _ => {}
        }
        let f = &self.flow;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        for (key, ok) in [
            ("flow.dt", positive(f.dt_init)),
            ("flow.t_end", positive(f.t_end)),
            ("flow.cfl", positive(f.cfl_safety)),
            ("flow.stride", f.output_stride > 0),
            ("solver.tol", positive(f.entropy_cfg.tol)),
            ("solver.max_iter", f.entropy_cfg.max_iter > 0),
        ] {
            if !ok {
                return Err(config_err(key, "must be positive"));
            }
        }
        self.flow.validate().map_err(|e| config_err("flow", e.to_string()))?;
        for run in self.runs()? {
            run.initial.validate().map_err(|e| config_err("arena", format!("{}: {e}", run.label)))?;
        }
        Ok(())
    }

    fn grid_state(&self, resolution: usize, perturbation: Perturbation) -> Result<MetricState> {
        let a = &self.arena;
        let i = &self.initial;
        let unsupported = || {
            config_err(
                "initial.perturbation",
                format!("`{}` is not available on the {} arena", perturbation.name(), a.kind.name()),
            )
        };
        Ok(match a.kind {
            ArenaKind::Round => MetricState::Round(RoundFamilyState::new(a.dim, a.sigma, a.scale)?),
            ArenaKind::Torus => {
                if a.dim != 2 {
                    return Err(config_err("arena.dim", "the torus arena is two-dimensional"));
                }
                MetricState::Torus(match perturbation {
                    Perturbation::None => TorusGridState::flat(resolution, a.length, a.sigma, a.order),
                    Perturbation::Conformal => torus_conformal_mode(resolution, a.length, a.sigma, a.order, i.eps, i.mode),
                    Perturbation::Anisotropic => torus_anisotropic_mode(resolution, a.length, a.sigma, a.order, i.eps, i.mode),
                    Perturbation::Random => torus_random_metric(resolution, a.length, a.sigma, a.order, i.eps, i.kmax, i.seed),
                    Perturbation::Shape => return Err(unsupported()),
                })
            }
            ArenaKind::Sphere => {
                if a.dim != 2 {
                    return Err(config_err("arena.dim", "the sphere arena is two-dimensional"));
                }
                MetricState::Sphere(match perturbation {
                    Perturbation::None => AxisymSphereState::round(resolution, a.sigma, a.order, a.scale),
                    Perturbation::Shape => sphere_shape_mode(resolution, a.sigma, a.order, a.scale, i.eps),
                    _ => return Err(unsupported()),
                })
            }
        })
    }

    /// Initial data at the configured resolution.
    pub fn initial_state(&self) -> Result<MetricState> {
        self.grid_state(self.arena.resolution, self.initial.perturbation)
    }

    /// Initial data for each resolution of a refinement study.
    pub fn refinement_states(&self) -> Result<Vec<MetricState>> {
        self.arena
            .resolutions
            .iter()
            .map(|&n| self.grid_state(n, self.initial.perturbation))
            .collect()
    }

    fn round_runs(&self, prefix: &str, scale: f64) -> Result<Vec<RunSpec>> {
        self.arena
            .sigmas
            .iter()
            .map(|&s| {
                let label = match s {
                    -1 => "sigma-m1",
                    0 => "sigma-0",
                    _ => "sigma-p1",
                };
                Ok(RunSpec {
                    label: format!("{prefix}{label}"),
                    initial: MetricState::Round(RoundFamilyState::new(self.arena.dim, s, scale)?),
                    flow: self.flow.clone(),
                })
            })
            .collect()
    }

    /// The flows this experiment integrates, in output order.
    pub fn runs(&self) -> Result<Vec<RunSpec>> {
        let single = |label: &str, initial: MetricState, kind: FlowKind| RunSpec {
            label: label.to_string(),
            initial,
            flow: FlowConfig {
                kind,
                ..self.flow.clone()
            },
        };
        Ok(match self.experiment {
            ExperimentKind::Flow => vec![single("main", self.initial_state()?, self.flow.kind)],
            ExperimentKind::RoundSweep => self.round_runs("", self.arena.scale)?,
            ExperimentKind::IdentityRefinement => Vec::new(),
            ExperimentKind::Dichotomy => {
                let fixed_round = MetricState::Round(RoundFamilyState::new(self.arena.dim, -1, 1.0)?);
                let fixed_grid = match self.arena.kind {
                    ArenaKind::Sphere => MetricState::Sphere(AxisymSphereState::round(
                        self.arena.resolution,
                        self.arena.sigma,
                        self.arena.order,
                        1.0,
                    )),
                    _ => self.grid_state(self.arena.resolution, Perturbation::None)?,
                };
                vec![
                    single("soliton-round", fixed_round, self.flow.kind),
                    single("soliton-grid", fixed_grid, self.flow.kind),
                    single("perturbed", self.initial_state()?, self.flow.kind),
                ]
            }
            ExperimentKind::GaugePair => {
                let st = self.initial_state()?;
                vec![single("nrf", st.clone(), FlowKind::Nrf), single("mrf", st, FlowKind::Mrf)]
            }
            ExperimentKind::Einstein => {
                let mut v = self.round_runs("round-", self.arena.scale)?;
                if self.arena.kind != ArenaKind::Round {
                    v.push(single("grid", self.initial_state()?, self.flow.kind));
                }
                v
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
            let back = ExperimentConfig::from_text(&c.to_text()).unwrap();
            assert_eq!(back, c, "{name}");
            assert_eq!(back.hash(), c.hash());
        }
    }

    #[test]
    fn hash_ignores_key_order_and_output_dir() {
        let a = ExperimentConfig::from_text("preset = gauge-pair\nflow.t_end = 1.5\ninitial.eps = 0.03\n").unwrap();
        let b = ExperimentConfig::from_text("initial.eps = 0.03\npreset = gauge-pair\n\n[flow]\nt_end = 1.5\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.output_dir = Some("/tmp/elsewhere".into());
        assert_eq!(a.hash(), c.hash());
        c.initial.seed += 1;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn errors_name_the_offending_key() {
        let err = ExperimentConfig::from_text("flow.dt = fast").unwrap_err();
        assert!(err.to_string().contains("flow.dt"), "{err}");
        let err = ExperimentConfig::from_text("arena.colour = blue").unwrap_err();
        assert!(err.to_string().contains("arena.colour"), "{err}");
        let mut c = ExperimentConfig::preset("torus-perturbed-flat").unwrap();
        c.initial.eps = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("initial.eps"));
        assert!(matches!(ExperimentConfig::preset("nope"), Err(LabError::UnknownPreset(_))));
    }

    #[test]
    fn run_layouts() {
        let labels = |n: &str| -> Vec<String> {
            ExperimentConfig::preset(n).unwrap().runs().unwrap().into_iter().map(|r| r.label).collect()
        };
        assert_eq!(labels("round-family-all-sigma"), ["sigma-m1", "sigma-0", "sigma-p1"]);
        assert_eq!(labels("gauge-pair"), ["nrf", "mrf"]);
        assert_eq!(labels("dichotomy-static"), ["soliton-round", "soliton-grid", "perturbed"]);
        assert!(labels("identity-refinement").is_empty());
    }
}
