//! Scenario files.
//!
//! A scenario is a TOML document with sections `[beam]`, `[damping]`,
//! `[damping.d1]`, `[damping.d2]`, `[damping.d3]`, `[bc]` and `[run]`.
//! Unknown keys, and keys that do not apply to the chosen profile kind, are
//! rejected. See `docs/scenario-keys.md` for the full key list.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{BresseError, Result};
use crate::model::{
    BeamParameters, BoundaryCondition, DampingModel, DampingProfile, DampingSpec, InitialKind,
    RunKnobs, ScenarioConfig, Spacing,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    beam: RawBeam,
    #[serde(default)]
    damping: RawDamping,
    bc: RawBc,
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    rho1: f64,
    rho2: f64,
    k1: f64,
    k2: f64,
    k3: f64,
    ell: f64,
    length: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDamping {
    model: Option<String>,
    d1: Option<RawProfile>,
    d2: Option<RawProfile>,
    d3: Option<RawProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    kind: String,
    alpha: Option<f64>,
    beta: Option<f64>,
    d0: Option<f64>,
    ramp: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBc {
    kind: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    n_elements: usize,
    dt: Option<f64>,
    t_max: Option<f64>,
    sample_every: Option<usize>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    samples: Option<usize>,
    spacing: Option<String>,
    seed: Option<u64>,
    modes: Option<Vec<u32>>,
    window_fraction: Option<f64>,
    initial: Option<String>,
    initial_mode: Option<usize>,
    initial_file: Option<PathBuf>,
}

fn profile(name: &str, raw: Option<RawProfile>, length: f64, errors: &mut Vec<String>) -> DampingProfile {
    let Some(raw) = raw else {
        return DampingProfile::zero(length);
    };
    let allowed: &[&str] = match raw.kind.as_str() {
        "zero" => &[],
        "global" => &["d0"],
        "indicator" => &["alpha", "beta", "d0"],
        "smoothstep" => &["alpha", "beta", "d0", "ramp"],
        other => {
            errors.push(format!(
                "damping.{name}.kind = {other:?}: expected zero, global, indicator or smoothstep"
            ));
            return DampingProfile::zero(length);
        }
    };
    let fields = [("alpha", raw.alpha), ("beta", raw.beta), ("d0", raw.d0), ("ramp", raw.ramp)];
    for (key, value) in fields {
        if value.is_some() && !allowed.contains(&key) {
            errors.push(format!("damping.{name}.{key} does not apply to kind = {:?}", raw.kind));
        }
        if value.is_none() && allowed.contains(&key) {
            errors.push(format!("damping.{name}.{key} is required for kind = {:?}", raw.kind));
        }
    }
    let get = |v: Option<f64>| v.unwrap_or(0.0);
    match raw.kind.as_str() {
        "global" => DampingProfile::global(length, get(raw.d0)),
        "indicator" => DampingProfile::indicator(length, get(raw.alpha), get(raw.beta), get(raw.d0)),
        "smoothstep" => DampingProfile::smoothstep(
            length,
            get(raw.alpha),
            get(raw.beta),
            get(raw.d0),
            get(raw.ramp),
        ),
        _ => DampingProfile::zero(length),
    }
}

/// Parses scenario text. Relative `initial_file` paths are resolved against
/// `base_dir`.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| BresseError::ScenarioFile(e.to_string()))?;
    let mut errors = Vec::new();
    let b = raw.beam;
    let params = BeamParameters {
        rho1: b.rho1,
        rho2: b.rho2,
        k1: b.k1,
        k2: b.k2,
        k3: b.k3,
        ell: b.ell,
        length: b.length,
    };
    let model = match raw.damping.model.as_deref() {
        None | Some("kelvin-voigt") => DampingModel::KelvinVoigt,
        Some("viscous") => DampingModel::Viscous,
        Some(other) => {
            errors.push(format!("damping.model = {other:?}: expected kelvin-voigt or viscous"));
            DampingModel::KelvinVoigt
        }
    };
    let damping = DampingSpec {
        d1: profile("d1", raw.damping.d1, params.length, &mut errors),
        d2: profile("d2", raw.damping.d2, params.length, &mut errors),
        d3: profile("d3", raw.damping.d3, params.length, &mut errors),
        model,
    };
    let bc = match raw.bc.kind.as_str() {
        "dddd" => BoundaryCondition::FullDirichlet,
        "dnnd" => BoundaryCondition::DirichletNeumannNeumann,
        other => {
            errors.push(format!("bc.kind = {other:?}: expected dddd or dnnd"));
            BoundaryCondition::FullDirichlet
        }
    };
    let r = raw.run;
    let defaults = RunKnobs::default();
    let spacing = match r.spacing.as_deref() {
        None | Some("log") => Spacing::Log,
        Some("linear") => Spacing::Linear,
        Some(other) => {
            errors.push(format!("run.spacing = {other:?}: expected log or linear"));
            Spacing::Log
        }
    };
    let seed = r.seed.unwrap_or(defaults.seed);
    let initial = match r.initial.as_deref() {
        None | Some("random") => InitialKind::RandomHighFreq(seed),
        Some("modal") => InitialKind::Modal(r.initial_mode.unwrap_or(1)),
        Some("file") => match &r.initial_file {
            Some(p) => InitialKind::FromFile(match base_dir {
                Some(d) if p.is_relative() => d.join(p),
                _ => p.clone(),
            }),
            None => {
                errors.push("run.initial = \"file\" requires run.initial_file".into());
                InitialKind::RandomHighFreq(seed)
            }
        },
        Some(other) => {
            errors.push(format!("run.initial = {other:?}: expected random, modal or file"));
            InitialKind::RandomHighFreq(seed)
        }
    };
    if r.initial_mode.is_some() && !matches!(initial, InitialKind::Modal(_)) {
        errors.push("run.initial_mode applies only to initial = \"modal\"".into());
    }
    if r.initial_file.is_some() && !matches!(initial, InitialKind::FromFile(_)) {
        errors.push("run.initial_file applies only to initial = \"file\"".into());
    }
    let run = RunKnobs {
        dt: r.dt,
        t_max: r.t_max.unwrap_or(defaults.t_max),
        sample_every: r.sample_every.unwrap_or(defaults.sample_every),
        lambda_min: r.lambda_min,
        lambda_max: r.lambda_max,
        samples: r.samples.unwrap_or(defaults.samples),
        spacing,
        seed,
        modes: r.modes.unwrap_or(defaults.modes),
        window_fraction: r.window_fraction.unwrap_or(defaults.window_fraction),
        initial,
    };
    let cfg = ScenarioConfig {
        params,
        damping,
        bc,
        n_elements: r.n_elements,
        run,
    };
    errors.extend(cfg.violations());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(BresseError::InvalidScenario(errors))
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BresseError::ScenarioFile(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text, path.parent())
}

/// First 8 bytes of the SHA-256 digest of `text`, in hex.
pub fn short_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Short digest identifying a configuration.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    short_digest(&format!("{cfg:?}"))
}
