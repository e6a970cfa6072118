//! Physical parameters, damping coefficient profiles, boundary conditions
//! and run configuration for the damped Bresse beam.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{BresseError, Result};
use crate::linalg::gauss_legendre;
use crate::spectral::StabilityClass;

/// Material and geometric constants of a curved beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParameters {
    /// Mass density times cross-section area.
    pub rho1: f64,
    /// Mass density times second moment of area.
    pub rho2: f64,
    /// Shear stiffness.
    pub k1: f64,
    /// Bending stiffness.
    pub k2: f64,
    /// Axial stiffness.
    pub k3: f64,
    /// Curvature, the inverse of the radius of curvature.
    pub ell: f64,
    /// Beam length.
    pub length: f64,
}

impl BeamParameters {
    /// All material constants equal to one.
    pub fn unit(ell: f64, length: f64) -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            k1: 1.0,
            k2: 1.0,
            k3: 1.0,
            ell,
            length,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let fields = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("ell", self.ell),
            ("length", self.length),
        ];
        fields
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v > 0.0))
            .map(|(name, v)| format!("beam.{name} = {v} must be finite and strictly positive"))
            .collect()
    }

    pub fn wave_speeds(&self) -> (f64, f64, f64) {
        wave_speeds(self)
    }

    pub fn min_wave_speed(&self) -> f64 {
        let (a, b, c) = self.wave_speeds();
        a.min(b).min(c)
    }

    pub fn max_wave_speed(&self) -> f64 {
        let (a, b, c) = self.wave_speeds();
        a.max(b).max(c)
    }
}

/// Shear, bending and axial wave speeds √(k1/ρ1), √(k2/ρ2), √(k3/ρ1).
pub fn wave_speeds(params: &BeamParameters) -> (f64, f64, f64) {
    (
        (params.k1 / params.rho1).sqrt(),
        (params.k2 / params.rho2).sqrt(),
        (params.k3 / params.rho1).sqrt(),
    )
}

/// Regularity of a damping coefficient at the edges of its support, as
/// declared by the constructor that built it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothness {
    /// Bounded, possibly with jumps (L∞).
    NonSmooth,
    /// Lipschitz (W^{1,∞}).
    Lipschitz,
}

/// One polynomial piece of a profile. Coefficients are in the local variable
/// `x - start`, lowest degree first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePiece {
    pub start: f64,
    pub end: f64,
    pub coeffs: Vec<f64>,
}

impl ProfilePiece {
    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        Self {
            start,
            end,
            coeffs: vec![value],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s = x - self.start;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| *c != 0.0)
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

/// How a profile was built; drives the regime classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileKind {
    Zero,
    Global { d0: f64 },
    Indicator { alpha: f64, beta: f64, d0: f64 },
    Smoothstep { alpha: f64, beta: f64, d0: f64, ramp: f64 },
    Custom,
}

/// Nonnegative piecewise-polynomial damping coefficient on [0, L].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingProfile {
    pub length: f64,
    pub pieces: Vec<ProfilePiece>,
    pub smoothness: Smoothness,
    pub kind: ProfileKind,
}

impl DampingProfile {
    pub fn zero(length: f64) -> Self {
        Self {
            length,
            pieces: vec![ProfilePiece::constant(0.0, length, 0.0)],
            smoothness: Smoothness::Lipschitz,
            kind: ProfileKind::Zero,
        }
    }

    pub fn global(length: f64, d0: f64) -> Self {
        Self {
            length,
            pieces: vec![ProfilePiece::constant(0.0, length, d0)],
            smoothness: Smoothness::Lipschitz,
            kind: ProfileKind::Global { d0 },
        }
    }

    /// d0 on (alpha, beta), zero elsewhere.
    pub fn indicator(length: f64, alpha: f64, beta: f64, d0: f64) -> Self {
        let mut pieces = Vec::new();
        if alpha > 0.0 {
            pieces.push(ProfilePiece::constant(0.0, alpha, 0.0));
        }
        pieces.push(ProfilePiece::constant(alpha, beta, d0));
        if beta < length {
            pieces.push(ProfilePiece::constant(beta, length, 0.0));
        }
        let smoothness = if alpha <= 0.0 && beta >= length {
            Smoothness::Lipschitz
        } else {
            Smoothness::NonSmooth
        };
        Self {
            length,
            pieces,
            smoothness,
            kind: ProfileKind::Indicator { alpha, beta, d0 },
        }
    }

    /// d0 on [alpha, beta] with cubic 3s² - 2s³ ramps of width `ramp` on
    /// [alpha - ramp, alpha] and [beta, beta + ramp]; zero outside.
    pub fn smoothstep(length: f64, alpha: f64, beta: f64, d0: f64, ramp: f64) -> Self {
        let r = ramp;
        // 3s² - 2s³ with s = (x - a)/r, expanded in x - a.
        let rise = vec![0.0, 0.0, 3.0 * d0 / (r * r), -2.0 * d0 / (r * r * r)];
        // d0 (1 - 3s² + 2s³)
        let fall = vec![d0, 0.0, -3.0 * d0 / (r * r), 2.0 * d0 / (r * r * r)];
        let mut pieces = Vec::new();
        if alpha - r > 0.0 {
            pieces.push(ProfilePiece::constant(0.0, alpha - r, 0.0));
        }
        pieces.push(ProfilePiece {
            start: alpha - r,
            end: alpha,
            coeffs: rise,
        });
        pieces.push(ProfilePiece::constant(alpha, beta, d0));
        pieces.push(ProfilePiece {
            start: beta,
            end: beta + r,
            coeffs: fall,
        });
        if beta + r < length {
            pieces.push(ProfilePiece::constant(beta + r, length, 0.0));
        }
        Self {
            length,
            pieces,
            smoothness: Smoothness::Lipschitz,
            kind: ProfileKind::Smoothstep {
                alpha,
                beta,
                d0,
                ramp,
            },
        }
    }

    pub fn from_pieces(length: f64, pieces: Vec<ProfilePiece>, smoothness: Smoothness) -> Self {
        Self {
            length,
            pieces,
            smoothness,
            kind: ProfileKind::Custom,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(ProfilePiece::is_zero)
    }

    /// Interior and boundary breakpoints, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.start, p.end])
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * self.length);
        b
    }

    pub fn max_degree(&self) -> usize {
        self.pieces.iter().map(ProfilePiece::degree).max().unwrap_or(0)
    }

    /// Closure of {x : D(x) > 0} as a sorted union of closed intervals.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in self.pieces.iter().filter(|p| !p.is_zero()) {
            match out.last_mut() {
                Some(last) if (p.start - last.1).abs() <= 1e-12 * self.length => last.1 = p.end,
                _ => out.push((p.start, p.end)),
            }
        }
        out
    }

    /// Intervals on which the coefficient is bounded below by a positive
    /// constant, with that constant.
    pub fn positivity_intervals(&self) -> Vec<(f64, f64, f64)> {
        match self.kind {
            ProfileKind::Zero => vec![],
            ProfileKind::Global { d0 } if d0 > 0.0 => vec![(0.0, self.length, d0)],
            ProfileKind::Indicator { alpha, beta, d0 }
            | ProfileKind::Smoothstep {
                alpha, beta, d0, ..
            } if d0 > 0.0 && beta > alpha => vec![(alpha, beta, d0)],
            ProfileKind::Custom => {
                let mut out: Vec<(f64, f64, f64)> = Vec::new();
                for p in &self.pieces {
                    if p.degree() == 0 && p.coeffs[0] > 0.0 {
                        match out.last_mut() {
                            Some(last) if (p.start - last.1).abs() <= 1e-12 * self.length => {
                                last.1 = p.end;
                                last.2 = last.2.min(p.coeffs[0]);
                            }
                            _ => out.push((p.start, p.end, p.coeffs[0])),
                        }
                    }
                }
                out
            }
            _ => vec![],
        }
    }

    /// True when the coefficient is bounded below by a positive constant on
    /// all of (0, L).
    pub fn is_globally_positive(&self) -> bool {
        let tol = 1e-12 * self.length;
        self.positivity_intervals()
            .iter()
            .any(|&(a, b, d)| d > 0.0 && a <= tol && b >= self.length - tol)
    }

    pub fn violations(&self, name: &str) -> Vec<String> {
        let mut out = Vec::new();
        if self.pieces.is_empty() {
            out.push(format!("{name}: profile has no pieces"));
            return out;
        }
        let tol = 1e-12 * self.length.max(1.0);
        let first = &self.pieces[0];
        if first.start.abs() > tol {
            out.push(format!("{name}: gap (0, {}) before the first piece", first.start));
        }
        let last = self.pieces.last().unwrap();
        if (last.end - self.length).abs() > tol {
            if last.end < self.length {
                out.push(format!("{name}: gap ({}, {}) after the last piece", last.end, self.length));
            } else {
                out.push(format!("{name}: piece extends to {} beyond L = {}", last.end, self.length));
            }
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if !(p.end > p.start) {
                out.push(format!("{name}: piece {i} has empty interval [{}, {}]", p.start, p.end));
            }
            if p.coeffs.is_empty() || p.coeffs.iter().any(|c| !c.is_finite()) {
                out.push(format!("{name}: piece {i} has invalid coefficients"));
            }
        }
        for w in self.pieces.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.start - a.end > tol {
                out.push(format!("{name}: gap ({}, {})", a.end, b.start));
            } else if a.end - b.start > tol {
                out.push(format!("{name}: overlap ({}, {})", b.start, a.end));
            }
        }
        if out.is_empty() {
            for (i, p) in self.pieces.iter().enumerate() {
                let rule = gauss_legendre(p.degree() / 2 + 4);
                let mut pts: Vec<f64> = rule.mapped(p.start, p.end).map(|(x, _)| x).collect();
                pts.push(p.start);
                pts.push(p.end);
                if let Some(x) = pts.into_iter().find(|&x| p.eval(x) < -1e-12) {
                    out.push(format!(
                        "{name}: negative coefficient {} at x = {x} (piece {i})",
                        p.eval(x)
                    ));
                }
            }
        }
        out
    }
}

/// Value of a damping coefficient at `x`. At interior breakpoints the piece
/// on the left wins.
pub fn eval_damping(profile: &DampingProfile, x: f64) -> Result<f64> {
    let l = profile.length;
    if !(x >= 0.0 && x <= l) {
        return Err(BresseError::OutOfDomain { x, length: l });
    }
    profile
        .pieces
        .iter()
        .find(|p| p.start <= x && x <= p.end)
        .map(|p| p.eval(x))
        .ok_or(BresseError::OutOfDomain { x, length: l })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DampingModel {
    /// Damping acts on strain rates inside the fluxes.
    KelvinVoigt,
    /// Damping acts directly on the velocities.
    Viscous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampingSpec {
    pub d1: DampingProfile,
    pub d2: DampingProfile,
    pub d3: DampingProfile,
    pub model: DampingModel,
}

impl DampingSpec {
    pub fn undamped(length: f64) -> Self {
        Self {
            d1: DampingProfile::zero(length),
            d2: DampingProfile::zero(length),
            d3: DampingProfile::zero(length),
            model: DampingModel::KelvinVoigt,
        }
    }

    pub fn kelvin_voigt(d1: DampingProfile, d2: DampingProfile, d3: DampingProfile) -> Self {
        Self {
            d1,
            d2,
            d3,
            model: DampingModel::KelvinVoigt,
        }
    }

    pub fn profiles(&self) -> [&DampingProfile; 3] {
        [&self.d1, &self.d2, &self.d3]
    }

    pub fn is_undamped(&self) -> bool {
        self.profiles().iter().all(|p| p.is_zero())
    }

    /// Aggregate interface regularity declared by the three constructors.
    pub fn declared_smoothness(&self) -> Smoothness {
        if self.profiles().iter().all(|p| p.smoothness == Smoothness::Lipschitz) {
            Smoothness::Lipschitz
        } else {
            Smoothness::NonSmooth
        }
    }

    /// Largest open interval on which all three coefficients are bounded
    /// below by a positive constant.
    pub fn common_positivity_interval(&self) -> Option<(f64, f64)> {
        let sets: Vec<Vec<(f64, f64, f64)>> =
            self.profiles().iter().map(|p| p.positivity_intervals()).collect();
        let mut best: Option<(f64, f64)> = None;
        for a in &sets[0] {
            for b in &sets[1] {
                for c in &sets[2] {
                    let lo = a.0.max(b.0).max(c.0);
                    let hi = a.1.min(b.1).min(c.1);
                    if hi > lo && best.map_or(true, |(x, y)| hi - lo > y - x) {
                        best = Some((lo, hi));
                    }
                }
            }
        }
        best
    }

    /// At least one coefficient is bounded below on some interval.
    pub fn satisfies_strong_stability_condition(&self) -> bool {
        self.profiles().iter().any(|p| !p.positivity_intervals().is_empty())
    }
}

/// Stability regime predicted by the summary table for Kelvin-Voigt damping.
pub fn expected_class(spec: &DampingSpec, smoothness: Smoothness) -> Result<StabilityClass> {
    if spec.model != DampingModel::KelvinVoigt {
        return Err(BresseError::Unsupported(
            "the regime table covers Kelvin-Voigt damping only".into(),
        ));
    }
    if spec.profiles().iter().all(|p| p.is_globally_positive()) {
        return Ok(StabilityClass::Analytic);
    }
    if spec.d1.is_zero() && spec.d3.is_zero() && !spec.d2.positivity_intervals().is_empty() {
        return Ok(StabilityClass::Polynomial { order: 4.0 });
    }
    if spec.common_positivity_interval().is_some() {
        return Ok(match smoothness {
            Smoothness::Lipschitz => StabilityClass::Exponential,
            Smoothness::NonSmooth => StabilityClass::Polynomial { order: 2.0 },
        });
    }
    Ok(StabilityClass::Unknown)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// φ = ψ = w = 0 at both ends.
    FullDirichlet,
    /// φ = 0, ψ_x = w_x = 0 at both ends; ψ and w have zero mean.
    DirichletNeumannNeumann,
}

impl BoundaryCondition {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::FullDirichlet => "DDDD",
            BoundaryCondition::DirichletNeumannNeumann => "DNND",
        }
    }
}

/// Relative margin by which L must avoid nπ/ℓ under DNND conditions.
pub const DNND_RESONANCE_MARGIN: f64 = 1e-9;

fn dnnd_resonance(params: &BeamParameters) -> Option<u64> {
    let ratio = params.length * params.ell / PI;
    if !ratio.is_finite() || ratio < 0.5 {
        return None;
    }
    let n = ratio.round().max(1.0);
    let resonant_length = n * PI / params.ell;
    ((params.length - resonant_length).abs() <= DNND_RESONANCE_MARGIN * params.length)
        .then_some(n as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spacing {
    Log,
    Linear,
}

/// Initial data for time integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialKind {
    /// m-th undamped mode, 1-based.
    Modal(usize),
    /// Reproducible high-frequency state.
    RandomHighFreq(u64),
    /// Nodal CSV with columns x,phi,phi_t,psi,psi_t,w,w_t.
    FromFile(std::path::PathBuf),
}

/// Run knobs; `None` means "derive from the mesh".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunKnobs {
    pub dt: Option<f64>,
    pub t_max: f64,
    pub sample_every: usize,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub samples: usize,
    pub spacing: Spacing,
    pub seed: u64,
    pub modes: Vec<u32>,
    pub window_fraction: f64,
    pub initial: InitialKind,
}

impl Default for RunKnobs {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 20.0,
            sample_every: 1,
            lambda_min: None,
            lambda_max: None,
            samples: 64,
            spacing: Spacing::Log,
            seed: 0,
            modes: vec![4, 8, 16, 32, 64],
            window_fraction: 0.6,
            initial: InitialKind::RandomHighFreq(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: BeamParameters,
    pub damping: DampingSpec,
    pub bc: BoundaryCondition,
    pub n_elements: usize,
    pub run: RunKnobs,
}

impl ScenarioConfig {
    pub fn new(
        params: BeamParameters,
        damping: DampingSpec,
        bc: BoundaryCondition,
        n_elements: usize,
    ) -> Self {
        Self {
            params,
            damping,
            bc,
            n_elements,
            run: RunKnobs::default(),
        }
    }

    pub fn with_elements(mut self, n: usize) -> Self {
        self.n_elements = n;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = self.params.violations();
        for (name, p) in [("d1", &self.damping.d1), ("d2", &self.damping.d2), ("d3", &self.damping.d3)] {
            if (p.length - self.params.length).abs() > 1e-12 * self.params.length {
                out.push(format!(
                    "{name}: profile length {} differs from beam length {}",
                    p.length, self.params.length
                ));
            }
            out.extend(p.violations(name));
        }
        if self.bc == BoundaryCondition::DirichletNeumannNeumann && out.is_empty() {
            if let Some(n) = dnnd_resonance(&self.params) {
                out.push(format!(
                    "bc: DNND requires L ≠ nπ/ℓ, but L = nπ/ℓ for n={n} (the energy form is degenerate)"
                ));
            }
        }
        if self.n_elements < 4 {
            out.push(format!("run.n_elements = {} must be at least 4", self.n_elements));
        }
        let r = &self.run;
        let positive = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("run.{name} = {v} must be finite and strictly positive"));
            }
        };
        if let Some(dt) = r.dt {
            positive("dt", dt, &mut out);
        }
        positive("t_max", r.t_max, &mut out);
        if let Some(v) = r.lambda_min {
            positive("lambda_min", v, &mut out);
        }
        if let Some(v) = r.lambda_max {
            positive("lambda_max", v, &mut out);
        }
        if let (Some(a), Some(b)) = (r.lambda_min, r.lambda_max) {
            if a >= b {
                out.push(format!("run.lambda_min = {a} must be below run.lambda_max = {b}"));
            }
        }
        if r.sample_every == 0 {
            out.push("run.sample_every must be positive".into());
        }
        if r.samples == 0 {
            out.push("run.samples must be positive".into());
        }
        if !(r.window_fraction > 0.0 && r.window_fraction <= 1.0) {
            out.push(format!("run.window_fraction = {} must lie in (0, 1]", r.window_fraction));
        }
        if r.modes.iter().any(|&m| m == 0) {
            out.push("run.modes entries must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(BresseError::InvalidScenario(v))
        }
    }

    /// Element size of the uniform background mesh.
    pub fn element_size(&self) -> f64 {
        self.params.length / self.n_elements as f64
    }

    /// Accuracy-motivated default time step h / (2 max cᵢ).
    pub fn default_dt(&self) -> f64 {
        self.element_size() / (2.0 * self.params.max_wave_speed())
    }

    pub fn dt(&self) -> f64 {
        self.run.dt.unwrap_or_else(|| self.default_dt())
    }

    /// Largest frequency the mesh resolves: π min(cᵢ) N / (8 L).
    pub fn resolved_frequency_cap(&self) -> f64 {
        resolved_frequency_cap(&self.params, self.n_elements)
    }
}

pub fn resolved_frequency_cap(params: &BeamParameters, n_elements: usize) -> f64 {
    PI * params.min_wave_speed() * n_elements as f64 / (8.0 * params.length)
}

/// Returns the config if every invariant holds, otherwise the list of
/// violations.
pub fn validate_scenario(cfg: ScenarioConfig) -> std::result::Result<ScenarioConfig, Vec<String>> {
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(rho1: f64, k1: f64, rho2: f64, k2: f64, k3: f64) -> BeamParameters {
        BeamParameters {
            rho1,
            rho2,
            k1,
            k2,
            k3,
            ell: 1.0,
            length: 1.0,
        }
    }

    #[test]
    fn wave_speed_examples() {
        assert_eq!(wave_speeds(&params(1.0, 1.0, 1.0, 1.0, 1.0)), (1.0, 1.0, 1.0));
        assert_eq!(wave_speeds(&params(1.0, 4.0, 2.0, 8.0, 9.0)), (2.0, 2.0, 3.0));
        let (c1, _, _) = wave_speeds(&params(2.0, 3.0, 1.0, 1.0, 1.0));
        assert_relative_eq!(c1, 1.224_744_871_391_589, epsilon = 1e-12);
    }

    #[test]
    fn dnnd_resonant_length_is_rejected() {
        let p = BeamParameters::unit(1.0, PI);
        let cfg = ScenarioConfig::new(
            p,
            DampingSpec::undamped(PI),
            BoundaryCondition::DirichletNeumannNeumann,
            8,
        );
        let v = validate_scenario(cfg.clone()).unwrap_err();
        assert!(v.iter().any(|m| m.contains("L = nπ/ℓ for n=1")), "{v:?}");

        let ok = ScenarioConfig {
            bc: BoundaryCondition::FullDirichlet,
            ..cfg
        };
        assert!(validate_scenario(ok).is_ok());
    }

    #[test]
    fn second_harmonic_resonance_is_named() {
        let p = BeamParameters::unit(2.0, PI);
        let cfg = ScenarioConfig::new(
            p,
            DampingSpec::undamped(PI),
            BoundaryCondition::DirichletNeumannNeumann,
            8,
        );
        let v = validate_scenario(cfg).unwrap_err();
        assert!(v.iter().any(|m| m.contains("n=2")), "{v:?}");
    }

    #[test]
    fn gap_between_pieces_is_reported() {
        let prof = DampingProfile::from_pieces(
            1.0,
            vec![
                ProfilePiece::constant(0.0, 0.4, 1.0),
                ProfilePiece::constant(0.5, 1.0, 1.0),
            ],
            Smoothness::NonSmooth,
        );
        let v = prof.violations("d1");
        assert!(v.iter().any(|m| m.contains("gap (0.4, 0.5)")), "{v:?}");
    }

    #[test]
    fn negative_coefficient_is_reported() {
        let prof = DampingProfile::from_pieces(
            1.0,
            vec![ProfilePiece {
                start: 0.0,
                end: 1.0,
                coeffs: vec![0.1, -1.0],
            }],
            Smoothness::Lipschitz,
        );
        assert!(prof.violations("d2").iter().any(|m| m.contains("negative")));
    }

    #[test]
    fn eval_examples() {
        let ind = DampingProfile::indicator(1.0, 0.3, 0.7, 1.0);
        assert_eq!(eval_damping(&ind, 0.5).unwrap(), 1.0);
        assert_eq!(eval_damping(&ind, 0.1).unwrap(), 0.0);
        // left piece wins at the breakpoints
        assert_eq!(eval_damping(&ind, 0.3).unwrap(), 0.0);
        assert_eq!(eval_damping(&ind, 0.7).unwrap(), 1.0);
        assert!(eval_damping(&ind, 1.5).is_err());
        assert!(eval_damping(&ind, -0.1).is_err());

        let ramp = DampingProfile::smoothstep(1.0, 0.3, 0.7, 1.0, 0.05);
        assert_relative_eq!(eval_damping(&ramp, 0.275).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(eval_damping(&ramp, 0.3).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(eval_damping(&ramp, 0.725).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(eval_damping(&ramp, 0.75).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn smoothstep_is_continuous_at_breakpoints() {
        let ramp = DampingProfile::smoothstep(2.0, 0.6, 1.2, 3.0, 0.2);
        for w in ramp.pieces.windows(2) {
            let x = w[0].end;
            assert_relative_eq!(w[0].eval(x), w[1].eval(x), epsilon = 1e-12);
        }
    }

    fn ind(a: f64, b: f64) -> DampingProfile {
        DampingProfile::indicator(1.0, a, b, 1.0)
    }

    #[test]
    fn regime_table_rows() {
        let g = || DampingProfile::global(1.0, 1.0);
        let spec = DampingSpec::kelvin_voigt(g(), g(), g());
        assert_eq!(
            expected_class(&spec, spec.declared_smoothness()).unwrap(),
            StabilityClass::Analytic
        );

        let s = || DampingProfile::smoothstep(1.0, 0.3, 0.7, 1.0, 0.1);
        let spec = DampingSpec::kelvin_voigt(s(), s(), s());
        assert_eq!(
            expected_class(&spec, spec.declared_smoothness()).unwrap(),
            StabilityClass::Exponential
        );

        let spec = DampingSpec::kelvin_voigt(ind(0.2, 0.6), ind(0.3, 0.7), ind(0.4, 0.8));
        assert_eq!(
            expected_class(&spec, spec.declared_smoothness()).unwrap(),
            StabilityClass::Polynomial { order: 2.0 }
        );

        let spec = DampingSpec::kelvin_voigt(
            DampingProfile::zero(1.0),
            ind(0.3, 0.7),
            DampingProfile::zero(1.0),
        );
        assert_eq!(
            expected_class(&spec, Smoothness::NonSmooth).unwrap(),
            StabilityClass::Polynomial { order: 4.0 }
        );

        let spec = DampingSpec::kelvin_voigt(ind(0.0, 0.2), ind(0.4, 0.6), ind(0.8, 1.0));
        assert_eq!(
            expected_class(&spec, Smoothness::NonSmooth).unwrap(),
            StabilityClass::Unknown
        );
    }

    #[test]
    fn row_four_is_order_sensitive() {
        let spec = DampingSpec::kelvin_voigt(
            ind(0.3, 0.7),
            DampingProfile::zero(1.0),
            DampingProfile::zero(1.0),
        );
        assert_eq!(
            expected_class(&spec, Smoothness::NonSmooth).unwrap(),
            StabilityClass::Unknown
        );
    }

    #[test]
    fn rows_one_to_three_are_permutation_stable() {
        let a = ind(0.2, 0.6);
        let b = ind(0.3, 0.7);
        let c = ind(0.4, 0.8);
        let perms = [
            (a.clone(), b.clone(), c.clone()),
            (b.clone(), c.clone(), a.clone()),
            (c.clone(), a.clone(), b.clone()),
            (b.clone(), a.clone(), c.clone()),
        ];
        for (x, y, z) in perms {
            let spec = DampingSpec::kelvin_voigt(x, y, z);
            assert_eq!(
                expected_class(&spec, Smoothness::NonSmooth).unwrap(),
                StabilityClass::Polynomial { order: 2.0 }
            );
        }
    }

    #[test]
    fn viscous_model_is_outside_the_table() {
        let mut spec = DampingSpec::undamped(1.0);
        spec.model = DampingModel::Viscous;
        assert!(expected_class(&spec, Smoothness::NonSmooth).is_err());
    }

    #[test]
    fn knob_violations_are_listed() {
        let mut cfg = ScenarioConfig::new(
            BeamParameters::unit(1.0, 1.0),
            DampingSpec::undamped(1.0),
            BoundaryCondition::FullDirichlet,
            2,
        );
        cfg.run.t_max = -1.0;
        cfg.params.k2 = 0.0;
        let v = cfg.violations();
        assert!(v.iter().any(|m| m.contains("n_elements")));
        assert!(v.iter().any(|m| m.contains("t_max")));
        assert!(v.iter().any(|m| m.contains("beam.k2")));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wave_speeds_are_scale_invariant(
                rho1 in 0.1f64..10.0, rho2 in 0.1f64..10.0,
                k1 in 0.1f64..10.0, k2 in 0.1f64..10.0, k3 in 0.1f64..10.0,
                s in 0.01f64..100.0,
            ) {
                let p = params(rho1, k1, rho2, k2, k3);
                let q = params(rho1 * s, k1 * s, rho2 * s, k2 * s, k3 * s);
                let (a, b, c) = wave_speeds(&p);
                let (x, y, z) = wave_speeds(&q);
                prop_assert!((a - x).abs() <= 1e-12 * a);
                prop_assert!((b - y).abs() <= 1e-12 * b);
                prop_assert!((c - z).abs() <= 1e-12 * c);
            }

            #[test]
            fn builtin_profiles_are_nonnegative(
                alpha in 0.05f64..0.45, width in 0.05f64..0.4,
                d0 in 0.01f64..5.0, ramp in 0.001f64..0.05,
            ) {
                let l = 1.0;
                let beta = alpha + width;
                let profiles = [
                    DampingProfile::zero(l),
                    DampingProfile::global(l, d0),
                    DampingProfile::indicator(l, alpha, beta, d0),
                    DampingProfile::smoothstep(l, alpha, beta, d0, ramp),
                ];
                for p in &profiles {
                    prop_assert!(p.violations("d").is_empty());
                    for k in 0..=10_000 {
                        let x = l * k as f64 / 10_000.0;
                        prop_assert!(eval_damping(p, x).unwrap() >= -1e-12);
                    }
                }
            }
        }
    }
}
