//! Canonical configurations used by the table reproduction, the CLI and the
//! test suites.
//!
//! The table rows share one geometry: unit constants, ℓ = 1, L = 1, clamped
//! ends, damping localized to (0.3, 0.7) with d0 = 1.

use std::f64::consts::PI;

use crate::model::{BeamParameters, BoundaryCondition, DampingModel, DampingProfile, DampingSpec, ScenarioConfig};
use crate::spectral::StabilityClass;

pub const TABLE_ELEMENTS: usize = 200;
pub const ALPHA: f64 = 0.3;
pub const BETA: f64 = 0.7;
pub const D0: f64 = 1.0;
pub const RAMP: f64 = 0.1;

/// One row of the regime table.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub index: usize,
    pub damping: &'static str,
    pub claimed: StabilityClass,
    pub config: ScenarioConfig,
}

fn unit_beam() -> BeamParameters {
    BeamParameters::unit(1.0, 1.0)
}

/// Table row `index` (1 to 4) on a mesh of `n` elements.
pub fn table_row(index: usize, n: usize) -> TableRow {
    let l = 1.0;
    let zero = || DampingProfile::zero(l);
    let ind = || DampingProfile::indicator(l, ALPHA, BETA, D0);
    let (damping, claimed, spec) = match index {
        1 => (
            "global D1 = D2 = D3 = d0",
            StabilityClass::Analytic,
            DampingSpec::kelvin_voigt(
                DampingProfile::global(l, D0),
                DampingProfile::global(l, D0),
                DampingProfile::global(l, D0),
            ),
        ),
        2 => {
            let s = || DampingProfile::smoothstep(l, ALPHA, BETA, D0, RAMP);
            ("three local, smooth interfaces", StabilityClass::Exponential, DampingSpec::kelvin_voigt(s(), s(), s()))
        }
        3 => (
            "three local, jump interfaces",
            StabilityClass::Polynomial { order: 2.0 },
            DampingSpec::kelvin_voigt(ind(), ind(), ind()),
        ),
        4 => (
            "D2 local with jumps, D1 = D3 = 0",
            StabilityClass::Polynomial { order: 4.0 },
            DampingSpec::kelvin_voigt(zero(), ind(), zero()),
        ),
        _ => panic!("table rows are numbered 1 to 4, got {index}"),
    };
    TableRow {
        index,
        damping,
        claimed,
        config: ScenarioConfig::new(unit_beam(), spec, BoundaryCondition::FullDirichlet, n),
    }
}

pub fn table_rows(n: usize) -> Vec<TableRow> {
    (1..=4).map(|k| table_row(k, n)).collect()
}

/// Clamped undamped beam, unit constants.
pub fn undamped(n: usize) -> ScenarioConfig {
    ScenarioConfig::new(unit_beam(), DampingSpec::undamped(1.0), BoundaryCondition::FullDirichlet, n)
}

/// Three local viscous dampings on the table interval.
pub fn viscous_local(n: usize) -> ScenarioConfig {
    let ind = || DampingProfile::indicator(1.0, ALPHA, BETA, D0);
    let mut spec = DampingSpec::kelvin_voigt(ind(), ind(), ind());
    spec.model = DampingModel::Viscous;
    ScenarioConfig::new(unit_beam(), spec, BoundaryCondition::FullDirichlet, n)
}

/// Local D2 damping with Dirichlet-Neumann-Neumann ends (L = 1 is admissible
/// for ℓ = 1).
pub fn dnnd_local(n: usize) -> ScenarioConfig {
    let l = 1.0;
    let spec = DampingSpec::kelvin_voigt(
        DampingProfile::zero(l),
        DampingProfile::indicator(l, ALPHA, BETA, D0),
        DampingProfile::indicator(l, ALPHA, BETA, D0),
    );
    ScenarioConfig::new(unit_beam(), spec, BoundaryCondition::DirichletNeumannNeumann, n)
}

/// Standard constants for the witness construction: all ones, L = π.
pub fn witness_params() -> BeamParameters {
    BeamParameters::unit(1.0, PI)
}

/// Mesh counterpart of the witness configuration: DNND, D1 = 0,
/// D2 = D3 = 1. The standard ℓ = 1 with L = π is excluded under DNND, so
/// ℓ = 1/2 is used.
pub fn witness_mesh(n: usize) -> ScenarioConfig {
    let l = PI;
    let spec = DampingSpec::kelvin_voigt(
        DampingProfile::zero(l),
        DampingProfile::global(l, 1.0),
        DampingProfile::global(l, 1.0),
    );
    ScenarioConfig::new(BeamParameters::unit(0.5, l), spec, BoundaryCondition::DirichletNeumannNeumann, n)
}

/// Every damped fixture, labelled.
pub fn damped_corpus(n: usize) -> Vec<(String, ScenarioConfig)> {
    let mut out: Vec<(String, ScenarioConfig)> =
        table_rows(n).into_iter().map(|r| (format!("row{}", r.index), r.config)).collect();
    out.push(("viscous".into(), viscous_local(n)));
    out.push(("dnnd".into(), dnnd_local(n)));
    out.push(("witness-mesh".into(), witness_mesh(n)));
    out
}
