//! Implicit midpoint time stepping.
//!
//! One step solves s⁺ - s = (dt/2) A_h (s⁺ + s). Eliminating u⁺ leaves the
//! symmetric positive definite system
//! (M + aC + a²K) v⁺ = (M - aC - a²K) v - 2aK u,  a = dt/2,
//! followed by u⁺ = u + a(v + v⁺). The scheme satisfies
//! E(s⁺) - E(s) = -dt · v̄ᵀ C v̄ with v̄ the midpoint velocity.

use crate::error::{BresseError, Result};
use crate::fem::{dissipation_rate, energy, DiscreteOperator, StateVector};
use crate::linalg::SpdFactor;

pub const SCHEME: &str = "implicit-midpoint";

/// Midpoint stepper with the factorization cached for one (operator, dt).
pub struct MidpointStepper<'a> {
    op: &'a DiscreteOperator,
    dt: f64,
    factor: SpdFactor,
}

impl<'a> MidpointStepper<'a> {
    pub fn new(op: &'a DiscreteOperator, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(BresseError::InvalidArgument(format!("dt = {dt} must be positive")));
        }
        let a = 0.5 * dt;
        let factor = SpdFactor::new(&[(1.0, &op.mass), (a, &op.damping), (a * a, &op.stiffness)])
            .map_err(|_| BresseError::SingularMatrix {
                what: "midpoint system M + aC + a²K",
            })?;
        Ok(Self { op, dt, factor })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, s: &StateVector) -> StateVector {
        let a = 0.5 * self.dt;
        let op = self.op;
        let mv = op.mass.mul_vec(&s.v);
        let cv = op.damping.mul_vec(&s.v);
        let kv = op.stiffness.mul_vec(&s.v);
        let ku = op.stiffness.mul_vec(&s.u);
        let rhs: Vec<f64> = (0..s.dim())
            .map(|i| mv[i] - a * cv[i] - a * a * kv[i] - 2.0 * a * ku[i])
            .collect();
        let v = self.factor.solve(&rhs);
        let u = (0..s.dim()).map(|i| s.u[i] + a * (s.v[i] + v[i])).collect();
        StateVector { u, v }
    }
}

/// One implicit midpoint step (factorizes on every call).
pub fn step_midpoint(op: &DiscreteOperator, s: &StateVector, dt: f64) -> Result<StateVector> {
    if s.dim() != op.dim() {
        return Err(BresseError::DimensionMismatch {
            expected: op.dim(),
            got: s.dim(),
        });
    }
    Ok(MidpointStepper::new(op, dt)?.step(s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub samples: Vec<TraceSample>,
    pub dt: f64,
    pub scheme: &'static str,
    pub scenario_hash: String,
    /// max over steps of |ΔE + dt·D_mid| / E(0).
    pub max_balance_residual: f64,
    /// max over steps of E(t_{k+1}) - E(t_k).
    pub max_energy_increase: f64,
}

impl EnergyTrace {
    pub fn initial_energy(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.energy)
    }

    pub fn final_energy(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.energy)
    }

    /// max |E(t) - E(0)| / E(0).
    pub fn max_relative_drift(&self) -> f64 {
        let e0 = self.initial_energy();
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,energy,dissipation")?;
        for s in &self.samples {
            writeln!(w, "{:.16e},{:.16e},{:.16e}", s.t, s.energy, s.dissipation)?;
        }
        Ok(())
    }
}

fn step_count(t_max: f64, dt: f64) -> usize {
    let r = t_max / dt;
    if (r - r.round()).abs() <= 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

/// Integrates to `t_max` and records (t, E, D) every `sample_every` steps
/// (and at the final step). `observe` sees every state, including the
/// initial one.
pub fn simulate_with(
    op: &DiscreteOperator,
    s0: &StateVector,
    t_max: f64,
    dt: f64,
    sample_every: usize,
    mut observe: impl FnMut(usize, f64, &StateVector),
) -> Result<EnergyTrace> {
    if !(t_max > 0.0) {
        return Err(BresseError::InvalidArgument(format!("T = {t_max} must be positive")));
    }
    if sample_every == 0 {
        return Err(BresseError::InvalidArgument("sample_every must be positive".into()));
    }
    let stepper = MidpointStepper::new(op, dt)?;
    let e0 = energy(op, s0)?;
    let steps = step_count(t_max, dt);
    let mut samples = vec![TraceSample {
        t: 0.0,
        energy: e0,
        dissipation: dissipation_rate(op, s0)?,
    }];
    let mut s = s0.clone();
    let mut e = e0;
    let mut max_balance: f64 = 0.0;
    let mut max_increase = f64::NEG_INFINITY;
    observe(0, 0.0, &s);
    for k in 1..=steps {
        let next = stepper.step(&s);
        let e_next = energy(op, &next)?;
        let vmid: Vec<f64> = s.v.iter().zip(&next.v).map(|(a, b)| 0.5 * (a + b)).collect();
        let d_mid = op.damping.bilinear(&vmid, &vmid);
        let scale = if e0 > 0.0 { e0 } else { 1.0 };
        max_balance = max_balance.max((e_next - e + dt * d_mid).abs() / scale);
        max_increase = max_increase.max(e_next - e);
        s = next;
        e = e_next;
        let t = k as f64 * dt;
        observe(k, t, &s);
        if k % sample_every == 0 || k == steps {
            samples.push(TraceSample {
                t,
                energy: e,
                dissipation: dissipation_rate(op, &s)?,
            });
        }
    }
    Ok(EnergyTrace {
        samples,
        dt,
        scheme: SCHEME,
        scenario_hash: crate::scenario::config_hash(&op.config),
        max_balance_residual: max_balance,
        max_energy_increase: max_increase.max(0.0),
    })
}

pub fn simulate(
    op: &DiscreteOperator,
    s0: &StateVector,
    t_max: f64,
    dt: f64,
    sample_every: usize,
) -> Result<EnergyTrace> {
    simulate_with(op, s0, t_max, dt, sample_every, |_, _, _| {})
}

/// State after integrating to `t_max` (no trace).
pub fn integrate(op: &DiscreteOperator, s0: &StateVector, t_max: f64, dt: f64) -> Result<StateVector> {
    let stepper = MidpointStepper::new(op, dt)?;
    let mut s = s0.clone();
    for _ in 0..step_count(t_max, dt) {
        s = stepper.step(&s);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, sample_initial};
    use crate::model::{BeamParameters, BoundaryCondition, DampingProfile, DampingSpec, InitialKind, ScenarioConfig};

    fn op(damped: bool, n: usize) -> DiscreteOperator {
        let l = 1.0;
        let spec = if damped {
            let g = || DampingProfile::global(l, 1.0);
            DampingSpec::kelvin_voigt(g(), g(), g())
        } else {
            DampingSpec::undamped(l)
        };
        assemble(&ScenarioConfig::new(BeamParameters::unit(1.0, l), spec, BoundaryCondition::FullDirichlet, n)).unwrap()
    }

    #[test]
    fn zero_state_stays_zero() {
        let o = op(true, 8);
        let s = step_midpoint(&o, &StateVector::zeros(o.dim()), 0.01).unwrap();
        assert!(s.is_zero());
        assert!(step_midpoint(&o, &StateVector::zeros(o.dim()), 0.0).is_err());
    }

    #[test]
    fn undamped_step_conserves_energy() {
        let o = op(false, 16);
        let s = sample_initial(&o, &InitialKind::RandomHighFreq(1)).unwrap();
        let e0 = energy(&o, &s).unwrap();
        let s1 = step_midpoint(&o, &s, 0.05).unwrap();
        assert!((energy(&o, &s1).unwrap() - e0).abs() <= 1e-10 * e0);
    }

    #[test]
    fn damped_run_is_second_order() {
        let o = op(true, 10);
        let s0 = sample_initial(&o, &InitialKind::Modal(2)).unwrap();
        let t = 0.5;
        let reference = integrate(&o, &s0, t, 1e-4).unwrap();
        let err = |dt: f64| {
            let s = integrate(&o, &s0, t, dt).unwrap();
            let d = StateVector {
                u: s.u.iter().zip(&reference.u).map(|(a, b)| a - b).collect(),
                v: s.v.iter().zip(&reference.v).map(|(a, b)| a - b).collect(),
            };
            o.energy_norm(&d)
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn trace_is_monotone_and_balanced() {
        let o = op(true, 12);
        let s0 = sample_initial(&o, &InitialKind::RandomHighFreq(2)).unwrap();
        let trace = simulate(&o, &s0, 1.0, 0.01, 5).unwrap();
        assert!(trace.max_balance_residual <= 1e-9);
        assert!(trace.max_energy_increase <= 1e-10);
        assert!(trace.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(trace.samples.last().unwrap().t, 1.0);
        assert_eq!(trace.samples.len(), 21);
    }

    #[test]
    fn trace_scales_quadratically() {
        let o = op(true, 8);
        let s0 = sample_initial(&o, &InitialKind::Modal(1)).unwrap();
        let a = simulate(&o, &s0, 0.5, 0.01, 1).unwrap();
        let b = simulate(&o, &s0.scaled(3.0), 0.5, 0.01, 1).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((9.0 * x.energy - y.energy).abs() <= 1e-10 * y.energy);
        }
    }

    #[test]
    fn csv_has_header_and_full_precision() {
        let o = op(true, 8);
        let s0 = sample_initial(&o, &InitialKind::Modal(1)).unwrap();
        let trace = simulate(&o, &s0, 0.02, 0.01, 1).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,energy,dissipation"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[1], trace.samples[0].energy);
    }
}
