//! Exponential versus power-law fits of energy traces.

use std::fmt;

use crate::error::{BresseError, Result};
use crate::evolve::EnergyTrace;
use crate::spectral::linear_fit;

const UNDERFLOW: f64 = 1e-30;
const MIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel {
    /// E ≈ M e^(-δt).
    Exponential { delta: f64, m: f64 },
    /// E ≈ c t^(-γ).
    Polynomial { gamma: f64, c: f64 },
}

impl DecayModel {
    pub fn label(&self) -> &'static str {
        match self {
            DecayModel::Exponential { .. } => "exponential",
            DecayModel::Polynomial { .. } => "polynomial",
        }
    }

    pub fn rate(&self) -> f64 {
        match *self {
            DecayModel::Exponential { delta, .. } => delta,
            DecayModel::Polynomial { gamma, .. } => gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    /// The model that lost the residual comparison.
    pub competitor: DecayModel,
    pub window: (f64, f64),
    /// RMS residual of log E for the selected model.
    pub residual: f64,
    pub competing_residual: f64,
    /// Energy essentially constant over the window.
    pub degenerate: bool,
    /// Samples below the underflow threshold were dropped.
    pub window_shrunk: bool,
    /// Start of the first trailing segment from which the exponential fit
    /// stays better than the power law.
    pub crossover_time: Option<f64>,
}

impl fmt::Display for DecayFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "model={}, rate={:.6e}, window={:.6e}..{:.6e}, residual={:.3e}, competing_residual={:.3e}",
            self.model.label(),
            self.model.rate(),
            self.window.0,
            self.window.1,
            self.residual,
            self.competing_residual
        )?;
        if self.degenerate {
            write!(f, ", degenerate=no-decay")?;
        }
        if self.window_shrunk {
            write!(f, ", window_shrunk=underflow")?;
        }
        if let Some(t) = self.crossover_time {
            write!(f, ", crossover={t:.6e}")?;
        }
        Ok(())
    }
}

fn rms_residual(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (ss / x.len() as f64).sqrt()
}

/// (exponential residual, power-law residual, exp fit, power fit) on points
/// with t > 0 and E > 0.
fn fit_both(t: &[f64], e: &[f64]) -> (f64, f64, DecayModel, DecayModel) {
    let le: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let lt: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let (se, ie, _) = linear_fit(t, &le);
    let (sp, ip, _) = linear_fit(&lt, &le);
    let re = rms_residual(t, &le, se, ie);
    let rp = rms_residual(&lt, &le, sp, ip);
    (
        re,
        rp,
        DecayModel::Exponential {
            delta: -se,
            m: ie.exp(),
        },
        DecayModel::Polynomial {
            gamma: -sp,
            c: ip.exp(),
        },
    )
}

fn crossover(t: &[f64], e: &[f64]) -> Option<f64> {
    const SEGMENTS: usize = 4;
    let len = t.len() / SEGMENTS;
    if len < 3 {
        return None;
    }
    let better: Vec<(f64, bool)> = (0..SEGMENTS)
        .map(|k| {
            let r = k * len..(k + 1) * len;
            let (re, rp, _, _) = fit_both(&t[r.clone()], &e[r.clone()]);
            (t[r.start], re < rp)
        })
        .collect();
    let first = better.iter().rposition(|(_, b)| !*b).map_or(0, |i| i + 1);
    better.get(first).map(|(t0, _)| *t0)
}

/// Fits the trailing `window_fraction` of a trace with both decay laws and
/// keeps the one with the smaller log residual.
pub fn fit_decay(trace: &EnergyTrace, window_fraction: f64) -> Result<DecayFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(BresseError::InvalidArgument(format!(
            "window fraction {window_fraction} outside (0, 1]"
        )));
    }
    let all = &trace.samples;
    let start = ((1.0 - window_fraction) * all.len() as f64).floor() as usize;
    let window: Vec<_> = all[start..].iter().filter(|s| s.t > 0.0 && s.energy > 0.0).collect();
    let kept: Vec<_> = window.iter().filter(|s| s.energy >= UNDERFLOW).copied().collect();
    let window_shrunk = kept.len() < window.len();
    if kept.len() < MIN_SAMPLES {
        return Err(BresseError::InsufficientData(format!(
            "decay fit needs at least {MIN_SAMPLES} positive-energy samples in the window, found {}",
            kept.len()
        )));
    }
    let t: Vec<f64> = kept.iter().map(|s| s.t).collect();
    let e: Vec<f64> = kept.iter().map(|s| s.energy).collect();
    let (re, rp, exp_fit, pow_fit) = fit_both(&t, &e);
    let (emin, emax) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let degenerate = (emax - emin) <= 1e-8 * emax;
    let window = (t[0], *t.last().unwrap());
    let (model, competitor, residual, competing_residual) = if degenerate || rp <= re {
        (pow_fit, exp_fit, rp, re)
    } else {
        (exp_fit, pow_fit, re, rp)
    };
    Ok(DecayFit {
        model,
        competitor,
        window,
        residual,
        competing_residual,
        degenerate,
        window_shrunk,
        crossover_time: if degenerate { None } else { crossover(&t, &e) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::TraceSample;

    fn trace(t: impl Iterator<Item = f64>, e: impl Fn(f64) -> f64) -> EnergyTrace {
        EnergyTrace {
            samples: t
                .map(|t| TraceSample {
                    t,
                    energy: e(t),
                    dissipation: 0.0,
                })
                .collect(),
            dt: 0.0,
            scheme: "synthetic",
            scenario_hash: String::new(),
            max_balance_residual: 0.0,
            max_energy_increase: 0.0,
        }
    }

    fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| a + (b - a) * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn exponential_trace() {
        let f = fit_decay(&trace(grid(0.0, 10.0, 200), |t| (-2.0 * t).exp()), 0.6).unwrap();
        match f.model {
            DecayModel::Exponential { delta, .. } => assert!((delta - 2.0).abs() < 0.02),
            m => panic!("{m:?}"),
        }
        assert!(f.residual < f.competing_residual);
    }

    #[test]
    fn power_law_trace() {
        let f = fit_decay(&trace(grid(1.0, 100.0, 400), |t| 1.0 / t), 0.6).unwrap();
        match f.model {
            DecayModel::Polynomial { gamma, .. } => assert!((gamma - 1.0).abs() < 0.01),
            m => panic!("{m:?}"),
        }
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let f = fit_decay(&trace(grid(0.0, 10.0, 100), |_| 1.0), 0.6).unwrap();
        assert!(f.degenerate);
        assert!(matches!(f.model, DecayModel::Polynomial { gamma, .. } if gamma.abs() < 1e-12));
        assert!(f.to_string().contains("degenerate"));
    }

    #[test]
    fn rescaling_time_divides_delta() {
        let a = 3.0;
        let f1 = fit_decay(&trace(grid(0.0, 10.0, 300), |t| 5.0 * (-0.7 * t).exp()), 0.6).unwrap();
        let f2 = fit_decay(&trace(grid(0.0, 10.0 * a, 300), |t| (-0.7 * t / a).exp()), 0.6).unwrap();
        assert!((f1.model.rate() / a - f2.model.rate()).abs() < 1e-6);
        let p1 = fit_decay(&trace(grid(1.0, 50.0, 300), |t| t.powf(-0.5)), 0.6).unwrap();
        let p2 = fit_decay(&trace(grid(a, 50.0 * a, 300), |t| 7.0 * t.powf(-0.5)), 0.6).unwrap();
        assert!((p1.model.rate() - p2.model.rate()).abs() < 1e-6);
    }

    #[test]
    fn underflow_shrinks_window() {
        let f = fit_decay(&trace(grid(0.0, 1000.0, 1000), |t| (-1.0 * t).exp()), 0.6).unwrap_err();
        assert!(matches!(f, BresseError::InsufficientData(_)));
        let f = fit_decay(&trace(grid(0.0, 70.0, 1000), |t| (-1.0 * t).exp()), 0.6).unwrap();
        assert!(f.window_shrunk);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_decay(&trace(grid(0.0, 1.0, 20), |t| (-t).exp()), 0.6).is_err());
    }
}
