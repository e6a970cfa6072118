//! Closed-form witness states for the lack of uniform decay under
//! D1 = 0, D2 = D3 = 1 with Dirichlet-Neumann-Neumann conditions.
//!
//! With κ = nπ/L and λ_n = nπ√(ρ2 k2)/(L ρ2) the fields
//! v¹ = A sin κx, v³ = B cos κx, v⁵ = C cos κx
//! solve the resolvent equations with right-hand side (0,0,0,cos κx,0,0)
//! once (A, B, C) solve a 3×3 complex system. All L² integrals of the
//! products involved equal L/2, so every norm below is exact.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{BresseError, Result};
use crate::model::{BeamParameters, BoundaryCondition, ScenarioConfig};
use crate::fem::DiscreteOperator;
use crate::spectral::{linear_fit, resolvent_norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl Coefficients {
    pub fn as_array(&self) -> [Complex64; 3] {
        [self.a, self.b, self.c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSample {
    pub n: u32,
    pub lambda: f64,
    pub coeffs: Coefficients,
    pub asymptotic: Coefficients,
    pub norm_v: f64,
    pub norm_residual: f64,
    /// ∞-norm condition number of the 3×3 system.
    pub condition: f64,
}

fn wavenumber(n: u32, p: &BeamParameters) -> f64 {
    n as f64 * PI / p.length
}

/// λ_n = nπ√(ρ2 k2) / (L ρ2).
pub fn witness_frequency(n: u32, p: &BeamParameters) -> Result<f64> {
    if n < 1 {
        return Err(BresseError::InvalidArgument("witness index n must be at least 1".into()));
    }
    Ok(n as f64 * PI * (p.rho2 * p.k2).sqrt() / (p.length * p.rho2))
}

/// Matrix and right-hand side of the coefficient system.
pub fn witness_system(n: u32, p: &BeamParameters) -> Result<([[Complex64; 3]; 3], [Complex64; 3])> {
    let lambda = witness_frequency(n, p)?;
    let kappa = wavenumber(n, p);
    let r = |x: f64| Complex64::new(x, 0.0);
    let il = Complex64::new(0.0, lambda);
    let (k1, k3, rho1, ell) = (p.k1, p.k3, p.rho1, p.ell);
    let m = [
        [
            r(kappa * kappa * k1 - lambda * lambda * rho1) + (r(k3) + il) * ell * ell,
            r(k1 * kappa),
            (r(k1 + k3) + il) * ell * kappa,
        ],
        [r(k1 * kappa), r(k1), r(ell * k1)],
        [
            (r(k1 + k3) + il) * ell * kappa,
            r(ell * k1),
            r(k3 * kappa * kappa - lambda * lambda * rho1 + ell * ell * k1),
        ],
    ];
    Ok((m, [r(0.0), r(p.rho2), r(0.0)]))
}

fn inf_norm(m: &[[Complex64; 3]; 3]) -> f64 {
    m.iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gaussian elimination with partial pivoting on a 3×3 complex system.
fn solve3(m: &[[Complex64; 3]; 3], rhs: &[Complex64; 3]) -> Option<[Complex64; 3]> {
    let mut a = *m;
    let mut b = *rhs;
    let scale = inf_norm(m);
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() <= 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
            let t = b[col];
            b[row] -= f * t;
        }
    }
    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

fn det3(m: &[[Complex64; 3]; 3]) -> Complex64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn condition_number(m: &[[Complex64; 3]; 3]) -> f64 {
    let e = |k: usize| {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        v[k] = Complex64::new(1.0, 0.0);
        v
    };
    let cols: Option<Vec<[Complex64; 3]>> = (0..3).map(|k| solve3(m, &e(k))).collect();
    match cols {
        Some(cols) => {
            let inv_norm = (0..3)
                .map(|i| (0..3).map(|j| cols[j][i].norm()).sum::<f64>())
                .fold(0.0, f64::max);
            inf_norm(m) * inv_norm
        }
        None => f64::INFINITY,
    }
}

/// Exact (A, B, C) by pivoted elimination.
pub fn witness_coefficients_exact(n: u32, p: &BeamParameters) -> Result<Coefficients> {
    let (m, rhs) = witness_system(n, p)?;
    let x = solve3(&m, &rhs).ok_or_else(|| BresseError::SingularWitness {
        n,
        det: det3(&m).norm(),
    })?;
    Ok(Coefficients {
        a: x[0],
        b: x[1],
        c: x[2],
    })
}

/// Residual ‖M x - rhs‖_∞ of a coefficient triple.
pub fn witness_system_residual(n: u32, p: &BeamParameters, x: &Coefficients) -> Result<f64> {
    let (m, rhs) = witness_system(n, p)?;
    let v = x.as_array();
    Ok((0..3)
        .map(|i| ((0..3).map(|j| m[i][j] * v[j]).sum::<Complex64>() - rhs[i]).norm())
        .fold(0.0, f64::max))
}

/// Leading-order coefficients (A ∝ 1/n, B = O(1), C ∝ 1/n).
pub fn witness_coefficients_asymptotic(n: u32, p: &BeamParameters) -> Result<Coefficients> {
    if n < 1 {
        return Err(BresseError::InvalidArgument("witness index n must be at least 1".into()));
    }
    let (rho1, rho2, k1, k2, k3, ell, l) = (p.rho1, p.rho2, p.k1, p.k2, p.k3, p.ell, p.length);
    let nf = n as f64;
    let den = k2 * rho1 * rho1 - k3 * rho1 * rho2 + rho2 * ell * ell;
    if den.abs() <= 1e-14 * (k2 * rho1 * rho1).abs().max(rho2 * ell * ell) {
        return Err(BresseError::DegenerateParameters(format!(
            "k2ρ1² - k3ρ1ρ2 + ρ2ℓ² = {den:e} vanishes"
        )));
    }
    let a = (k2 * rho1 - rho2 * k3) * rho2 * rho2 * l / (PI * den * k2 * nf);
    let b = rho2
        * (k1 * k3 * rho2 * rho2 + ((-k1 - k3) * rho1 + ell * ell) * k2 * rho2 + k2 * k2 * rho1 * rho1)
        / (k1 * den * k2);
    let c = ell * rho2 * rho2 * l * (rho2 * k2).sqrt() / (PI * den * k2 * nf);
    Ok(Coefficients {
        a: Complex64::new(a, 0.0),
        b: Complex64::new(b, 0.0),
        c: Complex64::new(0.0, c),
    })
}

/// Energy norm of V_n = (v¹, iλv¹, v³, iλv³, v⁵, iλv⁵) for given
/// coefficients.
pub fn state_norm(n: u32, p: &BeamParameters, x: &Coefficients) -> Result<f64> {
    let lambda = witness_frequency(n, p)?;
    let kappa = wavenumber(n, p);
    let half = 0.5 * p.length;
    let kinetic = lambda * lambda * (p.rho1 * x.a.norm_sqr() + p.rho2 * x.b.norm_sqr() + p.rho1 * x.c.norm_sqr());
    // v¹x + v³ + ℓv⁵ = (κA + B + ℓC) cos, v³x = -κB sin, v⁵x - ℓv¹ = -(κC + ℓA) sin
    let shear = p.k1 * (x.a * kappa + x.b + x.c * p.ell).norm_sqr();
    let bend = p.k2 * kappa * kappa * x.b.norm_sqr();
    let axial = p.k3 * (x.c * kappa + x.a * p.ell).norm_sqr();
    Ok(((kinetic + shear + bend + axial) * half).sqrt())
}

/// Energy norm of (0, 0, 0, ρ2 f4 - iλD2 v³xx, 0, iλD3 v⁵xx) with
/// D2 = D3 = 1; the two slots carry the kinetic weights ρ2 and ρ1.
pub fn residual_norm(n: u32, p: &BeamParameters, x: &Coefficients) -> Result<f64> {
    let lambda = witness_frequency(n, p)?;
    let kappa = wavenumber(n, p);
    let il = Complex64::new(0.0, lambda);
    // v³xx = -κ²B cos, v⁵xx = -κ²C cos
    let slot4 = Complex64::new(p.rho2, 0.0) + il * kappa * kappa * x.b;
    let slot6 = -il * kappa * kappa * x.c;
    Ok(((p.rho2 * slot4.norm_sqr() + p.rho1 * slot6.norm_sqr()) * 0.5 * p.length).sqrt())
}

/// (‖V_n‖, ‖(iλ_n - A)V_n‖) with the exact coefficients.
pub fn witness_norms(n: u32, p: &BeamParameters) -> Result<(f64, f64)> {
    let x = witness_coefficients_exact(n, p)?;
    Ok((state_norm(n, p, &x)?, residual_norm(n, p, &x)?))
}

pub fn witness_sample(n: u32, p: &BeamParameters) -> Result<WitnessSample> {
    let coeffs = witness_coefficients_exact(n, p)?;
    let (m, _) = witness_system(n, p)?;
    Ok(WitnessSample {
        n,
        lambda: witness_frequency(n, p)?,
        coeffs,
        asymptotic: witness_coefficients_asymptotic(n, p)?,
        norm_v: state_norm(n, p, &coeffs)?,
        norm_residual: residual_norm(n, p, &coeffs)?,
        condition: condition_number(&m),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub samples: Vec<WitnessSample>,
    /// ‖V_n‖ ~ n^p.
    pub p: f64,
    /// ‖residual‖ ~ n^q.
    pub q: f64,
    /// q - p < 0: the residual grows strictly slower than the state.
    pub lack_of_uniform_stability: bool,
}

impl WitnessReport {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "n,lambda,re_A,im_A,re_B,im_B,re_C,im_C,norm_V,norm_residual")?;
        for s in &self.samples {
            let c = &s.coeffs;
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                s.n, s.lambda, c.a.re, c.a.im, c.b.re, c.b.im, c.c.re, c.c.im, s.norm_v, s.norm_residual
            )?;
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "p={:.4}\nq={:.4}\nq_minus_p={:.4}\nlack_of_uniform_stability_indicated={}\n",
            self.p,
            self.q,
            self.q - self.p,
            self.lack_of_uniform_stability
        )
    }
}

/// Log-log growth exponents of the state and residual norms over `ns`.
pub fn witness_series(ns: &[u32], p: &BeamParameters) -> Result<WitnessReport> {
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 4 {
        return Err(BresseError::InsufficientData(format!(
            "witness series needs at least 4 distinct n, got {}",
            sorted.len()
        )));
    }
    let samples = sorted.iter().map(|&n| witness_sample(n, p)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = samples.iter().map(|s| (s.n as f64).ln()).collect();
    let yv: Vec<f64> = samples.iter().map(|s| s.norm_v.ln()).collect();
    let yr: Vec<f64> = samples.iter().map(|s| s.norm_residual.ln()).collect();
    let (pv, _, _) = linear_fit(&x, &yv);
    let (qv, _, _) = linear_fit(&x, &yr);
    Ok(WitnessReport {
        samples,
        p: pv,
        q: qv,
        lack_of_uniform_stability: qv - pv < 0.0,
    })
}

/// Checks that a scenario has the damping pattern and boundary conditions
/// the construction assumes.
pub fn check_witness_scenario(cfg: &ScenarioConfig) -> Result<()> {
    if cfg.bc != BoundaryCondition::DirichletNeumannNeumann {
        return Err(BresseError::Unsupported(
            "witness construction requires DNND boundary conditions".into(),
        ));
    }
    let d = &cfg.damping;
    let is_one = |pr: &crate::model::DampingProfile| {
        pr.pieces.iter().all(|piece| piece.degree() == 0 && (piece.coeffs[0] - 1.0).abs() <= 1e-12)
    };
    if d.model != crate::model::DampingModel::KelvinVoigt || !d.d1.is_zero() || !is_one(&d.d2) || !is_one(&d.d3) {
        return Err(BresseError::Unsupported(
            "witness construction requires Kelvin-Voigt damping with D1 = 0 and D2 = D3 = 1 on (0, L)".into(),
        ));
    }
    Ok(())
}

/// Resolvent norms of a discretized witness scenario at the witness
/// frequencies, compared with the witness growth flag.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    /// (n, λ_n, ‖(iλ_n - A_h)⁻¹‖) for the n with λ_n below the mesh cap.
    pub samples: Vec<(u32, f64, f64)>,
    /// Log-log slope of the resolvent norm against n.
    pub slope: f64,
    /// Sign of resolvent growth equals the sign the witness flag implies.
    pub agrees: bool,
}

impl CrossCheck {
    pub fn summary(&self) -> String {
        format!(
            "mesh_points={}
mesh_resolvent_slope={:.4}
signs_agree={}
",
            self.samples.len(),
            self.slope,
            self.agrees
        )
    }
}

pub fn resolvent_cross_check(op: &DiscreteOperator, ns: &[u32], report: &WitnessReport) -> Result<CrossCheck> {
    check_witness_scenario(&op.config)?;
    let cap = op.config.resolved_frequency_cap();
    let mut samples = Vec::new();
    for &n in ns {
        let lambda = witness_frequency(n, &op.config.params)?;
        if lambda <= cap {
            samples.push((n, lambda, resolvent_norm(op, lambda)?.norm));
        }
    }
    if samples.len() < 3 {
        return Err(BresseError::InsufficientData(format!(
            "only {} witness frequencies lie below the mesh cap {cap:.3}",
            samples.len()
        )));
    }
    let x: Vec<f64> = samples.iter().map(|s| (s.0 as f64).ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.2.ln()).collect();
    let (slope, _, _) = linear_fit(&x, &y);
    Ok(CrossCheck {
        samples,
        slope,
        agrees: (slope > 0.0) == report.lack_of_uniform_stability,
    })
}
