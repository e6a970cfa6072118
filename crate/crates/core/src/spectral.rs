//! Spectrum and energy-norm resolvent of the discrete generator.
//!
//! For a shift iλ the resolvent solve reduces to the quadratic pencil
//! P(λ) = K + iλC - λ²M, factored once per shift. The G-adjoint of A_h is
//! A*(u, v) = (-v, M⁻¹(Ku - Cv)), whose shifted solve uses the entrywise
//! conjugate of the same factorization. The resolvent norm is then
//! √λ_max((T T*)⁻¹) with T = iλ - A_h, found by Lanczos in the G inner
//! product.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BresseError, Result};
use crate::fem::{undamped_modes, DiscreteOperator};
use crate::linalg::{cdot, lanczos_largest, ComplexFactor};
use crate::model::Spacing;
use crate::par::{map_indexed, Execution};

/// Largest state dimension for which the dense eigen/SVD paths are used.
pub const DENSE_FALLBACK_DOFS: usize = 600;
/// Largest state dimension accepted by the dense eigenvalue solver.
pub const DENSE_EIGEN_LIMIT: usize = 3000;
const RESONANCE_TOL: f64 = 1e-10;
const LANCZOS_TOL: f64 = 1e-10;
const LANCZOS_MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityClass {
    Analytic,
    Exponential,
    /// ‖(iλ - A)⁻¹‖ = O(λ^order).
    Polynomial { order: f64 },
    Unknown,
}

impl StabilityClass {
    /// Energy decay exponent γ in E(t) ≲ t^(-γ), γ = 2 / order.
    pub fn predicted_energy_rate(&self) -> Option<f64> {
        match self {
            StabilityClass::Polynomial { order } => Some(2.0 / order),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StabilityClass::Analytic => "analytic",
            StabilityClass::Exponential => "exponential",
            StabilityClass::Polynomial { .. } => "polynomial",
            StabilityClass::Unknown => "unknown",
        }
    }

    pub fn decay_law(&self) -> String {
        match self {
            StabilityClass::Analytic => "exp(-δt), analytic semigroup".into(),
            StabilityClass::Exponential => "exp(-δt)".into(),
            StabilityClass::Polynomial { order } => format!("t^(-{:.3})", 2.0 / order),
            StabilityClass::Unknown => "undetermined".into(),
        }
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StabilityClass::Polynomial { order } => write!(f, "polynomial(l={order:.3})"),
            other => f.write_str(other.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSample {
    pub lambda: f64,
    pub norm: f64,
    /// Relative Lanczos residual of the converged Ritz pair (0 on the dense
    /// path).
    pub residual: f64,
    pub iterations: usize,
}

/// Complex first-order state, u block then v block.
type CState = Vec<Complex64>;

/// Resolvent solves at one shift iλ.
pub struct ShiftedPencil<'a> {
    op: &'a DiscreteOperator,
    lambda: f64,
    factor: ComplexFactor,
}

impl<'a> ShiftedPencil<'a> {
    pub fn new(op: &'a DiscreteOperator, lambda: f64) -> Result<Self> {
        let i = Complex64::i();
        let factor = ComplexFactor::new(&[
            (Complex64::new(1.0, 0.0), &op.stiffness),
            (i * lambda, &op.damping),
            (Complex64::new(-lambda * lambda, 0.0), &op.mass),
        ])
        .map_err(|_| BresseError::Resonance {
            lambda,
            distance: 0.0,
        })?;
        Ok(Self { op, lambda, factor })
    }

    fn split<'s>(&self, x: &'s [Complex64]) -> (&'s [Complex64], &'s [Complex64]) {
        x.split_at(self.op.dim())
    }

    /// s with (iλ - A_h) s = f.
    pub fn solve(&self, f: &[Complex64]) -> CState {
        let (fu, fv) = self.split(f);
        let il = Complex64::new(0.0, self.lambda);
        let mfv = self.op.mass.mul_cvec(fv);
        let mfu = self.op.mass.mul_cvec(fu);
        let cfu = self.op.damping.mul_cvec(fu);
        let rhs: Vec<Complex64> = (0..fu.len()).map(|k| mfv[k] + il * mfu[k] + cfu[k]).collect();
        let u = self.factor.solve(&rhs);
        let v: Vec<Complex64> = u.iter().zip(fu).map(|(a, b)| il * a - b).collect();
        u.into_iter().chain(v).collect()
    }

    /// s with (iλ - A_h)* s = f, the adjoint taken in the G inner product.
    pub fn solve_adjoint(&self, f: &[Complex64]) -> CState {
        let (fu, fv) = self.split(f);
        let il = Complex64::new(0.0, self.lambda);
        let mfv = self.op.mass.mul_cvec(fv);
        let mfu = self.op.mass.mul_cvec(fu);
        let cfu = self.op.damping.mul_cvec(fu);
        let rhs: Vec<Complex64> = (0..fu.len()).map(|k| -mfv[k] - il * mfu[k] + cfu[k]).collect();
        let u = self.factor.solve_conj(&rhs);
        let v: Vec<Complex64> = u.iter().zip(fu).map(|(a, b)| b + il * a).collect();
        u.into_iter().chain(v).collect()
    }
}

/// G inner product ⟨x, y⟩ = x_uᴴ K y_u + x_vᴴ M y_v.
pub fn gram_cinner(op: &DiscreteOperator, x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let n = op.dim();
    cdot(&x[..n], &op.stiffness.mul_cvec(&y[..n])) + cdot(&x[n..], &op.mass.mul_cvec(&y[n..]))
}

fn start_vector(dim: usize) -> CState {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn check_resonance(lambda: f64, norm: f64) -> Result<()> {
    if !norm.is_finite() || 1.0 / norm < RESONANCE_TOL {
        return Err(BresseError::Resonance {
            lambda,
            distance: if norm.is_finite() { 1.0 / norm } else { 0.0 },
        });
    }
    Ok(())
}

/// ‖(iλ - A_h)⁻¹‖ in the operator norm induced by G.
pub fn resolvent_norm(op: &DiscreteOperator, lambda: f64) -> Result<ResolventSample> {
    let pencil = ShiftedPencil::new(op, lambda)?;
    let dim = op.state_dim();
    let out = lanczos_largest(
        dim,
        |x| pencil.solve_adjoint(&pencil.solve(x)),
        |x, y| gram_cinner(op, x, y),
        start_vector(dim),
        LANCZOS_MAX_ITER,
        LANCZOS_TOL,
    );
    let converged = out.residual <= 1e-6 * out.value;
    if !converged && dim <= DENSE_FALLBACK_DOFS {
        return resolvent_norm_dense(op, lambda);
    }
    if !converged {
        return Err(BresseError::Eigensolver(format!(
            "Lanczos did not converge at λ = {lambda} (relative residual {:e})",
            out.residual / out.value
        )));
    }
    let norm = out.value.max(0.0).sqrt();
    check_resonance(lambda, norm)?;
    Ok(ResolventSample {
        lambda,
        norm,
        residual: out.residual / out.value,
        iterations: out.iterations,
    })
}

/// Generator in G-orthonormal coordinates, Lᵀ A L⁻ᵀ with G = L Lᵀ.
fn symmetrized_generator(op: &DiscreteOperator) -> Result<DMatrix<f64>> {
    let chol = nalgebra::Cholesky::new(op.dense_gram()).ok_or(BresseError::NotPositiveDefinite {
        what: "energy Gram matrix",
    })?;
    let l = chol.l();
    let a = op.dense_generator();
    let la = l.transpose() * a;
    // (Lᵀ A) L⁻ᵀ = (L⁻¹ (Lᵀ A)ᵀ)ᵀ
    let x = l
        .solve_lower_triangular(&la.transpose())
        .ok_or(BresseError::SingularMatrix { what: "Gram factor" })?;
    Ok(x.transpose())
}

/// Dense resolvent norm from the singular values of the symmetrized shift.
pub fn resolvent_norm_dense(op: &DiscreteOperator, lambda: f64) -> Result<ResolventSample> {
    let a = symmetrized_generator(op)?;
    let n = a.nrows();
    let mut t = a.map(|x| Complex64::new(-x, 0.0));
    for k in 0..n {
        t[(k, k)] += Complex64::new(0.0, lambda);
    }
    let sv = t.singular_values();
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let norm = 1.0 / smin;
    check_resonance(lambda, norm)?;
    Ok(ResolventSample {
        lambda,
        norm,
        residual: 0.0,
        iterations: 0,
    })
}

/// Generator in undamped modal coordinates: with K Φ = M Φ Ω², ΦᵀMΦ = I
/// and y = (Ω Φᵀ M u, Φᵀ M v) the generator becomes [[0, Ω], [-Ω, -ΦᵀCΦ]],
/// which is G-orthogonally similar to A_h.
fn modal_generator(op: &DiscreteOperator) -> Result<DMatrix<f64>> {
    let (omega2, phi) = undamped_modes(op)?;
    let n = omega2.len();
    let c = phi.transpose() * op.damping.to_dense() * &phi;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        let w = omega2[k].max(0.0).sqrt();
        a[(k, n + k)] = w;
        a[(n + k, k)] = -w;
    }
    a.view_mut((n, n), (n, n)).copy_from(&(-c));
    Ok(a)
}

/// Eigenvalues of A_h sorted by imaginary part, then real part.
pub fn eigenvalues(op: &DiscreteOperator) -> Result<Vec<Complex64>> {
    let dim = op.state_dim();
    if dim > DENSE_EIGEN_LIMIT {
        return Err(BresseError::Unsupported(format!(
            "dense eigenvalue solve limited to {DENSE_EIGEN_LIMIT} state unknowns, got {dim}"
        )));
    }
    let a = modal_generator(op)?;
    let mut ev = real_schur_eigenvalues(&a)
        .or_else(|| complex_schur_eigenvalues(&a))
        .ok_or_else(|| BresseError::Eigensolver("QR iteration did not converge on the modal generator".into()))?;
    ev.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
    Ok(ev)
}

fn real_schur_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    let schur = nalgebra::Schur::try_new(a.clone(), 1e3 * f64::EPSILON, 1000 * a.nrows().max(1))?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// Complex single-shift QR with exceptional shifts; slower, but converges
/// where the real double-shift iteration stalls.
fn complex_schur_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    crate::linalg::complex_eigenvalues(a.map(|x| Complex64::new(x, 0.0)))
}

pub fn lambda_grid(lambda_min: f64, lambda_max: f64, n: usize, spacing: Spacing) -> Vec<f64> {
    if n == 1 {
        return vec![lambda_min];
    }
    let last = (n - 1) as f64;
    let mut g: Vec<f64> = match spacing {
        Spacing::Linear => (0..n)
            .map(|i| lambda_min + (lambda_max - lambda_min) * i as f64 / last)
            .collect(),
        Spacing::Log => {
            let (a, b) = (lambda_min.ln(), lambda_max.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / last).exp()).collect()
        }
    };
    g[0] = lambda_min;
    g[n - 1] = lambda_max;
    g
}

/// Elements needed for `lambda` to sit below the resolved-frequency cap.
pub fn suggested_elements(op: &DiscreteOperator, lambda: f64) -> usize {
    let p = &op.config.params;
    (8.0 * p.length * lambda / (std::f64::consts::PI * p.min_wave_speed())).ceil() as usize
}

/// Resolvent norms on a grid in [λ_min, λ_max], parallel over grid points.
pub fn resolvent_sweep(
    op: &DiscreteOperator,
    lambda_min: f64,
    lambda_max: f64,
    n_samples: usize,
    spacing: Spacing,
) -> Result<Vec<ResolventSample>> {
    resolvent_sweep_with(op, lambda_min, lambda_max, n_samples, spacing, Execution::Parallel)
}

pub fn resolvent_sweep_with(
    op: &DiscreteOperator,
    lambda_min: f64,
    lambda_max: f64,
    n_samples: usize,
    spacing: Spacing,
    exec: Execution,
) -> Result<Vec<ResolventSample>> {
    if !(lambda_min > 0.0 && lambda_min < lambda_max) || n_samples < 2 {
        return Err(BresseError::InvalidArgument(format!(
            "sweep needs 0 < λ_min < λ_max and at least 2 samples (got {lambda_min}, {lambda_max}, {n_samples})"
        )));
    }
    let cap = op.config.resolved_frequency_cap();
    if lambda_max > cap * (1.0 + 1e-12) {
        return Err(BresseError::AboveResolvedCap {
            requested: lambda_max,
            cap,
            suggested_elements: suggested_elements(op, lambda_max),
        });
    }
    let grid = lambda_grid(lambda_min, lambda_max, n_samples, spacing);
    if op.is_undamped() {
        // the whole spectrum sits on iℝ; report the first eigenfrequency in range
        let (omega2, _) = undamped_modes(op)?;
        if let Some(w) = omega2
            .iter()
            .map(|w2| w2.max(0.0).sqrt())
            .find(|w| *w >= lambda_min && *w <= lambda_max)
        {
            let distance = grid.iter().map(|g| (g - w).abs()).fold(f64::INFINITY, f64::min);
            return Err(BresseError::Resonance { lambda: w, distance });
        }
    }
    map_indexed(grid.len(), exec, |k| resolvent_norm(op, grid[k]))
        .into_iter()
        .collect()
}

/// Half-width, as a frequency ratio, of the window in [`resolvent_envelope`].
pub const ENVELOPE_WINDOW: f64 = 1.3;

/// Peak-resolved sweep: an estimate of the local supremum of the resolvent
/// norm. The norm is evaluated on the log grid and at iIm(μ) for the
/// least-damped eigenvalue μ in each grid cell; sample k then carries the
/// largest of these values with frequency in [λ_k/w, λ_k·w], w =
/// [`ENVELOPE_WINDOW`]. Resonance peaks of weakly damped modes are far
/// narrower than any affordable grid spacing, so the plain sweep misses them.
pub fn resolvent_envelope(
    op: &DiscreteOperator,
    lambda_min: f64,
    lambda_max: f64,
    n_samples: usize,
    exec: Execution,
) -> Result<Vec<ResolventSample>> {
    if !(lambda_min > 0.0 && lambda_min < lambda_max) || n_samples < 2 {
        return Err(BresseError::InvalidArgument(format!(
            "envelope needs 0 < λ_min < λ_max and at least 2 samples (got {lambda_min}, {lambda_max}, {n_samples})"
        )));
    }
    let cap = op.config.resolved_frequency_cap();
    if lambda_max > cap * (1.0 + 1e-12) {
        return Err(BresseError::AboveResolvedCap {
            requested: lambda_max,
            cap,
            suggested_elements: suggested_elements(op, lambda_max),
        });
    }
    let grid = lambda_grid(lambda_min, lambda_max, n_samples, Spacing::Log);
    let ev = eigenvalues(op)?;
    let mut points = grid.clone();
    for w in grid.windows(2) {
        let peak = ev
            .iter()
            .filter(|z| z.im >= w[0] && z.im < w[1])
            .max_by(|x, y| x.re.total_cmp(&y.re));
        points.extend(peak.map(|z| z.im));
    }
    let evaluated: Vec<ResolventSample> = map_indexed(points.len(), exec, |k| resolvent_norm(op, points[k]))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(grid
        .iter()
        .map(|&g| {
            let best = evaluated
                .iter()
                .filter(|s| s.lambda >= g / ENVELOPE_WINDOW && s.lambda <= g * ENVELOPE_WINDOW)
                .max_by(|x, y| x.norm.total_cmp(&y.norm))
                .expect("grid point lies in its own window");
            ResolventSample { lambda: g, ..*best }
        })
        .collect())
}

/// Smallest G-norm singular value of iλ - A_h over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clearance {
    pub value: f64,
    pub lambda: f64,
}

pub fn imaginary_axis_clearance(op: &DiscreteOperator, lambda_grid: &[f64]) -> Result<Clearance> {
    imaginary_axis_clearance_with(op, lambda_grid, Execution::Parallel)
}

pub fn imaginary_axis_clearance_with(
    op: &DiscreteOperator,
    lambda_grid: &[f64],
    exec: Execution,
) -> Result<Clearance> {
    if lambda_grid.is_empty() {
        return Err(BresseError::InvalidArgument("empty λ grid".into()));
    }
    // A_h is real, so σ_min(iλ - A_h) is even in λ
    let mut magnitudes: Vec<f64> = lambda_grid.iter().map(|l| l.abs()).collect();
    magnitudes.sort_by(f64::total_cmp);
    magnitudes.dedup();
    let values = map_indexed(magnitudes.len(), exec, |k| match resolvent_norm(op, magnitudes[k]) {
        Ok(s) => Ok(1.0 / s.norm),
        Err(BresseError::Resonance { distance, .. }) => Ok(distance),
        Err(e) => Err(e),
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let mut best = Clearance {
        value: f64::INFINITY,
        lambda: lambda_grid[0],
    };
    for &lambda in lambda_grid {
        let k = magnitudes.partition_point(|m| *m < lambda.abs());
        if values[k] < best.value {
            best = Clearance { value: values[k], lambda };
        }
    }
    Ok(best)
}

/// Log-log fit of a sweep and the class it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub class: StabilityClass,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl Classification {
    pub fn report(&self) -> String {
        let rate = self
            .class
            .predicted_energy_rate()
            .map(|g| format!("{g:.4}"))
            .unwrap_or_else(|| "n/a".into());
        format!(
            "class={}\nslope={:.4}\nr_squared={:.6}\nwindow={:.6e},{:.6e}\npoints={}\npredicted_energy_rate={}\ndecay_law={}\n",
            self.class.label(),
            self.slope,
            self.r_squared,
            self.window.0,
            self.window.1,
            self.points,
            rate,
            self.class.decay_law()
        )
    }
}

/// Ordinary least squares y = a + b x; returns (b, a, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (b, a, r2)
}

pub fn class_from_slope(slope: f64) -> StabilityClass {
    if slope <= -0.7 {
        StabilityClass::Analytic
    } else if slope.abs() <= 0.3 {
        StabilityClass::Exponential
    } else if slope >= 0.7 {
        StabilityClass::Polynomial { order: slope }
    } else {
        StabilityClass::Unknown
    }
}

/// Classifies a sweep by the slope of log ‖R‖ against log λ over its top
/// decade.
pub fn classify_decay(sweep: &[ResolventSample]) -> Result<Classification> {
    if sweep.len() < 8 {
        return Err(BresseError::InsufficientData(format!(
            "classification needs at least 8 samples, got {}",
            sweep.len()
        )));
    }
    let lo = sweep.iter().map(|s| s.lambda).fold(f64::INFINITY, f64::min);
    let hi = sweep.iter().map(|s| s.lambda).fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || (hi / lo).log10() < 1.5 - 1e-12 {
        return Err(BresseError::InsufficientData(format!(
            "sweep spans {:.3} decades, need at least 1.5",
            (hi / lo).log10()
        )));
    }
    let window_lo = hi / 10.0;
    let pts: Vec<&ResolventSample> = sweep.iter().filter(|s| s.lambda >= window_lo * (1.0 - 1e-12)).collect();
    if pts.len() < 3 {
        return Err(BresseError::InsufficientData(
            "fewer than 3 samples in the top decade".into(),
        ));
    }
    let x: Vec<f64> = pts.iter().map(|s| s.lambda.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|s| s.norm.ln()).collect();
    let (slope, intercept, r_squared) = linear_fit(&x, &y);
    Ok(Classification {
        class: class_from_slope(slope),
        slope,
        intercept,
        r_squared,
        window: (window_lo, hi),
        points: pts.len(),
    })
}
