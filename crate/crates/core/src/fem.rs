//! Piecewise-linear finite elements for the damped Bresse system.
//!
//! The semi-discrete system is M ü + C u̇ + K u = 0 on the constrained
//! displacement space, written in first order as s = (u, v) with
//! u' = v, M v' = -K u - C v. The energy Gram matrix on s is
//! blockdiag(K, M).
//!
//! Nodal unknowns are interleaved per node as (φ, ψ, w). Fully Dirichlet
//! conditions drop the end nodes. Under Dirichlet-Neumann-Neumann
//! conditions φ loses its end nodes and the ψ and w fields are restricted to
//! the mean-zero subspace through a Householder reflector per field, which
//! gives an orthonormal basis of that subspace (the discrete analogue of
//! H¹_* and L²_*).

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BresseError, Result};
use crate::linalg::{
    dense_generalized_symmetric_eigen, dot, gauss_legendre, CooBuilder, CsrMatrix, GaussRule,
    SpdFactor, SystemMatrix,
};
use crate::model::{
    BoundaryCondition, DampingModel, DampingProfile, InitialKind, ProfilePiece, ScenarioConfig,
};

pub const PHI: usize = 0;
pub const PSI: usize = 1;
pub const W: usize = 2;
const FIELDS: usize = 3;

/// Uniform mesh of `n_elements` cells, refined only where a damping
/// breakpoint falls strictly inside a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub length: f64,
    pub n_elements: usize,
    pub nodes: Vec<f64>,
}

impl Mesh {
    pub fn uniform(length: f64, n_elements: usize) -> Self {
        let h = length / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| i as f64 * h).collect();
        nodes[n_elements] = length;
        Self {
            length,
            n_elements,
            nodes,
        }
    }

    /// Uniform mesh with extra nodes at breakpoints that do not already sit
    /// on a node (within 10⁻⁹ h).
    pub fn with_breakpoints(length: f64, n_elements: usize, breakpoints: &[f64]) -> Self {
        let mut mesh = Self::uniform(length, n_elements);
        let h = mesh.h();
        for &b in breakpoints {
            if b <= 0.0 || b >= length {
                continue;
            }
            let pos = mesh.nodes.partition_point(|&x| x < b);
            let near = |i: usize| mesh.nodes.get(i).is_some_and(|&x| (x - b).abs() <= 1e-9 * h);
            if near(pos) || (pos > 0 && near(pos - 1)) {
                continue;
            }
            mesh.nodes.insert(pos, b);
        }
        mesh
    }

    /// Background element size L / N.
    pub fn h(&self) -> f64 {
        self.length / self.n_elements as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes
            .windows(2)
            .enumerate()
            .map(|(e, w)| (e, w[0], w[1]))
    }

    /// ∫ N_j dx for every hat function.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for (e, a, b) in self.cells() {
            m[e] += 0.5 * (b - a);
            m[e + 1] += 0.5 * (b - a);
        }
        m
    }
}

/// Householder reflector H = I - 2 v vᵀ / (vᵀ v) acting on one field.
/// Its columns other than the first span the mean-zero subspace.
#[derive(Debug, Clone)]
struct FieldReflector {
    field: usize,
    v: Vec<f64>,
    vv: f64,
}

impl FieldReflector {
    fn new(field: usize, weights: &[f64]) -> Self {
        let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        let mut v: Vec<f64> = weights.iter().map(|w| w / norm).collect();
        v[0] += 1.0;
        let vv = v.iter().map(|x| x * x).sum();
        Self { field, v, vv }
    }

    fn apply(&self, x: &mut [f64]) {
        let s: f64 = self
            .v
            .iter()
            .enumerate()
            .map(|(j, vj)| vj * x[FIELDS * j + self.field])
            .sum();
        let c = 2.0 * s / self.vv;
        for (j, vj) in self.v.iter().enumerate() {
            x[FIELDS * j + self.field] -= c * vj;
        }
    }

    /// Two-sided application to a dense nodal matrix: A ← H A H.
    fn apply_two_sided(&self, a: &mut DMatrix<f64>) {
        let n = a.nrows();
        let idx: Vec<usize> = (0..self.v.len()).map(|j| FIELDS * j + self.field).collect();
        // rows: A ← A - (2/vv) v (vᵀ A)
        let mut vt_a = vec![0.0; n];
        for (k, &i) in idx.iter().enumerate() {
            let vk = self.v[k];
            for c in 0..n {
                vt_a[c] += vk * a[(i, c)];
            }
        }
        for (k, &i) in idx.iter().enumerate() {
            let f = 2.0 * self.v[k] / self.vv;
            for c in 0..n {
                a[(i, c)] -= f * vt_a[c];
            }
        }
        // columns: A ← A - (2/vv) (A v) vᵀ
        let mut a_v = vec![0.0; n];
        for (k, &j) in idx.iter().enumerate() {
            let vk = self.v[k];
            for r in 0..n {
                a_v[r] += a[(r, j)] * vk;
            }
        }
        for (k, &j) in idx.iter().enumerate() {
            let f = 2.0 * self.v[k] / self.vv;
            for r in 0..n {
                a[(r, j)] -= a_v[r] * f;
            }
        }
    }
}

/// Map between nodal unknowns and coordinates on the constrained space:
/// nodal = Q · S · reduced, with S a column selection and Q a product of
/// field reflectors (identity under fully Dirichlet conditions).
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub bc: BoundaryCondition,
    n_nodes: usize,
    kept: Vec<usize>,
    reflectors: Vec<FieldReflector>,
    weights: Vec<f64>,
}

impl DofLayout {
    pub fn new(mesh: &Mesh, bc: BoundaryCondition) -> Self {
        let n_nodes = mesh.n_nodes();
        let last = n_nodes - 1;
        let mut kept = Vec::new();
        for j in 0..n_nodes {
            for f in 0..FIELDS {
                let keep = match (bc, f) {
                    (BoundaryCondition::FullDirichlet, _) | (_, PHI) => j != 0 && j != last,
                    // slot 0 of each reflected field carries the mean
                    (BoundaryCondition::DirichletNeumannNeumann, _) => j != 0,
                };
                if keep {
                    kept.push(FIELDS * j + f);
                }
            }
        }
        let weights = mesh.lumped_weights();
        let reflectors = match bc {
            BoundaryCondition::FullDirichlet => vec![],
            BoundaryCondition::DirichletNeumannNeumann => vec![
                FieldReflector::new(PSI, &weights),
                FieldReflector::new(W, &weights),
            ],
        };
        Self {
            bc,
            n_nodes,
            kept,
            reflectors,
            weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    pub fn n_nodal(&self) -> usize {
        FIELDS * self.n_nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn is_node_local(&self) -> bool {
        self.reflectors.is_empty()
    }

    /// Nodal vector of a constrained-space coordinate vector.
    pub fn expand(&self, reduced: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_nodal()];
        for (r, &i) in self.kept.iter().enumerate() {
            x[i] = reduced[r];
        }
        for q in &self.reflectors {
            q.apply(&mut x);
        }
        x
    }

    /// Coordinates of a nodal vector that already satisfies the
    /// constraints (exact left inverse of `expand` on its range).
    pub fn coordinates(&self, nodal: &[f64]) -> Vec<f64> {
        let mut x = nodal.to_vec();
        for q in &self.reflectors {
            q.apply(&mut x);
        }
        self.kept.iter().map(|&i| x[i]).collect()
    }

    /// Projects a nodal vector onto the constrained space: zeroes the
    /// Dirichlet end values and, under DNND, subtracts the mean of ψ and w.
    pub fn project(&self, nodal: &[f64]) -> Vec<f64> {
        let mut x = nodal.to_vec();
        let last = self.n_nodes - 1;
        let dirichlet_fields: &[usize] = match self.bc {
            BoundaryCondition::FullDirichlet => &[PHI, PSI, W],
            BoundaryCondition::DirichletNeumannNeumann => &[PHI],
        };
        for &f in dirichlet_fields {
            x[f] = 0.0;
            x[FIELDS * last + f] = 0.0;
        }
        if self.bc == BoundaryCondition::DirichletNeumannNeumann {
            for f in [PSI, W] {
                let field: Vec<f64> = (0..self.n_nodes).map(|j| x[FIELDS * j + f]).collect();
                let projected = project_mean_zero(&field, &self.weights);
                for (j, v) in projected.into_iter().enumerate() {
                    x[FIELDS * j + f] = v;
                }
            }
        }
        x
    }

    /// Discrete mean ∫ f_h dx of one nodal field.
    pub fn field_mean(&self, nodal: &[f64], field: usize) -> f64 {
        (0..self.n_nodes)
            .map(|j| self.weights[j] * nodal[FIELDS * j + field])
            .sum()
    }

    fn restrict(&self, a: &CsrMatrix) -> SystemMatrix {
        if self.is_node_local() {
            let mut pos = vec![usize::MAX; self.n_nodal()];
            for (r, &i) in self.kept.iter().enumerate() {
                pos[i] = r;
            }
            let mut b = CooBuilder::new(self.dim());
            for (i, j, v) in a.triplets() {
                let (ri, rj) = (pos[i], pos[j]);
                if ri != usize::MAX && rj != usize::MAX {
                    b.add(ri, rj, v);
                }
            }
            SystemMatrix::Sparse(b.build())
        } else {
            let mut d = a.to_dense();
            for q in &self.reflectors {
                q.apply_two_sided(&mut d);
            }
            let n = self.dim();
            let mut out = DMatrix::zeros(n, n);
            for (r, &i) in self.kept.iter().enumerate() {
                for (c, &j) in self.kept.iter().enumerate() {
                    out[(r, c)] = d[(i, j)];
                }
            }
            // reflected products are symmetric only to rounding
            let sym = (&out + out.transpose()) * 0.5;
            SystemMatrix::Dense(sym)
        }
    }
}

/// L²-orthogonal projection onto mean-zero functions: subtracts the
/// weighted mean Σ mⱼ fⱼ / Σ mⱼ.
pub fn project_mean_zero(field: &[f64], weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mean = dot(field, weights) / total;
    field.iter().map(|f| f - mean).collect()
}

/// First-order state (u, v) in constrained coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| a * x).collect(),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.u.iter().chain(&self.v).copied().collect()
    }

    pub fn from_vec(x: &[f64]) -> Self {
        let n = x.len() / 2;
        Self {
            u: x[..n].to_vec(),
            v: x[n..].to_vec(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| *x == 0.0)
    }
}

/// The six nodal fields of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalFields {
    pub x: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_t: Vec<f64>,
    pub w: Vec<f64>,
    pub w_t: Vec<f64>,
}

/// Assembled discrete generator and energy structure of one scenario.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub config: ScenarioConfig,
    pub mesh: Mesh,
    pub layout: DofLayout,
    /// Kinetic Gram matrix.
    pub mass: SystemMatrix,
    /// Elastic strain form with weights (k1, k2, k3).
    pub stiffness: SystemMatrix,
    /// Kelvin-Voigt strain form with weights (D1, D2, D3), or the
    /// coefficient-weighted mass in viscous mode.
    pub damping: SystemMatrix,
    /// H¹ seminorm Gram ∫ φ_x² + ψ_x² + w_x².
    pub seminorm: SystemMatrix,
    mass_factor: SpdFactor,
}

/// Coefficients of a quadratic form's three strain channels.
#[derive(Clone, Copy)]
enum Weights<'a> {
    Constant([f64; 3]),
    Profiles([&'a DampingProfile; 3]),
}

fn piece_at<'a>(profile: &'a DampingProfile, x: f64) -> &'a ProfilePiece {
    profile
        .pieces
        .iter()
        .find(|p| p.start <= x && x <= p.end)
        .unwrap_or_else(|| profile.pieces.last().expect("validated profile"))
}

/// Quadrature sub-intervals of [a, b] split at every profile breakpoint,
/// each paired with a rule exact for the coefficient times a product of
/// two linear functions.
fn sub_intervals(a: f64, b: f64, weights: &Weights<'_>) -> Vec<(f64, f64, GaussRule)> {
    let mut cuts = vec![a, b];
    let mut degree = 0;
    if let Weights::Profiles(ps) = weights {
        for p in ps {
            for bp in p.breakpoints() {
                if bp > a && bp < b {
                    cuts.push(bp);
                }
            }
            degree = degree.max(p.max_degree());
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (b - a));
    let rule = gauss_legendre((degree + 3).div_ceil(2).max(2));
    cuts.windows(2)
        .map(|w| (w[0], w[1], rule.clone()))
        .collect()
}

fn weight_values(weights: &Weights<'_>, x: f64, mid: f64) -> [f64; 3] {
    match weights {
        Weights::Constant(k) => *k,
        Weights::Profiles(ps) => [
            piece_at(ps[0], mid).eval(x),
            piece_at(ps[1], mid).eval(x),
            piece_at(ps[2], mid).eval(x),
        ],
    }
}

/// Element matrix of the strain form
/// ∫ c1 (φx+ψ+ℓw)(·) + c2 ψx(·) + c3 (wx-ℓφ)(·) dx
/// for local unknowns (φa, ψa, wa, φb, ψb, wb).
fn strain_element(a: f64, b: f64, ell: f64, weights: &Weights<'_>) -> [[f64; 6]; 6] {
    let h = b - a;
    let mut ke = [[0.0; 6]; 6];
    for (s0, s1, rule) in sub_intervals(a, b, weights) {
        let mid = 0.5 * (s0 + s1);
        for (x, wq) in rule.mapped(s0, s1) {
            let c = weight_values(weights, x, mid);
            let na = (b - x) / h;
            let nb = (x - a) / h;
            let (da, db) = (-1.0 / h, 1.0 / h);
            let rows = [
                [da, na, ell * na, db, nb, ell * nb],
                [0.0, da, 0.0, 0.0, db, 0.0],
                [-ell * na, 0.0, da, -ell * nb, 0.0, db],
            ];
            for i in 0..6 {
                for j in 0..6 {
                    let v = c[0] * rows[0][i] * rows[0][j]
                        + c[1] * rows[1][i] * rows[1][j]
                        + c[2] * rows[2][i] * rows[2][j];
                    ke[i][j] += wq * v;
                }
            }
        }
    }
    ke
}

/// Element matrix of the field-wise weighted L² form ∫ cf f g dx.
fn mass_element(a: f64, b: f64, weights: &Weights<'_>) -> [[f64; 6]; 6] {
    let h = b - a;
    let mut me = [[0.0; 6]; 6];
    for (s0, s1, rule) in sub_intervals(a, b, weights) {
        let mid = 0.5 * (s0 + s1);
        for (x, wq) in rule.mapped(s0, s1) {
            let c = weight_values(weights, x, mid);
            let n = [(b - x) / h, (x - a) / h];
            for f in 0..FIELDS {
                for p in 0..2 {
                    for q in 0..2 {
                        me[FIELDS * p + f][FIELDS * q + f] += wq * c[f] * n[p] * n[q];
                    }
                }
            }
        }
    }
    me
}

fn seminorm_element(a: f64, b: f64) -> [[f64; 6]; 6] {
    let h = b - a;
    let mut se = [[0.0; 6]; 6];
    for f in 0..FIELDS {
        se[f][f] = 1.0 / h;
        se[FIELDS + f][FIELDS + f] = 1.0 / h;
        se[f][FIELDS + f] = -1.0 / h;
        se[FIELDS + f][f] = -1.0 / h;
    }
    se
}

fn assemble_nodal(mesh: &Mesh, element: impl Fn(f64, f64) -> [[f64; 6]; 6]) -> CsrMatrix {
    let mut coo = CooBuilder::new(FIELDS * mesh.n_nodes());
    for (e, a, b) in mesh.cells() {
        let ke = element(a, b);
        for (p, row) in ke.iter().enumerate() {
            let gi = FIELDS * e + p;
            for (q, &v) in row.iter().enumerate() {
                coo.add(gi, FIELDS * e + q, v);
            }
        }
    }
    coo.build()
}

/// Nodal (unconstrained) stiffness-type matrix of the strain form with
/// constant weights; used for structure checks.
pub fn nodal_strain_matrix(mesh: &Mesh, ell: f64, weights: [f64; 3]) -> CsrMatrix {
    let w = Weights::Constant(weights);
    assemble_nodal(mesh, |a, b| strain_element(a, b, ell, &w))
}

/// Nodal strain form with the three damping profiles as weights.
pub fn nodal_profile_strain_matrix(
    mesh: &Mesh,
    ell: f64,
    profiles: [&DampingProfile; 3],
) -> CsrMatrix {
    let w = Weights::Profiles(profiles);
    assemble_nodal(mesh, |a, b| strain_element(a, b, ell, &w))
}

/// Assembles the discrete operator of a validated scenario.
pub fn assemble(cfg: &ScenarioConfig) -> Result<DiscreteOperator> {
    cfg.validate()?;
    let p = &cfg.params;
    let d = &cfg.damping;
    let mut breakpoints: Vec<f64> = d.profiles().iter().flat_map(|pr| pr.breakpoints()).collect();
    breakpoints.sort_by(f64::total_cmp);
    let mesh = Mesh::with_breakpoints(p.length, cfg.n_elements, &breakpoints);
    let layout = DofLayout::new(&mesh, cfg.bc);

    let kw = Weights::Constant([p.k1, p.k2, p.k3]);
    let k_nodal = assemble_nodal(&mesh, |a, b| strain_element(a, b, p.ell, &kw));
    let rw = Weights::Constant([p.rho1, p.rho2, p.rho1]);
    let m_nodal = assemble_nodal(&mesh, |a, b| mass_element(a, b, &rw));
    let dw = Weights::Profiles(d.profiles());
    let c_nodal = match d.model {
        DampingModel::KelvinVoigt => assemble_nodal(&mesh, |a, b| strain_element(a, b, p.ell, &dw)),
        DampingModel::Viscous => assemble_nodal(&mesh, |a, b| mass_element(a, b, &dw)),
    };
    let s_nodal = assemble_nodal(&mesh, seminorm_element);

    let mass = layout.restrict(&m_nodal);
    let stiffness = layout.restrict(&k_nodal);
    let damping = layout.restrict(&c_nodal);
    let seminorm = layout.restrict(&s_nodal);

    let mass_factor = SpdFactor::new(&[(1.0, &mass)])?;
    SpdFactor::new(&[(1.0, &stiffness)]).map_err(|_| BresseError::NotPositiveDefinite {
        what: "constrained stiffness (is L = nπ/ℓ under DNND conditions?)",
    })?;

    Ok(DiscreteOperator {
        config: cfg.clone(),
        mesh,
        layout,
        mass,
        stiffness,
        damping,
        seminorm,
        mass_factor,
    })
}

impl DiscreteOperator {
    /// Number of constrained displacement unknowns; states have twice this.
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn state_dim(&self) -> usize {
        2 * self.dim()
    }

    pub fn is_undamped(&self) -> bool {
        self.damping.is_zero()
    }

    pub fn solve_mass(&self, b: &[f64]) -> Vec<f64> {
        self.mass_factor.solve(b)
    }

    fn check(&self, s: &StateVector) -> Result<()> {
        let n = self.dim();
        for len in [s.u.len(), s.v.len()] {
            if len != n {
                return Err(BresseError::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(())
    }

    /// Energy inner product ⟨s, r⟩_G = uᵀ K u' + vᵀ M v'.
    pub fn gram_inner(&self, s: &StateVector, r: &StateVector) -> f64 {
        self.stiffness.bilinear(&s.u, &r.u) + self.mass.bilinear(&s.v, &r.v)
    }

    pub fn energy_norm(&self, s: &StateVector) -> f64 {
        self.gram_inner(s, s).max(0.0).sqrt()
    }

    /// Dense generator [[0, I], [-M⁻¹K, -M⁻¹C]].
    pub fn dense_generator(&self) -> DMatrix<f64> {
        let n = self.dim();
        let k = self.stiffness.to_dense();
        let c = self.damping.to_dense();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
        }
        for j in 0..n {
            let kc: Vec<f64> = k.column(j).iter().map(|x| -x).collect();
            let cc: Vec<f64> = c.column(j).iter().map(|x| -x).collect();
            let mk = self.solve_mass(&kc);
            let mc = self.solve_mass(&cc);
            for i in 0..n {
                a[(n + i, j)] = mk[i];
                a[(n + i, n + j)] = mc[i];
            }
        }
        a
    }

    /// Dense energy Gram blockdiag(K, M).
    pub fn dense_gram(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        g.view_mut((0, 0), (n, n)).copy_from(&self.stiffness.to_dense());
        g.view_mut((n, n), (n, n)).copy_from(&self.mass.to_dense());
        g
    }

    pub fn nodal_fields(&self, s: &StateVector) -> NodalFields {
        let u = self.layout.expand(&s.u);
        let v = self.layout.expand(&s.v);
        let pick = |x: &[f64], f: usize| -> Vec<f64> {
            (0..self.layout.n_nodes()).map(|j| x[FIELDS * j + f]).collect()
        };
        NodalFields {
            x: self.mesh.nodes.clone(),
            phi: pick(&u, PHI),
            phi_t: pick(&v, PHI),
            psi: pick(&u, PSI),
            psi_t: pick(&v, PSI),
            w: pick(&u, W),
            w_t: pick(&v, W),
        }
    }

    /// Builds a conforming state from nodal fields, projecting onto the
    /// constrained space first.
    pub fn state_from_nodal(&self, f: &NodalFields) -> Result<StateVector> {
        let nn = self.layout.n_nodes();
        for field in [&f.phi, &f.phi_t, &f.psi, &f.psi_t, &f.w, &f.w_t] {
            if field.len() != nn {
                return Err(BresseError::DimensionMismatch {
                    expected: nn,
                    got: field.len(),
                });
            }
        }
        let mut u = vec![0.0; FIELDS * nn];
        let mut v = vec![0.0; FIELDS * nn];
        for j in 0..nn {
            u[FIELDS * j + PHI] = f.phi[j];
            u[FIELDS * j + PSI] = f.psi[j];
            u[FIELDS * j + W] = f.w[j];
            v[FIELDS * j + PHI] = f.phi_t[j];
            v[FIELDS * j + PSI] = f.psi_t[j];
            v[FIELDS * j + W] = f.w_t[j];
        }
        Ok(StateVector {
            u: self.layout.coordinates(&self.layout.project(&u)),
            v: self.layout.coordinates(&self.layout.project(&v)),
        })
    }

    /// Writes M, K, C and G in MatrixMarket coordinate format.
    pub fn dump_matrices(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let n = self.dim();
        let write = |name: &str, n: usize, entries: Vec<(usize, usize, f64)>| -> Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            writeln!(f, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(f, "{n} {n} {}", entries.len())?;
            for (i, j, v) in entries {
                writeln!(f, "{} {} {:.16e}", i + 1, j + 1, v)?;
            }
            Ok(())
        };
        write("M.mtx", n, self.mass.triplets())?;
        write("K.mtx", n, self.stiffness.triplets())?;
        write("C.mtx", n, self.damping.triplets())?;
        let mut g = self.stiffness.triplets();
        g.extend(self.mass.triplets().into_iter().map(|(i, j, v)| (i + n, j + n, v)));
        write("G.mtx", 2 * n, g)?;
        Ok(())
    }
}

/// E = ½ (vᵀ M v + uᵀ K u).
pub fn energy(op: &DiscreteOperator, s: &StateVector) -> Result<f64> {
    op.check(s)?;
    Ok(0.5 * op.gram_inner(s, s))
}

/// Instantaneous dissipation vᵀ C v.
pub fn dissipation_rate(op: &DiscreteOperator, s: &StateVector) -> Result<f64> {
    op.check(s)?;
    Ok(op.damping.bilinear(&s.v, &s.v))
}

/// A_h s = (v, M⁻¹(-K u - C v)).
pub fn apply_generator(op: &DiscreteOperator, s: &StateVector) -> Result<StateVector> {
    op.check(s)?;
    let ku = op.stiffness.mul_vec(&s.u);
    let cv = op.damping.mul_vec(&s.v);
    let rhs: Vec<f64> = ku.iter().zip(&cv).map(|(a, b)| -a - b).collect();
    Ok(StateVector {
        u: s.v.clone(),
        v: op.solve_mass(&rhs),
    })
}

/// Largest and smallest generalized Rayleigh quotient of the strain energy
/// against the H¹ seminorm on the constrained space.
pub fn norm_equivalence_constants(op: &DiscreteOperator) -> Result<(f64, f64)> {
    let k = op.stiffness.to_dense();
    let s = op.seminorm.to_dense();
    let eig = dense_generalized_symmetric_eigen(&k, &s).map_err(|_| {
        BresseError::NotPositiveDefinite {
            what: "seminorm Gram on the constrained space",
        }
    })?;
    let c1 = eig.values[0];
    let c0 = *eig.values.last().unwrap();
    if !(c1 > 0.0) {
        return Err(BresseError::NotPositiveDefinite {
            what: "strain energy relative to the seminorm",
        });
    }
    Ok((c0, c1))
}

/// Undamped modes: ω² ascending and M-orthonormal shapes (columns).
pub fn undamped_modes(op: &DiscreteOperator) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let e = dense_generalized_symmetric_eigen(&op.stiffness.to_dense(), &op.mass.to_dense())?;
    Ok((e.values, e.vectors))
}

/// Builds a unit-energy initial state.
pub fn sample_initial(op: &DiscreteOperator, kind: &InitialKind) -> Result<StateVector> {
    let n = op.dim();
    let state = match kind {
        InitialKind::Modal(m) => {
            if *m == 0 || *m > n {
                return Err(BresseError::InvalidArgument(format!(
                    "mode index {m} outside 1..={n}"
                )));
            }
            let (_, shapes) = undamped_modes(op)?;
            StateVector {
                u: shapes.column(m - 1).iter().copied().collect(),
                v: vec![0.0; n],
            }
        }
        InitialKind::RandomHighFreq(seed) => {
            let (omega2, shapes) = undamped_modes(op)?;
            let cap = op.config.resolved_frequency_cap();
            let mut band: Vec<usize> = (0..n)
                .filter(|&k| {
                    let w = omega2[k].max(0.0).sqrt();
                    w >= 0.5 * cap && w <= cap
                })
                .collect();
            if band.is_empty() {
                band = (n / 2..n).collect();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut u = vec![0.0; n];
            let mut v = vec![0.0; n];
            for &k in &band {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let b: f64 = rng.gen_range(-1.0..1.0);
                let w = omega2[k].max(f64::MIN_POSITIVE).sqrt();
                for i in 0..n {
                    u[i] += a / w * shapes[(i, k)];
                    v[i] += b * shapes[(i, k)];
                }
            }
            StateVector { u, v }
        }
        InitialKind::FromFile(path) => {
            let fields = read_nodal_csv(path)?;
            op.state_from_nodal(&fields)?
        }
    };
    let e = energy(op, &state)?;
    if !(e > 0.0) {
        return Err(BresseError::InvalidArgument(
            "initial state has zero energy after projection".into(),
        ));
    }
    Ok(state.scaled(1.0 / e.sqrt()))
}

/// Reads nodal fields from CSV with header `x,phi,phi_t,psi,psi_t,w,w_t`.
pub fn read_nodal_csv(path: &Path) -> Result<NodalFields> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BresseError::ScenarioFile(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().unwrap_or_default().trim();
    if header != "x,phi,phi_t,psi,psi_t,w,w_t" {
        return Err(BresseError::ScenarioFile(format!(
            "{}: expected header x,phi,phi_t,psi,psi_t,w,w_t, found {header:?}",
            path.display()
        )));
    }
    let mut cols: [Vec<f64>; 7] = Default::default();
    for (k, line) in lines.enumerate() {
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 7 {
            return Err(BresseError::ScenarioFile(format!(
                "{}: row {} has {} columns",
                path.display(),
                k + 1,
                vals.len()
            )));
        }
        for (c, v) in vals.iter().enumerate() {
            let x: f64 = v.trim().parse().map_err(|_| {
                BresseError::ScenarioFile(format!("{}: bad number {v:?}", path.display()))
            })?;
            cols[c].push(x);
        }
    }
    let [x, phi, phi_t, psi, psi_t, w, w_t] = cols;
    Ok(NodalFields {
        x,
        phi,
        phi_t,
        psi,
        psi_t,
        w,
        w_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BeamParameters, DampingSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_cfg(n: usize, bc: BoundaryCondition, damping: DampingSpec, ell: f64, l: f64) -> ScenarioConfig {
        ScenarioConfig::new(BeamParameters::unit(ell, l), damping, bc, n)
    }

    fn global_kv(l: f64) -> DampingSpec {
        let g = || DampingProfile::global(l, 1.0);
        DampingSpec::kelvin_voigt(g(), g(), g())
    }

    #[test]
    fn breakpoints_off_the_grid_are_inserted() {
        let m = Mesh::with_breakpoints(1.0, 4, &[0.25, 0.3, 0.7, 1.0]);
        assert_eq!(m.nodes.len(), 7);
        assert!(m.nodes.contains(&0.3) && m.nodes.contains(&0.7));
        assert!(m.nodes.windows(2).all(|w| w[1] > w[0]));
        let m = Mesh::with_breakpoints(1.0, 10, &[0.3, 0.7]);
        assert_eq!(m.nodes.len(), 11);
    }

    #[test]
    fn undamped_scenario_has_zero_damping_matrix() {
        let op = assemble(&unit_cfg(8, BoundaryCondition::FullDirichlet, DampingSpec::undamped(1.0), 1.0, 1.0)).unwrap();
        assert!(op.damping.is_zero());
        assert!(op.is_undamped());
    }

    #[test]
    fn timoshenko_limit_decouples_w_bitwise() {
        let mesh = Mesh::uniform(1.0, 6);
        let k = nodal_strain_matrix(&mesh, 0.0, [1.3, 0.7, 2.1]);
        for (i, j, v) in k.triplets() {
            let wi = i % FIELDS == W;
            let wj = j % FIELDS == W;
            if wi != wj {
                assert_eq!(v.to_bits(), 0, "K[{i},{j}] = {v}");
            }
        }
    }

    #[test]
    fn kelvin_voigt_form_with_stiffness_weights_reproduces_k() {
        let l = 1.0;
        let mesh = Mesh::with_breakpoints(l, 10, &[0.3, 0.7]);
        let k = nodal_strain_matrix(&mesh, 0.8, [2.0, 3.0, 5.0]);
        let g = |v| DampingProfile::global(l, v);
        let (a, b, c) = (g(2.0), g(3.0), g(5.0));
        let cm = nodal_profile_strain_matrix(&mesh, 0.8, [&a, &b, &c]);
        assert_eq!(k.pattern(), cm.pattern());
        let scale = k.max_abs();
        for ((_, _, x), (_, _, y)) in k.triplets().into_iter().zip(cm.triplets()) {
            assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn energy_of_zero_state_is_zero() {
        let op = assemble(&unit_cfg(8, BoundaryCondition::FullDirichlet, global_kv(1.0), 1.0, 1.0)).unwrap();
        let s = StateVector::zeros(op.dim());
        assert_eq!(energy(&op, &s).unwrap(), 0.0);
        assert_eq!(dissipation_rate(&op, &s).unwrap(), 0.0);
        assert!(apply_generator(&op, &s).unwrap().is_zero());
        assert!(energy(&op, &StateVector::zeros(3)).is_err());
    }

    fn fields_from(op: &DiscreteOperator, f: impl Fn(f64) -> [f64; 6]) -> NodalFields {
        let xs = op.mesh.nodes.clone();
        let vals: Vec<[f64; 6]> = xs.iter().map(|&x| f(x)).collect();
        let col = |k: usize| vals.iter().map(|v| v[k]).collect::<Vec<_>>();
        NodalFields {
            x: xs.clone(),
            phi: col(0),
            phi_t: col(1),
            psi: col(2),
            psi_t: col(3),
            w: col(4),
            w_t: col(5),
        }
    }

    #[test]
    fn kinetic_energy_of_linear_velocity_field_is_exact() {
        // φ_t = x(1 - x) interpolated: P1 mass integrates the interpolant exactly.
        let op = assemble(&unit_cfg(10, BoundaryCondition::FullDirichlet, DampingSpec::undamped(1.0), 1.0, 1.0)).unwrap();
        let s = op
            .state_from_nodal(&fields_from(&op, |x| [0.0, x * (1.0 - x), 0.0, 0.0, 0.0, 0.0]))
            .unwrap();
        // ½ ρ1 ∫ (interpolant)² via per-element closed form
        let mut exact = 0.0;
        for (_, a, b) in op.mesh.cells() {
            let (fa, fb) = (a * (1.0 - a), b * (1.0 - b));
            exact += (b - a) * (fa * fa + fa * fb + fb * fb) / 3.0;
        }
        assert_relative_eq!(energy(&op, &s).unwrap(), 0.5 * exact, max_relative = 1e-13);
    }

    #[test]
    fn energy_of_sine_displacement_converges() {
        // φ = sin(πx/L): E = ¼ (k1 π²/L + k3 ℓ² L)
        let l = 1.0;
        let op = assemble(&unit_cfg(200, BoundaryCondition::FullDirichlet, DampingSpec::undamped(l), 1.0, l)).unwrap();
        let s = op
            .state_from_nodal(&fields_from(&op, |x| [(PI * x / l).sin(), 0.0, 0.0, 0.0, 0.0, 0.0]))
            .unwrap();
        let exact = 0.25 * (PI * PI / l + l);
        assert_relative_eq!(energy(&op, &s).unwrap(), exact, max_relative = 1e-3);
    }

    #[test]
    fn dissipation_of_sine_shear_velocity_converges() {
        // ψ_t = sin(πx/L), D2 ≡ 1: ∫ ψ_xt² = π²/(2L)
        let l = 1.0;
        let spec = DampingSpec::kelvin_voigt(
            DampingProfile::zero(l),
            DampingProfile::global(l, 1.0),
            DampingProfile::zero(l),
        );
        let op = assemble(&unit_cfg(200, BoundaryCondition::FullDirichlet, spec, 1.0, l)).unwrap();
        let s = op
            .state_from_nodal(&fields_from(&op, |x| [0.0, 0.0, 0.0, (PI * x / l).sin(), 0.0, 0.0]))
            .unwrap();
        assert_relative_eq!(
            dissipation_rate(&op, &s).unwrap(),
            PI * PI / (2.0 * l),
            max_relative = 1e-3
        );
    }

    #[test]
    fn generator_satisfies_dissipation_identity() {
        let l = 1.0;
        let spec = DampingSpec::kelvin_voigt(
            DampingProfile::indicator(l, 0.2, 0.6, 1.5),
            DampingProfile::smoothstep(l, 0.3, 0.7, 0.8, 0.1),
            DampingProfile::indicator(l, 0.4, 0.9, 2.0),
        );
        for bc in [BoundaryCondition::FullDirichlet, BoundaryCondition::DirichletNeumannNeumann] {
            let op = assemble(&unit_cfg(12, bc, spec.clone(), 0.7, l)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let n = op.dim();
            let s = StateVector {
                u: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                v: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let a = apply_generator(&op, &s).unwrap();
            let lhs = op.gram_inner(&a, &s);
            let d = dissipation_rate(&op, &s).unwrap();
            assert!((lhs + d).abs() <= 1e-10 * d.abs().max(1.0), "{lhs} vs {d}");
        }
    }

    #[test]
    fn dnnd_states_have_zero_mean_and_projection_is_idempotent() {
        let l = 2.0;
        let op = assemble(&unit_cfg(9, BoundaryCondition::DirichletNeumannNeumann, global_kv(l), 0.5, l)).unwrap();
        let weights = op.mesh.lumped_weights();
        let f: Vec<f64> = op.mesh.nodes.iter().map(|x| 1.0 + x * x).collect();
        let once = project_mean_zero(&f, &weights);
        let twice = project_mean_zero(&once, &weights);
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() <= 1e-12);
        }
        let s = op
            .state_from_nodal(&fields_from(&op, |x| [x * (l - x), 1.0, x, x * x, 2.0 - x, x.cos()]))
            .unwrap();
        let u = op.layout.expand(&s.u);
        let v = op.layout.expand(&s.v);
        for f in [PSI, W] {
            assert!(op.layout.field_mean(&u, f).abs() < 1e-13);
            assert!(op.layout.field_mean(&v, f).abs() < 1e-13);
        }
        // round trip through coordinates
        let back = op.layout.coordinates(&u);
        for (a, b) in back.iter().zip(&s.u) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn resonant_dnnd_is_rejected_before_assembly() {
        let cfg = unit_cfg(8, BoundaryCondition::DirichletNeumannNeumann, DampingSpec::undamped(PI), 1.0, PI);
        assert!(matches!(assemble(&cfg), Err(BresseError::InvalidScenario(_))));
    }

    #[test]
    fn norm_constants_bracket_one_in_the_timoshenko_limit() {
        let cfg = unit_cfg(40, BoundaryCondition::FullDirichlet, DampingSpec::undamped(1.0), 1e-8, 1.0);
        let op = assemble(&cfg).unwrap();
        let (c0, c1) = norm_equivalence_constants(&op).unwrap();
        assert!(c1 > 0.0 && c1 <= 1.0 + 1e-9 && c0 >= 1.0, "c0={c0} c1={c1}");
    }

    #[test]
    fn modal_state_is_a_unit_energy_eigenmode() {
        let op = assemble(&unit_cfg(10, BoundaryCondition::FullDirichlet, global_kv(1.0), 1.0, 1.0)).unwrap();
        let s = sample_initial(&op, &InitialKind::Modal(1)).unwrap();
        assert_relative_eq!(energy(&op, &s).unwrap(), 1.0, max_relative = 1e-12);
        let (omega2, _) = undamped_modes(&op).unwrap();
        let ku = op.stiffness.mul_vec(&s.u);
        let mu = op.mass.mul_vec(&s.u);
        let r: f64 = ku.iter().zip(&mu).map(|(a, b)| (a - omega2[0] * b).powi(2)).sum::<f64>().sqrt();
        assert!(r < 1e-8 * crate::linalg::norm2(&ku));
        assert!(sample_initial(&op, &InitialKind::Modal(op.dim() + 1)).is_err());
    }

    #[test]
    fn random_state_is_reproducible() {
        let op = assemble(&unit_cfg(10, BoundaryCondition::FullDirichlet, global_kv(1.0), 1.0, 1.0)).unwrap();
        let a = sample_initial(&op, &InitialKind::RandomHighFreq(7)).unwrap();
        let b = sample_initial(&op, &InitialKind::RandomHighFreq(7)).unwrap();
        let c = sample_initial(&op, &InitialKind::RandomHighFreq(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_relative_eq!(energy(&op, &a).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn initial_state_from_csv() {
        let op = assemble(&unit_cfg(4, BoundaryCondition::FullDirichlet, global_kv(1.0), 1.0, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("init.csv");
        let mut text = String::from("x,phi,phi_t,psi,psi_t,w,w_t\n");
        for &x in &op.mesh.nodes {
            text.push_str(&format!("{x},{},{},0,0,0,0\n", x * (1.0 - x), 0.5 * x));
        }
        std::fs::write(&path, text).unwrap();
        let s = sample_initial(&op, &InitialKind::FromFile(path)).unwrap();
        assert_relative_eq!(energy(&op, &s).unwrap(), 1.0, max_relative = 1e-12);
        let f = op.nodal_fields(&s);
        assert_eq!(f.phi_t[4], 0.0);
    }

    #[test]
    fn matrix_dump_writes_four_files() {
        let op = assemble(&unit_cfg(4, BoundaryCondition::FullDirichlet, global_kv(1.0), 1.0, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        op.dump_matrices(dir.path()).unwrap();
        for name in ["M.mtx", "K.mtx", "C.mtx", "G.mtx"] {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(text.starts_with("%%MatrixMarket"));
        }
    }
}
