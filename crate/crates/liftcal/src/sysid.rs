//! Data-driven Hamiltonian identification from rollout snapshots.
//!
//! `dmd` fits the optimal one-step propagator connecting offset snapshot
//! matrices. `bilinear_dmd` additionally separates drift from control
//! generators by regressing on the column-wise Khatri–Rao product of the
//! control and state snapshots, and converts the fit to continuous
//! generators. `refine_exponential_fit` polishes a learned model against the
//! exact zero-order-hold exponential map, which removes the discretization
//! bias of the linear regressions at coarse step sizes.

use nalgebra::{DMatrix, DVector};

use crate::error::{LiftError, Result};
use crate::lifting::{frechet_exp, ReferenceTriplet};
use crate::pauli::PauliBasis;
use crate::sim::{HamiltonianModel, RolloutRecord};

/// Conditioning below this is flagged as insufficient excitation.
pub const EXCITATION_THRESHOLD: f64 = 1e-8;

/// How snapshot pairs are turned into continuous generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMode {
    /// Fit the discrete one-step maps, then take matrix logarithms of the
    /// fitted maps at the data's control values and refit affinely.
    Discrete,
    /// Regress central-difference (midpoint) derivatives directly.
    ContinuousFd,
}

/// Offset snapshot matrices X, X′ and the aligned control matrix U.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    /// d × N states x(0..T−1), rollouts concatenated column-wise.
    pub x: DMatrix<f64>,
    /// d × N successor states x(1..T).
    pub x_prime: DMatrix<f64>,
    /// J × N controls aligned with the columns of X.
    pub u: DMatrix<f64>,
    pub dt: f64,
    pub derivative_mode: DerivativeMode,
}

impl SnapshotSet {
    pub fn columns(&self) -> usize {
        self.x.ncols()
    }

    pub fn state_dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn controls(&self) -> usize {
        self.u.nrows()
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.derivative_mode = mode;
        self
    }

    /// Column-wise Khatri–Rao product U∗X stacked under X: the bilinear
    /// regressor [X; U∗X] of shape (J+1)d × N.
    pub fn stacked_regressor(&self) -> DMatrix<f64> {
        stacked_regressor(&self.x, &self.u)
    }
}

fn stacked_regressor(x: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    let d = x.nrows();
    let j = u.nrows();
    let n = x.ncols();
    let mut g = DMatrix::zeros((j + 1) * d, n);
    g.view_mut((0, 0), (d, n)).copy_from(x);
    for jj in 0..j {
        for i in 0..n {
            for r in 0..d {
                g[((jj + 1) * d + r, i)] = u[(jj, i)] * x[(r, i)];
            }
        }
    }
    g
}

/// Concatenate rollout records into offset snapshot matrices.
pub fn assemble_snapshots(records: &[RolloutRecord]) -> Result<SnapshotSet> {
    if records.is_empty() {
        return Err(LiftError::InsufficientData("no rollout records".into()));
    }
    let d = records[0].x[0].len();
    let j = records[0].u.controls();
    let dt = records[0].dt;
    let total: usize = records.iter().map(|r| r.horizon()).sum();
    let mut x = DMatrix::zeros(d, total);
    let mut x_prime = DMatrix::zeros(d, total);
    let mut u = DMatrix::zeros(j, total);
    let mut col = 0;
    for rec in records {
        if rec.x[0].len() != d || rec.u.controls() != j {
            return Err(LiftError::ShapeMismatch(
                "rollout records have inconsistent dimensions".into(),
            ));
        }
        if (rec.dt - dt).abs() > 1e-15 {
            return Err(LiftError::Configuration(
                "rollout records have mismatched step sizes".into(),
            ));
        }
        for s in 0..rec.horizon() {
            x.set_column(col, &rec.x[s]);
            x_prime.set_column(col, &rec.x[s + 1]);
            for jj in 0..j {
                u[(jj, col)] = rec.u.u[(s, jj)];
            }
            col += 1;
        }
    }
    Ok(SnapshotSet {
        x,
        x_prime,
        u,
        dt,
        derivative_mode: DerivativeMode::Discrete,
    })
}

/// Result of the plain (control-free) DMD regression.
#[derive(Debug, Clone)]
pub struct DmdResult {
    /// The optimal one-step propagator.
    pub propagator: DMatrix<f64>,
    /// Frobenius norm of the fit residual.
    pub residual: f64,
    /// Smallest singular value of the snapshot matrix.
    pub conditioning: f64,
    /// Set when the minimizer was not unique and the minimum-norm solution
    /// was returned.
    pub minimum_norm: bool,
}

fn pinv(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, f64, bool) {
    let svd = m.clone().svd(true, true);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = tol * smax.max(1.0);
    let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
    let deficient = rank < m.nrows().min(m.ncols());
    let p = svd.pseudo_inverse(cutoff).expect("svd computed");
    (p, smin, deficient)
}

/// Optimal one-step propagator A minimizing ‖A·X − X′‖_F.
pub fn dmd(snapshots: &SnapshotSet) -> Result<DmdResult> {
    if snapshots.columns() == 0 {
        return Err(LiftError::InsufficientData("empty snapshot set".into()));
    }
    let (px, smin, deficient) = pinv(&snapshots.x, 1e-12);
    let propagator = &snapshots.x_prime * px;
    let residual = (&propagator * &snapshots.x - &snapshots.x_prime).norm();
    Ok(DmdResult {
        propagator,
        residual,
        conditioning: smin,
        minimum_norm: deficient || snapshots.columns() < snapshots.state_dim(),
    })
}

/// Continuous drift and control generators identified from data.
#[derive(Debug, Clone)]
pub struct LearnedModel {
    pub a0: DMatrix<f64>,
    pub ac: Vec<DMatrix<f64>>,
    /// Frobenius norm of the regression residual.
    pub residual: f64,
    /// Smallest singular value of the bilinear regressor.
    pub conditioning: f64,
    /// RMS amplitude per control channel in the fitted data.
    pub excitation: Vec<f64>,
    /// Set when the regressor conditioning fell below the excitation
    /// threshold and parts of the fit are minimum-norm (or prior-anchored).
    pub excitation_warning: bool,
}

impl LearnedModel {
    pub fn from_generators(a0: DMatrix<f64>, ac: Vec<DMatrix<f64>>) -> Self {
        let controls = ac.len();
        Self {
            a0,
            ac,
            residual: 0.0,
            conditioning: 0.0,
            excitation: vec![0.0; controls],
            excitation_warning: false,
        }
    }

    /// Concatenated [A0 | A1 | … | AJ].
    fn concat(&self) -> DMatrix<f64> {
        let d = self.a0.nrows();
        let j = self.ac.len();
        let mut m = DMatrix::zeros(d, (j + 1) * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.a0);
        for (jj, a) in self.ac.iter().enumerate() {
            m.view_mut((0, (jj + 1) * d), (d, d)).copy_from(a);
        }
        m
    }

    pub fn generator_at(&self, u_col: &[f64]) -> DMatrix<f64> {
        let mut g = self.a0.clone();
        for (a, &uj) in self.ac.iter().zip(u_col) {
            g += a * uj;
        }
        g
    }

    /// Promote to a simulation model (complex picture recovered by
    /// devectorization). Requires skew-symmetric generators.
    pub fn to_model(
        &self,
        basis: std::sync::Arc<PauliBasis>,
        dt: f64,
        horizon: usize,
    ) -> Result<HamiltonianModel> {
        HamiltonianModel::from_generators(basis, self.a0.clone(), self.ac.clone(), dt, horizon)
    }
}

/// Skew-symmetric projection (A − Aᵀ)/2.
pub fn skew_project(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Matrix logarithm via the Cayley transform and the artanh series:
/// log M = 2·artanh(W) with W = (M − I)(M + I)⁻¹. Valid when the spectrum
/// of M stays away from the negative real axis (per-step rotations well
/// below π).
pub fn matrix_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = m.nrows();
    let id = DMatrix::identity(d, d);
    let denom = (m + &id)
        .try_inverse()
        .ok_or_else(|| LiftError::InvalidOperator("matrix log: M + I is singular".into()))?;
    let w = (m - &id) * denom;
    let wnorm = w.norm();
    if wnorm > 0.99 {
        return Err(LiftError::InvalidOperator(format!(
            "matrix log series diverges: ‖W‖ = {wnorm:.3}"
        )));
    }
    let w2 = &w * &w;
    let mut term = w.clone();
    let mut acc = DMatrix::zeros(d, d);
    let mut k = 1usize;
    loop {
        acc += &term / k as f64;
        term = &term * &w2;
        k += 2;
        if (term.norm() / k as f64) < 1e-17 || k > 200 {
            break;
        }
    }
    Ok(acc * 2.0)
}

/// Solve min_A ‖A·G − Y‖_F, shifted so that unidentifiable directions stay
/// at the prior (minimum deviation from the prior); an optional ridge weight
/// pulls the whole solution toward the prior.
fn affine_solve(
    g: &DMatrix<f64>,
    y: &DMatrix<f64>,
    prior: Option<&DMatrix<f64>>,
    prior_weight: f64,
) -> (DMatrix<f64>, f64) {
    if prior_weight > 0.0 {
        let p = prior.expect("ridge requires a prior");
        let rows = g.nrows();
        let gram = g * g.transpose() + DMatrix::identity(rows, rows) * prior_weight;
        let rhs = y * g.transpose() + p * prior_weight;
        let inv = gram.try_inverse().expect("regularized Gram is invertible");
        let a = rhs * inv;
        let smin = g
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        return (a, smin);
    }
    let (pg, smin, _) = pinv(g, 1e-10);
    match prior {
        Some(p) => {
            let correction = (y - p * g) * pg;
            (p + correction, smin)
        }
        None => (y * pg, smin),
    }
}

/// Bilinear DMD: identify drift and per-control generators from snapshots.
pub fn bilinear_dmd(
    snapshots: &SnapshotSet,
    constrain_skew: bool,
    prior: Option<&LearnedModel>,
    prior_weight: f64,
) -> Result<LearnedModel> {
    let n = snapshots.columns();
    if n == 0 {
        return Err(LiftError::InsufficientData("empty snapshot set".into()));
    }
    let d = snapshots.state_dim();
    let j = snapshots.controls();
    let dt = snapshots.dt;
    let prior_concat = prior.map(|p| p.concat());

    let (mut a0, mut ac, residual, conditioning) = match snapshots.derivative_mode {
        DerivativeMode::ContinuousFd => {
            // Midpoint scheme: (x′ − x)/dt ≈ (A0 + Σ u_j A_j)·(x + x′)/2.
            let xdot = (&snapshots.x_prime - &snapshots.x) / dt;
            let xmid = (&snapshots.x_prime + &snapshots.x) * 0.5;
            let g = stacked_regressor(&xmid, &snapshots.u);
            let (a, smin) = affine_solve(&g, &xdot, prior_concat.as_ref(), prior_weight);
            let res = (&a * &g - &xdot).norm();
            let (a0, ac) = split_concat(&a, d, j);
            (a0, ac, res, smin)
        }
        DerivativeMode::Discrete => {
            // One-step bilinear fit, then matrix logs at the data's control
            // values, then an affine refit of the sampled generators.
            let g = snapshots.stacked_regressor();
            let disc_prior = prior_concat
                .as_ref()
                .map(|_| discrete_prior(prior.unwrap(), dt, d, j));
            let (m, smin) = affine_solve(&g, &snapshots.x_prime, disc_prior.as_ref(), prior_weight);
            let res = (&m * &g - &snapshots.x_prime).norm();
            let (m0, mc) = split_concat(&m, d, j);
            // Sample the fitted map at each data column and take logs.
            let mut gen_samples = DMatrix::zeros(d, d * n);
            for i in 0..n {
                let mut mi = m0.clone();
                for (jj, mj) in mc.iter().enumerate() {
                    mi += mj * snapshots.u[(jj, i)];
                }
                let log = matrix_log(&mi)? / dt;
                gen_samples.view_mut((0, i * d), (d, d)).copy_from(&log);
            }
            // Affine refit: gen(u_i) ≈ A0 + Σ u_j A_j, one matrix equation
            // per column block; identical structure to the bilinear fit with
            // identity "states".
            let mut reg = DMatrix::zeros((j + 1) * d, d * n);
            let mut rhs = DMatrix::zeros(d, d * n);
            for i in 0..n {
                rhs.view_mut((0, i * d), (d, d))
                    .copy_from(&gen_samples.view((0, i * d), (d, d)));
                for r in 0..d {
                    reg[(r, i * d + r)] = 1.0;
                    for jj in 0..j {
                        reg[((jj + 1) * d + r, i * d + r)] = snapshots.u[(jj, i)];
                    }
                }
            }
            let (a, _) = affine_solve(&reg, &rhs, prior_concat.as_ref(), prior_weight);
            let (a0, ac) = split_concat(&a, d, j);
            (a0, ac, res, smin)
        }
    };

    if constrain_skew {
        a0 = skew_project(&a0);
        ac = ac.iter().map(skew_project).collect();
    }

    let excitation: Vec<f64> = (0..j)
        .map(|jj| {
            let row = snapshots.u.row(jj);
            (row.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt()
        })
        .collect();

    Ok(LearnedModel {
        a0,
        ac,
        residual,
        conditioning,
        excitation,
        excitation_warning: conditioning < EXCITATION_THRESHOLD,
    })
}

fn split_concat(a: &DMatrix<f64>, d: usize, j: usize) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let a0 = a.view((0, 0), (d, d)).into_owned();
    let ac = (0..j)
        .map(|jj| a.view((0, (jj + 1) * d), (d, d)).into_owned())
        .collect();
    (a0, ac)
}

/// First-order discrete prior [exp(dt·A0) | dt·A_j·exp(dt·A0)] used to anchor
/// unidentifiable directions of the one-step fit.
fn discrete_prior(prior: &LearnedModel, dt: f64, d: usize, j: usize) -> DMatrix<f64> {
    let m0 = (prior.a0.clone() * dt).exp();
    let mut m = DMatrix::zeros(d, (j + 1) * d);
    m.view_mut((0, 0), (d, d)).copy_from(&m0);
    for jj in 0..j {
        let mj = &prior.ac[jj] * dt * &m0;
        m.view_mut((0, (jj + 1) * d), (d, d)).copy_from(&mj);
    }
    m
}

/// Options for the exact-exponential Gauss–Newton polish.
#[derive(Debug, Clone)]
pub struct RefineOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Weak anchor toward the initial iterate; pins directions the data
    /// cannot identify.
    pub anchor_weight: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            tolerance: 1e-14,
            anchor_weight: 1e-10,
        }
    }
}

/// Skew-symmetric basis of d×d matrices, entry (r, c) = +1, (c, r) = −1.
fn skew_basis(d: usize) -> Vec<DMatrix<f64>> {
    let mut basis = Vec::new();
    for r in 0..d {
        for c in (r + 1)..d {
            let mut e = DMatrix::zeros(d, d);
            e[(r, c)] = 1.0;
            e[(c, r)] = -1.0;
            basis.push(e);
        }
    }
    basis
}

/// Polish a learned model against the exact zero-order-hold map
/// x(s+1) = exp(Δt(A0 + Σ u_j A_j))·x(s) by damped Gauss–Newton over the
/// skew-symmetric parameters. Removes the O(Δt²) bias of the linear
/// regressions; for noiseless data the residual goes to machine precision.
pub fn refine_exponential_fit(
    snapshots: &SnapshotSet,
    initial: &LearnedModel,
    opts: &RefineOptions,
) -> Result<LearnedModel> {
    let d = snapshots.state_dim();
    let j = snapshots.controls();
    let n = snapshots.columns();
    if n == 0 {
        return Err(LiftError::InsufficientData("empty snapshot set".into()));
    }
    let dt = snapshots.dt;
    let basis = skew_basis(d);
    let per_op = basis.len();
    let params = (j + 1) * per_op;

    let pack = |model: &LearnedModel| -> DVector<f64> {
        let mut theta = DVector::zeros(params);
        let mats: Vec<&DMatrix<f64>> = std::iter::once(&model.a0).chain(model.ac.iter()).collect();
        for (o, m) in mats.iter().enumerate() {
            let sk = skew_project(m);
            for (b, e) in basis.iter().enumerate() {
                // Coefficient of E_b in the skew expansion: entry (r, c).
                let (r, c) = basis_index(d, b);
                theta[o * per_op + b] = sk[(r, c)];
                let _ = e;
            }
        }
        theta
    };
    let unpack = |theta: &DVector<f64>| -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let mut mats = Vec::with_capacity(j + 1);
        for o in 0..=j {
            let mut m = DMatrix::zeros(d, d);
            for (b, e) in basis.iter().enumerate() {
                m += e * theta[o * per_op + b];
            }
            mats.push(m);
        }
        let a0 = mats.remove(0);
        (a0, mats)
    };

    let cost = |a0: &DMatrix<f64>, ac: &[DMatrix<f64>]| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let mut gen = a0.clone();
            for (jj, a) in ac.iter().enumerate() {
                gen += a * snapshots.u[(jj, i)];
            }
            let m = (gen * dt).exp();
            total += (m * snapshots.x.column(i) - snapshots.x_prime.column(i)).norm_squared();
        }
        total
    };

    let theta0 = pack(initial);
    let mut theta = theta0.clone();
    let (mut a0, mut ac) = unpack(&theta);
    let mut current_cost = cost(&a0, &ac);
    let mut lambda = 1e-8;

    for _ in 0..opts.max_iterations {
        // Residuals and Jacobian.
        let mut jtj: DMatrix<f64> = DMatrix::zeros(params, params);
        let mut jtr: DVector<f64> = DVector::zeros(params);
        for i in 0..n {
            let u_col: Vec<f64> = (0..j).map(|jj| snapshots.u[(jj, i)]).collect();
            let mut gen = a0.clone();
            for (jj, a) in ac.iter().enumerate() {
                gen += a * u_col[jj];
            }
            let gen_dt = gen * dt;
            let m = gen_dt.clone().exp();
            let xi = snapshots.x.column(i).into_owned();
            let r = &m * &xi - snapshots.x_prime.column(i).into_owned();
            // One Fréchet evaluation per skew basis direction, reused for
            // every operator slot via its control coefficient.
            let mut cols: Vec<DVector<f64>> = Vec::with_capacity(per_op);
            for e in &basis {
                let dm = frechet_exp(&gen_dt, &(e * dt));
                cols.push(&dm * &xi);
            }
            let mut jac_row = DMatrix::zeros(d, params);
            for o in 0..=j {
                let coeff = if o == 0 { 1.0 } else { u_col[o - 1] };
                if coeff == 0.0 {
                    continue;
                }
                for (b, col) in cols.iter().enumerate() {
                    jac_row.set_column(o * per_op + b, &(col * coeff));
                }
            }
            jtj += jac_row.transpose() * &jac_row;
            jtr += jac_row.transpose() * r;
        }
        // Weak anchor toward the initial iterate.
        jtj += DMatrix::identity(params, params) * opts.anchor_weight;
        jtr += (&theta - &theta0) * opts.anchor_weight;

        let mut stepped = false;
        for _ in 0..8 {
            let damped = &jtj + DMatrix::identity(params, params) * lambda;
            if let Some(inv) = damped.try_inverse() {
                let delta = inv * &jtr;
                let trial = &theta - &delta;
                let (ta0, tac) = unpack(&trial);
                let trial_cost = cost(&ta0, &tac);
                if trial_cost <= current_cost {
                    let improvement = current_cost - trial_cost;
                    theta = trial;
                    a0 = ta0;
                    ac = tac;
                    current_cost = trial_cost;
                    lambda = (lambda * 0.3).max(1e-14);
                    stepped = true;
                    if delta.norm() < opts.tolerance || improvement < opts.tolerance {
                        return Ok(finish(a0, ac, current_cost, initial));
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    Ok(finish(a0, ac, current_cost, initial))
}

fn basis_index(d: usize, b: usize) -> (usize, usize) {
    let mut idx = 0;
    for r in 0..d {
        for c in (r + 1)..d {
            if idx == b {
                return (r, c);
            }
            idx += 1;
        }
    }
    unreachable!("basis index out of range")
}

fn finish(
    a0: DMatrix<f64>,
    ac: Vec<DMatrix<f64>>,
    cost: f64,
    initial: &LearnedModel,
) -> LearnedModel {
    LearnedModel {
        a0,
        ac,
        residual: cost.sqrt(),
        conditioning: initial.conditioning,
        excitation: initial.excitation.clone(),
        excitation_warning: initial.excitation_warning,
    }
}

/// Compare learned generators against the nominal model: relative Frobenius
/// drift error against max(‖𝐇₀‖, 1) and per-control relative error.
pub fn feasible(nominal: &HamiltonianModel, learned: &LearnedModel, threshold: f64) -> bool {
    let drift_err = (&learned.a0 - &nominal.h0).norm() / nominal.h0.norm().max(1.0);
    if drift_err > threshold {
        return false;
    }
    for (a, h) in learned.ac.iter().zip(&nominal.hc) {
        let denom = h.norm();
        if denom == 0.0 {
            continue;
        }
        if (a - h).norm() / denom > threshold {
            return false;
        }
    }
    true
}

/// Whether the tracked observables over-determine the controllable axes
/// along a reference trajectory.
#[derive(Debug, Clone)]
pub struct SufficiencyReport {
    /// Constraint matrix on controllable axes, stacked over snapshot times:
    /// ((T+1)·K·L) × |𝓘|.
    pub s: DMatrix<f64>,
    /// Same construction on the complement axes 𝓘̄.
    pub s_bar: DMatrix<f64>,
    pub rank_s: usize,
    pub overdetermined: bool,
    /// Per-snapshot condition number of the K×|𝓘| block (∞ when singular).
    pub time_resolved_condition: Vec<f64>,
    /// Drift mismatch restricted to uncontrollable axes, when a learned
    /// model is supplied for comparison.
    pub alpha_norm: Option<f64>,
}

/// Build the constraint matrix [S]_{k,i} = Σ_{j,m} x^ref_j σ_{ijm} [C]_{km}
/// at every snapshot of the reference (structure constants are imaginary;
/// the imaginary part carries the constraint).
pub fn sufficiency_analysis(
    reference: &ReferenceTriplet,
    c_matrix: &DMatrix<f64>,
    basis: &PauliBasis,
    control_axes: &[usize],
) -> SufficiencyReport {
    let dim = basis.dim();
    let k = c_matrix.nrows();
    let t = reference.horizon();
    let complement: Vec<usize> = (0..dim).filter(|i| !control_axes.contains(i)).collect();

    let block = |axes: &[usize], x_ref: &DVector<f64>| -> DMatrix<f64> {
        let mut s = DMatrix::zeros(k, axes.len());
        for (col, &i) in axes.iter().enumerate() {
            for kk in 0..k {
                let mut acc = 0.0;
                for jj in 0..dim {
                    if x_ref[jj] == 0.0 {
                        continue;
                    }
                    for m in 0..dim {
                        let sig = basis.sigma(i, jj, m);
                        if sig.im != 0.0 && c_matrix[(kk, m)] != 0.0 {
                            acc += x_ref[jj] * sig.im * c_matrix[(kk, m)];
                        }
                    }
                }
                s[(kk, col)] = acc;
            }
        }
        s
    };

    let mut s = DMatrix::zeros((t + 1) * k, control_axes.len());
    let mut s_bar = DMatrix::zeros((t + 1) * k, complement.len());
    let mut time_resolved_condition = Vec::with_capacity(t + 1);
    for step in 0..=t {
        let bs = block(control_axes, &reference.x_ref[step]);
        let svd = bs.clone().svd(false, false);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let smin = svd
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        time_resolved_condition.push(if smin > 1e-14 {
            smax / smin
        } else {
            f64::INFINITY
        });
        s.view_mut((step * k, 0), (k, control_axes.len()))
            .copy_from(&bs);
        let bbar = block(&complement, &reference.x_ref[step]);
        s_bar
            .view_mut((step * k, 0), (k, complement.len()))
            .copy_from(&bbar);
    }

    let svd = s.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let rank_s = svd
        .singular_values
        .iter()
        .filter(|v| **v > 1e-10 * smax.max(1.0))
        .count();
    let overdetermined = k > control_axes.len() && rank_s == control_axes.len();

    SufficiencyReport {
        s,
        s_bar,
        rank_s,
        overdetermined,
        time_resolved_condition,
        alpha_norm: None,
    }
}

/// Our estimate of ‖α‖: the learned-vs-nominal drift difference projected
/// onto the Pauli coefficients of the uncontrollable axes.
pub fn estimate_alpha(
    nominal: &HamiltonianModel,
    learned: &LearnedModel,
    control_axes: &[usize],
) -> Result<f64> {
    let diff = &learned.a0 - &nominal.h0;
    let h = crate::pauli::devectorize_generator(&skew_project(&diff), &nominal.basis)?;
    let mut acc = 0.0;
    for i in 0..nominal.basis.dim() {
        if control_axes.contains(&i) {
            continue;
        }
        let coeff = (nominal.basis.operator(i) * &h).diagonal().sum().re;
        acc += coeff * coeff;
    }
    Ok(acc.sqrt())
}
