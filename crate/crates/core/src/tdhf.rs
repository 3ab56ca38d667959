//! Time-dependent Hartree-Fock for the one-body density `F(t)`:
//!
//! `iħ dF/dt = [L, F] + λ [V, (F ⊗ F) 2A_2]_{:1}`.
//!
//! The mean-field term is evaluated literally as a partial trace of a
//! commutator on `H ⊗ H`. Integration uses classical fourth-order Runge-Kutta
//! with a fixed step that is halved until two successive runs agree to the
//! requested tolerance.

use crate::error::{Error, Result};
use crate::fock::{binomial, factorial, TwoBodyOperator};
use crate::rdm::closure_product;
use crate::tensor_ops::{
    antisymmetrizer, commutator, embed_two_body, herm_propagator, hermitize, identity, kron,
    kron_power, operator_norm, partial_trace_last, permutation_operator, require_hermitian,
    require_square, trace_norm, CMatrix, Permutation, C64,
};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Problem data shared by every point of a TDHF trajectory.
#[derive(Debug, Clone)]
pub struct TdhfProblem {
    pub l: CMatrix,
    pub v: TwoBodyOperator,
    pub lambda: f64,
    pub hbar: f64,
}

impl TdhfProblem {
    pub fn new(l: CMatrix, v: TwoBodyOperator, lambda: f64, hbar: f64) -> Result<Self> {
        let d = require_square("TDHF one-body Hamiltonian", &l)?;
        require_hermitian("TDHF one-body Hamiltonian", &l)?;
        if v.d() != d {
            return Err(Error::shape("TDHF interaction", d, v.d()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("coupling", format!("must be finite and >= 0, got {lambda}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self { l, v, lambda, hbar })
    }

    pub fn d(&self) -> usize {
        self.l.nrows()
    }

    /// Operator norm of the scaled interaction `λV`.
    pub fn interaction_norm(&self) -> f64 {
        self.lambda * self.v.norm()
    }
}

#[derive(Debug, Clone)]
pub struct TdhfState {
    pub f: CMatrix,
    pub t: f64,
}

/// `[V, (F ⊗ F) 2A_2]_{:1}`; anti-Hermitian for Hermitian `F`.
pub fn mean_field_term(f: &CMatrix, v: &TwoBodyOperator) -> Result<CMatrix> {
    let d = require_square("mean_field_term", f)?;
    if v.d() != d {
        return Err(Error::shape("mean_field_term interaction", d, v.d()));
    }
    let pair = closure_product(f, 2)?;
    partial_trace_last(&commutator(v.matrix(), pair.matrix()), d, 2, 1)
}

/// Hartree-Fock potential `h_F = [V 2A_2 (I ⊗ F)]_{:1}`, for which
/// `mean_field_term(F, V) = [h_F, F]`.
pub fn effective_hamiltonian(f: &CMatrix, v: &TwoBodyOperator) -> Result<CMatrix> {
    let d = require_square("effective_hamiltonian", f)?;
    if v.d() != d {
        return Err(Error::shape("effective_hamiltonian interaction", d, v.d()));
    }
    let a2 = antisymmetrizer(d, 2)? * C64::new(2.0, 0.0);
    let lifted = kron(&identity(d), f);
    partial_trace_last(&(v.matrix() * a2 * lifted), d, 2, 1)
}

fn rhs_matrix(problem: &TdhfProblem, f: &CMatrix) -> Result<CMatrix> {
    let mut g = commutator(&problem.l, f);
    if problem.lambda != 0.0 {
        g += mean_field_term(f, &problem.v)? * C64::new(problem.lambda, 0.0);
    }
    Ok(g * C64::new(0.0, -1.0 / problem.hbar))
}

/// `dF/dt = -(i/ħ)([L, F] + λ [V, F^{⊗2} 2A_2]_{:1})`.
pub fn tdhf_rhs(problem: &TdhfProblem, state: &TdhfState) -> Result<CMatrix> {
    rhs_matrix(problem, &state.f)
}

/// `Tr(L F) + ½ λ Tr(V (F ⊗ F) 2A_2)`, conserved by the flow.
pub fn hf_energy(problem: &TdhfProblem, f: &CMatrix) -> Result<f64> {
    let pair = closure_product(f, 2)?;
    let one = (&problem.l * f).trace().re;
    let two = (problem.v.matrix() * pair.matrix()).trace().re;
    Ok(one + 0.5 * problem.lambda * two)
}

fn rk4_step(problem: &TdhfProblem, f: &CMatrix, h: f64) -> Result<CMatrix> {
    let half = C64::new(0.5 * h, 0.0);
    let k1 = rhs_matrix(problem, f)?;
    let k2 = rhs_matrix(problem, &(f + &k1 * half))?;
    let k3 = rhs_matrix(problem, &(f + &k2 * half))?;
    let k4 = rhs_matrix(problem, &(f + &k3 * C64::new(h, 0.0)))?;
    let incr = (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
    Ok(hermitize(&(f + incr)))
}

/// Sampled solution of the TDHF equation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<TdhfState>,
    /// Largest step actually used.
    pub step: f64,
    /// Trace-norm change between the last two step sizes (0 for a single fixed-step run).
    pub change: f64,
    pub halvings: usize,
}

impl Trajectory {
    pub fn last(&self) -> &TdhfState {
        self.states.last().expect("trajectory has at least one sample")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub initial_step: f64,
    pub max_halvings: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            max_halvings: 14,
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("sample times", "at least one time is required"));
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("sample times", "must be nonnegative and nondecreasing"));
    }
    Ok(())
}

/// RK4 with steps no larger than `max_step`; each gap between sample times is
/// split into equal sub-steps so the samples are hit exactly.
pub fn integrate_fixed(
    problem: &TdhfProblem,
    f0: &CMatrix,
    times: &[f64],
    max_step: f64,
) -> Result<Trajectory> {
    check_times(times)?;
    if !(max_step > 0.0) {
        return Err(Error::invalid("step", format!("must be positive, got {max_step}")));
    }
    let mut states = Vec::with_capacity(times.len());
    let mut f = hermitize(f0);
    let mut t = 0.0;
    let mut used: f64 = 0.0;
    for &target in times {
        let gap = target - t;
        if gap > 0.0 {
            let n = (gap / max_step).ceil().max(1.0) as usize;
            let h = gap / n as f64;
            used = used.max(h);
            for _ in 0..n {
                f = rk4_step(problem, &f, h)?;
            }
        }
        t = target;
        states.push(TdhfState { f: f.clone(), t });
    }
    Ok(Trajectory {
        states,
        step: used,
        change: 0.0,
        halvings: 0,
    })
}

fn max_sample_change(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    a.states.iter().zip(&b.states).try_fold(0.0_f64, |acc, (x, y)| {
        Ok(acc.max(trace_norm(&hermitize(&(&x.f - &y.f)), true)?))
    })
}

/// Integrates from `F(0) = f0` and samples at `times`, halving the step until
/// successive runs differ by at most `tol` in trace norm at every sample.
pub fn integrate(problem: &TdhfProblem, f0: &CMatrix, times: &[f64], tol: f64) -> Result<Trajectory> {
    integrate_with(problem, f0, times, tol, IntegratorOptions::default())
}

pub fn integrate_with(
    problem: &TdhfProblem,
    f0: &CMatrix,
    times: &[f64],
    tol: f64,
    opts: IntegratorOptions,
) -> Result<Trajectory> {
    let d = require_square("initial one-body density", f0)?;
    if d != problem.d() {
        return Err(Error::shape("initial one-body density", problem.d(), d));
    }
    require_hermitian("initial one-body density", f0)?;
    let norm = operator_norm(f0);
    if norm > 1.0 + 1e-10 {
        return Err(Error::invalid(
            "initial one-body density",
            format!("operator norm {norm} exceeds 1"),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance", format!("must be positive, got {tol}")));
    }
    let mut step = opts.initial_step;
    let mut coarse = integrate_fixed(problem, f0, times, step)?;
    let mut change = f64::INFINITY;
    for halving in 1..=opts.max_halvings {
        step *= 0.5;
        let fine = integrate_fixed(problem, f0, times, step)?;
        change = max_sample_change(&coarse, &fine)?;
        coarse = fine;
        if change <= tol {
            coarse.change = change;
            coarse.halvings = halving;
            return Ok(coarse);
        }
    }
    Err(Error::ToleranceNotReached {
        tol,
        halvings: opts.max_halvings,
        change,
    })
}

/// Largest trace-norm gap between the sampled `F(t)` and the mild (integral)
/// form `U_t F(0) U_t† − (i/ħ) ∫ U_{t−s} λ[V, F(s)^{⊗2} 2A_2]_{:1} U_{t−s}† ds`,
/// the integral taken by the trapezoid rule over the samples. Samples must
/// start at `t = 0`.
pub fn mild_form_residual(problem: &TdhfProblem, traj: &Trajectory) -> Result<f64> {
    let first = traj.states.first().ok_or_else(|| Error::invalid("trajectory", "empty"))?;
    if first.t != 0.0 {
        return Err(Error::invalid("trajectory", "mild-form check needs a sample at t = 0"));
    }
    // U_{t-s} X U_{t-s}† = U_t (U_s† X U_s) U_t†, so the quadrature is a running sum.
    let pulled: Vec<CMatrix> = traj
        .states
        .iter()
        .map(|s| {
            let u = herm_propagator(&problem.l, s.t, problem.hbar)?;
            let m = mean_field_term(&s.f, &problem.v)? * C64::new(problem.lambda, 0.0);
            Ok(u.adjoint() * m * u)
        })
        .collect::<Result<_>>()?;
    let mut integral = CMatrix::zeros(problem.d(), problem.d());
    let mut worst: f64 = 0.0;
    for k in 1..traj.states.len() {
        let (s0, s1) = (traj.states[k - 1].t, traj.states[k].t);
        integral += (&pulled[k - 1] + &pulled[k]) * C64::new(0.5 * (s1 - s0), 0.0);
        let u = herm_propagator(&problem.l, s1, problem.hbar)?;
        let inner = &first.f + &integral * C64::new(0.0, -1.0 / problem.hbar);
        let mild = &u * inner * u.adjoint();
        worst = worst.max(trace_norm(&hermitize(&(&traj.states[k].f - mild)), true)?);
    }
    Ok(worst)
}

/// Exchange remainder of the TDHF hierarchy at order `m` together with its
/// instantaneous bound.
#[derive(Debug, Clone)]
pub struct HierarchyRemainder {
    /// `Σ_{j≠k≤m} [λV_{j,m+1}, F^{⊗(m+1)} U_{(k,m+1)} m!A_m]_{:m}`.
    pub matrix: CMatrix,
    /// `‖R_m‖₁ / ħ`.
    pub scaled_trace_norm: f64,
    /// `m(m−1) · 2λ‖V‖ · ‖F‖ · ‖F^{⊗m} m!A_m‖₁ / ħ`.
    pub bound: f64,
}

impl HierarchyRemainder {
    pub fn holds(&self, slack: f64) -> bool {
        self.scaled_trace_norm <= self.bound + slack
    }
}

pub fn hierarchy_remainder(problem: &TdhfProblem, f: &CMatrix, m: usize) -> Result<HierarchyRemainder> {
    if !(m == 2 || m == 3) {
        return Err(Error::invalid("hierarchy order", format!("only m = 2, 3 are supported, got {m}")));
    }
    let d = require_square("hierarchy_remainder", f)?;
    if d != problem.d() {
        return Err(Error::shape("hierarchy_remainder", problem.d(), d));
    }
    let fm = closure_product(f, m)?;
    let base = kron_power(f, m + 1) ;
    let anti = kron(&(antisymmetrizer(d, m)? * C64::new(factorial(m), 0.0)), &identity(d));
    let v = problem.v.matrix() * C64::new(problem.lambda, 0.0);
    let dim = d.pow(m as u32);
    let mut r = CMatrix::zeros(dim, dim);
    for k in 0..m {
        let u = permutation_operator(&Permutation::transposition(m + 1, k, m)?, d);
        let y = &base * u * &anti;
        for j in 0..m {
            if j == k {
                continue;
            }
            let vj = embed_two_body(&v, j, m, m + 1)?;
            r += partial_trace_last(&commutator(&vj, &y), d, m + 1, m)?;
        }
    }
    let scaled_trace_norm = trace_norm(&r, false)? / problem.hbar;
    let bound = (m * (m - 1)) as f64 * 2.0 * problem.interaction_norm() * operator_norm(f)
        * fm.trace_norm()?
        / problem.hbar;
    Ok(HierarchyRemainder {
        matrix: r,
        scaled_trace_norm,
        bound,
    })
}

/// `(V_{m−1,m+1} U_{(m,m+1)} (F_m ⊗ F))_{:m}` and `(I^{⊗(m−1)} ⊗ F) V_{m−1,m} F_m`,
/// the two sides of the exchange-term identity behind the remainder bound.
pub fn exchange_identity_sides(f: &CMatrix, v: &TwoBodyOperator, m: usize) -> Result<(CMatrix, CMatrix)> {
    let d = require_square("exchange_identity_sides", f)?;
    if m < 2 {
        return Err(Error::out_of_range("hierarchy order", m, ">= 2"));
    }
    let fm = closure_product(f, m)?.into_matrix();
    let u = permutation_operator(&Permutation::transposition(m + 1, m - 1, m)?, d);
    let v_outer = embed_two_body(v.matrix(), m - 2, m, m + 1)?;
    let lhs = partial_trace_last(&(v_outer * u * kron(&fm, f)), d, m + 1, m)?;
    let lift = kron(&identity(d.pow((m - 1) as u32)), f);
    let rhs = lift * embed_two_body(v.matrix(), m - 2, m - 1, m)? * fm;
    Ok((lhs, rhs))
}

/// `τ = ħ / (2 λ‖V‖ n1_trace)`; infinite when the interaction vanishes.
pub fn tau_horizon(v: &TwoBodyOperator, n1_trace: f64, hbar: f64, lambda: f64) -> Result<f64> {
    tau_from_norm(lambda * v.norm(), n1_trace, hbar)
}

pub fn tau_from_norm(interaction_norm: f64, n1_trace: f64, hbar: f64) -> Result<f64> {
    if !(n1_trace > 0.0) {
        return Err(Error::invalid("mean particle number", format!("must be positive, got {n1_trace}")));
    }
    if interaction_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(hbar / (2.0 * interaction_norm * n1_trace))
}

/// Short-time error bound `(3/2)(t/(τ−t))²`, defined for `t < τ`.
pub fn short_time_bound(t: f64, tau: f64) -> Option<f64> {
    if tau.is_infinite() {
        return Some(0.0);
    }
    (t < tau).then(|| 1.5 * (t / (tau - t)).powi(2))
}

/// Number of terms kept in [`series_error_bound`] before the tail estimate.
pub const SERIES_TERMS: usize = 50;

/// Bound on `‖N_m(t) − F_m(t)‖₁ / ‖N_1‖₁^m` when `N_k(0) = F_k(0)` for all `k`
/// and `‖N_k(0)‖₁ ≤ b ‖N_1‖₁^k`:
/// `‖N_1‖₁⁻¹ (b+2)/2 Σ_j (m+j−1) C(m+j, m−1) x^{j+1}`, where
/// `x = 2λ‖V‖ ‖N_1‖₁ t / ħ = t/τ`.
///
/// The series is summed to [`SERIES_TERMS`] terms; the remainder is bounded by a
/// geometric tail using the term ratio at the cutoff, which dominates every
/// later ratio. `None` when `x ≥ 1`.
pub fn series_error_bound(m: usize, x: f64, n1_trace: f64, b: f64) -> Option<f64> {
    if !(x < 1.0) || m == 0 || n1_trace <= 0.0 {
        return None;
    }
    let term = |j: usize| {
        (m + j - 1) as f64 * binomial(m + j, m - 1) as f64 * x.powi(j as i32 + 1)
    };
    let mut sum: f64 = (0..SERIES_TERMS).map(term).sum();
    let j = SERIES_TERMS;
    let ratio = x * ((m + j) as f64 / (m + j - 1).max(1) as f64) * ((m + j + 1) as f64 / (j + 2) as f64);
    if ratio < 1.0 {
        sum += term(j) / (1.0 - ratio);
    } else {
        return None;
    }
    Some(sum * (b + 2.0) / 2.0 / n1_trace)
}
