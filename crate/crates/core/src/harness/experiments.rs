//! Experiments comparing exact reduced densities with their TDHF counterparts.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, InteractionSpec, StateSpec, TimeGrid, TimeUnit};
use super::instance::{generate_instance, Instance};
use crate::dynamics::{bbgky_residual, evolve, make_propagator, Propagator};
use crate::error::{Error, Result};
use crate::fock::{ModeSpace, TwoBodyOperator};
use crate::rdm::{
    antisym_power_trace_norm, closure_deviation, closure_product, reduced_density,
    reduced_density_fast, reduced_density_oracle,
};
use crate::states::{mixture_density, particle_moment, slater_density};
use crate::tdhf::{
    exchange_identity_sides, hf_energy, hierarchy_remainder, integrate, series_error_bound,
    short_time_bound, TdhfProblem, Trajectory,
};
use crate::tensor_ops::{hermitian_eigenvalues, max_abs, operator_norm, trace_norm, CMatrix};

/// One named pass/fail verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// One sample time of the exact-versus-TDHF comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub t: f64,
    pub error_1: Option<f64>,
    pub error_2: Option<f64>,
    pub norm_error_1: Option<f64>,
    pub norm_error_2: Option<f64>,
    /// `(3/2)(t/(τ−t))²`, only for `t < τ`.
    pub bound: Option<f64>,
    pub tau: f64,
    /// `|Tr F(t) − Tr F(0)|`.
    pub trace_drift: f64,
    /// Drift of the Hartree-Fock energy along the TDHF trajectory.
    pub energy_drift: f64,
}

impl ExperimentRow {
    pub fn error(&self, m: usize) -> Option<f64> {
        match m {
            1 => self.error_1,
            2 => self.error_2,
            _ => None,
        }
    }

    pub fn norm_error(&self, m: usize) -> Option<f64> {
        match m {
            1 => self.norm_error_1,
            2 => self.norm_error_2,
            _ => None,
        }
    }
}

fn tracked_orders(orders: &[usize]) -> Result<(bool, bool)> {
    if let Some(m) = orders.iter().find(|&&m| m > 2) {
        return Err(Error::Config(format!("error rows track orders 1 and 2 only, got {m}")));
    }
    Ok((orders.contains(&1), orders.contains(&2)))
}

/// Exact and TDHF trajectories of one instance sampled on a time grid.
pub struct Comparison {
    pub instance: Instance,
    pub propagator: Propagator,
    pub problem: TdhfProblem,
    pub trajectory: Trajectory,
}

pub fn compare(inst: Instance, times: &[f64], tol: f64) -> Result<Comparison> {
    let propagator = make_propagator(&inst.mode_space, &inst.l, &inst.v, inst.lambda)?;
    let problem = inst.problem()?;
    let trajectory = integrate(&problem, &inst.f0, times, tol)?;
    Ok(Comparison {
        instance: inst,
        propagator,
        problem,
        trajectory,
    })
}

impl Comparison {
    pub fn rows(&self, orders: &[usize]) -> Result<Vec<ExperimentRow>> {
        let (want1, want2) = tracked_orders(orders)?;
        let inst = &self.instance;
        let trace0 = inst.f0.trace().re;
        let energy0 = hf_energy(&self.problem, &inst.f0)?;
        let n = inst.n1_trace;
        self.trajectory
            .states
            .par_iter()
            .map(|s| {
                let exact = evolve(&self.propagator, &inst.density, s.t)?;
                let error = |m: usize| -> Result<f64> {
                    let nm = reduced_density(&exact, m)?;
                    let fm = closure_product(&s.f, m)?;
                    trace_norm(&(nm.matrix() - fm.matrix()), true)
                };
                let error_1 = want1.then(|| error(1)).transpose()?;
                let error_2 = if want2 && inst.mode_space.d() >= 2 {
                    Some(error(2)?)
                } else {
                    None
                };
                let normalize = |e: Option<f64>, m: i32| e.map(|e| if n > 0.0 { e / n.powi(m) } else { 0.0 });
                Ok(ExperimentRow {
                    t: s.t,
                    error_1,
                    error_2,
                    norm_error_1: normalize(error_1, 1),
                    norm_error_2: normalize(error_2, 2),
                    bound: short_time_bound(s.t, inst.tau),
                    tau: inst.tau,
                    trace_drift: (s.f.trace().re - trace0).abs(),
                    energy_drift: (hf_energy(&self.problem, &s.f)? - energy0).abs(),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBoundReport {
    pub d: usize,
    pub lambda: f64,
    pub n1_trace: f64,
    pub tau: f64,
    pub rows: Vec<ExperimentRow>,
    pub checks: Vec<Check>,
}

/// Fraction of τ up to which the short-time bound is enforced.
pub const BOUND_WINDOW: f64 = 0.9;

/// Compares exact `N_1(t), N_2(t)` with `F(t)` and `F(t)^{⊗2} 2A_2` and checks
/// the short-time bound, its order-2 series generalization, and the moment
/// hypothesis of the initial state.
pub fn run_error_bound(cfg: &ExperimentConfig) -> Result<ErrorBoundReport> {
    let inst = generate_instance(cfg)?;
    let times = cfg.time_grid.times(inst.tau)?;
    let slack = 100.0 * cfg.tol;
    let mut checks = Vec::new();

    if inst.mode_space.d() >= 2 {
        let dev = closure_deviation(&inst.density, 2)?;
        checks.push(Check::new("initial closure", dev <= 1e-9, format!("closure deviation {dev:e} at m = 2")));
    }
    for &m in &cfg.orders {
        let norm = reduced_density(&inst.density, m)?.trace_norm()?;
        let cap = inst.n1_trace.powi(m as i32) + 1e-9;
        checks.push(Check::new(
            format!("moment hypothesis m={m}"),
            norm <= cap,
            format!("|N_{m}|_1 = {norm:e}, |N_1|_1^{m} = {:e}", cap - 1e-9),
        ));
    }

    let (n1_trace, tau, lambda) = (inst.n1_trace, inst.tau, inst.lambda);
    let rows = compare(inst, &times, cfg.tol)?.rows(&cfg.orders)?;

    let mut worst_bound = (true, String::from("no sample inside the window"));
    let mut worst_series = (true, String::from("no sample inside the window"));
    for row in rows.iter().filter(|r| r.t <= BOUND_WINDOW * tau) {
        if let (Some(e), Some(b)) = (row.error_1, row.bound) {
            if e > b + slack {
                worst_bound = (false, format!("t = {}: error {e:e} > bound {b:e}", row.t));
            } else if worst_bound.0 {
                worst_bound.1 = format!("max t = {}: error {e:e} <= bound {b:e}", row.t);
            }
        }
        if let Some(e2) = row.norm_error_2 {
            let x = row.t / tau;
            if let Some(b) = series_error_bound(2, x, n1_trace, 1.0) {
                if e2 > b + slack {
                    worst_series = (false, format!("t = {}: normalized error {e2:e} > series {b:e}", row.t));
                } else if worst_series.0 {
                    worst_series.1 = format!("max t = {}: normalized error {e2:e} <= series {b:e}", row.t);
                }
            }
        }
    }
    if cfg.orders.contains(&1) {
        checks.push(Check::new("short-time bound", worst_bound.0, worst_bound.1));
    }
    if cfg.orders.contains(&2) {
        checks.push(Check::new("order-2 series bound", worst_series.0, worst_series.1));
    }
    let nonneg = rows
        .iter()
        .all(|r| r.error_1.is_none_or(|e| e >= 0.0) && r.error_2.is_none_or(|e| e >= 0.0));
    checks.push(Check::new("nonnegative errors", nonneg, ""));

    Ok(ErrorBoundReport {
        d: cfg.d,
        lambda,
        n1_trace,
        tau,
        rows,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub d: usize,
    pub seed: u64,
    pub lambda: f64,
    pub n1_trace: f64,
    pub rows: Vec<ExperimentRow>,
}

/// Family average at one mode count.
#[derive(Debug, Clone, Serialize)]
pub struct SweepMean {
    pub d: usize,
    pub rows: Vec<ExperimentRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub means: Vec<SweepMean>,
    pub checks: Vec<Check>,
}

fn sweep_cell(cfg: &ExperimentConfig) -> Result<SweepCell> {
    let inst = generate_instance(cfg)?;
    let times = cfg.time_grid.times(inst.tau)?;
    let (lambda, n1_trace) = (inst.lambda, inst.n1_trace);
    let rows = compare(inst, &times, cfg.tol)?.rows(&cfg.orders)?;
    Ok(SweepCell {
        d: cfg.d,
        seed: cfg.seed,
        lambda,
        n1_trace,
        rows,
    })
}

fn mean_rows(cells: &[&SweepCell]) -> Vec<ExperimentRow> {
    let k = cells.len() as f64;
    let mean = |f: &dyn Fn(&ExperimentRow) -> f64, i: usize| cells.iter().map(|c| f(&c.rows[i])).sum::<f64>() / k;
    let mean_opt = |f: &dyn Fn(&ExperimentRow) -> Option<f64>, i: usize| {
        cells
            .iter()
            .map(|c| f(&c.rows[i]))
            .sum::<Option<f64>>()
            .map(|total| total / k)
    };
    (0..cells[0].rows.len())
        .map(|i| ExperimentRow {
            t: cells[0].rows[i].t,
            error_1: mean_opt(&|r| r.error_1, i),
            error_2: mean_opt(&|r| r.error_2, i),
            norm_error_1: mean_opt(&|r| r.norm_error_1, i),
            norm_error_2: mean_opt(&|r| r.norm_error_2, i),
            bound: mean_opt(&|r| r.bound, i),
            tau: mean(&|r| r.tau, i),
            trace_drift: mean(&|r| r.trace_drift, i),
            energy_drift: mean(&|r| r.energy_drift, i),
        })
        .collect()
}

/// Runs every `(d, seed)` cell for `d` in `sizes` and the `base.family` seeds
/// starting at `base.seed` (in parallel, merged in that order), averages each
/// size over its seeds, and checks that the averaged normalized errors do not
/// grow with `d` at any sampled `t > 0`.
pub fn run_mean_field_sweep(base: &ExperimentConfig, sizes: &[usize]) -> Result<SweepReport> {
    if sizes.is_empty() {
        return Err(Error::Config("sweep needs at least one size".into()));
    }
    let seeds: Vec<u64> = (0..base.family as u64).map(|k| base.seed.wrapping_add(k)).collect();
    let grid: Vec<ExperimentConfig> = sizes
        .iter()
        .flat_map(|&d| seeds.iter().map(move |&seed| ExperimentConfig { d, seed, ..base.clone() }))
        .collect();
    let cells: Vec<SweepCell> = grid
        .par_iter()
        .map(|cfg| {
            cfg.validate()?;
            sweep_cell(cfg)
        })
        .collect::<Result<_>>()?;
    let means: Vec<SweepMean> = cells
        .chunks(seeds.len())
        .map(|group| SweepMean {
            d: group[0].d,
            rows: mean_rows(&group.iter().collect::<Vec<_>>()),
        })
        .collect();

    let mut checks = Vec::new();
    if matches!(base.lambda, super::config::LambdaSpec::Keyword(_)) {
        let worst = cells.iter().map(|c| (c.lambda * c.n1_trace - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            "mean-field scaling",
            worst <= 1e-12,
            format!("max |lambda * Tr N_1 - 1| = {worst:e}"),
        ));
    }
    for m in [1, 2].into_iter().filter(|m| base.orders.contains(m)) {
        for k in 1..means[0].rows.len() {
            let series: Vec<f64> = means.iter().filter_map(|c| c.rows[k].norm_error(m)).collect();
            let ok = series.windows(2).all(|w| w[1] <= w[0]);
            let t = means[0].rows[k].t;
            checks.push(Check::new(
                format!("nonincreasing m={m} t={t}"),
                ok,
                format!("mean normalized errors {series:?} for d = {sizes:?}"),
            ));
        }
    }
    Ok(SweepReport { cells, means, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureRow {
    pub t: f64,
    pub order: usize,
    pub deviation: f64,
    /// Deviation divided by `Tr(N_1)^m`.
    pub norm_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub rows: Vec<ClosureRow>,
    pub checks: Vec<Check>,
}

/// Distance of the exact `N_m(t)` from `N_1(t)^{⊗m} m!A_m` along the exact
/// trajectory, for each `m` in `orders`.
pub fn run_closure_check(cfg: &ExperimentConfig, orders: &[usize]) -> Result<ClosureReport> {
    let inst = generate_instance(cfg)?;
    if let Some(&m) = orders.iter().find(|&&m| m == 0 || m > cfg.d) {
        return Err(Error::Config(format!("closure order {m} must lie in 1..={}", cfg.d)));
    }
    let times = cfg.time_grid.times(inst.tau)?;
    let prop = make_propagator(&inst.mode_space, &inst.l, &inst.v, inst.lambda)?;
    let n = inst.n1_trace;
    let per_time: Vec<Vec<ClosureRow>> = times
        .par_iter()
        .map(|&t| {
            let exact = evolve(&prop, &inst.density, t)?;
            orders
                .iter()
                .map(|&m| {
                    let deviation = closure_deviation(&exact, m)?;
                    Ok(ClosureRow {
                        t,
                        order: m,
                        deviation,
                        norm_deviation: if n > 0.0 { deviation / n.powi(m as i32) } else { 0.0 },
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ClosureRow> = per_time.into_iter().flatten().collect();
    let initial = rows.iter().filter(|r| r.t == 0.0).map(|r| r.deviation).fold(0.0, f64::max);
    let checks = vec![Check::new(
        "initial closure",
        initial <= 1e-9,
        format!("max deviation at t = 0: {initial:e}"),
    )];
    Ok(ClosureReport { rows, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbgkyRow {
    pub t: f64,
    pub order: usize,
    pub residual_h: f64,
    pub residual_half_h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BbgkyReport {
    pub h: f64,
    pub rows: Vec<BbgkyRow>,
    pub checks: Vec<Check>,
}

/// Finite-difference step of the hierarchy check.
pub const BBGKY_STEP: f64 = 1e-2;
/// Residuals below this are at round-off and carry no convergence information.
const RESIDUAL_FLOOR: f64 = 1e-10;

/// Checks that the exact `N_m(t)` obey the hierarchy: the central-difference
/// residual must shrink by a factor near 4 when the step is halved.
pub fn run_bbgky_check(cfg: &ExperimentConfig) -> Result<BbgkyReport> {
    let inst = generate_instance(cfg)?;
    let prop = make_propagator(&inst.mode_space, &inst.l, &inst.v, inst.lambda)?;
    let times: Vec<f64> = cfg.time_grid.times(inst.tau)?.into_iter().skip(1).collect();
    let orders: Vec<usize> = cfg.orders.iter().copied().filter(|&m| m <= 2).collect();
    if orders.is_empty() {
        return Err(Error::Config("hierarchy check needs order 1 or 2".into()));
    }
    let h = BBGKY_STEP;
    let cells: Vec<(f64, usize)> = times.iter().flat_map(|&t| orders.iter().map(move |&m| (t, m))).collect();
    let rows: Vec<BbgkyRow> = cells
        .par_iter()
        .map(|&(t, m)| {
            let r1 = bbgky_residual(&prop, &inst.density, t, m, h)?;
            let r2 = bbgky_residual(&prop, &inst.density, t, m, h / 2.0)?;
            Ok(BbgkyRow {
                t,
                order: m,
                residual_h: r1,
                residual_half_h: r2,
                ratio: r1 / r2,
            })
        })
        .collect::<Result<_>>()?;
    let checks = rows
        .iter()
        .map(|r| {
            let ok = r.residual_h < RESIDUAL_FLOOR || (3.5..=4.5).contains(&r.ratio);
            Check::new(
                format!("second-order residual m={} t={}", r.order, r.t),
                ok,
                format!("residuals {:e}, {:e}, ratio {}", r.residual_h, r.residual_half_h, r.ratio),
            )
        })
        .collect();
    Ok(BbgkyReport { h, rows, checks })
}

fn selftest_config(d: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        lambda: super::config::LambdaSpec::Value(1.0),
        time_grid: TimeGrid {
            t_max: 0.9,
            samples: 6,
            unit: TimeUnit::Tau,
        },
        ..ExperimentConfig::thermal_default(d, seed)
    }
}

fn random_mixture(ms: &ModeSpace, seed: u64) -> Result<crate::states::FockDensity> {
    // three Slater determinants with unequal weights, chosen from the seed
    let d = ms.d();
    let pick = |k: u64| -> Vec<usize> {
        (0..d).filter(|j| ((seed.wrapping_mul(2654435761).wrapping_add(k * 97)) >> j) & 1 == 1).collect()
    };
    mixture_density(ms, &[(pick(0), 0.5), (pick(1), 0.3), (pick(2), 0.2)])
}

/// Invariant checks on built-in seeds, small enough to run in seconds.
pub fn run_selftest() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for (d, seed) in [(3, 1), (4, 2), (4, 3)] {
        let inst = generate_instance(&selftest_config(d, seed))?;
        let mix = random_mixture(&inst.mode_space, seed)?;
        for rho in [&inst.density, &mix] {
            for m in 1..=2 {
                let a = reduced_density_fast(rho, m)?;
                let b = reduced_density_oracle(rho, m)?;
                worst = worst.max(trace_norm(&(a.matrix() - b.matrix()), true)?);
            }
        }
    }
    checks.push(Check::new("reduced density routes agree", worst <= 1e-10, format!("max discrepancy {worst:e}")));

    let mut closure: f64 = 0.0;
    for seed in 0..3 {
        let inst = generate_instance(&selftest_config(4, seed))?;
        for m in 2..=3 {
            closure = closure.max(closure_deviation(&inst.density, m)?);
        }
    }
    let ms = ModeSpace::new(4)?;
    let slater = slater_density(&ms, &[0, 2])?;
    closure = closure.max(closure_deviation(&slater, 2)?);
    let control = mixture_density(&ms, &[(vec![0, 1], 0.5), (vec![2, 3], 0.5)])?;
    let control_dev = closure_deviation(&control, 2)?;
    checks.push(Check::new("quasifree closure", closure <= 1e-9, format!("max deviation {closure:e}")));
    checks.push(Check::new("mixture breaks closure", control_dev > 0.1, format!("deviation {control_dev}")));

    let inst = generate_instance(&selftest_config(4, 7))?;
    let mix = random_mixture(&inst.mode_space, 7)?;
    let n1 = reduced_density(&mix, 1)?;
    let n1_norm = operator_norm(n1.matrix());
    checks.push(Check::new("one-body density norm", n1_norm <= 1.0 + 1e-10, format!("|N_1| = {n1_norm}")));
    let eigs = hermitian_eigenvalues(n1.matrix())?;
    let direct = closure_product(n1.matrix(), 2)?.trace_norm()?;
    let formula = antisym_power_trace_norm(&eigs, 2);
    checks.push(Check::new(
        "antisymmetric power trace norm",
        (direct - formula).abs() <= 1e-10,
        format!("direct {direct}, formula {formula}"),
    ));

    let prop = make_propagator(&inst.mode_space, &inst.l, &inst.v, inst.lambda)?;
    let later = evolve(&prop, &inst.density, 0.7)?;
    let drift = (prop.energy(&later) - prop.energy(&inst.density)).abs()
        + (particle_moment(&later, 2) - particle_moment(&inst.density, 2)).abs()
        + (later.matrix().trace().re - 1.0).abs();
    checks.push(Check::new("exact conservation", drift <= 1e-9, format!("total drift {drift:e}")));
    let twice = evolve(&prop, &evolve(&prop, &inst.density, 0.3)?, 0.4)?;
    let group = max_abs(&(twice.matrix() - evolve(&prop, &inst.density, 0.7)?.matrix()));
    checks.push(Check::new("group law", group <= 1e-9, format!("max entry gap {group:e}")));

    let free_cfg = ExperimentConfig {
        interaction: InteractionSpec::Zero,
        time_grid: TimeGrid {
            t_max: 1.0,
            samples: 4,
            unit: TimeUnit::Absolute,
        },
        ..selftest_config(4, 8)
    };
    let free = run_error_bound(&free_cfg)?;
    let free_err = free.rows.iter().filter_map(|r| r.error_1).fold(0.0, f64::max);
    checks.push(Check::new("free TDHF is exact", free_err <= 1e-9, format!("max error {free_err:e}")));

    let bound = run_error_bound(&selftest_config(4, 9))?;
    checks.extend(bound.checks.into_iter().map(|c| Check { name: format!("d=4 seed=9 {}", c.name), ..c }));

    let problem = inst.problem()?;
    let rem = hierarchy_remainder(&problem, &inst.f0, 2)?;
    checks.push(Check::new(
        "hierarchy remainder bound",
        rem.holds(0.0),
        format!("{:e} <= {:e}", rem.scaled_trace_norm, rem.bound),
    ));
    let (lhs, rhs) = exchange_identity_sides(&inst.f0, &inst.v, 2)?;
    let gap = trace_norm(&(lhs - rhs), false)?;
    checks.push(Check::new("exchange identity", gap <= 1e-10, format!("gap {gap:e}")));

    let slater_cfg = ExperimentConfig {
        state: StateSpec::Slater { occupied: vec![1, 3] },
        ..selftest_config(4, 10)
    };
    let bb = run_bbgky_check(&ExperimentConfig {
        time_grid: TimeGrid {
            t_max: 0.5,
            samples: 1,
            unit: TimeUnit::Absolute,
        },
        ..slater_cfg
    })?;
    checks.extend(bb.checks);
    Ok(checks)
}

/// τ for a unit-norm interaction at `λ = ħ = 1` and two particles.
pub fn reference_tau() -> f64 {
    let v = TwoBodyOperator::new(CMatrix::identity(4, 4), 2).expect("identity is a valid interaction");
    crate::tdhf::tau_horizon(&v, 2.0, 1.0, 1.0).expect("positive particle number")
}
