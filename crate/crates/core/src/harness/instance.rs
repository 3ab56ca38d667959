//! Seeded problem instances built from an [`ExperimentConfig`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{ExperimentConfig, InteractionSpec, LambdaSpec, OneBodySpec, StateSpec};
use crate::error::{Error, Result};
use crate::fock::{ModeSpace, TwoBodyOperator};
use crate::rdm::reduced_density;
use crate::states::{quasifree_density, slater_density, thermal_measure, FockDensity, OccupationMeasure};
use crate::tdhf::{tau_horizon, TdhfProblem};
use crate::tensor_ops::{hermitize, operator_norm, CMatrix, C64};

/// Everything an experiment needs at `t = 0`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub mode_space: ModeSpace,
    pub l: CMatrix,
    pub v: TwoBodyOperator,
    pub lambda: f64,
    pub density: FockDensity,
    /// `F(0) = N_1(D(0))`.
    pub f0: CMatrix,
    pub n1_trace: f64,
    pub tau: f64,
}

impl Instance {
    pub fn problem(&self) -> Result<TdhfProblem> {
        TdhfProblem::new(self.l.clone(), self.v.clone(), self.lambda, self.mode_space.hbar())
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    // column-major fill order is part of the seed contract
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

fn rescale(m: CMatrix, cap: f64) -> CMatrix {
    let norm = operator_norm(&m);
    if norm == 0.0 {
        m
    } else {
        m * C64::new(cap / norm, 0.0)
    }
}

fn one_body(spec: &OneBodySpec, d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    match spec {
        OneBodySpec::Diagonal { values } => {
            CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, values.iter().map(|&x| C64::new(x, 0.0))))
        }
        OneBodySpec::Random { norm_cap } => hermitize(&rescale(hermitize(&gaussian_matrix(rng, d)), *norm_cap)),
    }
}

fn interaction(spec: &InteractionSpec, d: usize, rng: &mut ChaCha8Rng) -> Result<TwoBodyOperator> {
    match spec {
        InteractionSpec::Zero => Ok(TwoBodyOperator::zero(d)),
        InteractionSpec::Random { norm_cap } => {
            let raw = gaussian_matrix(rng, d * d);
            let v = TwoBodyOperator::symmetrized(&raw, d)?;
            let norm = v.norm();
            Ok(if norm == 0.0 { v } else { v.scaled(norm_cap / norm) })
        }
        InteractionSpec::Explicit { real, imag } => {
            let dd = d * d;
            let m = CMatrix::from_fn(dd, dd, |i, j| {
                C64::new(real[i][j], imag.as_ref().map_or(0.0, |im| im[i][j]))
            });
            TwoBodyOperator::new(m, d)
        }
    }
}

fn initial_state(spec: &StateSpec, ms: &ModeSpace, l: &CMatrix) -> Result<FockDensity> {
    match spec {
        StateSpec::Slater { occupied } => slater_density(ms, occupied),
        StateSpec::Quasifree { p } => quasifree_density(ms, &OccupationMeasure::new(p.clone())?),
        StateSpec::Thermal { beta, mu } => quasifree_density(ms, &thermal_measure(l, *beta, *mu)?),
    }
}

/// Draws `L` then `V` from a ChaCha8 stream seeded by `cfg.seed`, builds the
/// initial density and its one-body reduction.
pub fn generate_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    cfg.validate()?;
    let d = cfg.d;
    let mode_space = ModeSpace::with_hbar(d, cfg.hbar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let l = one_body(&cfg.one_body, d, &mut rng);
    let v = interaction(&cfg.interaction, d, &mut rng)?;
    let density = initial_state(&cfg.state, &mode_space, &l)?;
    let f0 = reduced_density(&density, 1)?.into_matrix();
    let n1_trace = f0.trace().re;
    let lambda = match cfg.lambda {
        LambdaSpec::Value(x) => x,
        LambdaSpec::Keyword(_) if n1_trace > 0.0 => 1.0 / n1_trace,
        LambdaSpec::Keyword(_) => {
            return Err(Error::Config("mean-field coupling needs a nonempty initial state".into()))
        }
    };
    let tau = if n1_trace > 0.0 {
        tau_horizon(&v, n1_trace, cfg.hbar, lambda)?
    } else {
        f64::INFINITY
    };
    Ok(Instance {
        mode_space,
        l,
        v,
        lambda,
        density,
        f0,
        n1_trace,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::swap_operator;
    use crate::tensor_ops::max_abs;

    #[test]
    fn deterministic_in_seed() {
        let cfg = ExperimentConfig::thermal_default(4, 17);
        let a = generate_instance(&cfg).unwrap();
        let b = generate_instance(&cfg).unwrap();
        assert_eq!(a.l, b.l);
        assert_eq!(a.v.matrix(), b.v.matrix());
        assert_eq!(a.density.matrix(), b.density.matrix());
        let c = generate_instance(&ExperimentConfig { seed: 18, ..cfg }).unwrap();
        assert_ne!(a.l, c.l);
    }

    #[test]
    fn generated_interaction_is_symmetric_and_capped() {
        for seed in 0..5 {
            let inst = generate_instance(&ExperimentConfig::thermal_default(3, seed)).unwrap();
            let u = swap_operator(3);
            let v = inst.v.matrix();
            assert!(operator_norm(&(&u * v * &u - v)) <= 1e-12);
            assert!(inst.v.norm() <= 1.0 + 1e-12);
            assert!((operator_norm(&inst.l) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_field_coupling_and_half_filling() {
        let inst = generate_instance(&ExperimentConfig::thermal_default(6, 1)).unwrap();
        assert!((inst.lambda * inst.n1_trace - 1.0).abs() < 1e-12);
        assert!((inst.n1_trace - 3.0).abs() < 1.0);
        assert!((inst.tau - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_interaction_gives_infinite_horizon() {
        let cfg = ExperimentConfig {
            interaction: InteractionSpec::Zero,
            ..ExperimentConfig::thermal_default(3, 2)
        };
        let inst = generate_instance(&cfg).unwrap();
        assert!(inst.v.is_zero());
        assert_eq!(inst.tau, f64::INFINITY);
    }

    #[test]
    fn explicit_interaction_is_read_row_major() {
        let d = 2;
        let swap = swap_operator(d);
        let real: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| swap[(i, j)].re).collect()).collect();
        let cfg = ExperimentConfig {
            interaction: InteractionSpec::Explicit { real, imag: None },
            state: StateSpec::Slater { occupied: vec![0] },
            ..ExperimentConfig::thermal_default(d, 0)
        };
        let inst = generate_instance(&cfg).unwrap();
        assert!(max_abs(&(inst.v.matrix() - swap)) == 0.0);
        assert!((inst.f0[(0, 0)].re - 1.0).abs() < 1e-15);
    }
}
