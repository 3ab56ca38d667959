//! Reduced number densities `N_m(D) = Σ_{n≥m} n!/(n-m)! D_{n:m}`.
//!
//! Two independent routes are provided. [`reduced_density_oracle`] follows the
//! definition literally: each sector block is carried into `H^{⊗n}` through the
//! Slater-determinant isometry and the last `n - m` factors are traced out.
//! [`reduced_density_fast`] reads the same kernels off second-quantized
//! correlation functions, `⟨i|N_1|j⟩ = Tr(D a†_j a_i)` and
//! `⟨i⊗j|N_2|k⊗l⟩ = Tr(D a†_k a†_l a_j a_i)`. Their agreement is what pins the
//! index and sign conventions.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fock::{apply_one_body, apply_two_body, factorial, SectorIsometry};
use crate::states::FockDensity;
use crate::tensor_ops::{
    antisymmetrizer, hermitize, kron_power, max_abs, require_square, trace_norm, CMatrix,
    Permutation, TensorIndexScheme, C64,
};

/// `N_m` (or a closure product `F^{⊗m} m! A_m`) as a `d^m × d^m` matrix.
#[derive(Debug, Clone)]
pub struct ReducedDensity {
    order: usize,
    d: usize,
    matrix: CMatrix,
}

impl ReducedDensity {
    pub fn new(order: usize, d: usize, matrix: CMatrix) -> Result<Self> {
        let dim = d.pow(order as u32);
        if matrix.shape() != (dim, dim) {
            return Err(Error::shape(
                "ReducedDensity",
                format!("{dim}x{dim}"),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(Self { order, d, matrix })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace_norm(&self) -> Result<f64> {
        trace_norm(&self.matrix, true)
    }

    /// `‖A_m M A_m − M‖` (max entry): zero when supported on antisymmetric tensors.
    pub fn antisymmetric_leakage(&self) -> Result<f64> {
        let a = antisymmetrizer(self.d, self.order)?;
        Ok(max_abs(&(&a * &self.matrix * &a - &self.matrix)))
    }
}

fn check_order(density: &FockDensity, m: usize) -> Result<()> {
    if m == 0 || m > density.d() {
        return Err(Error::out_of_range("reduced density order", m, format!("1..={}", density.d())));
    }
    Ok(())
}

/// `N_m(D)` from partial traces of the first-quantized sector densities.
pub fn reduced_density_oracle(density: &FockDensity, m: usize) -> Result<ReducedDensity> {
    check_order(density, m)?;
    let ms = density.mode_space();
    let d = ms.d();
    let kept = d.pow(m as u32);
    let mut out = CMatrix::zeros(kept, kept);
    for n in m..=d {
        let block = density.sector_block(n);
        if max_abs(&block) == 0.0 {
            continue;
        }
        let iso = SectorIsometry::new(ms, n)?;
        let traced = d.pow((n - m) as u32);
        // ⟨a|T_{:m}|b⟩ = Σ_c ⟨a,c|W D_n W†|b,c⟩ with W sparse
        let mut groups: HashMap<usize, Vec<(usize, usize, f64)>> = HashMap::new();
        for (col, entries) in iso.columns.iter().enumerate() {
            for &(flat, amp) in entries {
                groups.entry(flat % traced).or_default().push((flat / traced, col, amp));
            }
        }
        let weight = factorial(n) / factorial(n - m);
        let mut partial = CMatrix::zeros(kept, kept);
        for entries in groups.values() {
            for &(a, s, wa) in entries {
                for &(b, t, wb) in entries {
                    partial[(a, b)] += block[(s, t)] * (wa * wb);
                }
            }
        }
        out += partial * C64::new(weight, 0.0);
    }
    ReducedDensity::new(m, d, hermitize(&out))
}

/// `N_1` or `N_2` from correlation functions of ladder operators.
pub fn reduced_density_fast(density: &FockDensity, m: usize) -> Result<ReducedDensity> {
    check_order(density, m)?;
    let d = density.d();
    let dim = density.mode_space().dim();
    let dm = density.matrix();
    let zero = C64::new(0.0, 0.0);
    let out = match m {
        1 => {
            let mut n1 = CMatrix::zeros(d, d);
            for s in 0..dim {
                for i in 0..d {
                    for j in 0..d {
                        // Tr(D O) = Σ_s D[s, O(s)] ⟨O(s)|O|s⟩
                        if let Some((t, sign)) = apply_one_body(s, j, i) {
                            let x = dm[(s, t)];
                            if x != zero {
                                n1[(i, j)] += x * sign;
                            }
                        }
                    }
                }
            }
            n1
        }
        2 => {
            let mut n2 = CMatrix::zeros(d * d, d * d);
            for s in 0..dim {
                if s.count_ones() < 2 {
                    continue;
                }
                for i in 0..d {
                    for j in 0..d {
                        if i == j || s & (1 << i) == 0 || s & (1 << j) == 0 {
                            continue;
                        }
                        for k in 0..d {
                            for l in 0..d {
                                if k == l {
                                    continue;
                                }
                                if let Some((t, sign)) = apply_two_body(s, k, l, j, i) {
                                    let x = dm[(s, t)];
                                    if x != zero {
                                        n2[(i * d + j, k * d + l)] += x * sign;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            n2
        }
        _ => {
            return Err(Error::invalid(
                "fast reduced density order",
                format!("only m = 1, 2 are supported, got {m}"),
            ))
        }
    };
    ReducedDensity::new(m, d, hermitize(&out))
}

/// Fast route for `m ≤ 2`, partial-trace route above.
pub fn reduced_density(density: &FockDensity, m: usize) -> Result<ReducedDensity> {
    if m <= 2 {
        reduced_density_fast(density, m)
    } else {
        reduced_density_oracle(density, m)
    }
}

/// Closure product `F^{⊗m} m! A_m = Σ_π sgn(π) F^{⊗m} U_π`.
pub fn closure_product(f: &CMatrix, m: usize) -> Result<ReducedDensity> {
    let d = require_square("closure_product", f)?;
    if m == 0 {
        return Err(Error::out_of_range("closure order", m, ">= 1"));
    }
    let x = kron_power(f, m);
    let scheme = TensorIndexScheme::new(d, m);
    let dim = scheme.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for pi in Permutation::all(m) {
        let sign = C64::new(pi.sign(), 0.0);
        // (X U_π)[:, c] = X[:, π(c)]
        for c in 0..dim {
            let src = pi.permute_index(c, &scheme);
            for r in 0..dim {
                out[(r, c)] += x[(r, src)] * sign;
            }
        }
    }
    ReducedDensity::new(m, d, out)
}

/// Elementary symmetric polynomial `e_n` of nonnegative values.
pub fn elementary_symmetric(values: &[f64], n: usize) -> f64 {
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for &v in values {
        for k in (1..=n).rev() {
            e[k] += v * e[k - 1];
        }
    }
    e[n]
}

/// `‖T^{⊗n} n! A_n‖₁ = n! e_n(|λ_1|, …, |λ_d|)` from the eigenvalues of Hermitian `T`.
/// Zero when `n` exceeds the number of eigenvalues.
pub fn antisym_power_trace_norm(eigs: &[f64], n: usize) -> f64 {
    if n > eigs.len() {
        return 0.0;
    }
    let abs: Vec<f64> = eigs.iter().map(|x| x.abs()).collect();
    factorial(n) * elementary_symmetric(&abs, n)
}

/// `‖N_m(D) − N_1(D)^{⊗m} m! A_m‖₁`.
pub fn closure_deviation(density: &FockDensity, m: usize) -> Result<f64> {
    check_order(density, m)?;
    let n1 = reduced_density(density, 1)?;
    let nm = reduced_density(density, m)?;
    let closure = closure_product(n1.matrix(), m)?;
    trace_norm(&hermitize(&(nm.matrix() - closure.matrix())), true)
}

/// `½ Tr(V N_2)`, the interaction energy in a state with pair density `N_2`.
pub fn pair_energy(v: &CMatrix, n2: &CMatrix) -> f64 {
    0.5 * (v * n2).trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_hamiltonian, sector_isometry, second_quantize, ModeSpace, TwoBodyOperator};
    use crate::states::{mixture_density, particle_moment, quasifree_density, slater_density, OccupationMeasure};
    use crate::tensor_ops::test_util::*;
    use crate::tensor_ops::{herm_propagator, hermitian_eigenvalues, operator_norm, partial_trace_last};

    fn ms(d: usize) -> ModeSpace {
        ModeSpace::new(d).unwrap()
    }

    fn proj(d: usize, modes: &[usize]) -> CMatrix {
        let mut p = CMatrix::zeros(d, d);
        for &k in modes {
            p[(k, k)] = C64::new(1.0, 0.0);
        }
        p
    }

    /// Generic number-conserving density: random PSD blocks per sector.
    fn random_sector_density(m: &ModeSpace, seed: u64) -> FockDensity {
        let mut mat = CMatrix::zeros(m.dim(), m.dim());
        for n in 0..=m.d() {
            let idx = m.sector(n);
            let block = random_density(idx.len(), seed * 31 + n as u64);
            let w = 1.0 / (m.d() + 1) as f64;
            for (a, &ra) in idx.iter().enumerate() {
                for (b, &rb) in idx.iter().enumerate() {
                    mat[(ra, rb)] = block[(a, b)] * w;
                }
            }
        }
        FockDensity::new(mat, *m).unwrap()
    }

    #[test]
    fn oracle_examples() {
        let s = slater_density(&ms(3), &[0, 1]).unwrap();
        let n1 = reduced_density_oracle(&s, 1).unwrap();
        assert_close(n1.matrix(), &proj(3, &[0, 1]), 1e-14);

        let vac = slater_density(&ms(3), &[]).unwrap();
        assert_eq!(max_abs(reduced_density_oracle(&vac, 2).unwrap().matrix()), 0.0);

        let s = slater_density(&ms(2), &[0, 1]).unwrap();
        let n2 = reduced_density_oracle(&s, 2).unwrap();
        let w = sector_isometry(&ms(2), 2).unwrap();
        assert_close(n2.matrix(), &(&w * w.adjoint() * C64::new(2.0, 0.0)), 1e-14);
        assert!((n2.matrix().trace().re - 2.0).abs() < 1e-14);

        assert!(reduced_density_oracle(&s, 0).is_err());
        assert!(reduced_density_oracle(&s, 3).is_err());
    }

    #[test]
    fn sparse_oracle_matches_dense_partial_trace() {
        let m = ms(3);
        let rho = random_sector_density(&m, 4);
        for order in 1..=3 {
            let mut dense = CMatrix::zeros(3usize.pow(order as u32), 3usize.pow(order as u32));
            for n in order..=3 {
                let w = sector_isometry(&m, n).unwrap();
                let lifted = &w * rho.sector_block(n) * w.adjoint();
                let weight = factorial(n) / factorial(n - order);
                dense += partial_trace_last(&lifted, 3, n, order).unwrap() * C64::new(weight, 0.0);
            }
            assert_close(reduced_density_oracle(&rho, order).unwrap().matrix(), &dense, 1e-13);
        }
    }

    #[test]
    fn fast_matches_oracle() {
        for d in 3..=5 {
            let m = ms(d);
            for seed in 0..3 {
                let rho = random_sector_density(&m, seed);
                for order in 1..=2 {
                    let fast = reduced_density_fast(&rho, order).unwrap();
                    let slow = reduced_density_oracle(&rho, order).unwrap();
                    assert_close(fast.matrix(), slow.matrix(), 1e-10);
                }
            }
        }
        let rho = random_sector_density(&ms(3), 0);
        assert!(reduced_density_fast(&rho, 3).is_err());
    }

    #[test]
    fn fast_examples() {
        let m = ms(4);
        let p = vec![0.3, 0.8, 0.5, 0.05];
        let g = quasifree_density(&m, &OccupationMeasure::new(p.clone()).unwrap()).unwrap();
        let n1 = reduced_density_fast(&g, 1).unwrap();
        let diag = CMatrix::from_fn(4, 4, |i, j| if i == j { C64::new(p[i], 0.0) } else { C64::new(0.0, 0.0) });
        assert_close(n1.matrix(), &diag, 1e-14);
        assert!((n1.matrix().trace().re - particle_moment(&g, 1)).abs() < 1e-12);
    }

    #[test]
    fn quasifree_one_body_density_in_rotated_basis() {
        let m = ms(4);
        let basis = herm_propagator(&random_hermitian(4, 8), 1.0, 1.0).unwrap();
        let measure = OccupationMeasure::with_basis(vec![0.2, 0.9, 0.6, 0.35], basis).unwrap();
        let g = quasifree_density(&m, &measure).unwrap();
        assert_close(reduced_density(&g, 1).unwrap().matrix(), &measure.one_body_density(), 1e-12);
    }

    #[test]
    fn closure_product_examples() {
        let f = random_hermitian(3, 1);
        assert_close(closure_product(&f, 1).unwrap().matrix(), &f, 0.0);
        assert_eq!(max_abs(closure_product(&proj(3, &[1]), 2).unwrap().matrix()), 0.0);
        let c = closure_product(&CMatrix::identity(2, 2), 2).unwrap();
        assert_close(c.matrix(), &(antisymmetrizer(2, 2).unwrap() * C64::new(2.0, 0.0)), 1e-15);
        assert!((c.matrix().trace().re - 2.0).abs() < 1e-15);
        assert!(closure_product(&f, 0).is_err());

        // against the explicit antisymmetrizer
        let a3 = antisymmetrizer(3, 3).unwrap() * C64::new(6.0, 0.0);
        assert_close(closure_product(&f, 3).unwrap().matrix(), &(kron_power(&f, 3) * a3), 1e-12);
    }

    #[test]
    fn antisym_power_examples() {
        assert!((antisym_power_trace_norm(&[1.0, -0.5], 2) - 1.0).abs() < 1e-15);
        assert!((antisym_power_trace_norm(&[1.0, -0.5, 0.25], 1) - 1.75).abs() < 1e-15);
        assert_eq!(antisym_power_trace_norm(&[1.0, 2.0], 3), 0.0);

        // brute force: T = diag(eigs) conjugated by a random unitary
        let eigs = [0.9, -0.4, 0.33, -1.2, 0.05];
        let u = herm_propagator(&random_hermitian(5, 3), 1.0, 1.0).unwrap();
        let diag = CMatrix::from_fn(5, 5, |i, j| if i == j { C64::new(eigs[i], 0.0) } else { C64::new(0.0, 0.0) });
        let t = &u * diag * u.adjoint();
        let direct = closure_product(&hermitize(&t), 3).unwrap().trace_norm().unwrap();
        assert!((direct - antisym_power_trace_norm(&eigs, 3)).abs() < 1e-10);
    }

    #[test]
    fn closure_holds_for_quasifree_and_slater() {
        let m = ms(4);
        let basis = herm_propagator(&random_hermitian(4, 12), 1.0, 1.0).unwrap();
        let g = quasifree_density(&m, &OccupationMeasure::with_basis(vec![0.7, 0.1, 0.45, 0.9], basis).unwrap()).unwrap();
        let s = slater_density(&m, &[1, 2, 3]).unwrap();
        for order in 2..=3 {
            assert!(closure_deviation(&g, order).unwrap() <= 1e-9);
            assert!(closure_deviation(&s, order).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn closure_fails_for_two_point_mixture() {
        let m = ms(2);
        let mix = mixture_density(&m, &[(vec![0], 0.5), (vec![1], 0.5)]).unwrap();
        let n1 = reduced_density(&mix, 1).unwrap();
        assert_close(n1.matrix(), &(proj(2, &[0, 1]) * C64::new(0.5, 0.0)), 1e-15);
        assert_eq!(max_abs(reduced_density(&mix, 2).unwrap().matrix()), 0.0);
        // N_1^{⊗2} 2A_2 = ½ · 2A_2 · ½ ... trace norm ½
        let dev = closure_deviation(&mix, 2).unwrap();
        assert!((dev - 0.5).abs() < 1e-12, "{dev}");
    }

    #[test]
    fn norm_bounds() {
        let m = ms(4);
        for seed in 0..4 {
            let rho = random_sector_density(&m, 100 + seed);
            let n1 = reduced_density(&rho, 1).unwrap();
            assert!(operator_norm(n1.matrix()) <= 1.0 + 1e-10);
            for order in 2..=3 {
                let nm = reduced_density(&rho, order).unwrap();
                assert!(nm.antisymmetric_leakage().unwrap() <= 1e-9);
                assert!(hermitian_eigenvalues(nm.matrix()).unwrap()[0] >= -1e-9);
            }
        }
    }

    #[test]
    fn energy_matches_reduced_densities() {
        let m = ms(4);
        let l = random_hermitian(4, 40);
        let v = TwoBodyOperator::symmetrized(&random_matrix(16, 16, 41), 4).unwrap();
        let lambda = 0.8;
        let h = build_hamiltonian(&m, &l, &v, lambda).unwrap();
        let rho = random_sector_density(&m, 7);
        let exact = rho.expectation(h.matrix()).re;
        let n1 = reduced_density(&rho, 1).unwrap();
        let n2 = reduced_density(&rho, 2).unwrap();
        let reduced = (&l * n1.matrix()).trace().re + lambda * pair_energy(v.matrix(), n2.matrix());
        assert!((exact - reduced).abs() < 1e-9);
        // single-particle observables: ω(dΓ(B)) = Tr(N_1 B)
        let b = random_hermitian(4, 42);
        let db = second_quantize(&m, &b).unwrap();
        assert!((rho.expectation(db.matrix()) - (n1.matrix() * &b).trace()).norm() < 1e-10);
    }
}
