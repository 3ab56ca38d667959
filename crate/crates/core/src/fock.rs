//! Fermion Fock space over `d` modes in the occupation-number basis.
//!
//! Basis vector `|s⟩` is indexed by its bitmask `s`. Ladder operators carry the
//! phase `(-1)^{#occupied modes below j}`, which makes
//! `|s⟩ = a†_{j1} a†_{j2} ⋯ a†_{jn} Ω` for `j1 < j2 < ⋯ < jn` and identifies
//! `|s⟩` with the Slater determinant `√n! A_n (e_{j1} ⊗ ⋯ ⊗ e_{jn})`.
//!
//! The interaction in [`build_hamiltonian`] is the normal-ordered sum
//! `½ λ Σ ⟨kl|V|ij⟩ a†_k a†_l a_j a_i`. The factor ½ makes the `n`-particle
//! block equal to `Σ_j L_j + λ Σ_{i<j} V_{ij}`; without it every pair would be
//! counted twice (checked against the first-quantized operator in the tests).

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::tensor_ops::{
    max_abs, operator_norm, permutation_operator, require_hermitian, require_square, CMatrix,
    Permutation, TensorIndexScheme, C64,
};

pub const MAX_MODES: usize = 12;

const SECTOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpace {
    d: usize,
    hbar: f64,
}

impl ModeSpace {
    pub fn new(d: usize) -> Result<Self> {
        Self::with_hbar(d, 1.0)
    }

    pub fn with_hbar(d: usize, hbar: f64) -> Result<Self> {
        if d == 0 || d > MAX_MODES {
            return Err(Error::out_of_range("mode count", d, format!("1..={MAX_MODES}")));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid("hbar", format!("must be positive, got {hbar}")));
        }
        Ok(Self { d, hbar })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `2^d`.
    pub fn dim(&self) -> usize {
        1 << self.d
    }

    pub fn sector_dim(&self, n: usize) -> usize {
        binomial(self.d, n)
    }

    /// Bitmasks with `n` bits set, ascending. Panics-free: empty for `n > d`.
    pub fn sector(&self, n: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|s| s.count_ones() as usize == n)
            .collect()
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Ordered bitmasks of the `n`-particle sector.
pub fn basis_sector(ms: &ModeSpace, n: usize) -> Result<Vec<usize>> {
    if n > ms.d() {
        return Err(Error::out_of_range("particle count", n, format!("0..={}", ms.d())));
    }
    Ok(ms.sector(n))
}

/// Modes occupied in `mask`, ascending.
pub fn occupied_modes(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize)
        .filter(|&j| mask & (1 << j) != 0)
        .collect()
}

pub(crate) fn mask_of(modes: &[usize], d: usize) -> Result<usize> {
    let mut mask = 0usize;
    for &j in modes {
        if j >= d {
            return Err(Error::out_of_range("mode", j, format!("< {d}")));
        }
        mask |= 1 << j;
    }
    Ok(mask)
}

#[inline]
fn phase(mask: usize, j: usize) -> f64 {
    if (mask & ((1 << j) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `a_j |mask⟩`, or `None` if mode `j` is empty.
#[inline]
pub(crate) fn annihilate(mask: usize, j: usize) -> Option<(usize, f64)> {
    (mask & (1 << j) != 0).then(|| (mask ^ (1 << j), phase(mask, j)))
}

/// `a†_j |mask⟩`, or `None` if mode `j` is occupied.
#[inline]
pub(crate) fn create(mask: usize, j: usize) -> Option<(usize, f64)> {
    (mask & (1 << j) == 0).then(|| (mask | (1 << j), phase(mask, j)))
}

/// `a†_k a†_l a_j a_i |mask⟩`.
#[inline]
pub(crate) fn apply_two_body(mask: usize, k: usize, l: usize, j: usize, i: usize) -> Option<(usize, f64)> {
    let (m, s1) = annihilate(mask, i)?;
    let (m, s2) = annihilate(m, j)?;
    let (m, s3) = create(m, l)?;
    let (m, s4) = create(m, k)?;
    Some((m, s1 * s2 * s3 * s4))
}

/// `a†_j a_i |mask⟩`.
#[inline]
pub(crate) fn apply_one_body(mask: usize, j: usize, i: usize) -> Option<(usize, f64)> {
    let (m, s1) = annihilate(mask, i)?;
    let (m, s2) = create(m, j)?;
    Some((m, s1 * s2))
}

/// Submatrix on the rows and columns of the given Fock indices.
pub fn sector_block(m: &CMatrix, indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(indices.len(), indices.len(), |r, c| m[(indices[r], indices[c])])
}

/// Largest entry coupling different particle-number sectors.
pub fn off_sector_max(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if r.count_ones() != c.count_ones() {
                dev = dev.max(m[(r, c)].norm());
            }
        }
    }
    dev
}

#[derive(Debug, Clone)]
pub struct FockOperator {
    matrix: CMatrix,
    mode_space: ModeSpace,
    number_conserving: bool,
}

impl FockOperator {
    /// Wraps a `2^d × 2^d` matrix; `number_conserving` is verified, not trusted.
    pub fn new(matrix: CMatrix, mode_space: ModeSpace, number_conserving: bool) -> Result<Self> {
        let dim = mode_space.dim();
        if matrix.shape() != (dim, dim) {
            return Err(Error::shape(
                "FockOperator",
                format!("{dim}x{dim}"),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        if number_conserving {
            let dev = off_sector_max(&matrix);
            if dev > SECTOR_TOL {
                return Err(Error::invalid(
                    "number-conserving operator",
                    format!("off-sector entry of size {dev:.3e}"),
                ));
            }
        }
        Ok(Self {
            matrix,
            mode_space,
            number_conserving,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn mode_space(&self) -> &ModeSpace {
        &self.mode_space
    }

    pub fn is_number_conserving(&self) -> bool {
        self.number_conserving
    }

    pub fn adjoint(&self) -> FockOperator {
        FockOperator {
            matrix: self.matrix.adjoint(),
            mode_space: self.mode_space,
            number_conserving: self.number_conserving,
        }
    }

    pub fn sector_block(&self, n: usize) -> CMatrix {
        sector_block(&self.matrix, &self.mode_space.sector(n))
    }
}

fn ladder(ms: &ModeSpace, j: usize, op: fn(usize, usize) -> Option<(usize, f64)>) -> Result<FockOperator> {
    if j >= ms.d() {
        return Err(Error::out_of_range("mode", j, format!("< {}", ms.d())));
    }
    let mut m = CMatrix::zeros(ms.dim(), ms.dim());
    for s in 0..ms.dim() {
        if let Some((t, sign)) = op(s, j) {
            m[(t, s)] = C64::new(sign, 0.0);
        }
    }
    Ok(FockOperator {
        matrix: m,
        mode_space: *ms,
        number_conserving: false,
    })
}

/// Annihilation operator `a_j`.
pub fn ladder_annihilate(ms: &ModeSpace, j: usize) -> Result<FockOperator> {
    ladder(ms, j, annihilate)
}

/// Creation operator `a†_j`.
pub fn ladder_create(ms: &ModeSpace, j: usize) -> Result<FockOperator> {
    ladder(ms, j, create)
}

/// `Σ_{ij} ⟨j|B|i⟩ a†_j a_i` without any Hermiticity requirement.
pub(crate) fn one_body_fock(ms: &ModeSpace, b: &CMatrix) -> CMatrix {
    let d = ms.d();
    let mut m = CMatrix::zeros(ms.dim(), ms.dim());
    for s in 0..ms.dim() {
        for i in 0..d {
            for j in 0..d {
                let coeff = b[(j, i)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((t, sign)) = apply_one_body(s, j, i) {
                    m[(t, s)] += coeff * sign;
                }
            }
        }
    }
    m
}

fn require_one_body(ms: &ModeSpace, what: &'static str, b: &CMatrix) -> Result<()> {
    let n = require_square(what, b)?;
    if n != ms.d() {
        return Err(Error::shape(what, format!("{0}x{0}", ms.d()), format!("{n}x{n}")));
    }
    require_hermitian(what, b)
}

/// Second quantization `dΓ(B)`.
pub fn second_quantize(ms: &ModeSpace, b: &CMatrix) -> Result<FockOperator> {
    require_one_body(ms, "second_quantize operand", b)?;
    Ok(FockOperator {
        matrix: one_body_fock(ms, b),
        mode_space: *ms,
        number_conserving: true,
    })
}

/// Number operator `N = dΓ(I)`.
pub fn number_operator(ms: &ModeSpace) -> FockOperator {
    let diag = DVector::from_iterator(ms.dim(), (0..ms.dim()).map(|s| C64::new(s.count_ones() as f64, 0.0)));
    FockOperator {
        matrix: CMatrix::from_diagonal(&diag),
        mode_space: *ms,
        number_conserving: true,
    }
}

/// The swap `U(x ⊗ y) = y ⊗ x` on `H ⊗ H`.
pub fn swap_operator(d: usize) -> CMatrix {
    permutation_operator(&Permutation::transposition(2, 0, 1).expect("two slots"), d)
}

/// Pair interaction on `H ⊗ H`: Hermitian and commuting with the swap.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyOperator {
    matrix: CMatrix,
    d: usize,
}

impl TwoBodyOperator {
    pub const TOL: f64 = 1e-10;

    pub fn new(matrix: CMatrix, d: usize) -> Result<Self> {
        let dim = d * d;
        if matrix.shape() != (dim, dim) {
            return Err(Error::shape(
                "TwoBodyOperator",
                format!("{dim}x{dim}"),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        require_hermitian("two-body interaction", &matrix)?;
        let u = swap_operator(d);
        let asym = operator_norm(&(&u * &matrix * &u - &matrix));
        if asym > Self::TOL {
            return Err(Error::invalid(
                "two-body interaction",
                format!("does not commute with the swap (‖UVU - V‖ = {asym:.3e})"),
            ));
        }
        Ok(Self {
            matrix: crate::tensor_ops::hermitize(&matrix),
            d,
        })
    }

    /// Projects an arbitrary `d² × d²` matrix onto the swap-symmetric Hermitian ones.
    pub fn symmetrized(raw: &CMatrix, d: usize) -> Result<Self> {
        let u = swap_operator(d);
        if raw.shape() != u.shape() {
            return Err(Error::shape(
                "TwoBodyOperator::symmetrized",
                format!("{0}x{0}", d * d),
                format!("{}x{}", raw.nrows(), raw.ncols()),
            ));
        }
        let sym = (raw + &u * raw * &u) * C64::new(0.5, 0.0);
        let sym = crate::tensor_ops::hermitize(&sym);
        Ok(Self { matrix: sym, d })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            matrix: CMatrix::zeros(d * d, d * d),
            d,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(factor, 0.0),
            d: self.d,
        }
    }

    /// `U V U`.
    pub fn swapped(&self) -> Self {
        let u = swap_operator(self.d);
        Self {
            matrix: &u * &self.matrix * &u,
            d: self.d,
        }
    }

    pub fn is_zero(&self) -> bool {
        max_abs(&self.matrix) == 0.0
    }
}

/// `H^λ = Σ ⟨j|L|i⟩ a†_j a_i + ½ λ Σ ⟨kl|V|ij⟩ a†_k a†_l a_j a_i`, with
/// `⟨kl|V|ij⟩ = V[flatten(k,l), flatten(i,j)]`.
pub fn build_hamiltonian(
    ms: &ModeSpace,
    l: &CMatrix,
    v: &TwoBodyOperator,
    lambda: f64,
) -> Result<FockOperator> {
    require_one_body(ms, "one-body Hamiltonian", l)?;
    if v.d() != ms.d() {
        return Err(Error::shape("build_hamiltonian interaction", ms.d(), v.d()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("coupling", format!("must be finite and >= 0, got {lambda}")));
    }
    let d = ms.d();
    let mut h = one_body_fock(ms, l);
    if lambda != 0.0 && !v.is_zero() {
        let vm = v.matrix();
        let half = 0.5 * lambda;
        for s in 0..ms.dim() {
            if s.count_ones() < 2 {
                continue;
            }
            for i in 0..d {
                for j in 0..d {
                    let Some((s1, sign_in)) = annihilate(s, i).and_then(|(m, a)| annihilate(m, j).map(|(m, b)| (m, a * b))) else {
                        continue;
                    };
                    let col = i * d + j;
                    for k in 0..d {
                        for ll in 0..d {
                            let coeff = vm[(k * d + ll, col)];
                            if coeff == C64::new(0.0, 0.0) {
                                continue;
                            }
                            if let Some((t, sign_out)) = create(s1, ll).and_then(|(m, a)| create(m, k).map(|(m, b)| (m, a * b))) {
                                h[(t, s)] += coeff * (half * sign_in * sign_out);
                            }
                        }
                    }
                }
            }
        }
    }
    let h = crate::tensor_ops::hermitize(&h);
    Ok(FockOperator {
        matrix: h,
        mode_space: *ms,
        number_conserving: true,
    })
}

/// Sparse form of the sector isometry: for each sector mask (ascending), the
/// nonzero entries `(composite index, amplitude)` of its Slater determinant.
#[derive(Debug, Clone)]
pub struct SectorIsometry {
    pub d: usize,
    pub n: usize,
    pub masks: Vec<usize>,
    pub columns: Vec<Vec<(usize, f64)>>,
}

impl SectorIsometry {
    pub fn new(ms: &ModeSpace, n: usize) -> Result<Self> {
        if n == 0 || n > ms.d() {
            return Err(Error::out_of_range("sector particle count", n, format!("1..={}", ms.d())));
        }
        let scheme = TensorIndexScheme::new(ms.d(), n);
        let perms = Permutation::all(n);
        let amp = 1.0 / factorial(n).sqrt();
        let masks = ms.sector(n);
        let columns = masks
            .iter()
            .map(|&mask| {
                let modes = occupied_modes(mask);
                perms
                    .iter()
                    .map(|pi| {
                        // factor k carries mode j_k and is moved to slot π(k)
                        let mut tuple = vec![0; n];
                        for (k, &j) in modes.iter().enumerate() {
                            tuple[pi.apply(k)] = j;
                        }
                        (scheme.flatten(&tuple), pi.sign() * amp)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            d: ms.d(),
            n,
            masks,
            columns,
        })
    }

    pub fn to_dense(&self) -> CMatrix {
        let rows = self.d.pow(self.n as u32);
        let mut w = CMatrix::zeros(rows, self.masks.len());
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, a) in col {
                w[(r, c)] = C64::new(a, 0.0);
            }
        }
        w
    }
}

/// Dense `d^n × binomial(d, n)` isometry taking sector basis masks to their
/// Slater determinants in `H^{⊗n}`.
pub fn sector_isometry(ms: &ModeSpace, n: usize) -> Result<CMatrix> {
    Ok(SectorIsometry::new(ms, n)?.to_dense())
}

/// Fock-space unitary `Γ(U)` induced by a one-body unitary `U` whose columns
/// are the new modes: `⟨s'|Γ(U)|s⟩ = det U[s', s]` within each sector.
pub fn fock_rotation(ms: &ModeSpace, u: &CMatrix) -> Result<CMatrix> {
    let d = require_square("fock_rotation", u)?;
    if d != ms.d() {
        return Err(Error::shape("fock_rotation", ms.d(), d));
    }
    let unitarity = max_abs(&(u.adjoint() * u - CMatrix::identity(d, d)));
    if unitarity > 1e-10 {
        return Err(Error::invalid("mode basis", format!("not unitary (deviation {unitarity:.3e})")));
    }
    let mut r = CMatrix::zeros(ms.dim(), ms.dim());
    r[(0, 0)] = C64::new(1.0, 0.0);
    for n in 1..=d {
        let masks = ms.sector(n);
        let modes: Vec<Vec<usize>> = masks.iter().map(|&m| occupied_modes(m)).collect();
        for (ci, &cm) in masks.iter().enumerate() {
            for (ri, &rm) in masks.iter().enumerate() {
                let minor = CMatrix::from_fn(n, n, |a, b| u[(modes[ri][a], modes[ci][b])]);
                r[(rm, cm)] = minor.determinant();
            }
        }
    }
    Ok(r)
}
