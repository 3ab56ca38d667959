//! Dense operators on tensor powers `H^{⊗n}` of a `d`-dimensional mode space.
//!
//! All composite indices follow [`TensorIndexScheme`]: the tuple
//! `(i_1, …, i_n)` flattens to `Σ i_k d^{n-k}`, so the first factor is the most
//! significant digit. Slots passed to the embedding functions are zero-based.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Entrywise tolerance for matrices declared Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Row-major flattening of tensor indices over `n` factors of dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorIndexScheme {
    pub d: usize,
    pub n: usize,
}

impl TensorIndexScheme {
    pub fn new(d: usize, n: usize) -> Self {
        Self { d, n }
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.n);
        idx.iter().fold(0, |acc, &i| acc * self.d + i)
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.d;
            flat /= self.d;
        }
        idx
    }
}

/// A permutation of `{0, …, n-1}` stored by its images: `images[k] = π(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &k in &images {
            if k >= n || seen[k] {
                return Err(Error::invalid(
                    "permutation",
                    format!("{images:?} is not a bijection of 0..{n}"),
                ));
            }
            seen[k] = true;
        }
        Ok(Self { images })
    }

    /// The transposition exchanging slots `a` and `b`.
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::out_of_range("transposition slot", a.max(b), format!("< {n}")));
        }
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(a, b);
        Ok(Self { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, k: usize) -> usize {
        self.images[k]
    }

    /// `self ∘ other`, i.e. `k ↦ self(other(k))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Permutation {
            images: other.images.iter().map(|&k| self.images[k]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.len()];
        for (k, &pk) in self.images.iter().enumerate() {
            images[pk] = k;
        }
        Permutation { images }
    }

    /// `+1` for even permutations, `-1` for odd ones.
    pub fn sign(&self) -> f64 {
        let n = self.len();
        let mut visited = vec![false; n];
        let mut transpositions = 0;
        for start in 0..n {
            if visited[start] {
                continue;
            }
            let mut len = 0;
            let mut k = start;
            while !visited[k] {
                visited[k] = true;
                k = self.images[k];
                len += 1;
            }
            transpositions += len - 1;
        }
        if transpositions % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// All `n!` permutations in lexicographic order of their image vectors.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut current: Vec<usize> = (0..n).collect();
        let mut out = vec![Permutation {
            images: current.clone(),
        }];
        // next_permutation
        while let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) {
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
            out.push(Permutation {
                images: current.clone(),
            });
        }
        out
    }

    /// Composite index reached from `flat` when factor `k` is moved to slot `π(k)`.
    pub(crate) fn permute_index(&self, flat: usize, scheme: &TensorIndexScheme) -> usize {
        let src = scheme.unflatten(flat);
        let mut dst = vec![0; src.len()];
        for (k, &v) in src.iter().enumerate() {
            dst[self.images[k]] = v;
        }
        scheme.flatten(&dst)
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `kron` of `n` copies of `a`; `n = 0` gives the 1×1 identity.
pub fn kron_power(a: &CMatrix, n: usize) -> CMatrix {
    (0..n).fold(identity(1), |acc, _| kron(&acc, a))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise deviation `|M - M†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M†) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn require_square(context: &'static str, m: &CMatrix) -> Result<usize> {
    if m.is_square() {
        Ok(m.nrows())
    } else {
        Err(Error::shape(
            context,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ))
    }
}

pub(crate) fn require_hermitian(what: &'static str, m: &CMatrix) -> Result<()> {
    let deviation = hermitian_deviation(m);
    if deviation > HERMITIAN_TOL {
        Err(Error::NotHermitian { what, deviation })
    } else {
        Ok(())
    }
}

/// `U_π` on `H^{⊗n}`: basis tuple `(i_1, …, i_n)` goes to
/// `(i_{π⁻¹(1)}, …, i_{π⁻¹(n)})`, so that `U_π U_σ = U_{πσ}`.
pub fn permutation_operator(pi: &Permutation, d: usize) -> CMatrix {
    let scheme = TensorIndexScheme::new(d, pi.len());
    let dim = scheme.dim();
    let mut u = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        u[(pi.permute_index(col, &scheme), col)] = C64::new(1.0, 0.0);
    }
    u
}

/// Orthogonal projector `A_n = (1/n!) Σ_π sgn(π) U_π` onto antisymmetric tensors.
pub fn antisymmetrizer(d: usize, n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::out_of_range("antisymmetrizer order", n, ">= 1"));
    }
    let scheme = TensorIndexScheme::new(d, n);
    let dim = scheme.dim();
    let perms = Permutation::all(n);
    let weight = 1.0 / perms.len() as f64;
    let mut a = CMatrix::zeros(dim, dim);
    for pi in &perms {
        let s = pi.sign() * weight;
        for col in 0..dim {
            a[(pi.permute_index(col, &scheme), col)] += C64::new(s, 0.0);
        }
    }
    Ok(a)
}

/// Traces out the last `n - m` factors of an operator on `H^{⊗n}`.
pub fn partial_trace_last(t: &CMatrix, d: usize, n: usize, m: usize) -> Result<CMatrix> {
    if m > n {
        return Err(Error::out_of_range("kept factor count", m, format!("<= {n}")));
    }
    let full = d.pow(n as u32);
    if t.nrows() != full || t.ncols() != full {
        return Err(Error::shape(
            "partial_trace_last",
            format!("{full}x{full}"),
            format!("{}x{}", t.nrows(), t.ncols()),
        ));
    }
    let kept = d.pow(m as u32);
    let traced = d.pow((n - m) as u32);
    Ok(CMatrix::from_fn(kept, kept, |a, b| {
        (0..traced)
            .map(|c| t[(a * traced + c, b * traced + c)])
            .sum()
    }))
}

/// `I^{⊗j} ⊗ L ⊗ I^{⊗(n-j-1)}` (zero-based slot `j`).
pub fn embed_one_body(l: &CMatrix, j: usize, n: usize) -> Result<CMatrix> {
    let d = require_square("embed_one_body", l)?;
    if j >= n {
        return Err(Error::out_of_range("one-body slot", j, format!("< {n}")));
    }
    let left = identity(d.pow(j as u32));
    let right = identity(d.pow((n - j - 1) as u32));
    Ok(kron(&kron(&left, l), &right))
}

/// `Σ_j L_j` on `H^{⊗n}`.
pub fn sum_one_body(l: &CMatrix, n: usize) -> Result<CMatrix> {
    let d = require_square("sum_one_body", l)?;
    let dim = d.pow(n as u32);
    (0..n).try_fold(CMatrix::zeros(dim, dim), |acc, j| {
        Ok(acc + embed_one_body(l, j, n)?)
    })
}

/// `V_{ij}`: the two-body operator `v` acting on zero-based slots `i < j` of `H^{⊗n}`.
pub fn embed_two_body(v: &CMatrix, i: usize, j: usize, n: usize) -> Result<CMatrix> {
    let d2 = require_square("embed_two_body", v)?;
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 {
        return Err(Error::shape("embed_two_body", "d²×d² matrix", format!("{d2}x{d2}")));
    }
    if i >= j || j >= n {
        return Err(Error::invalid(
            "two-body slots",
            format!("need i < j < n, got i={i}, j={j}, n={n}"),
        ));
    }
    let scheme = TensorIndexScheme::new(d, n);
    let dim = scheme.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let c = scheme.unflatten(col);
        let vcol = c[i] * d + c[j];
        let mut r = c.clone();
        for a in 0..d {
            for b in 0..d {
                let val = v[(a * d + b, vcol)];
                if val == C64::new(0.0, 0.0) {
                    continue;
                }
                r[i] = a;
                r[j] = b;
                out[(scheme.flatten(&r), col)] = val;
            }
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in the order of `eigenvalues`.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        require_square("HermitianEigen", h)?;
        require_hermitian("eigendecomposition input", h)?;
        Ok(Self::new_unchecked(&hermitize(h)))
    }

    pub(crate) fn new_unchecked(h: &CMatrix) -> Self {
        let n = h.nrows();
        if n == 0 {
            return Self {
                eigenvalues: Vec::new(),
                vectors: CMatrix::zeros(0, 0),
            };
        }
        let eig = h.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Self {
            eigenvalues,
            vectors,
        }
    }

    /// `V f(Λ) V†` for a complex-valued spectral function.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map_spectrum(|x| C64::new(x, 0.0))
    }

    /// `exp(-i t H / ħ)`.
    pub fn propagator(&self, t: f64, hbar: f64) -> CMatrix {
        self.map_spectrum(|e| C64::from_polar(1.0, -e * t / hbar))
    }
}

/// `exp(-i t H / ħ)` for Hermitian `H`, via a full eigendecomposition.
pub fn herm_propagator(h: &CMatrix, t: f64, hbar: f64) -> Result<CMatrix> {
    if hbar <= 0.0 {
        return Err(Error::invalid("hbar", format!("must be positive, got {hbar}")));
    }
    Ok(HermitianEigen::new(h)?.propagator(t, hbar))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(HermitianEigen::new(h)?.eigenvalues)
}

/// Trace norm `‖T‖₁`. The Hermitian path sums absolute eigenvalues; the other
/// sums singular values and is meant for diagnostics.
pub fn trace_norm(t: &CMatrix, hermitian: bool) -> Result<f64> {
    require_square("trace_norm", t)?;
    if t.nrows() == 0 {
        return Ok(0.0);
    }
    if hermitian {
        require_hermitian("trace_norm input", t)?;
        let eig = hermitize(t).symmetric_eigenvalues();
        Ok(eig.iter().map(|x| x.abs()).sum())
    } else {
        Ok(t.clone().singular_values().iter().sum())
    }
}

/// Largest singular value.
pub fn operator_norm(t: &CMatrix) -> f64 {
    if t.is_empty() {
        return 0.0;
    }
    t.clone().singular_values().iter().fold(0.0_f64, |a, &b| a.max(b))
}
