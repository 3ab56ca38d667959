//! Initial states: Slater determinants, quasifree (product-measure) densities,
//! thermal occupation profiles and general number-diagonal mixtures.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fock::{fock_rotation, mask_of, off_sector_max, sector_block, ModeSpace};
use crate::tensor_ops::{
    hermitian_deviation, hermitize, max_abs, require_hermitian, CMatrix, HermitianEigen, C64,
};

const DENSITY_TOL: f64 = 1e-10;
const SECTOR_TOL: f64 = 1e-12;

/// Density operator on Fock space that commutes with the number operator.
#[derive(Debug, Clone)]
pub struct FockDensity {
    matrix: CMatrix,
    mode_space: ModeSpace,
}

impl FockDensity {
    /// Validates Hermiticity, unit trace, sector structure and positivity.
    pub fn new(matrix: CMatrix, mode_space: ModeSpace) -> Result<Self> {
        let dim = mode_space.dim();
        if matrix.shape() != (dim, dim) {
            return Err(Error::shape(
                "FockDensity",
                format!("{dim}x{dim}"),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        let density = Self {
            matrix,
            mode_space,
        };
        density.check_invariants()?;
        Ok(Self {
            matrix: hermitize(&density.matrix),
            mode_space,
        })
    }

    /// For operations that preserve the invariants by construction.
    pub(crate) fn from_trusted(matrix: CMatrix, mode_space: ModeSpace) -> Self {
        Self {
            matrix: hermitize(&matrix),
            mode_space,
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.matrix);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian {
                what: "Fock density",
                deviation: dev,
            });
        }
        let tr = self.matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::invalid("Fock density", format!("trace {tr} is not 1")));
        }
        let off = off_sector_max(&self.matrix);
        if off > SECTOR_TOL {
            return Err(Error::invalid(
                "Fock density",
                format!("does not commute with N (off-sector entry {off:.3e})"),
            ));
        }
        for n in 0..=self.mode_space.d() {
            let block = hermitize(&self.sector_block(n));
            let min = HermitianEigen::new_unchecked(&block)
                .eigenvalues
                .first()
                .copied()
                .unwrap_or(0.0);
            if min < -DENSITY_TOL {
                return Err(Error::invalid(
                    "Fock density",
                    format!("negative eigenvalue {min:.3e} in sector {n}"),
                ));
            }
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn mode_space(&self) -> &ModeSpace {
        &self.mode_space
    }

    pub fn d(&self) -> usize {
        self.mode_space.d()
    }

    /// `D_n` in the ascending-mask sector basis.
    pub fn sector_block(&self, n: usize) -> CMatrix {
        sector_block(&self.matrix, &self.mode_space.sector(n))
    }

    /// `Tr(D_n)`, the probability of finding `n` particles.
    pub fn sector_weight(&self, n: usize) -> f64 {
        (0..self.mode_space.dim())
            .filter(|s| s.count_ones() as usize == n)
            .map(|s| self.matrix[(s, s)].re)
            .sum()
    }

    /// `Tr(D A)`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        // Tr(DA) = Σ_{ij} D_ij A_ji
        self.matrix
            .iter()
            .zip(op.transpose().iter())
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Independent occupation probabilities `p(j)` of the modes `φ_j` (columns of `basis`).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    p: Vec<f64>,
    basis: CMatrix,
}

impl OccupationMeasure {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        let d = p.len();
        Self::with_basis(p, CMatrix::identity(d, d))
    }

    pub fn with_basis(p: Vec<f64>, basis: CMatrix) -> Result<Self> {
        if let Some((j, &bad)) = p
            .iter()
            .enumerate()
            .find(|(_, &x)| !(0.0..=1.0).contains(&x))
        {
            return Err(Error::invalid(
                "occupation probability",
                format!("p({j}) = {bad} is outside [0, 1]"),
            ));
        }
        let d = p.len();
        if basis.shape() != (d, d) {
            return Err(Error::shape(
                "OccupationMeasure basis",
                format!("{d}x{d}"),
                format!("{}x{}", basis.nrows(), basis.ncols()),
            ));
        }
        let dev = max_abs(&(basis.adjoint() * &basis - CMatrix::identity(d, d)));
        if dev > DENSITY_TOL {
            return Err(Error::invalid("mode basis", format!("not unitary (deviation {dev:.3e})")));
        }
        Ok(Self { p, basis })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn d(&self) -> usize {
        self.p.len()
    }

    /// `E(N) = Σ p(j)`.
    pub fn mean_particle_number(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Product-measure probability of the occupation pattern `mask`.
    pub fn probability(&self, mask: usize) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(j, &pj)| if mask & (1 << j) != 0 { pj } else { 1.0 - pj })
            .product()
    }

    fn is_identity_basis(&self) -> bool {
        let d = self.d();
        self.basis == CMatrix::identity(d, d)
    }

    /// `Σ p(j) |φ_j⟩⟨φ_j|`.
    pub fn one_body_density(&self) -> CMatrix {
        let diag = DVector::from_iterator(self.d(), self.p.iter().map(|&x| C64::new(x, 0.0)));
        &self.basis * CMatrix::from_diagonal(&diag) * self.basis.adjoint()
    }
}

fn diagonal_density(ms: &ModeSpace, weight: impl Fn(usize) -> f64) -> CMatrix {
    let diag = DVector::from_iterator(ms.dim(), (0..ms.dim()).map(|s| C64::new(weight(s), 0.0)));
    CMatrix::from_diagonal(&diag)
}

/// Projector onto the occupation-basis vector with exactly `occupied` filled.
pub fn slater_density(ms: &ModeSpace, occupied: &[usize]) -> Result<FockDensity> {
    let mask = mask_of(occupied, ms.d())?;
    let m = diagonal_density(ms, |s| if s == mask { 1.0 } else { 0.0 });
    Ok(FockDensity::from_trusted(m, *ms))
}

/// Quasifree density `G[P] = Σ_s Pr(s) P_s` of a product measure.
pub fn quasifree_density(ms: &ModeSpace, measure: &OccupationMeasure) -> Result<FockDensity> {
    if measure.d() != ms.d() {
        return Err(Error::shape("quasifree_density", ms.d(), measure.d()));
    }
    let diag = diagonal_density(ms, |s| measure.probability(s));
    let m = if measure.is_identity_basis() {
        diag
    } else {
        let r = fock_rotation(ms, measure.basis())?;
        &r * diag * r.adjoint()
    };
    Ok(FockDensity::from_trusted(m, *ms))
}

/// Fermi-Dirac occupations `1 / (1 + e^{β(ε_j - μ)})` in the identity basis.
pub fn thermal_occupations(eps: &[f64], beta: f64, mu: f64) -> Result<OccupationMeasure> {
    if !(beta > 0.0) {
        return Err(Error::invalid("inverse temperature", format!("must be positive, got {beta}")));
    }
    let p = eps
        .iter()
        .map(|&e| {
            let x = beta * (e - mu);
            let p = if x > 745.0 {
                0.0
            } else if x < -745.0 {
                1.0
            } else {
                1.0 / (1.0 + x.exp())
            };
            p.clamp(0.0, 1.0)
        })
        .collect();
    OccupationMeasure::new(p)
}

/// Thermal occupations of the eigenmodes of `l`; `mu` defaults to the spectral
/// median, which half-fills the modes.
pub fn thermal_measure(l: &CMatrix, beta: f64, mu: Option<f64>) -> Result<OccupationMeasure> {
    require_hermitian("one-body Hamiltonian", l)?;
    let eig = HermitianEigen::new(l)?;
    let mu = mu.unwrap_or_else(|| spectral_median(&eig.eigenvalues));
    let p = thermal_occupations(&eig.eigenvalues, beta, mu)?.p;
    OccupationMeasure::with_basis(p, eig.vectors)
}

/// Median of ascending values (mean of the middle pair for even length).
pub fn spectral_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// `Σ Pr(s) P_s` for an arbitrary (not necessarily product) distribution on subsets.
pub fn mixture_density(ms: &ModeSpace, support: &[(Vec<usize>, f64)]) -> Result<FockDensity> {
    let mut weights = vec![0.0; ms.dim()];
    let mut total = 0.0;
    for (modes, prob) in support {
        if !(*prob >= 0.0) {
            return Err(Error::invalid("mixture probability", format!("{prob} is negative")));
        }
        weights[mask_of(modes, ms.d())?] += prob;
        total += prob;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("mixture", format!("probabilities sum to {total}, not 1")));
    }
    Ok(FockDensity::from_trusted(diagonal_density(ms, |s| weights[s]), *ms))
}

/// `Σ_n n^m Tr(D_n)`.
pub fn particle_moment(density: &FockDensity, m: u32) -> f64 {
    let mat = density.matrix();
    (0..density.mode_space().dim())
        .map(|s| (s.count_ones() as f64).powi(m as i32) * mat[(s, s)].re)
        .sum()
}
