//! Exact Liouville-von Neumann evolution `D(t) = W_t D W_{-t}` on Fock space.
//!
//! The Hamiltonian is diagonalized once per particle-number sector; every
//! evolution afterwards is a pair of dense products per sector, so the exact
//! side of an experiment carries no time-discretization error.

use crate::error::{Error, Result};
use crate::fock::{build_hamiltonian, FockOperator, ModeSpace, TwoBodyOperator};
use crate::rdm::reduced_density;
use crate::states::FockDensity;
use crate::tensor_ops::{
    commutator, embed_two_body, hermitize, partial_trace_last, require_square,
    sum_one_body, trace_norm, CMatrix, HermitianEigen, C64,
};

#[derive(Debug, Clone)]
struct SectorEigen {
    indices: Vec<usize>,
    eig: HermitianEigen,
}

/// Spectral decomposition of `H^λ`, one block per particle number.
#[derive(Debug, Clone)]
pub struct Propagator {
    mode_space: ModeSpace,
    hamiltonian: FockOperator,
    one_body: CMatrix,
    interaction: TwoBodyOperator,
    lambda: f64,
    sectors: Vec<SectorEigen>,
}

/// Builds `H^λ` and diagonalizes each sector block.
pub fn make_propagator(
    ms: &ModeSpace,
    l: &CMatrix,
    v: &TwoBodyOperator,
    lambda: f64,
) -> Result<Propagator> {
    let hamiltonian = build_hamiltonian(ms, l, v, lambda)?;
    let sectors = (0..=ms.d())
        .map(|n| {
            let indices = ms.sector(n);
            let block = crate::fock::sector_block(hamiltonian.matrix(), &indices);
            SectorEigen {
                indices,
                eig: HermitianEigen::new_unchecked(&hermitize(&block)),
            }
        })
        .collect();
    Ok(Propagator {
        mode_space: *ms,
        hamiltonian,
        one_body: l.clone(),
        interaction: v.clone(),
        lambda,
        sectors,
    })
}

impl Propagator {
    pub fn mode_space(&self) -> &ModeSpace {
        &self.mode_space
    }

    pub fn hamiltonian(&self) -> &FockOperator {
        &self.hamiltonian
    }

    pub fn one_body(&self) -> &CMatrix {
        &self.one_body
    }

    pub fn interaction(&self) -> &TwoBodyOperator {
        &self.interaction
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sector_eigenvalues(&self, n: usize) -> &[f64] {
        &self.sectors[n].eig.eigenvalues
    }

    /// `exp(-i t H^{(n)} / ħ)` in the sector basis.
    pub fn sector_unitary(&self, n: usize, t: f64) -> CMatrix {
        self.sectors[n].eig.propagator(t, self.mode_space.hbar())
    }

    /// Full `W_t` on Fock space.
    pub fn unitary(&self, t: f64) -> CMatrix {
        self.assemble(|s| s.eig.propagator(t, self.mode_space.hbar()))
    }

    /// `H^λ` rebuilt from the cached eigensystems.
    pub fn reconstruct(&self) -> CMatrix {
        self.assemble(|s| s.eig.reconstruct())
    }

    fn assemble(&self, block: impl Fn(&SectorEigen) -> CMatrix) -> CMatrix {
        let dim = self.mode_space.dim();
        let mut out = CMatrix::zeros(dim, dim);
        for sector in &self.sectors {
            let b = block(sector);
            for (r, &ir) in sector.indices.iter().enumerate() {
                for (c, &ic) in sector.indices.iter().enumerate() {
                    out[(ir, ic)] = b[(r, c)];
                }
            }
        }
        out
    }

    /// `Tr(D H^λ)`.
    pub fn energy(&self, density: &FockDensity) -> f64 {
        density.expectation(self.hamiltonian.matrix()).re
    }
}

/// `W_t D W_{-t}`.
pub fn evolve(prop: &Propagator, density: &FockDensity, t: f64) -> Result<FockDensity> {
    if density.mode_space() != prop.mode_space() {
        return Err(Error::invalid(
            "evolve",
            "density and propagator live on different mode spaces",
        ));
    }
    let dim = prop.mode_space.dim();
    let dm = density.matrix();
    let mut out = CMatrix::zeros(dim, dim);
    for sector in &prop.sectors {
        let idx = &sector.indices;
        let block = crate::fock::sector_block(dm, idx);
        if block.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        let w = sector.eig.propagator(t, prop.mode_space.hbar());
        let evolved = &w * block * w.adjoint();
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                out[(ir, ic)] = evolved[(r, c)];
            }
        }
    }
    Ok(FockDensity::from_trusted(out, prop.mode_space))
}

/// Right-hand side of the reduced hierarchy at order `m`:
/// `-(i/ħ)[Σ L_j, N_m] - (iλ/ħ)(Σ_{i<j≤m}[V_ij, N_m] + Σ_{j≤m}[V_{j,m+1}, N_{m+1}]_{:m})`.
pub fn hierarchy_rhs(
    l: &CMatrix,
    v: &TwoBodyOperator,
    lambda: f64,
    hbar: f64,
    n_m: &CMatrix,
    n_next: &CMatrix,
    m: usize,
) -> Result<CMatrix> {
    let d = require_square("hierarchy_rhs one-body", l)?;
    let dim = d.pow(m as u32);
    if n_m.shape() != (dim, dim) || n_next.shape() != (dim * d, dim * d) {
        return Err(Error::shape(
            "hierarchy_rhs",
            format!("{dim}x{dim} and {0}x{0}", dim * d),
            format!("{}x{} and {}x{}", n_m.nrows(), n_m.ncols(), n_next.nrows(), n_next.ncols()),
        ));
    }
    let mut generator = commutator(&sum_one_body(l, m)?, n_m);
    if lambda != 0.0 {
        let mut inter = CMatrix::zeros(dim, dim);
        for i in 0..m {
            for j in (i + 1)..m {
                inter += commutator(&embed_two_body(v.matrix(), i, j, m)?, n_m);
            }
        }
        for j in 0..m {
            let vj = embed_two_body(v.matrix(), j, m, m + 1)?;
            inter += partial_trace_last(&commutator(&vj, n_next), d, m + 1, m)?;
        }
        generator += inter * C64::new(lambda, 0.0);
    }
    Ok(generator * C64::new(0.0, -1.0 / hbar))
}

/// Trace-norm mismatch between a central difference of the exact `N_m(t)` and
/// the hierarchy right-hand side. Vanishes like `h²`.
pub fn bbgky_residual(prop: &Propagator, density: &FockDensity, t: f64, m: usize, h: f64) -> Result<f64> {
    if !(m == 1 || m == 2) {
        return Err(Error::invalid("hierarchy order", format!("only m = 1, 2 are supported, got {m}")));
    }
    if !(h > 0.0) {
        return Err(Error::invalid("finite-difference step", format!("must be positive, got {h}")));
    }
    let d = prop.mode_space.d();
    if m > d {
        return Err(Error::out_of_range("hierarchy order", m, format!("<= {d}")));
    }
    let nm_at = |s: f64| -> Result<CMatrix> {
        Ok(reduced_density(&evolve(prop, density, s)?, m)?.into_matrix())
    };
    let plus = nm_at(t + h)?;
    let minus = nm_at(t - h)?;
    let now = evolve(prop, density, t)?;
    let n_m = reduced_density(&now, m)?.into_matrix();
    let n_next = if m < d {
        reduced_density(&now, m + 1)?.into_matrix()
    } else {
        let dim = d.pow((m + 1) as u32);
        CMatrix::zeros(dim, dim)
    };
    let rhs = hierarchy_rhs(
        &prop.one_body,
        &prop.interaction,
        prop.lambda,
        prop.mode_space.hbar(),
        &n_m,
        &n_next,
        m,
    )?;
    let fd = (plus - minus) * C64::new(0.5 / h, 0.0);
    trace_norm(&hermitize(&(fd - rhs)), true)
}
