use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{generic_eigenbasis, AllToAllModel, Spectrum};

/// `U_t` for an arbitrary Hermitian `H`, stored as its eigendecomposition so
/// each step costs two dense mat-vecs and `N` phases.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    energies: Vec<f64>,
    vectors: DMatrix<Complex64>,
    adjoint: DMatrix<Complex64>,
}

impl SpectralPropagator {
    pub fn from_spectrum(spectrum: &Spectrum) -> Self {
        let n = spectrum.dim();
        let mut vectors = DMatrix::<Complex64>::zeros(n, n);
        for (k, v) in spectrum.eigenvectors().iter().enumerate() {
            for (i, a) in v.amplitudes().iter().enumerate() {
                vectors[(i, k)] = *a;
            }
        }
        Self {
            energies: spectrum.eigenvalues().to_vec(),
            adjoint: vectors.adjoint(),
            vectors,
        }
    }

    pub fn from_hamiltonian(h: &DMatrix<Complex64>) -> Result<Self> {
        Ok(Self::from_spectrum(&generic_eigenbasis(h, None)?))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn evolve(&self, t: f64, amps: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        let n = self.dim();
        scratch.clear();
        scratch.resize(n, Complex64::new(0.0, 0.0));
        for (k, out) in scratch.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, a) in amps.iter().enumerate() {
                acc += self.adjoint[(k, i)] * a;
            }
            *out = acc * Complex64::from_polar(1.0, -self.energies[k] * t);
        }
        for (i, a) in amps.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, c) in scratch.iter().enumerate() {
                acc += self.vectors[(i, k)] * c;
            }
            *a = acc;
        }
    }
}

/// Unitary dynamics used by the simulator.
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// Rank-one propagator of the all-to-all model, O(N) per step.
    AllToAll(AllToAllModel),
    Spectral(SpectralPropagator),
}

impl Dynamics {
    pub fn dim(&self) -> usize {
        match self {
            Dynamics::AllToAll(m) => m.n_sites(),
            Dynamics::Spectral(p) => p.dim(),
        }
    }

    /// Applies `U_t` in place. `scratch` is reused between calls.
    pub fn evolve(&self, t: f64, amps: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        match self {
            Dynamics::AllToAll(m) => m.evolve_in_place(t, amps),
            Dynamics::Spectral(p) => p.evolve(t, amps, scratch),
        }
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl From<AllToAllModel> for Dynamics {
    fn from(m: AllToAllModel) -> Self {
        Dynamics::AllToAll(m)
    }
}
