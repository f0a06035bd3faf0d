//! Dark and bright subspaces of a monitored Hamiltonian.
//!
//! A dark eigenstate has no weight on the measured sites; the dark subspace is
//! spanned by all of them and is invariant under the measured evolution. Its
//! orthogonal complement is the bright subspace.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{zero_mode, Spectrum};
use crate::state::{check_dim, window_projectors, Projector, SiteWindow, StateVector};

/// Amplitude threshold for "no weight on the target" and for brightness.
pub const DARK_TOLERANCE: f64 = 1e-9;

/// Relative singular-value cut used when extracting kernels.
const KERNEL_RTOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DarkBrightDecomposition {
    dark_basis: Vec<StateVector>,
    bright_basis: Vec<StateVector>,
    dark_projector: Projector,
    bright_projector: Projector,
}

impl DarkBrightDecomposition {
    fn from_bases(
        dim: usize,
        dark_basis: Vec<StateVector>,
        bright_basis: Vec<StateVector>,
    ) -> Result<Self> {
        if dark_basis.len() + bright_basis.len() != dim {
            return Err(Error::fault(
                "dark/bright decomposition",
                format!(
                    "dimensions {} + {} do not add up to {dim}",
                    dark_basis.len(),
                    bright_basis.len()
                ),
            ));
        }
        let dark_projector = Projector::from_orthonormal(dim, &dark_basis)?;
        let bright_projector = Projector::from_orthonormal(dim, &bright_basis)?;
        Ok(Self {
            dark_basis,
            bright_basis,
            dark_projector,
            bright_projector,
        })
    }

    pub fn dim(&self) -> usize {
        self.dark_projector.dim()
    }

    pub fn dark_basis(&self) -> &[StateVector] {
        &self.dark_basis
    }

    pub fn bright_basis(&self) -> &[StateVector] {
        &self.bright_basis
    }

    pub fn dark_dim(&self) -> usize {
        self.dark_basis.len()
    }

    pub fn bright_dim(&self) -> usize {
        self.bright_basis.len()
    }

    /// `P_D`
    pub fn dark_projector(&self) -> &Projector {
        &self.dark_projector
    }

    /// `P_B`
    pub fn bright_projector(&self) -> &Projector {
        &self.bright_projector
    }

    /// `‖P_D ψ‖²`
    pub fn dark_weight(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.dark_projector.apply(psi)?.norm_sqr())
    }
}

/// Splits every degeneracy group of `spectrum` into dark and bright parts.
///
/// Nondegenerate eigenvectors are dark iff `‖P_A μ‖ ≤ DARK_TOLERANCE`. For a
/// group of size `g > 1`, the dark combinations are the kernel of the `N × g`
/// matrix whose columns are `P_A |μ_i⟩`; the bright part is the orthogonal
/// complement of that kernel inside the group.
pub fn decompose(spectrum: &Spectrum, target: &Projector) -> Result<DarkBrightDecomposition> {
    let dim = spectrum.dim();
    check_dim(dim, target.dim())?;
    let vectors = spectrum.eigenvectors();
    let mut dark = Vec::new();
    let mut bright = Vec::new();

    for group in spectrum.degeneracy_groups() {
        if let [single] = group.as_slice() {
            let mu = &vectors[*single];
            if target.apply(mu)?.norm() <= DARK_TOLERANCE {
                dark.push(mu.clone());
            } else {
                bright.push(mu.clone());
            }
            continue;
        }

        let g = group.len();
        let mut basis = DMatrix::<Complex64>::zeros(dim, g);
        for (k, &i) in group.iter().enumerate() {
            basis.set_column(k, &vectors[i].to_dvector());
        }
        let t = target.matrix() * &basis;
        let (kernel, range) = split_kernel(&t);
        for coeffs in kernel {
            dark.push(StateVector::unnormalized((&basis * coeffs).iter().copied().collect()));
        }
        for coeffs in range {
            bright.push(StateVector::unnormalized((&basis * coeffs).iter().copied().collect()));
        }
    }

    let dark = gram_schmidt(dark)?;
    let bright = gram_schmidt(bright)?;
    for d in &dark {
        let leak = target.apply(d)?.norm();
        if leak > DARK_TOLERANCE {
            return Err(Error::fault(
                "decompose",
                format!("dark vector has target weight {leak:.3e}"),
            ));
        }
    }
    DarkBrightDecomposition::from_bases(dim, dark, bright)
}

/// Right-singular vectors of `t` split into kernel (singular value at most
/// `KERNEL_RTOL · max(σ_max, 1)`) and its orthogonal complement.
fn split_kernel(
    t: &DMatrix<Complex64>,
) -> (Vec<nalgebra::DVector<Complex64>>, Vec<nalgebra::DVector<Complex64>>) {
    let g = t.ncols();
    // Pad to at least g rows so the thin SVD returns a full set of right
    // singular vectors.
    let padded = if t.nrows() < g {
        let mut p = DMatrix::<Complex64>::zeros(g, g);
        p.view_mut((0, 0), (t.nrows(), g)).copy_from(t);
        p
    } else {
        t.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = KERNEL_RTOL * sigma_max.max(1.0);
    let mut kernel = Vec::new();
    let mut range = Vec::new();
    for (k, sigma) in svd.singular_values.iter().enumerate() {
        let v = v_t.row(k).adjoint();
        if *sigma <= threshold {
            kernel.push(v);
        } else {
            range.push(v);
        }
    }
    (kernel, range)
}

/// Modified Gram–Schmidt; drops vectors that become numerically dependent.
fn gram_schmidt(vectors: Vec<StateVector>) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut amps = v.into_amplitudes();
        for q in &out {
            let proj: Complex64 = q
                .amplitudes()
                .iter()
                .zip(&amps)
                .map(|(a, b)| a.conj() * b)
                .sum();
            for (a, qa) in amps.iter_mut().zip(q.amplitudes()) {
                *a -= proj * qa;
            }
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(StateVector::normalize(amps)?);
        }
    }
    Ok(out)
}

/// Closed-form decomposition for the all-to-all model: the bright subspace is
/// spanned by `|N⟩` and `|0,l⟩` for `l = m..N-1`, the dark one by `|0,l⟩` for
/// `l = 1..m-1`.
pub fn bright_basis_all_to_all(window: &SiteWindow) -> DarkBrightDecomposition {
    let n = window.n_sites();
    let m = window.cut();
    let dark: Vec<_> = (1..m).map(|l| zero_mode(n, l).expect("l < m < N")).collect();
    let mut bright = vec![StateVector::uniform(n)];
    bright.extend((m..n).map(|l| zero_mode(n, l).expect("l < N")));
    DarkBrightDecomposition::from_bases(n, dark, bright).expect("closed-form bases are orthonormal")
}

/// Probability of eventual detection, `1 - ‖P_D ψ₀‖²`.
pub fn eventual_detection_probability(
    psi0: &StateVector,
    dec: &DarkBrightDecomposition,
) -> Result<f64> {
    Ok((1.0 - dec.dark_weight(psi0)?).clamp(0.0, 1.0))
}

/// True iff `‖P_D ψ₀‖ ≤ DARK_TOLERANCE`.
pub fn is_bright(psi0: &StateVector, dec: &DarkBrightDecomposition) -> Result<bool> {
    Ok(dec.dark_weight(psi0)?.sqrt() <= DARK_TOLERANCE)
}

/// `ψ*`: amplitude `1/√m` on each complement site, zero on the target.
pub fn special_state(window: &SiteWindow) -> StateVector {
    let m = window.cut();
    let a = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::new(0.0, 0.0); window.n_sites()];
    for x in amps.iter_mut().take(m) {
        *x = a;
    }
    StateVector::new(amps).expect("unit norm by construction")
}

/// Dimension of the space of bright states with no weight on the target, from
/// the rank of the `N × (N-m+1)` matrix with columns `P_A|0,l⟩` (`l = m..N-1`)
/// and `P_A|N⟩`.
pub fn bright_states_without_target_weight(window: &SiteWindow) -> usize {
    let n = window.n_sites();
    let m = window.cut();
    let (target, _) = window_projectors(window);
    let cols = n - m + 1;
    let mut t = DMatrix::<Complex64>::zeros(n, cols);
    for (k, l) in (m..n).enumerate() {
        let v = zero_mode(n, l).expect("l < N").to_dvector();
        t.set_column(k, &(target.matrix() * v));
    }
    t.set_column(cols - 1, &(target.matrix() * StateVector::uniform(n).to_dvector()));
    let (kernel, _) = split_kernel(&t);
    kernel.len()
}
