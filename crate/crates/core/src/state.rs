//! State vectors, the site window that splits the lattice into target and
//! complement, and orthogonal projectors.
//!
//! Sites are labelled `1..=N` in every public interface. Amplitude storage is
//! zero-based internally.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for "zero amplitude", normalization and projector checks.
pub const TOLERANCE: f64 = 1e-10;

/// A pure state over `N` lattice sites.
///
/// States built by the checked constructors are normalized to within
/// [`TOLERANCE`]. Unnormalized amplitudes (the conditional amplitudes
/// `P_{A⊥} U ... ψ₀` whose squared norm is a survival probability) are only
/// produced through [`StateVector::unnormalized`] and carry that flag.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    normalized: bool,
}

impl StateVector {
    /// Wraps already-normalized amplitudes, rejecting anything whose norm
    /// deviates from one by more than [`TOLERANCE`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::param("amplitudes", "state must have at least one site"));
        }
        let norm = norm_of(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized {
                deviation: (norm - 1.0).abs(),
            });
        }
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// Divides by the norm. Fails for the zero vector.
    pub fn normalize(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::param("amplitudes", "state must have at least one site"));
        }
        let norm = norm_of(&amplitudes);
        if !(norm > TOLERANCE) || !norm.is_finite() {
            return Err(Error::param("amplitudes", "cannot normalize a zero vector"));
        }
        let inv = 1.0 / norm;
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a * inv).collect(),
            normalized: true,
        })
    }

    /// Wraps amplitudes without any norm requirement.
    pub fn unnormalized(amplitudes: Vec<Complex64>) -> Self {
        Self {
            amplitudes,
            normalized: false,
        }
    }

    /// Basis state localized on `site` (1-indexed).
    pub fn site(n_sites: usize, site: usize) -> Result<Self> {
        if site == 0 || site > n_sites {
            return Err(Error::param(
                "site",
                format!("site {site} outside [1, {n_sites}]"),
            ));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_sites];
        amplitudes[site - 1] = Complex64::new(1.0, 0.0);
        Ok(Self {
            amplitudes,
            normalized: true,
        })
    }

    /// The uniform superposition `(1, …, 1)ᵀ/√N`.
    pub fn uniform(n_sites: usize) -> Self {
        let a = Complex64::new(1.0 / (n_sites as f64).sqrt(), 0.0);
        Self {
            amplitudes: vec![a; n_sites],
            normalized: true,
        }
    }

    pub fn from_dvector(v: &DVector<Complex64>) -> Result<Self> {
        Self::new(v.iter().copied().collect())
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.amplitudes)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Amplitude on a 1-indexed site.
    pub fn amplitude(&self, site: usize) -> Option<Complex64> {
        site.checked_sub(1).and_then(|i| self.amplitudes.get(i).copied())
    }

    /// Whether the state was constructed as normalized.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by a global phase `e^{iθ}`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
            normalized: self.normalized,
        }
    }
}

fn norm_of(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// Partition of `N` sites into the complement `A⊥ = [1, m]` and the
/// target `A = [m+1, N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteWindow {
    n_sites: usize,
    cut: usize,
}

impl SiteWindow {
    pub fn new(n_sites: usize, cut: usize) -> Result<Self> {
        if n_sites < 2 || cut < 1 || cut > n_sites - 1 {
            return Err(Error::InvalidWindow { n_sites, cut });
        }
        Ok(Self { n_sites, cut })
    }

    /// `N`
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `m`, the size of the unmeasured complement.
    pub fn cut(&self) -> usize {
        self.cut
    }

    /// `N - m`, the number of measured sites.
    pub fn target_size(&self) -> usize {
        self.n_sites - self.cut
    }

    /// 1-indexed sites of the target `A`.
    pub fn target_sites(&self) -> std::ops::RangeInclusive<usize> {
        self.cut + 1..=self.n_sites
    }

    /// 1-indexed sites of the complement `A⊥`.
    pub fn complement_sites(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.cut
    }

    pub fn in_target(&self, site: usize) -> bool {
        site > self.cut && site <= self.n_sites
    }
}

/// An orthogonal projector stored as a dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: DMatrix<Complex64>,
}

impl Projector {
    /// Validates Hermiticity and idempotence to [`TOLERANCE`] in max-norm.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotProjector {
                reason: format!("{}x{} matrix is not square", matrix.nrows(), matrix.ncols()),
            });
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > TOLERANCE {
            return Err(Error::NotProjector {
                reason: format!("not Hermitian (deviation {herm:.3e})"),
            });
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if idem > TOLERANCE {
            return Err(Error::NotProjector {
                reason: format!("not idempotent (deviation {idem:.3e})"),
            });
        }
        Ok(Self { matrix })
    }

    /// Builds `Σ |v⟩⟨v|` from an orthonormal family. `dim` is needed for the
    /// empty family.
    pub fn from_orthonormal(dim: usize, vectors: &[StateVector]) -> Result<Self> {
        let mut matrix = DMatrix::<Complex64>::zeros(dim, dim);
        for v in vectors {
            check_dim(dim, v.dim())?;
            let col = v.to_dvector();
            matrix += &col * col.adjoint();
        }
        Self::from_matrix(matrix)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Trace, i.e. the dimension of the range.
    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    /// `P ψ`, returned unnormalized.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        let out = &self.matrix * psi.to_dvector();
        Ok(StateVector::unnormalized(out.iter().copied().collect()))
    }

    /// `1 - P`
    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self {
            matrix: DMatrix::identity(n, n) - &self.matrix,
        }
    }
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Returns `(P_A, P_{A⊥})` for the window: diagonal 0/1 matrices that sum to
/// the identity.
pub fn window_projectors(window: &SiteWindow) -> (Projector, Projector) {
    let n = window.n_sites();
    let mut target = DMatrix::<Complex64>::zeros(n, n);
    let mut complement = DMatrix::<Complex64>::zeros(n, n);
    for site in 1..=n {
        let one = Complex64::new(1.0, 0.0);
        if window.in_target(site) {
            target[(site - 1, site - 1)] = one;
        } else {
            complement[(site - 1, site - 1)] = one;
        }
    }
    (
        Projector { matrix: target },
        Projector { matrix: complement },
    )
}

/// Returns `(c_A, c_{A⊥})`, the plain sums of the amplitudes over the target
/// and over the complement.
pub fn window_sums(psi: &StateVector, window: &SiteWindow) -> Result<(Complex64, Complex64)> {
    check_dim(window.n_sites(), psi.dim())?;
    let m = window.cut();
    let amps = psi.amplitudes();
    let c_complement: Complex64 = amps[..m].iter().sum();
    let c_target: Complex64 = amps[m..].iter().sum();
    Ok((c_target, c_complement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn window_rejects_bad_cut() {
        assert!(SiteWindow::new(6, 0).is_err());
        assert!(SiteWindow::new(6, 6).is_err());
        assert!(SiteWindow::new(1, 1).is_err());
        assert!(SiteWindow::new(6, 3).is_ok());
    }

    #[test]
    fn qubit_window_projectors() {
        let w = SiteWindow::new(2, 1).unwrap();
        let (pa, pc) = window_projectors(&w);
        assert_eq!(pa.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(pa.matrix()[(1, 1)], c(1.0, 0.0));
        assert_eq!(pc.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(pc.matrix()[(1, 1)], c(0.0, 0.0));
    }

    #[test]
    fn projector_traces_and_orthogonality() {
        let w = SiteWindow::new(6, 3).unwrap();
        let (pa, pc) = window_projectors(&w);
        assert_eq!(pa.rank(), 3);
        assert_eq!(pc.rank(), 3);
        for n in 2..8 {
            for m in 1..n {
                let w = SiteWindow::new(n, m).unwrap();
                let (pa, pc) = window_projectors(&w);
                let prod = pa.matrix() * pc.matrix();
                assert!(prod.iter().all(|z| *z == c(0.0, 0.0)));
                let sum = pa.matrix() + pc.matrix();
                assert_eq!(sum, DMatrix::identity(n, n));
                Projector::from_matrix(pa.matrix().clone()).unwrap();
            }
        }
    }

    #[test]
    fn sums_of_named_states() {
        let (n, m) = (6, 3);
        let w = SiteWindow::new(n, m).unwrap();
        let mut amps = vec![c(0.0, 0.0); n];
        for a in amps.iter_mut().take(m) {
            *a = c(1.0 / (m as f64).sqrt(), 0.0);
        }
        let special = StateVector::new(amps).unwrap();
        let (ca, cc) = window_sums(&special, &w).unwrap();
        assert!(ca.norm() < 1e-15);
        assert!((cc - c((m as f64).sqrt(), 0.0)).norm() < 1e-12);

        let (ca, cc) = window_sums(&StateVector::uniform(n), &w).unwrap();
        let rn = (n as f64).sqrt();
        assert!((ca.re - (n - m) as f64 / rn).abs() < 1e-12);
        assert!((cc.re - m as f64 / rn).abs() < 1e-12);

        let (ca, cc) = window_sums(&StateVector::site(n, n).unwrap(), &w).unwrap();
        assert_eq!(ca, c(1.0, 0.0));
        assert_eq!(cc, c(0.0, 0.0));
    }

    #[test]
    fn sums_reject_dimension_mismatch() {
        let w = SiteWindow::new(6, 3).unwrap();
        let err = window_sums(&StateVector::uniform(5), &w).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 6, found: 5 });
    }

    #[test]
    fn normalization_flags() {
        assert!(StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        let s = StateVector::normalize(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(s.is_normalized());
        assert!((s.norm() - 1.0).abs() < 1e-15);
        let u = StateVector::unnormalized(vec![c(0.5, 0.0)]);
        assert!(!u.is_normalized());
        assert!(StateVector::normalize(vec![c(0.0, 0.0)]).is_err());
        assert_eq!(
            StateVector::site(3, 2).unwrap().amplitude(2),
            Some(c(1.0, 0.0))
        );
        assert!(StateVector::site(3, 0).is_err());
    }

    #[test]
    fn projector_validation() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(Projector::from_matrix(m).is_err());
        let m = DMatrix::<Complex64>::identity(2, 2) * c(2.0, 0.0);
        assert!(Projector::from_matrix(m).is_err());
    }

    proptest! {
        #[test]
        fn pythagorean_split(
            n in 2usize..12,
            m_frac in 0.0f64..1.0,
            raw in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        ) {
            let m = 1 + ((n - 1) as f64 * m_frac) as usize % (n - 1);
            let w = SiteWindow::new(n, m).unwrap();
            let amps: Vec<_> = raw[..n].iter().map(|&(a, b)| c(a, b)).collect();
            prop_assume!(amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6);
            let psi = StateVector::normalize(amps).unwrap();
            let (pa, pc) = window_projectors(&w);
            let na = pa.apply(&psi).unwrap().norm_sqr();
            let nc = pc.apply(&psi).unwrap().norm_sqr();
            prop_assert!((na + nc - psi.norm_sqr()).abs() < 1e-12);
        }
    }
}
