use std::path::PathBuf;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::io::{parse_complex, read_amplitudes};
use super::CliError;
use crate::darkbright::special_state;
use crate::spectral::zero_mode;
use crate::state::{SiteWindow, StateVector};

/// Largest `|‖ψ‖ - 1|` accepted for user-supplied amplitudes before they are
/// renormalized; anything further off is rejected.
pub const AMPLITUDE_NORM_TOLERANCE: f64 = 1e-6;

/// Initial-state selector.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Special,
    Uniform,
    Site(usize),
    ZeroMode(usize),
    Amplitudes(Vec<Complex64>),
    File(PathBuf),
    /// Complex-normal coefficients over an orthonormal bright basis.
    RandomBright(u64),
}

fn call_args<'a>(text: &'a str, name: &str) -> Option<&'a str> {
    text.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')
}

impl StateSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let t = text.trim();
        let int = |s: &str| s.trim().parse::<u64>().map_err(|_| format!("bad integer `{s}` in `{text}`"));
        if let Some(path) = t.strip_prefix('@') {
            return Ok(Self::File(PathBuf::from(path)));
        }
        if let Some(list) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let amps = list
                .split(',')
                .map(parse_complex)
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(Self::Amplitudes(amps));
        }
        match t {
            "special" => return Ok(Self::Special),
            "uniform" => return Ok(Self::Uniform),
            _ => {}
        }
        if let Some(a) = call_args(t, "site") {
            return Ok(Self::Site(int(a)? as usize));
        }
        if let Some(a) = call_args(t, "random-bright") {
            return Ok(Self::RandomBright(int(a)?));
        }
        if let Some(a) = call_args(t, "eigen") {
            let parts: Vec<&str> = a.split(',').map(str::trim).collect();
            return match parts.as_slice() {
                ["N" | "n"] => Ok(Self::Uniform),
                ["0", l] => Ok(Self::ZeroMode(int(l)? as usize)),
                _ => Err(format!("expected eigen(0,l) or eigen(N), got `{text}`")),
            };
        }
        Err(format!(
            "unknown state `{text}`; expected special, uniform, site(k), eigen(0,l), eigen(N), \
             random-bright(seed), [a, b, ...] or @file"
        ))
    }

    /// Builds the state. `bright_basis` is only consulted by `RandomBright`.
    pub fn build(
        &self,
        window: &SiteWindow,
        bright_basis: impl FnOnce() -> Result<Vec<StateVector>, CliError>,
    ) -> Result<StateVector, CliError> {
        let n = window.n_sites();
        let lib = |e: crate::Error| CliError::Config(format!("initial state: {e}"));
        match self {
            Self::Special => Ok(special_state(window)),
            Self::Uniform => Ok(StateVector::uniform(n)),
            Self::Site(k) => StateVector::site(n, *k).map_err(lib),
            Self::ZeroMode(l) => zero_mode(n, *l).map_err(lib),
            Self::Amplitudes(a) => checked(a.clone(), n),
            Self::File(path) => checked(read_amplitudes(path)?, n),
            Self::RandomBright(seed) => {
                let basis = bright_basis()?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut amps = vec![Complex64::new(0.0, 0.0); n];
                for v in &basis {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let c = Complex64::new(re, im);
                    for (a, x) in amps.iter_mut().zip(v.amplitudes()) {
                        *a += c * x;
                    }
                }
                StateVector::normalize(amps).map_err(lib)
            }
        }
    }
}

fn checked(amps: Vec<Complex64>, n: usize) -> Result<StateVector, CliError> {
    if amps.len() != n {
        return Err(CliError::Config(format!(
            "initial state has {} amplitudes, model has {n} sites",
            amps.len()
        )));
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > AMPLITUDE_NORM_TOLERANCE {
        return Err(CliError::Config(format!(
            "initial state has norm {norm:.9}; amplitudes must be normalized to within {AMPLITUDE_NORM_TOLERANCE:e}"
        )));
    }
    StateVector::normalize(amps).map_err(|e| CliError::Config(format!("initial state: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darkbright::bright_basis_all_to_all;

    #[test]
    fn parses_presets() {
        assert_eq!(StateSpec::parse("special").unwrap(), StateSpec::Special);
        assert_eq!(StateSpec::parse("eigen(N)").unwrap(), StateSpec::Uniform);
        assert_eq!(StateSpec::parse("eigen(0, 2)").unwrap(), StateSpec::ZeroMode(2));
        assert_eq!(StateSpec::parse("site(6)").unwrap(), StateSpec::Site(6));
        assert_eq!(StateSpec::parse("random-bright(1)").unwrap(), StateSpec::RandomBright(1));
        assert_eq!(
            StateSpec::parse("[1, i]").unwrap(),
            StateSpec::Amplitudes(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)])
        );
        assert!(StateSpec::parse("eigen(1,2)").is_err());
        assert!(StateSpec::parse("nonsense").is_err());
    }

    #[test]
    fn amplitude_norm_is_validated() {
        let w = SiteWindow::new(2, 1).unwrap();
        let none = || Ok(vec![]);
        let ok = StateSpec::parse("[0.7071068, 0.7071068i]").unwrap();
        assert!(ok.build(&w, none).unwrap().is_normalized());
        let bad = StateSpec::parse("[1, 1]").unwrap();
        assert!(bad.build(&w, none).is_err());
        let short = StateSpec::parse("[1]").unwrap();
        assert!(short.build(&w, none).is_err());
    }

    #[test]
    fn random_bright_is_bright_and_seeded() {
        let w = SiteWindow::new(6, 3).unwrap();
        let dec = bright_basis_all_to_all(&w);
        let basis = || Ok(dec.bright_basis().to_vec());
        let a = StateSpec::RandomBright(1).build(&w, basis).unwrap();
        let b = StateSpec::RandomBright(1).build(&w, basis).unwrap();
        let c = StateSpec::RandomBright(2).build(&w, basis).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(dec.dark_weight(&a).unwrap() < 1e-24);
    }
}
