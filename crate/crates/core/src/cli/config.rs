use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;

use super::state_spec::StateSpec;
use super::CliError;

/// Inclusive grid `lo:hi:n[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
}

impl Grid {
    pub fn parse(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        let log = match parts.as_slice() {
            [_, _, _] => false,
            [_, _, _, "log"] => true,
            [_, _, _, "lin"] => false,
            _ => return Err(format!("expected lo:hi:n[:log], got `{text}`")),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("bad number `{s}` in grid `{text}`"));
        let lo = num(parts[0])?;
        let hi = num(parts[1])?;
        let n = parts[2]
            .parse::<usize>()
            .map_err(|_| format!("bad point count `{}` in grid `{text}`", parts[2]))?;
        if !(lo.is_finite() && hi.is_finite()) || hi < lo {
            return Err(format!("grid `{text}` needs finite lo <= hi"));
        }
        if n == 0 || (n == 1 && hi > lo) {
            return Err(format!("grid `{text}` needs at least two points"));
        }
        if log && lo <= 0.0 {
            return Err(format!("log grid `{text}` needs lo > 0"));
        }
        Ok(Self { lo, hi, n, log })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        if self.log {
            crate::numerics::log_grid(self.lo, self.hi, self.n)
        } else {
            crate::numerics::linear_grid(self.lo, self.hi, self.n)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Poissonian measurements at rate `r`.
    Exp,
    /// Measurements every `period`.
    Sharp,
}

/// Flags shared by every subcommand. Each one overrides the matching key of
/// the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Flat TOML file with any of the keys below (snake_case).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Number of sites.
    #[arg(long)]
    pub n: Option<usize>,
    /// Size of the unmonitored block; the target is sites m+1..N.
    #[arg(long)]
    pub m: Option<usize>,
    /// Hopping amplitude J.
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<f64>,
    /// Initial state: special, uniform, site(k), eigen(0,l), eigen(N),
    /// random-bright(seed), [a, b, ...] or @file.
    #[arg(long)]
    pub state: Option<String>,
    /// Master seed of the RNG streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Monte Carlo trajectories.
    #[arg(long)]
    pub trajectories: Option<u64>,
    /// Measurement rate; comma-separated list for `fdp`.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// Rate grid; append `:log` for log spacing.
    #[arg(long, value_name = "LO:HI:N[:log]")]
    pub r_grid: Option<String>,
    /// Time grid, linearly spaced.
    #[arg(long, value_name = "LO:HI:N")]
    pub t_grid: Option<String>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolKind>,
    /// Interval of the sharp protocol.
    #[arg(long)]
    pub period: Option<f64>,
    /// Explicit Hermitian matrix instead of the all-to-all model (`@file`).
    #[arg(long, value_name = "@FILE")]
    pub hamiltonian: Option<String>,
    /// Measurements per trajectory before it is censored.
    #[arg(long)]
    pub max_measurements: Option<u64>,
    /// Survival histogram bins.
    #[arg(long)]
    pub bins: Option<usize>,
    /// Survival histogram range; adaptive when omitted.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Add Monte Carlo columns to `mfdt-sweep` and `fdp`.
    #[arg(long)]
    pub with_mc: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Rates {
    One(f64),
    Many(Vec<f64>),
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<usize>,
    m: Option<usize>,
    j: Option<f64>,
    state: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    trajectories: Option<u64>,
    r: Option<Rates>,
    r_grid: Option<String>,
    t_grid: Option<String>,
    protocol: Option<ProtocolKind>,
    period: Option<f64>,
    hamiltonian: Option<String>,
    max_measurements: Option<u64>,
    bins: Option<usize>,
    t_max: Option<f64>,
    with_mc: Option<bool>,
}

/// Fully resolved parameters. Fields left `None` take a subcommand-specific
/// default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub j: f64,
    pub state: StateSpec,
    pub seed: u64,
    pub out: PathBuf,
    pub trajectories: Option<u64>,
    pub rates: Option<Vec<f64>>,
    pub r_grid: Option<Grid>,
    pub t_grid: Option<Grid>,
    pub protocol: ProtocolKind,
    pub period: Option<f64>,
    /// Path of an explicit Hamiltonian; `n` is then its dimension.
    pub hamiltonian: Option<PathBuf>,
    pub max_measurements: u64,
    pub bins: usize,
    pub t_max: Option<f64>,
    pub with_mc: bool,
}

fn at_path(text: &str, key: &str) -> Result<PathBuf, CliError> {
    text.strip_prefix('@')
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Config(format!("{key} must be given as @file, got `{text}`")))
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let file = match &o.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        let hamiltonian = o
            .hamiltonian
            .clone()
            .or(file.hamiltonian)
            .map(|h| at_path(&h, "--hamiltonian"))
            .transpose()?;
        let mut n = o.n.or(file.n).unwrap_or(6);
        if let Some(path) = &hamiltonian {
            let dim = super::io::matrix_dimension(path)?;
            if o.n.or(file.n).is_some_and(|given| given != dim) {
                return Err(CliError::Config(format!(
                    "--n = {n} disagrees with the {dim}x{dim} Hamiltonian in {}",
                    path.display()
                )));
            }
            n = dim;
        }
        let m = o.m.or(file.m).unwrap_or((n / 2).max(1));
        let j = o.j.or(file.j).unwrap_or(1.0);
        let state_text = o.state.clone().or(file.state).unwrap_or_else(|| "special".into());
        let state = StateSpec::parse(&state_text).map_err(CliError::Config)?;
        let rates = o.r.clone().or(file.r.map(|r| match r {
            Rates::One(x) => vec![x],
            Rates::Many(v) => v,
        }));
        let grid = |g: Option<String>| g.map(|t| Grid::parse(&t).map_err(CliError::Config)).transpose();
        let cfg = Self {
            n,
            m,
            j,
            state,
            seed: o.seed.or(file.seed).unwrap_or(0),
            out: o.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            trajectories: o.trajectories.or(file.trajectories),
            rates,
            r_grid: grid(o.r_grid.clone().or(file.r_grid))?,
            t_grid: grid(o.t_grid.clone().or(file.t_grid))?,
            protocol: o.protocol.or(file.protocol).unwrap_or(ProtocolKind::Exp),
            period: o.period.or(file.period),
            hamiltonian,
            max_measurements: o
                .max_measurements
                .or(file.max_measurements)
                .unwrap_or(crate::protocol::DEFAULT_MAX_MEASUREMENTS),
            bins: o.bins.or(file.bins).unwrap_or(crate::protocol::DEFAULT_BINS),
            t_max: o.t_max.or(file.t_max),
            with_mc: o.with_mc || file.with_mc.unwrap_or(false),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.m == 0 || self.m >= self.n {
            return bad(format!("m must lie in [1, {}], got {}", self.n - 1, self.m));
        }
        if !(self.j.is_finite() && self.j != 0.0) {
            return bad(format!("j must be finite and nonzero, got {}", self.j));
        }
        if let Some(rates) = &self.rates {
            if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return bad(format!("rates must be positive and finite, got {rates:?}"));
            }
        }
        if let Some(g) = &self.r_grid {
            if g.lo <= 0.0 {
                return bad("r-grid must be positive".into());
            }
        }
        if let Some(g) = &self.t_grid {
            if g.lo < 0.0 {
                return bad("t-grid must be non-negative".into());
            }
        }
        if self.trajectories == Some(0) {
            return bad("trajectories must be positive".into());
        }
        if self.max_measurements == 0 || self.bins == 0 {
            return bad("max-measurements and bins must be positive".into());
        }
        if let Some(p) = self.period {
            if !(p > 0.0 && p.is_finite()) {
                return bad(format!("period must be positive, got {p}"));
            }
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("t-max must be positive, got {t}"));
            }
        }
        Ok(())
    }

    /// The single rate used by commands that take one.
    pub fn rate(&self) -> f64 {
        self.rates.as_ref().map_or(1.0, |r| r[0])
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("0.01:100:5:log").unwrap();
        assert!(g.log && g.n == 5);
        let p = g.points();
        assert!((p[2] - 1.0).abs() < 1e-12);
        assert_eq!(Grid::parse("0:1:3").unwrap().points(), vec![0.0, 0.5, 1.0]);
        assert!(Grid::parse("0:1").is_err());
        assert!(Grid::parse("0:1:3:log").is_err());
        assert!(Grid::parse("1:0:3").is_err());
        assert!(Grid::parse("0:1:x").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n = 8\nm = 2\nr = [0.5, 2]\nstate = \"uniform\"\nseed = 9\n").unwrap();
        let o = Overrides {
            config: Some(path.clone()),
            m: Some(4),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&o).unwrap();
        assert_eq!((cfg.n, cfg.m, cfg.seed), (8, 4, 9));
        assert_eq!(cfg.rates, Some(vec![0.5, 2.0]));
        assert_eq!(cfg.state, StateSpec::Uniform);

        std::fs::write(&path, "r = 3\n").unwrap();
        assert_eq!(RunConfig::resolve(&o).unwrap().rate(), 3.0);

        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(matches!(RunConfig::resolve(&o), Err(CliError::Config(_))));
    }

    #[test]
    fn rejects_bad_window() {
        let o = Overrides {
            n: Some(4),
            m: Some(4),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&o), Err(CliError::Config(_))));
    }
}
