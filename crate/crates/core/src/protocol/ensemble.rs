use super::{HistogramSpec, TrajectoryRecord};
use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl MeanEstimate {
    pub fn from_samples(xs: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut n, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
        for x in xs {
            n += 1;
            let d = x - mean;
            mean += d / n as f64;
            m2 += d * (x - mean);
        }
        if n == 0 {
            return None;
        }
        let stderr = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Some(Self {
            mean,
            stderr,
            count: n,
        })
    }

    /// `|mean - x| / stderr`
    pub fn z_score(&self, x: f64) -> f64 {
        (self.mean - x).abs() / self.stderr
    }
}

/// Kaplan–Meier survival `S(t) = P(T > t)` at uniformly spaced edges, with
/// Greenwood standard errors. Censored records leave the risk set at their
/// last measurement time.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub edges: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SurvivalCurve {
    fn kaplan_meier(records: &[TrajectoryRecord], edges: Vec<f64>) -> Self {
        let mut order: Vec<(f64, bool)> = records.iter().map(|r| (r.time, r.detected)).collect();
        // events before censorings at equal times
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut at_risk = order.len() as f64;
        let (mut s, mut greenwood) = (1.0f64, 0.0f64);
        let mut survival = Vec::with_capacity(edges.len());
        let mut stderr = Vec::with_capacity(edges.len());
        let mut i = 0;
        for &edge in &edges {
            while i < order.len() && order[i].0 <= edge {
                let t = order[i].0;
                let (mut events, mut gone) = (0.0, 0.0);
                while i < order.len() && order[i].0 == t {
                    if order[i].1 {
                        events += 1.0;
                    }
                    gone += 1.0;
                    i += 1;
                }
                if events > 0.0 {
                    s *= 1.0 - events / at_risk;
                    if at_risk > events {
                        greenwood += events / (at_risk * (at_risk - events));
                    }
                }
                at_risk -= gone;
            }
            survival.push(s);
            stderr.push(s * greenwood.sqrt());
        }
        Self {
            edges,
            survival,
            stderr,
        }
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.edges.last().expect("at least two edges")
    }

    /// `S` at `t`, piecewise-linear between edges; `None` outside the range.
    pub fn at(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t > self.t_max() {
            return None;
        }
        let w = self.bin_width();
        let i = ((t / w) as usize).min(self.edges.len() - 2);
        let f = (t - self.edges[i]) / w;
        Some(self.survival[i] * (1.0 - f) + self.survival[i + 1] * f)
    }
}

/// Binned first-detection density `F = -dS/dt` at bin centres.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistogram {
    pub centers: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl DensityHistogram {
    fn from_survival(curve: &SurvivalCurve, n: f64) -> Self {
        let w = curve.bin_width();
        let mut out = Self {
            centers: Vec::new(),
            values: Vec::new(),
            stderr: Vec::new(),
        };
        for i in 0..curve.edges.len() - 1 {
            let p = curve.survival[i] - curve.survival[i + 1];
            out.centers.push(0.5 * (curve.edges[i] + curve.edges[i + 1]));
            out.values.push(p / w);
            out.stderr.push((p.max(0.0) * (1.0 - p).max(0.0) / n).sqrt() / w);
        }
        out
    }
}

/// Records plus derived statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEnsemble {
    pub records: Vec<TrajectoryRecord>,
    pub survival: SurvivalCurve,
    pub density: DensityHistogram,
}

impl DetectionEnsemble {
    pub fn from_records(records: Vec<TrajectoryRecord>, spec: &HistogramSpec) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::param("records", "ensemble needs at least one trajectory"));
        }
        let t_max = spec.t_max.unwrap_or_else(|| adaptive_t_max(&records));
        let bins = spec.bins.max(1);
        let edges = (0..=bins).map(|i| t_max * i as f64 / bins as f64).collect();
        let survival = SurvivalCurve::kaplan_meier(&records, edges);
        let density = DensityHistogram::from_survival(&survival, records.len() as f64);
        Ok(Self {
            records,
            survival,
            density,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_detected(&self) -> u64 {
        self.records.iter().filter(|r| r.detected).count() as u64
    }

    pub fn n_censored(&self) -> u64 {
        self.len() as u64 - self.n_detected()
    }

    /// Detected fraction with its binomial standard error.
    pub fn detected_fraction(&self) -> (f64, f64) {
        let n = self.len() as f64;
        let p = self.n_detected() as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// Mean detection time over detected records only; censored records are
    /// excluded and reported through [`Self::n_censored`].
    pub fn mean_fdt(&self) -> Option<MeanEstimate> {
        MeanEstimate::from_samples(self.records.iter().filter(|r| r.detected).map(|r| r.time))
    }

    pub fn mean_measurements(&self) -> Option<MeanEstimate> {
        MeanEstimate::from_samples(
            self.records
                .iter()
                .filter(|r| r.detected)
                .map(|r| r.n_measurements as f64),
        )
    }
}

fn adaptive_t_max(records: &[TrajectoryRecord]) -> f64 {
    let mut times: Vec<f64> = records.iter().filter(|r| r.detected).map(|r| r.time).collect();
    if times.is_empty() {
        times = records.iter().map(|r| r.time).collect();
    }
    times.sort_by(f64::total_cmp);
    let idx = ((times.len() as f64 * 0.999).ceil() as usize).clamp(1, times.len()) - 1;
    let t = times[idx];
    if t > 0.0 && t.is_finite() {
        t
    } else {
        1.0
    }
}

/// Estimate of `∫₀^∞ e^{-st} S(t) dt` from an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub value: f64,
    /// Combined statistical, discretization and tail uncertainty.
    pub error: f64,
    /// False when survival past the histogram range is neither negligible
    /// (below 1e-3) nor explained by censored records.
    pub reliable: bool,
}

/// Laplace transform of the binned survival, linearly interpolated between
/// edges, plus a tail term that continues `S(t_max)` as a constant.
pub fn numeric_laplace_of_survival(ens: &DetectionEnsemble, s: f64) -> Result<LaplaceEstimate> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param("s", format!("must be positive and finite, got {s}")));
    }
    let curve = &ens.survival;
    let sv = &curve.survival;
    let w = curve.bin_width();
    // S linear on each bin (the trapezoid interpolant), integrated exactly
    // against e^{-st} so that bins wider than 1/s stay accurate
    let trap = |step: usize| {
        let h = w * step as f64;
        let x = s * h;
        let decay = (-x).exp();
        let c0 = h * (-(-x).exp_m1()) / x;
        let c1 = if x < 1e-3 {
            h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0)
        } else {
            h * ((-(-x).exp_m1()) / (x * x) - decay / x)
        };
        let idx: Vec<usize> = (0..sv.len()).step_by(step).collect();
        idx.windows(2)
            .map(|p| (-s * curve.edges[p[0]]).exp() * (sv[p[0]] * c0 + (sv[p[1]] - sv[p[0]]) * c1))
            .sum::<f64>()
    };
    let fine = trap(1);
    let bins = sv.len() - 1;
    let disc = if bins >= 2 && bins % 2 == 0 {
        // conservative: the Richardson estimate would divide by 3
        (fine - trap(2)).abs()
    } else {
        0.0
    };

    let t_max = curve.t_max();
    let s_end = *curve.survival.last().expect("non-empty");
    let se_end = *curve.stderr.last().expect("non-empty");
    let decay = (-s * t_max).exp() / s;
    let tail = s_end * decay;

    let censored = ens.n_censored() as f64 / ens.len() as f64;
    let explained = censored > 0.0 && (s_end - censored).abs() <= 3.0 * se_end + 1e-3;
    let tail_err = if explained { se_end * decay } else { tail };
    let reliable = s_end < 1e-3 || explained;

    let stat = MeanEstimate::from_samples(
        ens.records
            .iter()
            .map(|r| (1.0 - (-s * r.time.min(t_max)).exp()) / s),
    )
    .map(|m| if m.stderr.is_finite() { m.stderr } else { 0.0 })
    .unwrap_or(0.0);

    Ok(LaplaceEstimate {
        value: fine + tail,
        error: (stat * stat + disc * disc).sqrt() + tail_err,
        reliable,
    })
}
