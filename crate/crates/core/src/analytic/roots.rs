use num_complex::Complex64;

use super::{check_rate, Scale};
use crate::error::{Error, Result};
use crate::spectral::AllToAllModel;
use crate::state::SiteWindow;

/// Routh–Hurwitz data for `Q(s) = s³ + a₂s² + a₁s + a₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthHurwitz {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// `a₂a₁ - a₀`
    pub determinant: f64,
}

impl RouthHurwitz {
    pub fn holds(&self) -> bool {
        self.a2 > 0.0 && self.a1 > 0.0 && self.a0 > 0.0 && self.determinant > 0.0
    }
}

/// Roots of `Q(s) = s³ + 2rs² + (J²N² + r²)s + 2J²mr(N-m)` and the Cardano
/// intermediates, all in rate units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoots {
    pub r: f64,
    /// The real root.
    pub s1: f64,
    /// `s_R`, real part of the complex pair.
    pub s2_real: f64,
    /// `s_I > 0`, imaginary part of `s₂`; `s₃ = s₂*`.
    pub s2_imag: f64,
    /// `s₄ = -r`, the extra pole of `F̂`.
    pub pole_r: f64,
    /// Depressed cubic `z³ + pz + q` after `s = z - 2r/3`.
    pub p: f64,
    pub q: f64,
    /// `(p/3)³ + (q/2)²`
    pub discriminant: f64,
    pub u: f64,
    pub v: f64,
    pub routh_hurwitz: RouthHurwitz,
}

impl CubicRoots {
    pub fn s2(&self) -> Complex64 {
        Complex64::new(self.s2_real, self.s2_imag)
    }

    pub fn s3(&self) -> Complex64 {
        self.s2().conj()
    }

    /// Evaluates `Q` at a complex point.
    pub fn eval_q(&self, s: Complex64) -> Complex64 {
        let rh = &self.routh_hurwitz;
        ((s + rh.a2) * s + rh.a1) * s + rh.a0
    }

    pub fn max_coefficient(&self) -> f64 {
        let rh = &self.routh_hurwitz;
        1.0f64.max(rh.a2.abs()).max(rh.a1.abs()).max(rh.a0.abs())
    }

    /// `|Q(s)| / max coefficient` at `s₁` and `s₂`.
    pub fn residuals(&self) -> (f64, f64) {
        let scale = self.max_coefficient();
        (
            self.eval_q(Complex64::new(self.s1, 0.0)).norm() / scale,
            self.eval_q(self.s2()).norm() / scale,
        )
    }

    /// Root obtained directly from Cardano's `z₂ = -(u+v)/2 + i√3(u-v)/2`,
    /// before deflation. Kept for cross-checks.
    pub fn cardano_s2(&self) -> Complex64 {
        let shift = 2.0 * self.r / 3.0;
        Complex64::new(
            -(self.u + self.v) / 2.0 - shift,
            3f64.sqrt() / 2.0 * (self.u - self.v),
        )
    }

    /// Checks the Routh–Hurwitz inequalities, `Δ > 0`, the orderings
    /// `-r < s₁ < 0` and `s_R < s₁`, and `|Q(sᵢ)| ≤ tol × max coefficient`.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let fail = |d: String| Err(Error::fault("cubic_roots", d));
        if !self.routh_hurwitz.holds() {
            return fail(format!("Routh-Hurwitz violated: {:?}", self.routh_hurwitz));
        }
        if !(self.discriminant > 0.0) {
            return fail(format!("discriminant {:.6e} is not positive", self.discriminant));
        }
        if !(-self.r < self.s1 && self.s1 < 0.0) {
            return fail(format!("s1 = {:.6e} outside (-r, 0) for r = {:.6e}", self.s1, self.r));
        }
        if !(self.s2_real < self.s1) {
            return fail(format!("s_R = {:.6e} not left of s1 = {:.6e}", self.s2_real, self.s1));
        }
        let (e1, e2) = self.residuals();
        if !(e1 <= tol && e2 <= tol) {
            return fail(format!("residuals |Q(s1)| = {e1:.3e}, |Q(s2)| = {e2:.3e} exceed {tol:.1e}"));
        }
        Ok(())
    }
}

fn q_scaled(s: f64, r: f64, n2: f64, k: f64) -> (f64, f64) {
    let q = ((s + 2.0 * r) * s + (n2 + r * r)) * s + k * r;
    let dq = (3.0 * s + 4.0 * r) * s + (n2 + r * r);
    (q, dq)
}

/// Solves the cubic by Cardano's formulas with sign-preserving real cube
/// roots.
///
/// `v` is taken as `-p/(3u)` (equivalent since `uv = -p/3`) with `u` built
/// from the larger-magnitude radicand, which avoids cancellation. The real
/// root is then polished by Newton steps, which matter at large `r` where
/// `u + v` nearly cancels the `2r/3` shift, and the complex pair comes from
/// deflating `Q` by `s₁`.
pub fn cubic_roots(r: f64, model: &AllToAllModel, window: &SiteWindow) -> Result<CubicRoots> {
    check_rate(r)?;
    let sc = Scale::new(model, window)?;
    let x = r / sc.j;
    let n2 = sc.n * sc.n;
    let k = sc.k();

    let p = n2 - x * x / 3.0;
    let q = -2.0 * sc.m * sc.m * x + 2.0 * sc.m * sc.n * x - 2.0 / 3.0 * n2 * x - 2.0 * x.powi(3) / 27.0;
    let disc = (p / 3.0).powi(3) + (q / 2.0).powi(2);
    if !(disc > 0.0) {
        return Err(Error::fault(
            "cubic_roots",
            format!("discriminant {disc:.6e} is not positive"),
        ));
    }
    let sq = disc.sqrt();
    let big = -q / 2.0 + if q <= 0.0 { sq } else { -sq };
    let (u, v) = {
        let a = big.cbrt();
        let b = if a != 0.0 { -p / (3.0 * a) } else { 0.0 };
        // u carries +√Δ by convention
        if q <= 0.0 {
            (a, b)
        } else {
            (b, a)
        }
    };
    let mut s1 = u + v - 2.0 * x / 3.0;

    // Newton polish, kept inside the bracket (-2r/3, 0).
    let (lo, hi) = (-2.0 * x / 3.0, 0.0);
    for _ in 0..8 {
        let (f, df) = q_scaled(s1, x, n2, k);
        if df == 0.0 {
            break;
        }
        let next = s1 - f / df;
        let next = if next > lo && next < hi { next } else { 0.5 * (s1 + if f > 0.0 { lo } else { hi }) };
        if next == s1 {
            break;
        }
        s1 = next;
    }

    // Q(s) = (s - s1)(s² + bs + c)
    let b = 2.0 * x + s1;
    let s_real = -b / 2.0;
    let s_imag_sq = n2 + x * s1 + 0.75 * s1 * s1;
    if !(s_imag_sq > 0.0) {
        return Err(Error::fault(
            "cubic_roots",
            format!("deflated quadratic has real roots (s_I^2 = {s_imag_sq:.3e})"),
        ));
    }

    let j = sc.j;
    let rh = RouthHurwitz {
        a2: 2.0 * r,
        a1: j * j * n2 + r * r,
        a0: j * j * k * r,
        determinant: 2.0 * r * (j * j * (n2 - sc.m * (sc.n - sc.m)) + r * r),
    };
    Ok(CubicRoots {
        r,
        s1: s1 * j,
        s2_real: s_real * j,
        s2_imag: s_imag_sq.sqrt() * j,
        pole_r: -r,
        p: p * j * j,
        q: q * j.powi(3),
        discriminant: disc * j.powi(6),
        u: u * j,
        v: v * j,
        routh_hurwitz: rh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup() -> (AllToAllModel, SiteWindow) {
        (AllToAllModel::new(6, 1.0).unwrap(), SiteWindow::new(6, 3).unwrap())
    }

    /// Independent root oracle: bisection on `(-2r/3, 0)` where `Q` changes
    /// sign.
    fn bisect_s1(r: f64, j: f64, n: f64, m: f64) -> f64 {
        let q = |s: f64| s.powi(3) + 2.0 * r * s * s + (j * j * n * n + r * r) * s + 2.0 * j * j * m * r * (n - m);
        let (mut a, mut b) = (-2.0 * r / 3.0, 0.0);
        assert!(q(a) < 0.0 && q(b) > 0.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if q(c) > 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn reference_cubic() {
        let (model, w) = setup();
        let roots = cubic_roots(1.0, &model, &w).unwrap();
        let rh = roots.routh_hurwitz;
        assert_eq!((rh.a2, rh.a1, rh.a0), (2.0, 37.0, 18.0));
        let oracle = bisect_s1(1.0, 1.0, 6.0, 3.0);
        assert!((roots.s1 - oracle).abs() < 1e-14);
        assert!((roots.s1 + 0.49651).abs() < 1e-5);
        assert!((1.0 / roots.s1.abs() - 2.014).abs() < 5e-4);
        roots.verify(1e-12).unwrap();
    }

    #[test]
    fn cardano_pair_agrees_with_deflation() {
        let (model, w) = setup();
        for r in [0.1, 1.0, 6.0, 30.0] {
            let roots = cubic_roots(r, &model, &w).unwrap();
            let d = (roots.cardano_s2() - roots.s2()).norm();
            assert!(d < 1e-9 * r.max(6.0), "r={r}: {d}");
        }
    }

    #[test]
    fn factorization_reproduces_coefficients() {
        let (model, w) = setup();
        for r in [1e-3, 0.5, 7.0, 1e3] {
            let roots = cubic_roots(r, &model, &w).unwrap();
            let (s1, s2, s3) = (Complex64::new(roots.s1, 0.0), roots.s2(), roots.s3());
            let a2 = -(s1 + s2 + s3);
            let a1 = s1 * s2 + s1 * s3 + s2 * s3;
            let a0 = -(s1 * s2 * s3);
            let rh = roots.routh_hurwitz;
            let scale = roots.max_coefficient();
            for (got, want) in [(a2, rh.a2), (a1, rh.a1), (a0, rh.a0)] {
                assert!((got - want).norm() <= 1e-9 * scale, "r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn discriminant_matches_root_separation() {
        let (model, w) = setup();
        let roots = cubic_roots(2.0, &model, &w).unwrap();
        let sep = (Complex64::new(roots.s1, 0.0) - roots.s2()).norm();
        let expect = roots.s2_imag.powi(2) * sep.powi(4) / 27.0;
        assert!((roots.discriminant - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn rejects_bad_rate() {
        let (model, w) = setup();
        assert!(cubic_roots(0.0, &model, &w).is_err());
        assert!(cubic_roots(f64::NAN, &model, &w).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]
        #[test]
        fn root_certificates(
            n in 2usize..=50,
            cut_frac in 0.0f64..1.0,
            j in 0.1f64..10.0,
            neg in any::<bool>(),
            log_r in -3.0f64..3.0,
        ) {
            let m = (1 + ((n - 1) as f64 * cut_frac) as usize).min(n - 1);
            let coupling = if neg { -j } else { j };
            let model = AllToAllModel::new(n, coupling).unwrap();
            let w = SiteWindow::new(n, m).unwrap();
            let r = 10f64.powf(log_r);
            let roots = cubic_roots(r, &model, &w).unwrap();
            roots.verify(1e-9).unwrap();
            let oracle = bisect_s1(r, j, n as f64, m as f64);
            prop_assert!((roots.s1 - oracle).abs() <= 1e-10 * oracle.abs().max(1e-300) + 1e-15 * r);
        }
    }
}
