//! κ-μ shadowed power gains with integer μ and m.
//!
//! With integer parameters and μ ≤ m the squared envelope is a finite
//! mixture of gamma laws. Component `j ∈ 0..=N` (N = m − μ) has integer
//! shape `m − j`, a shared scale Ω = (μK + m) / (mμ(1 + K)) and a binomial
//! weight
//!
//! ```text
//! C_j = binom(N, j) · (m / (μK + m))^j · (μK / (μK + m))^(N − j)
//! ```
//!
//! Every parameter set built here has unit mean. `mu` doubles as the
//! number of beacon antennas: an L-antenna beacon yields gain ‖h‖² with
//! `mu = L`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{digamma_integer, log_gamma};

/// Largest integer shape sampled as a sum of exponentials.
const EXPONENTIAL_SUM_MAX_SHAPE: u32 = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FadingSpec", into = "FadingSpec")]
pub struct FadingParams {
    k: f64,
    mu: u32,
    m: u32,
    omega: f64,
    weights: Vec<f64>,
    shapes: Vec<u32>,
    // Cached per-component ln Γ(shape) and cumulative weights for sampling.
    ln_gamma_shapes: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Serialized form: only the free parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct FadingSpec {
    k: f64,
    mu: u32,
    m: u32,
}

impl TryFrom<FadingSpec> for FadingParams {
    type Error = Error;
    fn try_from(s: FadingSpec) -> Result<Self> {
        FadingParams::new(s.k, s.mu, s.m)
    }
}

impl From<FadingParams> for FadingSpec {
    fn from(p: FadingParams) -> Self {
        FadingSpec {
            k: p.k,
            mu: p.mu,
            m: p.m,
        }
    }
}

impl FadingParams {
    pub fn new(k: f64, mu: u32, m: u32) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "K must be finite and nonnegative, got {k}"
            )));
        }
        if mu < 1 {
            return Err(Error::InvalidConfig("mu must be at least 1".into()));
        }
        if m < mu {
            return Err(Error::InvalidConfig(format!(
                "fading requires mu <= m, got mu = {mu}, m = {m}"
            )));
        }
        let n = m - mu;
        let muk = f64::from(mu) * k;
        let mf = f64::from(m);
        let omega = (muk + mf) / (mf * f64::from(mu) * (1.0 + k));
        let p = mf / (muk + mf);
        let q = muk / (muk + mf);
        let ln_fact = |x: u32| log_gamma(f64::from(x) + 1.0).expect("positive argument");
        let weights: Vec<f64> = (0..=n)
            .map(|j| {
                let binom = (ln_fact(n) - ln_fact(j) - ln_fact(n - j)).exp();
                binom * p.powi(j as i32) * q.powi((n - j) as i32)
            })
            .collect();
        let shapes: Vec<u32> = (0..=n).map(|j| m - j).collect();
        let ln_gamma_shapes = shapes
            .iter()
            .map(|&s| log_gamma(f64::from(s)).expect("positive shape"))
            .collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            k,
            mu,
            m,
            omega,
            weights,
            shapes,
            ln_gamma_shapes,
            cumulative,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// N = m − μ, the index of the last mixture component.
    pub fn n(&self) -> u32 {
        self.m - self.mu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Mixture weights C_j.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integer gamma shapes m_j = m − j.
    pub fn shapes(&self) -> &[u32] {
        &self.shapes
    }

    /// Iterator over `(C_j, m_j)` pairs.
    pub fn components(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.weights
            .iter()
            .copied()
            .zip(self.shapes.iter().copied())
    }

    /// Analytic mean Σ C_j m_j Ω.
    pub fn mean(&self) -> f64 {
        self.components()
            .map(|(c, s)| c * f64::from(s))
            .sum::<f64>()
            * self.omega
    }

    /// Returns a copy whose scale Ω is multiplied by `factor`.
    ///
    /// Breaks the unit-mean invariant; only meant for fault injection in
    /// the validation suite.
    #[doc(hidden)]
    pub fn with_corrupted_omega(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.omega *= factor;
        out
    }

    fn check_x(function: &'static str, x: f64) -> Result<()> {
        if x >= 0.0 {
            Ok(())
        } else {
            Err(Error::domain(
                function,
                format!("x must be nonnegative, got {x}"),
            ))
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        Self::check_x("pdf", x)?;
        let omega = self.omega;
        if x == 0.0 {
            // Only shape-1 components have nonzero density at the origin.
            return Ok(self
                .components()
                .filter(|&(_, s)| s == 1)
                .map(|(c, _)| c / omega)
                .sum());
        }
        let ln_x = x.ln();
        let ln_omega = omega.ln();
        let density = self
            .components()
            .zip(&self.ln_gamma_shapes)
            .map(|((c, s), lg)| {
                let s = f64::from(s);
                c * ((s - 1.0) * ln_x - x / omega - s * ln_omega - lg).exp()
            })
            .sum();
        Ok(density)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Self::check_x("cdf", x)?;
        let y = x / self.omega;
        let value: f64 = self
            .components()
            .map(|(c, s)| c * regularized_lower_integer(s, y))
            .sum();
        Ok(value.clamp(0.0, 1.0))
    }

    /// Complementary distribution 1 − F(x).
    pub fn survival(&self, x: f64) -> Result<f64> {
        Self::check_x("survival", x)?;
        if x == 0.0 {
            return Ok(1.0);
        }
        let y = x / self.omega;
        let value: f64 = self
            .components()
            .map(|(c, s)| c * regularized_upper_integer(s, y))
            .sum();
        Ok(value.clamp(0.0, 1.0))
    }

    /// E[ln |h|²] = Σ C_j [ψ(m_j) − ln(1/Ω)].
    pub fn log_moment(&self) -> f64 {
        let ln_omega = self.omega.ln();
        self.components()
            .map(|(c, s)| c * (digamma_integer(s).expect("shape >= 1") + ln_omega))
            .sum()
    }

    /// Draws one power gain.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let j = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.shapes.len() - 1);
        sample_gamma_integer(self.shapes[j], self.omega, rng)
    }

    /// Parameters assigned to the l-fold sum of gains: same K and m with
    /// μ replaced by `l` (so N becomes m − l, not the original N).
    ///
    /// The result is unit mean like every other parameter set, whereas a
    /// literal sum of `l` unit-mean gains has mean `l`.
    pub fn sum_params(&self, l: u32) -> Result<Self> {
        if l < 1 || l > self.m {
            return Err(Error::domain(
                "sum_params",
                format!("need 1 <= l <= m = {}, got l = {l}", self.m),
            ));
        }
        Self::new(self.k, l, self.m)
    }
}

/// P(n, y) for integer n: the gamma(n, 1) distribution function.
fn regularized_lower_integer(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let nf = f64::from(n);
    if y < nf + 1.0 {
        // e^{-y} Σ_{r ≥ n} y^r / r!, accurate when the mass is small.
        let ln_first = nf * y.ln() - y - log_gamma(nf + 1.0).expect("positive");
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut r = nf;
        loop {
            r += 1.0;
            term *= y / r;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        (ln_first + sum.ln()).exp().min(1.0)
    } else {
        (1.0 - regularized_upper_integer(n, y)).max(0.0)
    }
}

/// Q(n, y) = e^{-y} Σ_{r < n} y^r / r!.
fn regularized_upper_integer(n: u32, y: f64) -> f64 {
    if y <= 0.0 {
        return 1.0;
    }
    let ln_y = y.ln();
    let mut ln_term = -y;
    let mut sum = 0.0;
    for r in 0..n {
        if r > 0 {
            ln_term += ln_y - f64::from(r).ln();
        }
        sum += ln_term.exp();
    }
    sum.min(1.0)
}

/// Gamma variate with integer shape and the given scale.
pub fn sample_gamma_integer<R: Rng + ?Sized>(shape: u32, scale: f64, rng: &mut R) -> f64 {
    if shape <= EXPONENTIAL_SUM_MAX_SHAPE {
        let mut product = 1.0f64;
        let mut ln_sum = 0.0f64;
        for _ in 0..shape {
            // Uniform on (0, 1].
            let u = 1.0 - rng.random::<f64>();
            product *= u;
            if product < 1e-280 {
                ln_sum += product.ln();
                product = 1.0;
            }
        }
        -(ln_sum + product.ln()) * scale
    } else {
        Gamma::new(f64::from(shape), scale)
            .expect("positive shape and scale")
            .sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{
        integrate_adaptive, ks_p_value, ks_statistic, AccuracySpec, EULER_GAMMA,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Reference values computed with mpmath at 40 digits.
    const PDF_7_1_20_AT_1: f64 = 0.743_431_998_417_885_110_391_759_193_300_5;
    const CDF_7_1_20_AT_1: f64 = 0.555_617_103_759_938_054_282_210_107_066_4;
    const LOG_MOMENT_7_1_20: f64 = -0.158_315_014_782_793_913_164_924_559_883_8;
    const LOG_MOMENT_7_16_20: f64 = -0.026_742_120_986_334_267_377_947_170_275_49;

    fn reference() -> FadingParams {
        FadingParams::new(7.0, 1, 20).unwrap()
    }

    #[test]
    fn rejects_mu_above_m() {
        assert!(FadingParams::new(7.0, 16, 5).is_err());
        assert!(FadingParams::new(7.0, 0, 5).is_err());
        assert!(FadingParams::new(-1.0, 1, 5).is_err());
    }

    #[test]
    fn oracle_constants() {
        let p = reference();
        assert_eq!(p.n(), 19);
        assert_eq!(p.shapes().len(), 20);
        assert_eq!(p.shapes()[0], 20);
        assert_eq!(*p.shapes().last().unwrap(), 1);
        assert!(p.shapes().windows(2).all(|w| w[0] > w[1]));
        assert!((p.omega() - 27.0 / 160.0).abs() < 1e-15);
    }

    #[test]
    fn pdf_anchors() {
        let p = FadingParams::new(7.0, 2, 20).unwrap();
        assert_eq!(p.pdf(0.0).unwrap(), 0.0);
        let rel = (reference().pdf(1.0).unwrap() - PDF_7_1_20_AT_1).abs() / PDF_7_1_20_AT_1;
        assert!(rel < 1e-12, "rel = {rel}");
        assert!(reference().pdf(-1.0).is_err());
    }

    #[test]
    fn exponential_special_case() {
        for &k in &[0.0, 0.5, 7.0, 40.0] {
            let p = FadingParams::new(k, 1, 1).unwrap();
            for i in 0..50 {
                let x = 0.2 * f64::from(i);
                assert!((p.pdf(x).unwrap() - (-x).exp()).abs() < 1e-12);
                assert!((p.cdf(x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-12);
            }
            assert!((p.log_moment() + EULER_GAMMA).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_anchors() {
        let p = reference();
        assert_eq!(p.cdf(0.0).unwrap(), 0.0);
        assert!((p.cdf(1.0).unwrap() - CDF_7_1_20_AT_1).abs() < 1e-12);
        assert!(p.cdf(50.0).unwrap() >= 1.0 - 1e-9);
        assert!(p.cdf(-0.1).is_err());
        let x = 0.37;
        assert!((p.cdf(x).unwrap() + p.survival(x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cdf_small_argument_keeps_relative_precision() {
        // Leading-order term C_{N} (x/Ω)/1! for the shape-1 component.
        let p = reference();
        let x = 1e-10;
        let (c_last, s_last) = p.components().last().unwrap();
        assert_eq!(s_last, 1);
        let approx = c_last * x / p.omega();
        assert!(((p.cdf(x).unwrap() - approx) / approx).abs() < 1e-8);
    }

    #[test]
    fn log_moment_anchors() {
        assert!((reference().log_moment() - LOG_MOMENT_7_1_20).abs() < 1e-12);
        let p16 = FadingParams::new(7.0, 16, 20).unwrap();
        assert!((p16.log_moment() - LOG_MOMENT_7_16_20).abs() < 1e-12);
        assert!(p16.log_moment() > reference().log_moment());
    }

    #[test]
    fn log_moment_monte_carlo() {
        for mu in [1, 16] {
            let p = FadingParams::new(7.0, mu, 20).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let n = 2_000_000;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let l = p.sample(&mut rng).ln();
                s += l;
                s2 += l * l;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((mean - p.log_moment()).abs() < 3.0 * se, "mu={mu}");
        }
    }

    #[test]
    fn weight_identities_grid() {
        for &k in &[0.5, 7.0, 15.0] {
            for mu in [1u32, 2, 16] {
                for m in mu..=20 {
                    let p = FadingParams::new(k, mu, m).unwrap();
                    let total: f64 = p.weights().iter().sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    assert!((p.mean() - 1.0).abs() < 1e-12);
                    assert!(p.log_moment() <= 0.0);
                }
            }
        }
    }

    #[test]
    fn normalization_grid() {
        let acc = AccuracySpec::new(1e-11, 4000).unwrap();
        for &k in &[0.5, 7.0, 15.0] {
            for mu in [1u32, 2, 16] {
                for m in mu..=20 {
                    let p = FadingParams::new(k, mu, m).unwrap();
                    let total = integrate_adaptive(|x| p.pdf(x).unwrap(), 0.0, 60.0, acc).unwrap();
                    assert!(
                        (total - 1.0).abs() < 1e-9,
                        "K={k} mu={mu} m={m} total={total}"
                    );
                }
            }
        }
    }

    #[test]
    fn cdf_derivative_is_pdf() {
        for mu in [1u32, 2, 16] {
            let p = FadingParams::new(7.0, mu, 20).unwrap();
            for i in 1..=20 {
                let x = 0.1 * f64::from(i);
                let h = 1e-5 * x;
                let fd = (p.cdf(x + h).unwrap() - p.cdf(x - h).unwrap()) / (2.0 * h);
                let pdf = p.pdf(x).unwrap();
                if pdf > 1e-6 {
                    assert!(((fd - pdf) / pdf).abs() < 1e-6, "mu={mu} x={x}");
                }
            }
        }
    }

    #[test]
    fn more_antennas_less_low_gain_mass() {
        let one = FadingParams::new(7.0, 1, 20).unwrap().cdf(0.5).unwrap();
        let sixteen = FadingParams::new(7.0, 16, 20).unwrap().cdf(0.5).unwrap();
        assert!(sixteen < one);
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = reference();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| p.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn sample_mean_is_unity() {
        let p = reference();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let g = p.sample(&mut rng);
            s += g;
            s2 += g * g;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean={mean} se={se}");
    }

    #[test]
    fn sampler_ks() {
        for (k, mu, m) in [(7.0, 1, 20), (0.5, 2, 3), (15.0, 16, 20), (7.0, 1, 1)] {
            let p = FadingParams::new(k, mu, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let mut xs: Vec<f64> = (0..100_000).map(|_| p.sample(&mut rng)).collect();
            let d = ks_statistic(&mut xs, |x| p.cdf(x).unwrap());
            assert!(ks_p_value(d, xs.len()) > 0.01, "K={k} mu={mu} m={m} D={d}");
        }
    }

    #[test]
    fn large_shape_uses_rejection_sampler() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n)
            .map(|_| sample_gamma_integer(50, 0.02, &mut rng))
            .sum::<f64>()
            / n as f64;
        // sd of the mean is sqrt(50)·0.02/sqrt(n) ≈ 3.2e-4.
        assert!((mean - 1.0).abs() < 1.5e-3);
    }

    #[test]
    fn sum_params_contract() {
        let p = reference();
        assert_eq!(p.sum_params(1).unwrap(), p);
        let two = p.sum_params(2).unwrap();
        assert_eq!(two.mu(), 2);
        assert_eq!(two.n(), 18);
        assert_eq!(two.k(), 7.0);
        assert!((two.mean() - 1.0).abs() < 1e-12);
        assert!(p.sum_params(21).is_err());
        assert!(p.sum_params(0).is_err());
    }

    #[test]
    fn corrupted_omega_breaks_mean() {
        let bad = reference().with_corrupted_omega(1.1);
        assert!((bad.mean() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn serde_keeps_free_parameters() {
        let p = FadingParams::new(7.0, 16, 20).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"k":7.0,"mu":16,"m":20}"#);
        let back: FadingParams = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<FadingParams>(r#"{"k":7.0,"mu":16,"m":5}"#).is_err());
    }
}
