//! Invariant suites run by `ehcr validate`.
//!
//! Each suite checks closed forms against a route that does not share
//! their implementation: quadrature for the Φ integrals, bisection for
//! the effective range, sampling for the Jensen bounds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    benchmark_capacity_lower_bound, benchmark_capacity_with_power, capacity_lower_bound,
    effective_range, harvest_coefficients, j_correction, j_correction_signed, phi1, phi2,
    phi_limits, tau_grid, SystemConfig,
};
use crate::error::Result;
use crate::fading::FadingParams;
use crate::numerics::{
    dbm_to_watts, digamma_integer, integrate_adaptive, ks_p_value, ks_statistic, log_gamma,
    upper_incomplete_gamma, AccuracySpec,
};
use crate::sim::{empirical_j, placement_rng, sample_distance, step_slot, EnergyBuffer};

pub const PHI_RELATIVE_TOLERANCE: f64 = 1e-7;
pub const RANGE_RELATIVE_TOLERANCE: f64 = 1e-8;
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
pub const MEAN_IDENTITY_TOLERANCE: f64 = 1e-12;
pub const KS_MIN_P_VALUE: f64 = 0.01;
pub const KS_DRAWS: usize = 100_000;
pub const JENSEN_DRAWS: usize = 1_000_000;
pub const J2_LIMIT: f64 = 1e-5;
pub const J3_LIMIT: f64 = 1e-7;

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub suite: String,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(suite: &str, passed: bool, detail: String) -> Self {
        Self {
            suite: suite.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(suite: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(suite, passed, detail),
            Err(e) => Self::new(suite, false, format!("error: {e}")),
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.suite, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Multiplies Ω of both links before the fading suites run.
    pub omega_fault: Option<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 20_190_101,
            omega_fault: None,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

/// Runs every suite in a fixed order.
pub fn run_all(cfg: &SystemConfig, opts: ValidateOptions) -> Vec<Verdict> {
    let links: Vec<(&str, FadingParams)> =
        [("PB-ST", &cfg.fading_pb_st), ("ST-SR", &cfg.fading_st_sr)]
            .into_iter()
            .map(|(name, p)| {
                let p = match opts.omega_fault {
                    Some(f) => p.with_corrupted_omega(f),
                    None => p.clone(),
                };
                (name, p)
            })
            .collect();
    vec![
        Verdict::from_result("numerics-references", numerics_references()),
        Verdict::from_result("fading-normalization", fading_normalization(&links)),
        Verdict::from_result("fading-ks", fading_ks(&links, opts.seed)),
        Verdict::from_result("phi-closed-form-vs-quadrature", phi_vs_quadrature(cfg)),
        Verdict::from_result("effective-range-bisection", range_vs_bisection(cfg)),
        Verdict::from_result("jensen-bounds", jensen_bounds(cfg, opts.seed)),
        Verdict::from_result("j-magnitude", j_magnitude(cfg, opts.seed)),
        Verdict::from_result("sim-conservation", sim_conservation(cfg, opts.seed)),
    ]
}

fn numerics_references() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    worst = worst.max(log_gamma(1.0)?.abs());
    worst = worst.max((log_gamma(5.0)? - 24f64.ln()).abs());
    worst = worst.max(rel(upper_incomplete_gamma(1.0, 2.0)?, (-2f64).exp()));
    worst = worst.max((digamma_integer(1)? + 0.577_215_664_901_532_9).abs());
    let harmonic: f64 = (1..20).map(|k| 1.0 / f64::from(k)).sum();
    worst = worst.max((digamma_integer(20)? - (harmonic - 0.577_215_664_901_532_9)).abs());
    worst = worst.max((dbm_to_watts(30.0) - 1.0).abs());
    let mut recurrence: f64 = 0.0;
    for i in 1..=250 {
        let s = 0.1 * f64::from(i);
        for &x in &[0.5, 3.0, 12.0, 30.0] {
            let lhs = upper_incomplete_gamma(s + 1.0, x)?;
            let rhs = s * upper_incomplete_gamma(s, x)? + x.powf(s) * (-x).exp();
            recurrence = recurrence.max(rel(lhs, rhs));
        }
    }
    let passed = worst < 1e-12 && recurrence < 1e-9;
    Ok((
        passed,
        format!("anchor error {worst:.2e}, Γ(s+1,x) recurrence error {recurrence:.2e}"),
    ))
}

/// Integrates a fading density and its first moment on [0, 60].
pub fn normalization_errors(p: &FadingParams) -> Result<(f64, f64)> {
    let acc = AccuracySpec::new(1e-11, 4000)?;
    let mass = integrate_adaptive(|x| p.pdf(x).unwrap_or(f64::NAN), 0.0, 60.0, acc)?;
    let mean = integrate_adaptive(|x| x * p.pdf(x).unwrap_or(f64::NAN), 0.0, 60.0, acc)?;
    Ok(((mass - 1.0).abs(), (mean - 1.0).abs()))
}

fn fading_normalization(links: &[(&str, FadingParams)]) -> Result<(bool, String)> {
    let mut passed = true;
    let mut notes = Vec::new();
    for (name, p) in links {
        let (mass_err, mean_err) = normalization_errors(p)?;
        let weight_err = (p.weights().iter().sum::<f64>() - 1.0).abs();
        let identity_err = (p.mean() - 1.0).abs();
        let ok = mass_err < NORMALIZATION_TOLERANCE
            && mean_err < NORMALIZATION_TOLERANCE
            && weight_err < MEAN_IDENTITY_TOLERANCE
            && identity_err < MEAN_IDENTITY_TOLERANCE;
        passed &= ok;
        notes.push(format!(
            "{name}: |∫f−1| {mass_err:.1e}, |∫xf−1| {mean_err:.1e}, |ΣC−1| {weight_err:.1e}, |ΣCmΩ−1| {identity_err:.1e}"
        ));
    }
    Ok((passed, notes.join("; ")))
}

/// KS p-value of `draws` samples against the analytic distribution.
pub fn sampler_ks_p_value(p: &FadingParams, draws: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..draws).map(|_| p.sample(&mut rng)).collect();
    let d = ks_statistic(&mut xs, |x| p.cdf(x).unwrap_or(f64::NAN));
    ks_p_value(d, draws)
}

fn fading_ks(links: &[(&str, FadingParams)], seed: u64) -> Result<(bool, String)> {
    let mut passed = true;
    let mut notes = Vec::new();
    for (i, (name, p)) in links.iter().enumerate() {
        let pv = sampler_ks_p_value(p, KS_DRAWS, seed.wrapping_add(i as u64));
        passed &= pv > KS_MIN_P_VALUE;
        notes.push(format!("{name}: p = {pv:.3}"));
    }
    Ok((passed, notes.join("; ")))
}

/// Quadrature of the Φ₁ and Φ₂ integrals using the fading survival
/// function directly.
pub fn phi_quadrature(cfg: &SystemConfig) -> Result<(f64, f64)> {
    let acc = AccuracySpec::default();
    let spread = cfg.d_max * cfg.d_max - cfg.d_min * cfg.d_min;
    let (after_tx, after_idle) = harvest_coefficients(cfg);
    let integral = |coeff: f64, lo: f64, hi: f64| -> Result<f64> {
        let f = |x: f64| {
            cfg.fading_pb_st
                .survival(coeff * x.powf(cfg.alpha))
                .unwrap_or(f64::NAN)
                * 2.0
                * x
                / spread
        };
        integrate_adaptive(f, lo, hi, acc)
    };
    let (inner, outer) = phi_limits(cfg);
    let q1 = match inner {
        Some((lo, hi)) if spread > 0.0 => integral(after_tx, lo, hi)?,
        _ => phi1(cfg)?,
    };
    let q2 = match outer {
        Some((lo, hi)) if spread > 0.0 => integral(after_idle, lo, hi)?,
        _ => phi2(cfg)?,
    };
    Ok((q1, q2))
}

/// Largest relative closed-form vs quadrature gap over τ ∈ {0.1, …, 0.9}.
pub fn phi_worst_relative_error(cfg: &SystemConfig) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for tau in tau_grid(0.1, 0.9, 0.1)? {
        let c = cfg.with_tau(tau);
        let (q1, q2) = phi_quadrature(&c)?;
        worst = worst.max(rel(phi1(&c)?, q1)).max(rel(phi2(&c)?, q2));
    }
    Ok(worst)
}

fn phi_vs_quadrature(cfg: &SystemConfig) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for ideal in [true, false] {
        let c = SystemConfig {
            ideal,
            ..cfg.clone()
        };
        worst = worst.max(phi_worst_relative_error(&c)?);
    }
    Ok((
        worst < PHI_RELATIVE_TOLERANCE,
        format!("max relative gap {worst:.2e} over 9 τ × ideal/non-ideal (limit {PHI_RELATIVE_TOLERANCE:.0e})"),
    ))
}

/// Solves C_L(d) = C_L^A(M_eff) for d by bisection on ln d.
pub fn range_by_bisection(cfg: &SystemConfig) -> f64 {
    let target = benchmark_capacity_with_power(cfg, cfg.effective_power());
    let (mut lo, mut hi) = (1e-12f64.ln(), 1e12f64.ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // The harvested-power bound decreases with distance.
        if capacity_lower_bound(cfg, mid.exp()) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn range_vs_bisection(cfg: &SystemConfig) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for tau in tau_grid(0.1, 0.9, 0.1)? {
        let c = cfg.with_tau(tau);
        worst = worst.max(rel(range_by_bisection(&c), effective_range(&c)));
    }
    Ok((
        worst < RANGE_RELATIVE_TOLERANCE,
        format!("max relative gap {worst:.2e} (limit {RANGE_RELATIVE_TOLERANCE:.0e})"),
    ))
}

/// Sample mean and standard error of `f(g_p, g_s)` over joint fading draws.
fn fading_mean<F: Fn(f64, f64) -> f64>(
    cfg: &SystemConfig,
    draws: usize,
    seed: u64,
    f: F,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..draws {
        let v = f(
            cfg.fading_pb_st.sample(&mut rng),
            cfg.fading_st_sr.sample(&mut rng),
        );
        s += v;
        s2 += v * v;
    }
    let n = draws as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean).max(0.0) / n).sqrt())
}

/// (bound, Monte Carlo mean, standard error) for the harvested-power
/// capacity at distance `d`.
pub fn jensen_harvested(cfg: &SystemConfig, d: f64, draws: usize, seed: u64) -> (f64, f64, f64) {
    let scale = cfg.eta * cfg.p_b * (1.0 - cfg.tau)
        / (cfg.tau * cfg.n0 * d.powf(cfg.alpha) * cfg.d_stsr.powf(cfg.alpha_s));
    let (mean, se) = fading_mean(cfg, draws, seed, |gp, gs| {
        cfg.tau * (scale * gp * gs).ln_1p() / std::f64::consts::LN_2
    });
    (capacity_lower_bound(cfg, d), mean, se)
}

/// (bound, Monte Carlo mean, standard error) for the fixed-power benchmark.
pub fn jensen_benchmark(cfg: &SystemConfig, draws: usize, seed: u64) -> (f64, f64, f64) {
    let scale = cfg.tx_power / (cfg.n0 * cfg.d_stsr.powf(cfg.alpha_s));
    let (mean, se) = fading_mean(cfg, draws, seed, |_, gs| {
        cfg.tau * (scale * gs).ln_1p() / std::f64::consts::LN_2
    });
    (benchmark_capacity_lower_bound(cfg), mean, se)
}

fn jensen_bounds(cfg: &SystemConfig, seed: u64) -> Result<(bool, String)> {
    let d = 5.0f64.clamp(cfg.d_min, cfg.d_max);
    let (b1, m1, s1) = jensen_harvested(cfg, d, JENSEN_DRAWS, seed);
    let (b2, m2, s2) = jensen_benchmark(cfg, JENSEN_DRAWS, seed ^ 0x5eed);
    let passed = b1 <= m1 + 3.0 * s1 && b2 <= m2 + 3.0 * s2;
    Ok((
        passed,
        format!("C_L(d={d}) {b1:.6} <= {m1:.6}±{s1:.1e}; C_L^A {b2:.6} <= {m2:.6}±{s2:.1e}"),
    ))
}

fn j_magnitude(cfg: &SystemConfig, seed: u64) -> Result<(bool, String)> {
    let d = cfg.d_max;
    let j2 = j_correction(cfg, 2, d)?;
    let j3 = j_correction(cfg, 3, d)?;
    let raw2 = j_correction_signed(cfg, 2, d)?;
    let raw3 = j_correction_signed(cfg, 3, d)?;
    let literal2 = empirical_j(cfg, 2, d, 100_000, seed)?;
    Ok((
        j2 <= J2_LIMIT && j3 <= J3_LIMIT,
        format!(
            "J(2,d_max) = {j2:.2e} (signed {raw2:.2e}), J(3,d_max) = {j3:.2e} (signed {raw3:.2e}); literal-sum J(2) ≈ {literal2:.3e}"
        ),
    ))
}

fn sim_conservation(cfg: &SystemConfig, seed: u64) -> Result<(bool, String)> {
    cfg.validate()?;
    let mut worst: f64 = 0.0;
    let mut bounds_ok = true;
    let mut frames = 0u64;
    for placement in 0..50 {
        let mut rng = placement_rng(seed, placement);
        let d = sample_distance(cfg, &mut rng);
        let mut buffer = EnergyBuffer::full(cfg.buffer_capacity())?;
        for _ in 0..400 {
            let gp = cfg.fading_pb_st.sample(&mut rng);
            let gs = cfg.fading_st_sr.sample(&mut rng);
            let out = step_slot(&buffer, cfg, d, gp, gs);
            let delta = out.buffer.stored() - buffer.stored();
            let err = (delta - (out.harvested - out.consumed)).abs() / buffer.capacity();
            worst = worst.max(err);
            bounds_ok &= (0.0..=out.buffer.capacity()).contains(&out.buffer.stored());
            let expected = if out.transmitted {
                cfg.tau * cfg.buffer_capacity()
            } else {
                0.0
            };
            bounds_ok &= out.consumed == expected;
            buffer = out.buffer;
            frames += 1;
        }
    }
    Ok((
        bounds_ok && worst < 1e-12,
        format!("{frames} frames, max relative conservation error {worst:.1e}, bounds held: {bounds_ok}"),
    ))
}
