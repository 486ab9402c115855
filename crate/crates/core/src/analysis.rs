//! Closed-form performance of the energy-harvesting secondary link.
//!
//! The secondary transmitter (ST) is charged by a power beacon (PB) on a
//! separate band and sends to its receiver (SR) during the τ fraction of
//! each frame the primary spends harvesting. It transmits with power `M`
//! only when its buffer holds a full `M_eff · T`.
//!
//! Transmission probability is approximated by two disjoint terms over
//! the uniform-in-area PB–ST distance:
//!
//! - `phi1`: ST inside the effective range d*, refilled by the (1 − τ)
//!   harvesting fraction that follows a transmission;
//! - `phi2`: ST beyond d*, refilled by a whole frame of harvesting.
//!
//! Both have closed forms in the upper incomplete gamma function. The
//! multi-frame accumulation term `j_correction` is left out of the
//! transmission probability and exposed separately.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::FadingParams;
use crate::numerics::{dbm_to_watts, incomplete_gamma_interval, log_gamma};

/// System and propagation parameters. All quantities are SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Beacon transmit power P_b (W).
    pub p_b: f64,
    /// ST transmit power M (W).
    pub tx_power: f64,
    /// RF-to-DC conversion efficiency η.
    pub eta: f64,
    /// Switching time τ as a fraction of the frame.
    pub tau: f64,
    /// Frame duration T (s).
    pub frame: f64,
    /// Noise power N₀ (W).
    pub n0: f64,
    /// Target rate (bps/Hz).
    pub rate: f64,
    /// PB→ST path-loss exponent.
    pub alpha: f64,
    /// ST→SR path-loss exponent.
    pub alpha_s: f64,
    pub d_min: f64,
    pub d_max: f64,
    /// ST→SR distance (m).
    pub d_stsr: f64,
    /// Power-amplifier inefficiency ρ ≥ 1.
    pub rho: f64,
    /// EH-circuit power drawn during transmission (W).
    pub p_c: f64,
    /// When set, ρ and P_c are ignored.
    pub ideal: bool,
    pub fading_pb_st: FadingParams,
    pub fading_st_sr: FadingParams,
}

impl SystemConfig {
    /// Reference operating point: P_b = 33 dBm, M = 20 dBm, α = 2.4,
    /// K = 7, m = 20, η = 0.85, N₀ = −101 dBm, α_s = 3, ρ = 1.2,
    /// P_c = −30 dBm, d ∈ [1, 15] m, d_STSR = 30 m, single-antenna beacon,
    /// T = 1 s, τ = 0.5, 1 bps/Hz, ideal hardware.
    pub fn reference_defaults() -> Self {
        let fading = FadingParams::new(7.0, 1, 20).expect("valid defaults");
        Self {
            p_b: dbm_to_watts(33.0),
            tx_power: dbm_to_watts(20.0),
            eta: 0.85,
            tau: 0.5,
            frame: 1.0,
            n0: dbm_to_watts(-101.0),
            rate: 1.0,
            alpha: 2.4,
            alpha_s: 3.0,
            d_min: 1.0,
            d_max: 15.0,
            d_stsr: 30.0,
            rho: 1.2,
            p_c: dbm_to_watts(-30.0),
            ideal: true,
            fading_pb_st: fading.clone(),
            fading_st_sr: fading,
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self {
            tau,
            ..self.clone()
        }
    }

    /// γ_th = 2^R − 1.
    pub fn gamma_th(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    /// Power the buffer must hold before a transmission: M, or ρM + P_c
    /// with hardware imperfections.
    pub fn effective_power(&self) -> f64 {
        if self.ideal {
            self.tx_power
        } else {
            self.rho * self.tx_power + self.p_c
        }
    }

    /// Energy buffer capacity M_eff · T (J).
    pub fn buffer_capacity(&self) -> f64 {
        self.effective_power() * self.frame
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("P_b", self.p_b),
            ("M", self.tx_power),
            ("T", self.frame),
            ("N0", self.n0),
            ("R", self.rate),
            ("alpha", self.alpha),
            ("alpha_s", self.alpha_s),
            ("d_min", self.d_min),
            ("d_max", self.d_max),
            ("d_STSR", self.d_stsr),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if self.d_min > self.d_max {
            return Err(Error::InvalidConfig(format!(
                "d_min ({}) exceeds d_max ({})",
                self.d_min, self.d_max
            )));
        }
        if !(self.rho >= 1.0) || !self.rho.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "rho must be >= 1, got {}",
                self.rho
            )));
        }
        if !(self.p_c >= 0.0) || !self.p_c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "P_c must be nonnegative, got {}",
                self.p_c
            )));
        }
        Ok(())
    }
}

/// Analytic metrics at one switching time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub tau: f64,
    pub d_star: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub p_tr: f64,
    pub f_snr: f64,
    pub p_out: f64,
    pub throughput: f64,
}

/// Jensen lower bound on the average capacity when ST spends harvested
/// energy at distance `d_pbst` from the beacon.
pub fn capacity_lower_bound(cfg: &SystemConfig, d_pbst: f64) -> f64 {
    let log_gain = cfg.fading_pb_st.log_moment() + cfg.fading_st_sr.log_moment();
    let snr = cfg.eta * cfg.p_b * (1.0 - cfg.tau) * log_gain.exp()
        / (cfg.tau * cfg.n0 * d_pbst.powf(cfg.alpha) * cfg.d_stsr.powf(cfg.alpha_s));
    cfg.tau * snr.ln_1p() / std::f64::consts::LN_2
}

/// Jensen lower bound on the average capacity at fixed transmit power M.
pub fn benchmark_capacity_lower_bound(cfg: &SystemConfig) -> f64 {
    benchmark_capacity_with_power(cfg, cfg.tx_power)
}

pub(crate) fn benchmark_capacity_with_power(cfg: &SystemConfig, power: f64) -> f64 {
    let snr = power * cfg.fading_st_sr.log_moment().exp() / (cfg.n0 * cfg.d_stsr.powf(cfg.alpha_s));
    cfg.tau * snr.ln_1p() / std::f64::consts::LN_2
}

/// Effective EH range d* (m): the PB–ST distance at which the harvested
/// capacity bound meets the fixed-power benchmark.
pub fn effective_range(cfg: &SystemConfig) -> f64 {
    let ratio = cfg.eta * (1.0 - cfg.tau) * cfg.p_b / (cfg.tau * cfg.effective_power());
    (ratio * cfg.fading_pb_st.log_moment().exp()).powf(1.0 / cfg.alpha)
}

/// F_SNR(γ_th): probability the received SNR at power M falls below γ_th.
pub fn snr_outage_cdf(cfg: &SystemConfig) -> Result<f64> {
    let x = cfg.gamma_th() * cfg.n0 * cfg.d_stsr.powf(cfg.alpha_s) / cfg.tx_power;
    cfg.fading_st_sr.cdf(x)
}

/// Harvest thresholds: the gain |h_p|² needed at distance x is `a · x^α`.
pub(crate) fn harvest_coefficients(cfg: &SystemConfig) -> (f64, f64) {
    let demand = cfg.tau * cfg.effective_power();
    let after_transmission = demand / (cfg.eta * cfg.p_b * (1.0 - cfg.tau));
    let after_idle = demand / (cfg.eta * cfg.p_b);
    (after_transmission, after_idle)
}

/// Closed distance interval `(lo, hi)`.
pub(crate) type Interval = (f64, f64);

/// Integration limits of the two transmission terms, clipped to the
/// annulus. `None` when a term vanishes.

pub(crate) fn phi_limits(cfg: &SystemConfig) -> (Option<Interval>, Option<Interval>) {
    let d_star = effective_range(cfg);
    let inner = (cfg.d_min <= d_star).then(|| (cfg.d_min, d_star.min(cfg.d_max)));
    let outer = (d_star <= cfg.d_max).then(|| (d_star.max(cfg.d_min), cfg.d_max));
    (inner, outer)
}

/// ∫_lo^hi F̄(a x^α) · 2x / (d_max² − d_min²) dx in closed form.
fn survival_over_annulus(cfg: &SystemConfig, coeff: f64, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let spread = cfg.d_max * cfg.d_max - cfg.d_min * cfg.d_min;
    let fading = &cfg.fading_pb_st;
    let omega = fading.omega();
    let alpha = cfg.alpha;
    let shift = 2.0 / alpha;
    let scaled = coeff / omega;
    let t_lo = scaled * lo.powf(alpha);
    let t_hi = scaled * hi.powf(alpha);
    let prefactor = 2.0 * scaled.powf(-shift) / (alpha * spread);
    let mut total = 0.0;
    for (c, shape) in fading.components() {
        let mut inner = 0.0;
        for r in 0..shape {
            let r = f64::from(r);
            let ln_fact = log_gamma(r + 1.0)?;
            inner += incomplete_gamma_interval(r + shift, t_lo, t_hi)? * (-ln_fact).exp();
        }
        total += c * inner;
    }
    Ok(prefactor * total)
}

/// Degenerate annulus (d_min = d_max): the distance is a point mass.
fn point_mass_survival(cfg: &SystemConfig, coeff: f64) -> Result<f64> {
    cfg.fading_pb_st.survival(coeff * cfg.d_min.powf(cfg.alpha))
}

fn is_point_mass(cfg: &SystemConfig) -> bool {
    cfg.d_max == cfg.d_min
}

/// Transmission probability from inside the effective range.
///
/// The upper limit is min(d*, d_max) and the normaliser is the full
/// annulus area, so the value is an unconditional probability.
pub fn phi1(cfg: &SystemConfig) -> Result<f64> {
    let (after_tx, _) = harvest_coefficients(cfg);
    match phi_limits(cfg).0 {
        None => Ok(0.0),
        Some(_) if is_point_mass(cfg) => point_mass_survival(cfg, after_tx),
        Some((lo, hi)) => survival_over_annulus(cfg, after_tx, lo, hi),
    }
}

/// Transmission probability from beyond the effective range, neglecting
/// multi-frame accumulation.
pub fn phi2(cfg: &SystemConfig) -> Result<f64> {
    let (_, after_idle) = harvest_coefficients(cfg);
    match phi_limits(cfg) {
        (_, None) => Ok(0.0),
        // A point mass sitting exactly on d* is counted by phi1.
        (Some(_), Some(_)) if is_point_mass(cfg) => Ok(0.0),
        (None, Some(_)) if is_point_mass(cfg) => point_mass_survival(cfg, after_idle),
        (_, Some((lo, hi))) => survival_over_annulus(cfg, after_idle, lo, hi),
    }
}

/// Signed J(l) = F_{S(l−1)}(x) − F_{S(l)}(x) at x = τ M_eff d^α / (η P_b).
///
/// With the unit-mean parameterisation of the l-fold sum this difference
/// can go negative in the upper tail.
pub fn j_correction_signed(cfg: &SystemConfig, l: u32, d: f64) -> Result<f64> {
    let m = cfg.fading_pb_st.m();
    if l < 2 || l > m {
        return Err(Error::domain(
            "j_correction",
            format!("need 2 <= l <= m = {m}, got {l}"),
        ));
    }
    if !(d > 0.0) {
        return Err(Error::domain(
            "j_correction",
            format!("distance must be positive, got {d}"),
        ));
    }
    let (_, after_idle) = harvest_coefficients(cfg);
    let x = after_idle * d.powf(cfg.alpha);
    let shorter = cfg.fading_pb_st.sum_params(l - 1)?;
    let longer = cfg.fading_pb_st.sum_params(l)?;
    // F_a − F_b = F̄_b − F̄_a; survivals keep precision in the far tail.
    Ok(longer.survival(x)? - shorter.survival(x)?)
}

/// Multi-frame accumulation probability J(l), floored at zero.
pub fn j_correction(cfg: &SystemConfig, l: u32, d: f64) -> Result<f64> {
    j_correction_signed(cfg, l, d).map(|j| j.max(0.0))
}

/// P_tr ≈ Φ₁ + Φ₂.
pub fn transmission_probability(cfg: &SystemConfig) -> Result<f64> {
    Ok((phi1(cfg)? + phi2(cfg)?).clamp(0.0, 1.0))
}

fn compose_outage(p_tr: f64, f_snr: f64) -> f64 {
    (p_tr * f_snr + (1.0 - p_tr)).clamp(0.0, 1.0)
}

/// P_out = P_tr F_SNR(γ_th) + (1 − P_tr).
pub fn outage_probability(cfg: &SystemConfig) -> Result<f64> {
    Ok(compose_outage(
        transmission_probability(cfg)?,
        snr_outage_cdf(cfg)?,
    ))
}

/// τ R [1 − P_out(2^R − 1)] in bps/Hz.
pub fn average_throughput(cfg: &SystemConfig) -> Result<f64> {
    Ok(cfg.tau * cfg.rate * (1.0 - outage_probability(cfg)?))
}

/// Every metric at the configuration's own τ.
pub fn evaluate(cfg: &SystemConfig) -> Result<MetricPoint> {
    cfg.validate()?;
    let phi1 = phi1(cfg)?;
    let phi2 = phi2(cfg)?;
    let p_tr = (phi1 + phi2).clamp(0.0, 1.0);
    let f_snr = snr_outage_cdf(cfg)?;
    let p_out = compose_outage(p_tr, f_snr);
    Ok(MetricPoint {
        tau: cfg.tau,
        d_star: effective_range(cfg),
        phi1,
        phi2,
        p_tr,
        f_snr,
        p_out,
        throughput: cfg.tau * cfg.rate * (1.0 - p_out),
    })
}

/// Evaluates every τ of the grid; output follows grid order.
pub fn sweep(cfg: &SystemConfig, tau_grid: &[f64]) -> Result<Vec<MetricPoint>> {
    tau_grid
        .par_iter()
        .map(|&tau| evaluate(&cfg.with_tau(tau)))
        .collect()
}

/// τ grid `start, start + step, …` up to and including `stop` (within
/// rounding).
pub fn tau_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(start <= stop) {
        return Err(Error::InvalidConfig(format!(
            "tau grid needs start <= stop and step > 0, got {start}:{stop}:{step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            // Round to 12 decimals so 0.1 + 2·0.1 prints as 0.3.
            let raw = start + step * i as f64;
            (raw * 1e12).round() / 1e12
        })
        .collect();
    if let Some(bad) = grid.iter().find(|&&t| !(t > 0.0 && t < 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "tau must lie in (0, 1), grid contains {bad}"
        )));
    }
    Ok(grid)
}

/// Default sweep τ ∈ {0.05, 0.10, …, 0.95}.
pub fn default_tau_grid() -> Vec<f64> {
    tau_grid(0.05, 0.95, 0.05).expect("valid default grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_adaptive, AccuracySpec};

    // Reference values computed with mpmath at 40 digits.
    const CL_D5_TAU05: f64 = 11.764_635_774_507_583_584_594_212_028_733_68;
    const CLA_TAU05: f64 = 12.623_128_955_417_464_595_118_415_590_002_48;
    const D_STAR_TAU05: f64 = 3.045_157_981_011_269_651_693_344_872_951_339;
    const F_SNR_R1: f64 = 4.244_030_899_219_215_465_802_977_294_026_715e-10;
    const F_SNR_R3: f64 = 2.970_828_029_252_414_391_215_147_644_237_439e-9;
    const PHI1_TAU05: f64 = 0.031_242_127_863_848_174_951_131_476_676_612_90;
    const PHI2_TAU05: f64 = 0.042_580_783_643_522_071_532_610_333_445_909_23;
    const P_OUT_TAU05: f64 = 0.926_177_088_523_960_425_267_018_701_501_804_5;
    const THROUGHPUT_TAU08: f64 = 0.039_732_116_534_843_830_363_357_006_526_061_13;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn defaults() -> SystemConfig {
        SystemConfig::reference_defaults()
    }

    #[test]
    fn capacity_bounds_match_reference() {
        let cfg = defaults();
        assert!(rel(capacity_lower_bound(&cfg, 5.0), CL_D5_TAU05) < 1e-12);
        assert!(rel(benchmark_capacity_lower_bound(&cfg), CLA_TAU05) < 1e-12);
    }

    #[test]
    fn capacity_bounds_vanish_with_power() {
        let mut cfg = defaults();
        cfg.eta = 1e-300;
        assert!(capacity_lower_bound(&cfg, 5.0) < 1e-280);
        cfg.tx_power = 1e-300;
        assert!(benchmark_capacity_lower_bound(&cfg) < 1e-280);
    }

    #[test]
    fn effective_range_reference_and_consistency() {
        let cfg = defaults();
        let d = effective_range(&cfg);
        assert!(rel(d, D_STAR_TAU05) < 1e-12);
        assert!(
            rel(
                capacity_lower_bound(&cfg, d),
                benchmark_capacity_lower_bound(&cfg)
            ) < 1e-9
        );
    }

    #[test]
    fn imperfections_shrink_range() {
        let ideal = defaults();
        let practical = SystemConfig {
            ideal: false,
            ..defaults()
        };
        assert!(practical.effective_power() > ideal.effective_power());
        assert!(effective_range(&practical) < effective_range(&ideal));
        let mut weak = defaults();
        weak.eta = 1e-12;
        assert!(effective_range(&weak) < 1e-3);
    }

    #[test]
    fn snr_outage_reference() {
        let cfg = defaults();
        assert!(rel(snr_outage_cdf(&cfg).unwrap(), F_SNR_R1) < 1e-9);
        let high = SystemConfig {
            rate: 3.0,
            ..defaults()
        };
        let r3 = snr_outage_cdf(&high).unwrap();
        assert!(rel(r3, F_SNR_R3) < 1e-9);
        assert!(r3 > snr_outage_cdf(&cfg).unwrap());
        let tiny = SystemConfig {
            rate: 1e-300,
            ..defaults()
        };
        assert!(snr_outage_cdf(&tiny).unwrap() < 1e-200);
    }

    #[test]
    fn snr_outage_ignores_imperfections() {
        let practical = SystemConfig {
            ideal: false,
            ..defaults()
        };
        assert_eq!(
            snr_outage_cdf(&practical).unwrap(),
            snr_outage_cdf(&defaults()).unwrap()
        );
    }

    #[test]
    fn phi_reference_values() {
        let cfg = defaults();
        assert!(rel(phi1(&cfg).unwrap(), PHI1_TAU05) < 1e-9);
        assert!(rel(phi2(&cfg).unwrap(), PHI2_TAU05) < 1e-9);
        assert!(rel(outage_probability(&cfg).unwrap(), P_OUT_TAU05) < 1e-9);
        let cfg8 = cfg.with_tau(0.8);
        assert!(rel(average_throughput(&cfg8).unwrap(), THROUGHPUT_TAU08) < 1e-9);
    }

    fn quadrature(cfg: &SystemConfig, coeff: f64, lo: f64, hi: f64) -> f64 {
        let spread = cfg.d_max.powi(2) - cfg.d_min.powi(2);
        let f = |x: f64| {
            cfg.fading_pb_st
                .survival(coeff * x.powf(cfg.alpha))
                .unwrap()
                * 2.0
                * x
                / spread
        };
        integrate_adaptive(f, lo, hi, AccuracySpec::default()).unwrap()
    }

    #[test]
    fn closed_forms_match_quadrature_grid() {
        for mu in [1u32, 16] {
            for ideal in [true, false] {
                for i in 1..=9 {
                    let mut cfg = defaults().with_tau(0.1 * f64::from(i));
                    cfg.ideal = ideal;
                    cfg.fading_pb_st = FadingParams::new(7.0, mu, 20).unwrap();
                    let (a1, a2) = harvest_coefficients(&cfg);
                    let (inner, outer) = phi_limits(&cfg);
                    let q1 = inner.map_or(0.0, |(lo, hi)| quadrature(&cfg, a1, lo, hi));
                    let q2 = outer.map_or(0.0, |(lo, hi)| quadrature(&cfg, a2, lo, hi));
                    let (c1, c2) = (phi1(&cfg).unwrap(), phi2(&cfg).unwrap());
                    assert!(
                        q1 == c1 || rel(c1, q1) < 1e-7,
                        "phi1 mu={mu} ideal={ideal} tau={}",
                        cfg.tau
                    );
                    assert!(
                        q2 == c2 || rel(c2, q2) < 1e-7,
                        "phi2 mu={mu} ideal={ideal} tau={}",
                        cfg.tau
                    );
                }
            }
        }
    }

    #[test]
    fn range_beyond_annulus_zeroes_phi2() {
        // Strong beacon: d* > d_max.
        let mut cfg = defaults();
        cfg.p_b = dbm_to_watts(60.0);
        assert!(effective_range(&cfg) > cfg.d_max);
        assert_eq!(phi2(&cfg).unwrap(), 0.0);
        assert_eq!(
            transmission_probability(&cfg).unwrap(),
            phi1(&cfg).unwrap().min(1.0)
        );
        assert!(phi1(&cfg).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn range_inside_guard_zone_zeroes_phi1() {
        let mut cfg = defaults().with_tau(0.95);
        cfg.d_min = 5.0;
        assert!(effective_range(&cfg) < cfg.d_min);
        assert_eq!(phi1(&cfg).unwrap(), 0.0);
        assert_eq!(transmission_probability(&cfg).unwrap(), phi2(&cfg).unwrap());
    }

    #[test]
    fn tau_near_one_leaves_only_idle_refills() {
        // d* collapses below d_min; the whole-frame term keeps the ST
        // near the beacon transmitting.
        let cfg = defaults().with_tau(1.0 - 1e-9);
        assert!(effective_range(&cfg) < cfg.d_min);
        assert_eq!(phi1(&cfg).unwrap(), 0.0);
        let p_tr = transmission_probability(&cfg).unwrap();
        assert_eq!(p_tr, phi2(&cfg).unwrap());
        assert!(p_tr < transmission_probability(&defaults().with_tau(0.9)).unwrap());
    }

    #[test]
    fn degenerate_annulus() {
        let mut cfg = defaults();
        cfg.d_min = 2.0;
        cfg.d_max = 2.0;
        let expected = cfg
            .fading_pb_st
            .survival(harvest_coefficients(&cfg).0 * 2f64.powf(cfg.alpha))
            .unwrap();
        assert_eq!(phi1(&cfg).unwrap(), expected);
        assert_eq!(phi2(&cfg).unwrap(), 0.0);
        cfg.d_min = 8.0;
        cfg.d_max = 8.0;
        assert_eq!(phi1(&cfg).unwrap(), 0.0);
        assert!(phi2(&cfg).unwrap() >= 0.0);
    }

    #[test]
    fn outage_composition_edges() {
        assert_eq!(compose_outage(1.0, 0.0), 0.0);
        assert_eq!(compose_outage(0.0, 0.3), 1.0);
    }

    #[test]
    fn throughput_edges() {
        let cfg = defaults().with_tau(1e-12);
        assert!(average_throughput(&cfg).unwrap() < 1e-11);
        let mut dead = defaults();
        dead.p_b = 1e-30;
        let point = evaluate(&dead).unwrap();
        assert!(point.p_out > 1.0 - 1e-12);
        assert!(point.throughput < 1e-12);
    }

    #[test]
    fn j_correction_contract() {
        let cfg = defaults();
        assert!(j_correction(&cfg, 1, 15.0).is_err());
        assert!(j_correction(&cfg, 21, 15.0).is_err());
        assert!(j_correction(&cfg, 2, 0.0).is_err());
        // Zero threshold: both distribution functions vanish.
        let mut free = defaults();
        free.tx_power = 0.0;
        let j0 = j_correction_signed(&free, 2, 5.0).unwrap();
        assert!(j0.abs() < 1e-15, "{j0}");
        for l in 2..=5 {
            let j = j_correction(&cfg, l, cfg.d_max).unwrap();
            assert!((0.0..=1e-5).contains(&j), "l={l} j={j}");
        }
    }

    #[test]
    fn more_beacon_antennas_help() {
        let one = transmission_probability(&defaults()).unwrap();
        let mut cfg = defaults();
        cfg.fading_pb_st = FadingParams::new(7.0, 16, 20).unwrap();
        assert!(transmission_probability(&cfg).unwrap() >= one);
    }

    #[test]
    fn transmission_non_increasing_in_power() {
        let mut last = f64::INFINITY;
        for dbm in [14.0, 17.0, 20.0, 23.0, 26.0] {
            let cfg = SystemConfig {
                tx_power: dbm_to_watts(dbm),
                ..defaults()
            };
            let p = transmission_probability(&cfg).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let cfg = defaults();
        let pts = sweep(&cfg, &[0.3]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0], evaluate(&cfg.with_tau(0.3)).unwrap());
        assert!(sweep(&cfg, &[0.3, 1.0]).is_err());
    }

    #[test]
    fn sweep_trends() {
        let grid = tau_grid(0.1, 0.9, 0.1).unwrap();
        let ideal = sweep(&defaults(), &grid).unwrap();
        let practical = sweep(
            &SystemConfig {
                ideal: false,
                ..defaults()
            },
            &grid,
        )
        .unwrap();
        for w in ideal.windows(2) {
            assert!(w[1].p_out > w[0].p_out);
        }
        for (a, b) in ideal.iter().zip(&practical) {
            assert!(b.p_out >= a.p_out);
        }
        for p in ideal.iter().chain(&practical) {
            assert!((p.p_tr - (p.phi1 + p.phi2).clamp(0.0, 1.0)).abs() == 0.0);
            assert!(p.p_out >= 1.0 - p.p_tr - 1e-15);
            assert!(p.throughput <= p.tau * 1.0);
            assert!((0.0..=1.0).contains(&(p.phi1 + p.phi2)));
        }
    }

    #[test]
    fn grid_construction() {
        let g = tau_grid(0.1, 0.9, 0.1).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g[2], 0.3);
        assert_eq!(default_tau_grid().len(), 19);
        assert!(tau_grid(0.0, 0.5, 0.1).is_err());
        assert!(tau_grid(0.5, 0.1, 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(defaults().validate().is_ok());
        assert!(SystemConfig {
            tau: 1.0,
            ..defaults()
        }
        .validate()
        .is_err());
        assert!(SystemConfig {
            eta: 0.0,
            ..defaults()
        }
        .validate()
        .is_err());
        assert!(SystemConfig {
            rho: 0.9,
            ..defaults()
        }
        .validate()
        .is_err());
        assert!(SystemConfig {
            d_min: 20.0,
            ..defaults()
        }
        .validate()
        .is_err());
        assert_eq!(defaults().gamma_th(), 1.0);
    }
}
