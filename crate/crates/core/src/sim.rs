//! Time-slotted Monte Carlo simulation of the one-shot buffer policy.
//!
//! Each placement draws a PB–ST distance once and runs a sequence of
//! frames with i.i.d. fading. In a frame that starts with a full buffer
//! the ST spends `τ · M_eff · T`, sends at power `M` and harvests for the
//! remaining `(1 − τ) T`; otherwise it only harvests, for the whole
//! frame. Energy carries over between frames, so the estimates include
//! the multi-frame accumulation that the closed forms leave out.
//!
//! Every placement owns a ChaCha8 stream selected by its index, so
//! results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{effective_range, SystemConfig};
use crate::error::{Error, Result};
use crate::fading::FadingParams;

/// Two-sided 99 % standard-normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Per-frame harvest limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarvestCap {
    /// Harvest is limited only by free buffer space.
    #[default]
    Capacity,
    /// Additionally cap each frame's harvest at τ · T · M_eff.
    StrictPerSlot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBuffer {
    stored: f64,
    capacity: f64,
}

impl EnergyBuffer {
    pub fn new(stored: f64, capacity: f64) -> Result<Self> {
        if !(capacity > 0.0) || !(0.0..=capacity).contains(&stored) {
            return Err(Error::domain(
                "EnergyBuffer::new",
                format!("need 0 <= stored <= capacity, capacity > 0; got {stored} / {capacity}"),
            ));
        }
        Ok(Self { stored, capacity })
    }

    pub fn full(capacity: f64) -> Result<Self> {
        Self::new(capacity, capacity)
    }

    pub fn stored(&self) -> f64 {
        self.stored
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.stored >= self.capacity
    }

    /// Adds up to `energy`, returning what was accepted.
    fn charge(&mut self, energy: f64) -> f64 {
        let free = self.capacity - self.stored;
        if energy >= free {
            self.stored = self.capacity;
            free
        } else {
            self.stored += energy;
            energy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub transmitted: bool,
    pub outage: bool,
    pub buffer: EnergyBuffer,
    /// Energy accepted into the buffer this frame (J).
    pub harvested: f64,
    /// Energy spent on the transmission this frame (J).
    pub consumed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub d_pbst: f64,
    pub inside_effective_range: bool,
}

impl Placement {
    pub fn new(cfg: &SystemConfig, d_pbst: f64) -> Self {
        Self {
            d_pbst,
            inside_effective_range: d_pbst <= effective_range(cfg),
        }
    }
}

/// Inverse CDF of the uniform-in-area distance law on [d_min, d_max].
pub fn distance_from_uniform(cfg: &SystemConfig, u: f64) -> f64 {
    let lo2 = cfg.d_min * cfg.d_min;
    (lo2 + u * (cfg.d_max * cfg.d_max - lo2)).sqrt()
}

pub fn sample_distance<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> f64 {
    distance_from_uniform(cfg, rng.random::<f64>())
}

/// Advances the buffer by one frame with the default capacity-only cap.
pub fn step_slot(
    buffer: &EnergyBuffer,
    cfg: &SystemConfig,
    d: f64,
    gain_p: f64,
    gain_s: f64,
) -> SlotOutcome {
    step_slot_with(buffer, cfg, d, gain_p, gain_s, HarvestCap::Capacity)
}

pub fn step_slot_with(
    buffer: &EnergyBuffer,
    cfg: &SystemConfig,
    d: f64,
    gain_p: f64,
    gain_s: f64,
    cap: HarvestCap,
) -> SlotOutcome {
    let mut next = *buffer;
    let frame = cfg.frame;
    let incident = cfg.eta * frame * cfg.p_b * gain_p / d.powf(cfg.alpha);
    let (transmitted, outage, consumed, raw_harvest) = if buffer.is_full() {
        let consumed = cfg.tau * cfg.effective_power() * frame;
        next.stored -= consumed;
        let snr = cfg.tx_power * gain_s / (cfg.d_stsr.powf(cfg.alpha_s) * cfg.n0);
        (
            true,
            snr <= cfg.gamma_th(),
            consumed,
            (1.0 - cfg.tau) * incident,
        )
    } else {
        (false, true, 0.0, incident)
    };
    let offered = match cap {
        HarvestCap::Capacity => raw_harvest,
        HarvestCap::StrictPerSlot => raw_harvest.min(cfg.tau * frame * cfg.effective_power()),
    };
    let harvested = next.charge(offered);
    debug_assert!(next.stored >= 0.0 && next.stored <= next.capacity);
    SlotOutcome {
        transmitted,
        outage,
        buffer: next,
        harvested,
        consumed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub harvest_cap: HarvestCap,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            harvest_cap: HarvestCap::Capacity,
        }
    }
}

/// Monte Carlo estimates with 99 % normal-approximation half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub p_tr_hat: f64,
    pub p_out_hat: f64,
    pub throughput_hat: f64,
    pub ci99_ptr: f64,
    pub ci99_pout: f64,
    pub ci99_throughput: f64,
    pub n_placements: u64,
    pub n_slots: u64,
    pub seed: u64,
    pub transmissions: u64,
    pub outages: u64,
    /// Frames in which the strict per-frame cap clipped the harvest.
    pub cap_clipped: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    transmissions: u64,
    outages: u64,
    successes: u64,
    cap_clipped: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            transmissions: self.transmissions + o.transmissions,
            outages: self.outages + o.outages,
            successes: self.successes + o.successes,
            cap_clipped: self.cap_clipped + o.cap_clipped,
        }
    }
}

/// Frames discarded before counting.
pub fn warmup_slots(n_slots: u64) -> u64 {
    (n_slots / 10).max(100)
}

/// Random stream for one placement.
pub fn placement_rng(seed: u64, placement: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(placement);
    rng
}

fn run_placement(
    cfg: &SystemConfig,
    n_slots: u64,
    seed: u64,
    index: u64,
    opts: SimOptions,
) -> Counts {
    let mut rng = placement_rng(seed, index);
    let d = sample_distance(cfg, &mut rng);
    let mut buffer = EnergyBuffer::full(cfg.buffer_capacity()).expect("validated capacity");
    let strict_limit = cfg.tau * cfg.frame * cfg.effective_power();
    let incident_scale = cfg.eta * cfg.frame * cfg.p_b / d.powf(cfg.alpha);
    let warmup = warmup_slots(n_slots);
    let mut counts = Counts::default();
    for slot in 0..warmup + n_slots {
        let gain_p = cfg.fading_pb_st.sample(&mut rng);
        let gain_s = cfg.fading_st_sr.sample(&mut rng);
        let was_full = buffer.is_full();
        let outcome = step_slot_with(&buffer, cfg, d, gain_p, gain_s, opts.harvest_cap);
        buffer = outcome.buffer;
        if slot < warmup {
            continue;
        }
        if outcome.transmitted {
            counts.transmissions += 1;
        }
        if outcome.outage {
            counts.outages += 1;
        } else {
            counts.successes += 1;
        }
        if opts.harvest_cap == HarvestCap::StrictPerSlot {
            let fraction = if was_full { 1.0 - cfg.tau } else { 1.0 };
            if fraction * incident_scale * gain_p > strict_limit {
                counts.cap_clipped += 1;
            }
        }
    }
    counts
}

fn halfwidth(p: f64, n: f64) -> f64 {
    Z_99 * (p * (1.0 - p) / n).sqrt()
}

/// Runs `n_placements` independent placements of `n_slots` counted frames.
pub fn run(cfg: &SystemConfig, n_placements: u64, n_slots: u64, seed: u64) -> Result<SimEstimate> {
    run_with(cfg, n_placements, n_slots, seed, SimOptions::default())
}

pub fn run_with(
    cfg: &SystemConfig,
    n_placements: u64,
    n_slots: u64,
    seed: u64,
    opts: SimOptions,
) -> Result<SimEstimate> {
    if n_placements == 0 || n_slots == 0 {
        return Err(Error::InvalidConfig(format!(
            "simulation needs positive counts, got {n_placements} placements x {n_slots} slots"
        )));
    }
    cfg.validate()?;
    // Collected in index order, then reduced sequentially.
    let per_placement: Vec<Counts> = (0..n_placements)
        .into_par_iter()
        .map(|i| run_placement(cfg, n_slots, seed, i, opts))
        .collect();
    let totals = per_placement
        .into_iter()
        .fold(Counts::default(), |a, b| a + b);
    let total = (n_placements * n_slots) as f64;
    let p_tr_hat = totals.transmissions as f64 / total;
    let p_out_hat = totals.outages as f64 / total;
    let success = totals.successes as f64 / total;
    let scale = cfg.tau * cfg.rate;
    Ok(SimEstimate {
        p_tr_hat,
        p_out_hat,
        throughput_hat: scale * success,
        ci99_ptr: halfwidth(p_tr_hat, total),
        ci99_pout: halfwidth(p_out_hat, total),
        ci99_throughput: scale * halfwidth(success, total),
        n_placements,
        n_slots,
        seed,
        transmissions: totals.transmissions,
        outages: totals.outages,
        cap_clipped: totals.cap_clipped,
    })
}

/// Empirical Pr[g₁ + … + g_l ≤ x] for a literal sum of `l` i.i.d. gains.
pub fn empirical_sum_cdf(fading: &FadingParams, l: u32, x: f64, draws: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..draws)
        .filter(|_| (0..l).map(|_| fading.sample(&mut rng)).sum::<f64>() <= x)
        .count();
    hits as f64 / draws as f64
}

/// Literal-sum counterpart of `analysis::j_correction`: the probability
/// that `l − 1` idle frames fall short of the demand τ M_eff while `l`
/// frames meet it, at distance `d`.
pub fn empirical_j(cfg: &SystemConfig, l: u32, d: f64, draws: u64, seed: u64) -> Result<f64> {
    if l < 2 {
        return Err(Error::domain(
            "empirical_j",
            format!("need l >= 2, got {l}"),
        ));
    }
    let threshold = cfg.tau * cfg.effective_power() * d.powf(cfg.alpha) / (cfg.eta * cfg.p_b);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..draws {
        let partial: f64 = (1..l).map(|_| cfg.fading_pb_st.sample(&mut rng)).sum();
        let last = cfg.fading_pb_st.sample(&mut rng);
        if partial < threshold && partial + last >= threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws as f64)
}
