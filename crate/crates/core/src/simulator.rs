//! Monte Carlo session engine.
//!
//! One run places every ED, draws its wake-up slot, plans its frames,
//! draws band, SF and fading per frame, resolves capture per (slot, band),
//! and counts the source messages the UAV can recover. Runs are
//! independent and seeded from the master seed and the run index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{
    capture_verdict, draw_band, draw_sf, received_power, sample_distance, sample_wakeup_slot, CaptureMatrix,
    FrameTransmission,
};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::fountain::{self, CodedFrame, SourceBlock};
use crate::protocol::{plan_transmissions, FrameDescriptor, SchemeKind, SlotSchedule};

/// Generator for run `run` of a sweep seeded with `master`: the master seed
/// fixes the key, the run index selects the stream.
pub fn run_rng(master: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(run);
    rng
}

/// Outcome of one session.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOutcome {
    /// Source messages recovered per ED.
    pub delivered: Vec<usize>,
    /// Frames sent per slot.
    pub frames_per_slot: Vec<u64>,
    /// Frames that survived capture per slot.
    pub survived_per_slot: Vec<u64>,
}

impl RunOutcome {
    pub fn total_delivered(&self) -> usize {
        self.delivered.iter().sum()
    }
}

struct EdPlan {
    block: SourceBlock,
    schedule: SlotSchedule,
}

/// Plays out one session of `cfg.scheme`.
pub fn run_once(cfg: &ScenarioConfig, run_seed: &mut ChaCha8Rng) -> Result<RunOutcome> {
    let rng = run_seed;
    let mut out = RunOutcome {
        delivered: vec![0; cfg.n],
        frames_per_slot: vec![0; cfg.n_s],
        survived_per_slot: vec![0; cfg.n_s],
    };

    if cfg.scheme == SchemeKind::TdmaBestCase {
        // every woken ED owns collision-free slots
        for d in &mut out.delivered {
            if rng.random_bool(cfg.p_b) {
                *d = cfg.beta;
            }
        }
        return Ok(out);
    }

    let xi: CaptureMatrix = cfg.capture_matrix()?;
    let fading = cfg.fading.sampler()?;
    let alpha = cfg.geometry.path_loss_exp;

    let mut plans: Vec<Option<EdPlan>> = Vec::with_capacity(cfg.n);
    let mut frames: Vec<FrameTransmission> = Vec::new();
    for ed in 0..cfg.n {
        let distance = sample_distance(&cfg.geometry, rng);
        let Some(wake) = sample_wakeup_slot(cfg.p_b, cfg.n_s, rng) else {
            plans.push(None);
            continue;
        };
        let block = SourceBlock::random(cfg.beta, cfg.payload_bytes, rng)?;
        let schedule = plan_transmissions(cfg.scheme, wake, cfg, &block, rng)?;
        for (entry, sched) in schedule.entries.iter().enumerate() {
            let band = draw_band(cfg.n_f, rng);
            let sf = draw_sf(xi.len(), rng);
            let rx_power = received_power(fading.sample(rng), distance, alpha);
            frames.push(FrameTransmission {
                ed,
                slot: sched.slot,
                band,
                sf,
                rx_power,
                entry,
            });
        }
        plans.push(Some(EdPlan { block, schedule }));
    }

    // group by (slot, band); verdicts per frame
    frames.sort_by_key(|f| (f.slot, f.band, f.ed));
    let mut survived: Vec<Vec<bool>> = plans
        .iter()
        .map(|p| p.as_ref().map_or_else(Vec::new, |p| vec![false; p.schedule.len()]))
        .collect();
    let mut cochannel: Vec<FrameTransmission> = Vec::new();
    for group in frames.chunk_by(|a, b| (a.slot, a.band) == (b.slot, b.band)) {
        for (k, f) in group.iter().enumerate() {
            cochannel.clear();
            cochannel.extend(group.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, g)| *g));
            let ok = capture_verdict(f, &cochannel, &xi);
            survived[f.ed][f.entry] = ok;
            out.frames_per_slot[f.slot] += 1;
            out.survived_per_slot[f.slot] += ok as u64;
        }
    }

    for (ed, plan) in plans.iter().enumerate() {
        let Some(plan) = plan else { continue };
        out.delivered[ed] = delivered_messages(plan, &survived[ed])?;
    }
    Ok(out)
}

fn delivered_messages(plan: &EdPlan, survived: &[bool]) -> Result<usize> {
    let beta = plan.block.beta();
    if plan.schedule.is_coded() {
        let received: Vec<CodedFrame> = plan
            .schedule
            .entries
            .iter()
            .zip(survived)
            .filter(|(_, &ok)| ok)
            .filter_map(|(e, _)| match &e.frame {
                FrameDescriptor::Coded(f) => Some(f.clone()),
                FrameDescriptor::Message(_) => None,
            })
            .collect();
        if received.len() < beta {
            return Ok(0);
        }
        let outcome = fountain::decode(&received, beta)?;
        return Ok(match outcome.messages {
            Some(msgs) => {
                debug_assert_eq!(msgs.as_slice(), plan.block.messages());
                beta
            }
            None => 0,
        });
    }
    let mut got = vec![false; beta];
    for (e, &ok) in plan.schedule.entries.iter().zip(survived) {
        if let (FrameDescriptor::Message(l), true) = (&e.frame, ok) {
            got[*l] = true;
        }
    }
    Ok(got.iter().filter(|&&g| g).count())
}

/// Aggregated estimate over many runs.
#[derive(Clone, Debug, PartialEq)]
pub struct DeliveryReport {
    pub scheme: SchemeKind,
    pub mdp_estimate: f64,
    /// Normal-approximation 95% half-width, from the spread of per-run
    /// delivery fractions.
    pub half_width_95: f64,
    pub runs: usize,
    pub delivered: u64,
    pub total_messages: u64,
    /// Fraction of frames sent in each slot that survived capture; `None`
    /// for slots nobody used.
    pub per_slot_success: Vec<Option<f64>>,
    /// Mean frames sent per slot and run.
    pub per_slot_load: Vec<f64>,
}

/// Runs `cfg.runs` sessions in parallel and reduces them in run order.
pub fn run_many(cfg: &ScenarioConfig) -> Result<DeliveryReport> {
    cfg.validate()?;
    let outcomes: Vec<RunOutcome> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| run_once(cfg, &mut run_rng(cfg.seed, r)))
        .collect::<Result<_>>()?;

    let per_run = (cfg.n * cfg.beta) as f64;
    let mut delivered = 0u64;
    let mut sum_sq = 0.0;
    let mut sent = vec![0u64; cfg.n_s];
    let mut ok = vec![0u64; cfg.n_s];
    for o in &outcomes {
        let d = o.total_delivered() as u64;
        delivered += d;
        let frac = d as f64 / per_run;
        sum_sq += frac * frac;
        for s in 0..cfg.n_s {
            sent[s] += o.frames_per_slot[s];
            ok[s] += o.survived_per_slot[s];
        }
    }
    let runs = cfg.runs as f64;
    let total_messages = (cfg.runs * cfg.n * cfg.beta) as u64;
    let mdp = delivered as f64 / total_messages as f64;
    let var = if cfg.runs > 1 {
        ((sum_sq - runs * mdp * mdp) / (runs - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(DeliveryReport {
        scheme: cfg.scheme,
        mdp_estimate: mdp,
        half_width_95: 1.96 * (var / runs).sqrt(),
        runs: cfg.runs,
        delivered,
        total_messages,
        per_slot_success: sent
            .iter()
            .zip(&ok)
            .map(|(&n, &k)| (n > 0).then(|| k as f64 / n as f64))
            .collect(),
        per_slot_load: sent.iter().map(|&n| n as f64 / runs).collect(),
    })
}
