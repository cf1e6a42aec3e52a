//! Per-ED transmission planning.
//!
//! An ED that wakes up in slot `i` has `N(i) = N_s - i` slots left, of which
//! `gamma(i) = N(i) - beta` are spare. Each scheme turns that slack into a
//! [`SlotSchedule`]: which frame goes into which slot, and which source
//! messages are never sent.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::fountain::{self, CodedFrame, SourceBlock};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// Random linear fountain coding when the slack allows `epsilon` extra frames.
    #[default]
    Fountain,
    /// Message copies spread over the slack.
    Replication,
    /// Random access without redundancy.
    Baseline,
    /// Best-case TDMA: every woken ED gets collision-free slots.
    #[serde(rename = "tdma")]
    TdmaBestCase,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Fountain,
        SchemeKind::Replication,
        SchemeKind::Baseline,
        SchemeKind::TdmaBestCase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Fountain => "fountain",
            SchemeKind::Replication => "replication",
            SchemeKind::Baseline => "baseline",
            SchemeKind::TdmaBestCase => "tdma",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown scheme `{s}` (expected fountain, replication, baseline or tdma)"
            ))
        })
    }
}

/// What an ED puts on the air in one slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameDescriptor {
    Coded(CodedFrame),
    /// An uncoded copy of source message `l`.
    Message(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduledFrame {
    pub slot: usize,
    pub frame: FrameDescriptor,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SlotSchedule {
    /// Sorted by slot; slots are distinct.
    pub entries: Vec<ScheduledFrame>,
    /// Source messages never transmitted.
    pub dropped: Vec<usize>,
}

impl SlotSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_coded(&self) -> bool {
        matches!(
            self.entries.first(),
            Some(ScheduledFrame {
                frame: FrameDescriptor::Coded(_),
                ..
            })
        )
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.slot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capacity {
    /// Slots remaining, `N(i)`.
    pub n_i: usize,
    /// Spare slots beyond `beta`, `gamma(i)`; may be zero or negative.
    pub gamma_i: i64,
}

pub fn remaining_capacity(i: usize, n_s: usize, beta: usize) -> Result<Capacity> {
    if i >= n_s {
        return Err(Error::InvalidParameter(format!("wake slot {i} outside 0..{n_s}")));
    }
    let n_i = n_s - i;
    Ok(Capacity {
        n_i,
        gamma_i: n_i as i64 - beta as i64,
    })
}

/// Quotient and remainder of `eps_hat / beta`.
pub fn replication_counts(eps_hat: usize, beta: usize) -> (usize, usize) {
    (eps_hat / beta, eps_hat % beta)
}

/// Plans the transmissions of an ED that woke up in slot `i`.
pub fn plan_transmissions<R: Rng + ?Sized>(
    scheme: SchemeKind,
    i: usize,
    cfg: &ScenarioConfig,
    block: &SourceBlock,
    rng: &mut R,
) -> Result<SlotSchedule> {
    let beta = block.beta();
    let Capacity { n_i, gamma_i } = remaining_capacity(i, cfg.n_s, beta)?;
    let eps = cfg.effective_epsilon();

    match scheme {
        SchemeKind::Fountain if eps > 0 && gamma_i >= eps as i64 => {
            let frames = fountain::encode(block, beta + eps, rng)?;
            let slots = pick_slots(i, n_i, beta + eps, rng);
            Ok(SlotSchedule {
                entries: slots
                    .into_iter()
                    .zip(frames)
                    .map(|(slot, f)| ScheduledFrame {
                        slot,
                        frame: FrameDescriptor::Coded(f),
                    })
                    .collect(),
                dropped: Vec::new(),
            })
        }
        SchemeKind::Replication if gamma_i > 0 => {
            let eps_hat = eps.min(gamma_i as usize);
            let (m_q, m_r) = replication_counts(eps_hat, beta);
            let mut extra = vec![false; beta];
            for l in index::sample(rng, beta, m_r) {
                extra[l] = true;
            }
            let mut copies: Vec<usize> = (0..beta)
                .flat_map(|l| std::iter::repeat_n(l, m_q + 1 + extra[l] as usize))
                .collect();
            debug_assert_eq!(copies.len(), beta + eps_hat);
            copies.shuffle(rng);
            let slots = pick_slots(i, n_i, copies.len(), rng);
            Ok(SlotSchedule {
                entries: slots
                    .into_iter()
                    .zip(copies)
                    .map(|(slot, l)| ScheduledFrame {
                        slot,
                        frame: FrameDescriptor::Message(l),
                    })
                    .collect(),
                dropped: Vec::new(),
            })
        }
        SchemeKind::TdmaBestCase => {
            let sent = beta.min(n_i);
            Ok(SlotSchedule {
                entries: (0..sent)
                    .map(|l| ScheduledFrame {
                        slot: i + l,
                        frame: FrameDescriptor::Message(l),
                    })
                    .collect(),
                dropped: (sent..beta).collect(),
            })
        }
        _ => Ok(plan_uncoded(i, n_i, beta, rng)),
    }
}

/// `beta` uncoded messages on random slots; if fewer than `beta` slots
/// remain, a random subset fills every slot and the rest are dropped.
fn plan_uncoded<R: Rng + ?Sized>(i: usize, n_i: usize, beta: usize, rng: &mut R) -> SlotSchedule {
    let sent = beta.min(n_i);
    let mut chosen: Vec<usize> = if beta <= n_i {
        (0..beta).collect()
    } else {
        index::sample(rng, beta, n_i).into_vec()
    };
    chosen.shuffle(rng);
    let mut dropped: Vec<usize> = if beta > n_i {
        let mut keep = vec![false; beta];
        chosen.iter().for_each(|&l| keep[l] = true);
        (0..beta).filter(|&l| !keep[l]).collect()
    } else {
        Vec::new()
    };
    dropped.sort_unstable();
    let slots = pick_slots(i, n_i, sent, rng);
    SlotSchedule {
        entries: slots
            .into_iter()
            .zip(chosen)
            .map(|(slot, l)| ScheduledFrame {
                slot,
                frame: FrameDescriptor::Message(l),
            })
            .collect(),
        dropped,
    }
}

/// `count` distinct slots drawn uniformly from `i..i + n_i`, ascending.
fn pick_slots<R: Rng + ?Sized>(i: usize, n_i: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut slots: Vec<usize> = index::sample(rng, n_i, count).into_iter().map(|s| i + s).collect();
    slots.sort_unstable();
    slots
}
