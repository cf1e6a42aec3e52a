//! Closed-form message delivery probabilities.
//!
//! Wake-up slot distribution, per-slot transmission and collision
//! probabilities, per-slot transmission success under the strongest
//! interferer model, and the resulting message delivery probability (MDP)
//! for each scheme. The loss factor comes from [`loss`].

pub mod loss;
pub mod quadrature;
pub mod special;

use crate::channel::{CaptureMatrix, FadingModel, Geometry};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::fountain::decode_probability;
use crate::protocol::{replication_counts, SchemeKind};

pub use loss::{interferer_loss_factor, interferer_loss_factor_nofading, LossFactor, NoFadingMode, QuadratureControls};
pub use special::lower_incomplete_gamma;

/// Random-access schemes covered by the slot-level model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RandomAccess {
    Fountain,
    Replication,
    Baseline,
}

impl RandomAccess {
    pub fn from_scheme(s: SchemeKind) -> Option<Self> {
        match s {
            SchemeKind::Fountain => Some(Self::Fountain),
            SchemeKind::Replication => Some(Self::Replication),
            SchemeKind::Baseline => Some(Self::Baseline),
            SchemeKind::TdmaBestCase => None,
        }
    }
}

/// Copy-count exponents in the replication delivery term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ReplicationExponents {
    /// `m_q + 1` and `m_q + 2`: the number of copies each message actually gets.
    #[default]
    CopyCount,
    /// `m_q` and `m_q + 1`, one fewer copy per message.
    OneFewer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisInputs {
    pub n: usize,
    pub beta: usize,
    pub epsilon: usize,
    pub n_s: usize,
    pub n_f: usize,
    pub p_b: f64,
    pub q: u32,
    pub sf_set: Vec<u8>,
    pub geometry: Geometry,
    pub fading: FadingModel,
    pub capture: CaptureMatrix,
    pub quadrature: QuadratureControls,
}

impl AnalysisInputs {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            n: cfg.n,
            beta: cfg.beta,
            epsilon: cfg.effective_epsilon(),
            n_s: cfg.n_s,
            n_f: cfg.n_f,
            p_b: cfg.p_b,
            q: cfg.q,
            sf_set: cfg.sf_set.clone(),
            geometry: cfg.geometry,
            fading: cfg.fading,
            capture: cfg.capture_matrix()?,
            quadrature: QuadratureControls::default(),
        })
    }

    /// Probability of picking a given SF.
    pub fn eta(&self) -> f64 {
        1.0 / self.sf_set.len() as f64
    }

    fn remaining(&self, i: usize) -> usize {
        self.n_s - i
    }

    fn gamma(&self, i: usize) -> i64 {
        self.n_s as i64 - i as i64 - self.beta as i64
    }

    /// Redundancy actually sent by replication after waking in slot `j`.
    fn eps_hat(&self, j: usize) -> usize {
        self.gamma(j).clamp(0, self.epsilon as i64) as usize
    }

    /// `(r, y)` for the scheme: extra frames sent and the slack required.
    fn redundancy(&self, access: RandomAccess, j: usize) -> (usize, usize) {
        match access {
            RandomAccess::Fountain => (self.epsilon, self.epsilon),
            RandomAccess::Replication => (self.eps_hat(j), 0),
            RandomAccess::Baseline => (0, 0),
        }
    }

    fn coded(&self, access: RandomAccess, i: usize) -> bool {
        match access {
            RandomAccess::Fountain => self.epsilon > 0 && self.gamma(i) >= self.epsilon as i64,
            RandomAccess::Replication => self.gamma(i) > 0,
            RandomAccess::Baseline => false,
        }
    }
}

/// Probability of first hearing a wake-up call in slot `i`.
pub fn wakeup_pmf(i: usize, p_b: f64, n_s: usize) -> f64 {
    if i >= n_s {
        0.0
    } else {
        (1.0 - p_b).powi(i as i32) * p_b
    }
}

/// Probability that an ED woken in slot `i` transmits in slot `s`.
pub fn tx_prob(s: usize, i: usize, access: RandomAccess, inputs: &AnalysisInputs) -> f64 {
    if s < i || i >= inputs.n_s || s >= inputs.n_s {
        return 0.0;
    }
    let n_i = inputs.remaining(i) as f64;
    let (r, y) = inputs.redundancy(access, i);
    // with y = 0 the first branch is the uncoded one, so it must not
    // exceed one either
    if inputs.gamma(i) >= y as i64 && (y > 0 || inputs.gamma(i) >= 0) {
        (inputs.beta + r) as f64 / n_i
    } else {
        (inputs.beta as f64 / n_i).min(1.0)
    }
}

/// Probability that a given other ED transmits in slot `s`: the wake-up
/// distribution mixed over the two planning regimes.
pub fn collision_prob(s: usize, access: RandomAccess, inputs: &AnalysisInputs) -> f64 {
    let beta = inputs.beta as i64;
    let n_s = inputs.n_s as i64;
    let s_i = s as i64;
    let y = match access {
        RandomAccess::Fountain => inputs.epsilon as i64,
        RandomAccess::Replication | RandomAccess::Baseline => 0,
    };
    let boundary = n_s - beta - y;
    let pw = |j: i64| wakeup_pmf(j as usize, inputs.p_b, inputs.n_s);
    let n_j = |j: i64| (n_s - j) as f64;

    let first: f64 = (0..=boundary.min(s_i))
        .map(|j| {
            let (r, _) = inputs.redundancy(access, j as usize);
            (inputs.beta + r) as f64 / n_j(j) * pw(j)
        })
        .sum();
    let theta = s_i > boundary;
    let second: f64 = if theta {
        ((boundary + 1).max(0)..=s_i)
            .map(|j| (beta as f64 / n_j(j)).min(1.0) * pw(j))
            .sum()
    } else {
        0.0
    };
    first + second
}

/// Probability that a frame in slot `s` survives all `n - 1` other EDs.
pub fn tx_success_prob(s: usize, access: RandomAccess, inputs: &AnalysisInputs, f_factor: f64) -> f64 {
    success_from_pcol(collision_prob(s, access, inputs), inputs, f_factor)
}

fn success_from_pcol(p_col: f64, inputs: &AnalysisInputs, f_factor: f64) -> f64 {
    (1.0 - p_col * f_factor / inputs.n_f as f64).powi(inputs.n as i32 - 1)
}

/// Mean of the per-slot success probability over the slots left after
/// waking in slot `i`.
pub fn avg_success(i: usize, access: RandomAccess, inputs: &AnalysisInputs, f_factor: f64) -> f64 {
    let zeta: Vec<f64> = (i..inputs.n_s)
        .map(|s| tx_success_prob(s, access, inputs, f_factor))
        .collect();
    zeta.iter().sum::<f64>() / inputs.remaining(i) as f64
}

/// Curves behind one MDP value.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCurves {
    pub f_factor: f64,
    /// Per slot `s`.
    pub p_col: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Per wake slot `i`.
    pub zeta_hat: Vec<f64>,
    /// Per wake slot `i`: delivery probability given waking in `i`.
    pub per_wake: Vec<f64>,
    /// Per wake slot `i`: whether redundancy is sent.
    pub redundant: Vec<bool>,
    pub mdp: f64,
}

struct SlotCurves {
    p_col: Vec<f64>,
    zeta: Vec<f64>,
    zeta_hat: Vec<f64>,
}

fn slot_curves(access: RandomAccess, inputs: &AnalysisInputs, f_factor: f64) -> SlotCurves {
    let p_col: Vec<f64> = (0..inputs.n_s).map(|s| collision_prob(s, access, inputs)).collect();
    let zeta: Vec<f64> = p_col.iter().map(|&p| success_from_pcol(p, inputs, f_factor)).collect();
    let mut zeta_hat = vec![0.0; inputs.n_s];
    let mut tail = 0.0;
    for i in (0..inputs.n_s).rev() {
        tail += zeta[i];
        zeta_hat[i] = tail / inputs.remaining(i) as f64;
    }
    SlotCurves { p_col, zeta, zeta_hat }
}

/// Delivery probability of an uncoded message sent once after waking in `i`.
fn uncoded_delivery(i: usize, inputs: &AnalysisInputs, zeta: &[f64]) -> f64 {
    let n_i = inputs.remaining(i) as f64;
    let per_slot = (n_i / inputs.beta as f64).min(1.0) / n_i;
    zeta[i..].iter().map(|z| per_slot * z).sum()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// MDP with fountain coding.
pub fn mdp_fountain(inputs: &AnalysisInputs, f_factor: f64) -> ModelCurves {
    mdp_adaptive(
        RandomAccess::Fountain,
        inputs,
        f_factor,
        ReplicationExponents::default(),
    )
}

/// MDP with message replication.
pub fn mdp_replication(inputs: &AnalysisInputs, f_factor: f64, exponents: ReplicationExponents) -> ModelCurves {
    mdp_adaptive(RandomAccess::Replication, inputs, f_factor, exponents)
}

/// MDP of random access without redundancy.
pub fn mdp_baseline(inputs: &AnalysisInputs, f_factor: f64) -> ModelCurves {
    mdp_adaptive(
        RandomAccess::Baseline,
        inputs,
        f_factor,
        ReplicationExponents::default(),
    )
}

/// MDP for any scheme. Best-case TDMA delivers everything from every ED
/// that wakes up, so its MDP is `p_b`.
pub fn mdp(scheme: SchemeKind, inputs: &AnalysisInputs, f_factor: f64, exponents: ReplicationExponents) -> f64 {
    match RandomAccess::from_scheme(scheme) {
        Some(access) => mdp_adaptive(access, inputs, f_factor, exponents).mdp,
        None => inputs.p_b,
    }
}

fn mdp_adaptive(
    access: RandomAccess,
    inputs: &AnalysisInputs,
    f_factor: f64,
    exponents: ReplicationExponents,
) -> ModelCurves {
    let SlotCurves { p_col, zeta, zeta_hat } = slot_curves(access, inputs, f_factor);
    let beta = inputs.beta;
    let mut per_wake = vec![0.0; inputs.n_s];
    let mut redundant = vec![false; inputs.n_s];

    for i in 0..inputs.n_s {
        let zh = zeta_hat[i];
        redundant[i] = inputs.coded(access, i);
        per_wake[i] = if !redundant[i] {
            uncoded_delivery(i, inputs, &zeta)
        } else {
            match access {
                RandomAccess::Fountain => {
                    let total = beta + inputs.epsilon;
                    (beta..=total)
                        .map(|z| {
                            binomial(total, z)
                                * zh.powi(z as i32)
                                * (1.0 - zh).powi((total - z) as i32)
                                * decode_probability(z, beta, inputs.q)
                        })
                        .sum()
                }
                RandomAccess::Replication => {
                    let (m_q, m_r) = replication_counts(inputs.eps_hat(i), beta);
                    let p_more = m_r as f64 / beta as f64;
                    let p_less = 1.0 - p_more;
                    let base = match exponents {
                        ReplicationExponents::CopyCount => m_q + 1,
                        ReplicationExponents::OneFewer => m_q,
                    } as i32;
                    p_less * (1.0 - (1.0 - zh).powi(base)) + p_more * (1.0 - (1.0 - zh).powi(base + 1))
                }
                RandomAccess::Baseline => unreachable!("baseline never sends redundancy"),
            }
        };
    }

    let mdp = (0..inputs.n_s)
        .map(|i| wakeup_pmf(i, inputs.p_b, inputs.n_s) * per_wake[i])
        .sum();
    ModelCurves {
        f_factor,
        p_col,
        zeta,
        zeta_hat,
        per_wake,
        redundant,
        mdp,
    }
}
