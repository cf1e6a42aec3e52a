//! Random linear fountain code over GF(256).
//!
//! Every coded frame carries its coefficient vector, so the receiver can
//! decode from any `beta` linearly independent frames. Decoding is
//! all-or-nothing: either the full block is recovered or nothing is.

use rand::Rng;

use crate::error::{Error, Result};
use crate::gf256::{self, FieldElement, FieldMatrix};

/// Source messages of one end device. All messages share one length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceBlock {
    messages: Vec<Vec<u8>>,
}

impl SourceBlock {
    pub fn new(messages: Vec<Vec<u8>>) -> Result<Self> {
        let Some(first) = messages.first() else {
            return Err(Error::InvalidParameter(
                "source block needs at least one message".into(),
            ));
        };
        let len = first.len();
        if let Some(i) = messages.iter().position(|m| m.len() != len) {
            return Err(Error::DimensionMismatch(format!(
                "message {i} has {} bytes, expected {len}",
                messages[i].len()
            )));
        }
        Ok(Self { messages })
    }

    /// Block of `beta` messages filled with random bytes.
    pub fn random<R: Rng + ?Sized>(beta: usize, payload_len: usize, rng: &mut R) -> Result<Self> {
        let messages = (0..beta)
            .map(|_| {
                let mut m = vec![0u8; payload_len];
                rng.fill_bytes(&mut m);
                m
            })
            .collect();
        Self::new(messages)
    }

    pub fn beta(&self) -> usize {
        self.messages.len()
    }

    pub fn payload_len(&self) -> usize {
        self.messages[0].len()
    }

    pub fn messages(&self) -> &[Vec<u8>] {
        &self.messages
    }

    pub fn message(&self, l: usize) -> &[u8] {
        &self.messages[l]
    }
}

/// A linear combination of source messages together with its coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedFrame {
    pub coefficients: Vec<FieldElement>,
    pub payload: Vec<u8>,
}

impl CodedFrame {
    /// Uncoded message `l`, i.e. the unit coefficient vector e_l.
    pub fn unit(block: &SourceBlock, l: usize) -> Self {
        let mut coefficients = vec![FieldElement::ZERO; block.beta()];
        coefficients[l] = FieldElement::ONE;
        Self {
            coefficients,
            payload: block.message(l).to_vec(),
        }
    }

    /// Combines `block` with the given coefficients.
    pub fn combine(block: &SourceBlock, coefficients: Vec<FieldElement>) -> Result<Self> {
        if coefficients.len() != block.beta() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a block of {} messages",
                coefficients.len(),
                block.beta()
            )));
        }
        let mut payload = vec![0u8; block.payload_len()];
        for (c, m) in coefficients.iter().zip(block.messages()) {
            gf256::mul_add_row(&mut payload, m, *c);
        }
        Ok(Self { coefficients, payload })
    }

    pub fn is_unit(&self) -> Option<usize> {
        let mut hit = None;
        for (i, c) in self.coefficients.iter().enumerate() {
            match c.value() {
                0 => {}
                1 if hit.is_none() => hit = Some(i),
                _ => return None,
            }
        }
        hit
    }
}

/// Encodes `count` frames with coefficients drawn uniformly from the whole
/// field, zero included.
pub fn encode<R: Rng + ?Sized>(block: &SourceBlock, count: usize, rng: &mut R) -> Result<Vec<CodedFrame>> {
    if count == 0 {
        return Err(Error::InvalidParameter("frame count must be at least 1".into()));
    }
    (0..count)
        .map(|_| {
            let coefficients = (0..block.beta()).map(|_| FieldElement(rng.random())).collect();
            CodedFrame::combine(block, coefficients)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub success: bool,
    pub rank: usize,
    pub messages: Option<Vec<Vec<u8>>>,
}

/// Attempts to recover all `beta` source messages from `frames`.
pub fn decode(frames: &[CodedFrame], beta: usize) -> Result<DecodeOutcome> {
    if beta == 0 {
        return Err(Error::InvalidParameter("beta must be at least 1".into()));
    }
    if let Some(i) = frames.iter().position(|f| f.coefficients.len() != beta) {
        return Err(Error::DimensionMismatch(format!(
            "frame {i} has {} coefficients, expected {beta}",
            frames[i].coefficients.len()
        )));
    }
    if frames.is_empty() {
        return Ok(DecodeOutcome {
            success: false,
            rank: 0,
            messages: None,
        });
    }

    let coeffs: Vec<Vec<u8>> = frames
        .iter()
        .map(|f| f.coefficients.iter().map(|c| c.value()).collect())
        .collect();
    let m = FieldMatrix::from_rows(&coeffs)?;
    let rhs: Vec<Vec<u8>> = frames.iter().map(|f| f.payload.clone()).collect();
    let out = gf256::rank_and_solve(&m, &rhs)?;
    Ok(DecodeOutcome {
        success: out.solution.is_some(),
        rank: out.rank,
        messages: out.solution,
    })
}

/// Probability that `z` frames with uniform random coefficients over GF(q)
/// have full rank `beta`: prod_{v=0}^{beta-1} (1 - q^{v-z}), zero for z < beta.
pub fn decode_probability(z: usize, beta: usize, q: u32) -> f64 {
    if z < beta {
        return 0.0;
    }
    let q = q as f64;
    (0..beta).map(|v| 1.0 - q.powi(v as i32 - z as i32)).product()
}
