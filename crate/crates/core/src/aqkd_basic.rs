//! Qubit-based distributed anonymous key distribution.
//!
//! The voter and the counter share `N_i` (measurement bases) and `T_i`
//! (a one-shot session tag), each the XOR of two administrator shares. The
//! voter conjugate-codes a random string `R_i` under `N_i` and sends it
//! anonymously with `T_i`; the counter measures in `N_i`, publishes a
//! random check subset, and the voter either accepts the residual bits as
//! the key or aborts.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{ensure_len, Error, Result};
use crate::primitives::{sample_positions, split_key, xor_combine};
use crate::qubit::{channel_transmit, encode_conjugate, QubitRegister};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Prepared,
    Measured,
    Checked,
    Completed,
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Voter,
    Charlie,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasicConfig {
    /// Qubits per session.
    pub m: usize,
    /// Length of the session tag `T_i`.
    pub tag_len: usize,
    pub check_fraction: f64,
    pub error_threshold: f64,
    pub max_retries: usize,
    pub loss_p: f64,
    pub flip_p: f64,
}

impl Default for BasicConfig {
    fn default() -> Self {
        BasicConfig {
            m: 64,
            tag_len: 32,
            check_fraction: 0.5,
            error_threshold: 0.05,
            max_retries: 3,
            loss_p: 0.0,
            flip_p: 0.0,
        }
    }
}

impl BasicConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::InvalidParameter(s));
        if self.m < 2 {
            return bad(format!("m must be at least 2, got {}", self.m));
        }
        if self.tag_len == 0 {
            return bad("tag_len must be positive".into());
        }
        if !(self.check_fraction > 0.0 && self.check_fraction <= 1.0) {
            return bad(format!("check_fraction {} outside (0, 1]", self.check_fraction));
        }
        if !(0.0..0.25).contains(&self.error_threshold) {
            return bad(format!("error_threshold {} must lie in [0, 0.25)", self.error_threshold));
        }
        for p in [self.loss_p, self.flip_p] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Pre-shared material from the trusted setup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicShares {
    /// `(N_i1, T_i1)` from Bob1 and `(N_i2, T_i2)` from Bob2.
    pub bob1: (BitString, BitString),
    pub bob2: (BitString, BitString),
}

impl BasicShares {
    pub fn trusted_setup<R: Rng + ?Sized>(m: usize, tag_len: usize, rng: &mut R) -> Self {
        BasicShares {
            bob1: (BitString::random(m, rng), BitString::random(tag_len, rng)),
            bob2: (BitString::random(m, rng), BitString::random(tag_len, rng)),
        }
    }

    /// `(N_i, T_i)` as both the voter and the counter compute them.
    pub fn derive(&self) -> Result<(BitString, BitString)> {
        Ok((xor_combine(&self.bob1.0, &self.bob2.0)?, xor_combine(&self.bob1.1, &self.bob2.1)?))
    }
}

/// Role-scoped session state; phases only move forward.
#[derive(Debug)]
pub struct BasicAqkdSession {
    pub role: Role,
    phase: Phase,
    pub transcript: Transcript,
}

impl BasicAqkdSession {
    pub fn new(role: Role, run_id: &str) -> Self {
        BasicAqkdSession { role, phase: Phase::Prepared, transcript: Transcript::new(run_id) }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn advance(&mut self, to: Phase) -> Result<()> {
        let ok = match (self.phase, to) {
            (Phase::Prepared, Phase::Measured) | (Phase::Measured, Phase::Checked) => true,
            (Phase::Checked, Phase::Completed | Phase::Aborted) => true,
            (from, Phase::Aborted) => from != Phase::Completed && from != Phase::Aborted,
            _ => false,
        };
        if !ok {
            return Err(Error::PhaseTransition { from: format!("{:?}", self.phase), to: format!("{to:?}") });
        }
        self.phase = to;
        Ok(())
    }
}

/// Draws `R_i` and returns it with its conjugate-coded register.
pub fn voter_prepare<R: Rng + ?Sized>(n_i: &BitString, m: usize, rng: &mut R) -> Result<(BitString, QubitRegister)> {
    ensure_len(m, n_i.len())?;
    let r_i = BitString::random(m, rng);
    let reg = encode_conjugate(&r_i, n_i)?;
    Ok((r_i, reg))
}

/// What the counter publishes after measuring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckAnnouncement {
    pub tag: BitString,
    /// Outcome bits at `positions`, in the same order.
    pub check_bits: BitString,
    pub positions: Vec<usize>,
    pub received_positions: Vec<usize>,
}

/// Counter-side record of one measured session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharlieRecord {
    pub outcome: BitString,
    pub announcement: CheckAnnouncement,
}

impl CharlieRecord {
    /// Residual outcome bits: received minus checked, ascending.
    pub fn residual(&self) -> BitString {
        self.outcome.select(&residual_positions(&self.announcement))
    }
}

pub fn residual_positions(a: &CheckAnnouncement) -> Vec<usize> {
    let checked: BTreeSet<usize> = a.positions.iter().copied().collect();
    a.received_positions.iter().copied().filter(|p| !checked.contains(p)).collect()
}

/// The counter's tag database: which `N_i` belongs to each `T_i`, and
/// which tags have already been consumed.
#[derive(Debug, Default)]
pub struct BasicCounter {
    bases: BTreeMap<BitString, BitString>,
    accepted: BTreeSet<BitString>,
}

impl BasicCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, shares: &BasicShares) -> Result<()> {
        let (n, t) = shares.derive()?;
        self.bases.insert(t, n);
        Ok(())
    }

    pub fn has_accepted(&self, tag: &BitString) -> bool {
        self.accepted.contains(tag)
    }

    /// Measures in the bases bound to `tag` and publishes a check subset of
    /// `ceil(check_fraction * received)` positions.
    pub fn measure_announce<R: Rng + ?Sized>(
        &mut self,
        reg: &mut QubitRegister,
        tag: &BitString,
        check_fraction: f64,
        rng: &mut R,
    ) -> Result<CharlieRecord> {
        if self.accepted.contains(tag) {
            return Err(Error::DuplicateTag);
        }
        let n_i = self.bases.get(tag).cloned().ok_or_else(|| Error::InvalidParameter("unknown session tag".into()))?;
        let record = charlie_measure_announce(reg, &n_i, tag, check_fraction, rng)?;
        self.accepted.insert(tag.clone());
        Ok(record)
    }
}

/// Stateless measurement and check-subset selection; the duplicate-tag
/// rule lives in [`BasicCounter`].
pub fn charlie_measure_announce<R: Rng + ?Sized>(
    reg: &mut QubitRegister,
    n_i: &BitString,
    tag: &BitString,
    check_fraction: f64,
    rng: &mut R,
) -> Result<CharlieRecord> {
    if reg.is_empty() {
        return Err(Error::EmptyRegister);
    }
    ensure_len(reg.len(), n_i.len())?;
    let out = reg.measure(n_i, rng)?;
    let received = out.received();
    let count = (check_fraction * received.len() as f64).ceil() as usize;
    let picks = sample_positions(received.len(), count, rng);
    let positions: Vec<usize> = picks.iter().map(|&k| received[k]).collect();
    let announcement = CheckAnnouncement {
        tag: tag.clone(),
        check_bits: out.bits.select(&positions),
        positions,
        received_positions: received,
    };
    Ok(CharlieRecord { outcome: out.bits, announcement })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitKey {
    pub left: BitString,
    pub right: BitString,
}

impl SplitKey {
    pub fn joined(&self) -> BitString {
        self.left.concat(&self.right)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verification {
    Accepted { key: SplitKey, mismatch_rate: f64 },
    Aborted { mismatch_rate: f64, reason: String },
}

impl Verification {
    pub fn key(&self) -> Option<&SplitKey> {
        match self {
            Verification::Accepted { key, .. } => Some(key),
            Verification::Aborted { .. } => None,
        }
    }

    pub fn mismatch_rate(&self) -> f64 {
        match self {
            Verification::Accepted { mismatch_rate, .. } | Verification::Aborted { mismatch_rate, .. } => {
                *mismatch_rate
            }
        }
    }
}

/// Compares the published check bits with `R_i` and, below the threshold,
/// splits the residual bits into `(K_iL, K_iR)`.
pub fn voter_verify_extract(r_i: &BitString, a: &CheckAnnouncement, error_threshold: f64) -> Result<Verification> {
    let received: BTreeSet<usize> = a.received_positions.iter().copied().collect();
    if let Some(p) = a.positions.iter().find(|p| !received.contains(p) || **p >= r_i.len()) {
        return Err(Error::InvalidParameter(format!("check position {p} was not received")));
    }
    ensure_len(a.positions.len(), a.check_bits.len())?;
    let expected = r_i.select(&a.positions);
    let mismatches = expected.hamming_distance(&a.check_bits)?;
    let mismatch_rate = if a.positions.is_empty() { 0.0 } else { mismatches as f64 / a.positions.len() as f64 };
    if mismatch_rate > error_threshold {
        return Ok(Verification::Aborted { mismatch_rate, reason: "check mismatch above threshold".into() });
    }
    let residual = r_i.select(&residual_positions(a));
    if residual.len() < 2 {
        return Ok(Verification::Aborted { mismatch_rate, reason: "no residual key bits".into() });
    }
    let (left, right) = split_key(&residual)?;
    Ok(Verification::Accepted { key: SplitKey { left, right }, mismatch_rate })
}

/// Something sitting on the quantum channel between voter and counter.
pub trait QuantumTap {
    fn tap(&mut self, reg: QubitRegister, rng: &mut dyn rand::RngCore) -> Result<QubitRegister>;
}

/// The honest channel.
pub struct NoTap;

impl QuantumTap for NoTap {
    fn tap(&mut self, reg: QubitRegister, _rng: &mut dyn rand::RngCore) -> Result<QubitRegister> {
        Ok(reg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasicReport {
    pub attempts: usize,
    pub verification: Verification,
    /// Counter-side residual key, split the same way as the voter's.
    pub charlie_key: Option<SplitKey>,
    pub final_phase: Phase,
}

/// Runs one voter's key establishment end to end, restarting with fresh
/// pre-shared material and fresh `R_i` on abort, up to `max_retries` times.
pub fn run_session<R: Rng>(
    cfg: &BasicConfig,
    counter: &mut BasicCounter,
    tap: &mut dyn QuantumTap,
    transcript: &mut Transcript,
    rng: &mut R,
) -> Result<BasicReport> {
    cfg.validate()?;
    let mut attempts = 0;
    loop {
        attempts += 1;
        let shares = BasicShares::trusted_setup(cfg.m, cfg.tag_len, rng);
        counter.register(&shares)?;
        let (n_i, t_i) = shares.derive()?;

        let mut voter = BasicAqkdSession::new(Role::Voter, transcript.run_id());
        let mut charlie = BasicAqkdSession::new(Role::Charlie, transcript.run_id());

        let (r_i, reg) = voter_prepare(&n_i, cfg.m, rng)?;
        transcript.record("aqkd", "voter", "send_register", &t_i.to_bytes());
        let reg = channel_transmit(reg, cfg.loss_p, cfg.flip_p, rng)?;
        let mut reg = tap.tap(reg, rng)?;

        let record = counter.measure_announce(&mut reg, &t_i, cfg.check_fraction, rng)?;
        charlie.advance(Phase::Measured)?;
        voter.advance(Phase::Measured)?;
        transcript.record("aqkd", "charlie", "announce_check", &record.announcement.check_bits.to_bytes());

        let verification = voter_verify_extract(&r_i, &record.announcement, cfg.error_threshold)?;
        voter.advance(Phase::Checked)?;
        charlie.advance(Phase::Checked)?;
        match &verification {
            Verification::Accepted { .. } => {
                voter.advance(Phase::Completed)?;
                charlie.advance(Phase::Completed)?;
                transcript.record("aqkd", "voter", "accept", b"");
                let residual = record.residual();
                let (left, right) = split_key(&residual)?;
                return Ok(BasicReport {
                    attempts,
                    verification,
                    charlie_key: Some(SplitKey { left, right }),
                    final_phase: voter.phase(),
                });
            }
            Verification::Aborted { .. } => {
                voter.advance(Phase::Aborted)?;
                charlie.advance(Phase::Aborted)?;
                transcript.record("aqkd", "voter", "abort", b"");
                if attempts > cfg.max_retries {
                    return Ok(BasicReport { attempts, verification, charlie_key: None, final_phase: voter.phase() });
                }
            }
        }
    }
}
