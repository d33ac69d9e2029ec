//! The distributed election: initial, anonymous key distribution, voting
//! and counting phases.
//!
//! Every registered voter runs one qubit-string key distribution session
//! (restarting on failure) and ends up with `K_i = K_iL || K_iR`. A ballot
//! is `(E_{K_iR}[v_i], K_iL)` sent through the anonymity channel. The
//! counter refuses unknown tags, replays and plaintexts outside the
//! candidate set, then publishes the shuffled `(K_iL, v_i)` pairs.
//!
//! The whole run is a single-threaded loop driven by one RNG, so a seed
//! fixes the transcript byte for byte.

pub mod baseline;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::anonymity::dispatch;
use crate::aqkd_string::{
    bob_prepare, charlie_decode, charlie_decode_ecc, disclosure_for, publish_disclosures, setup_keys, strip_disclosed,
    voter_check, voter_randomize, voter_randomize_ecc, voter_unmask, SessionKey, StringAqkdKeys, StringParams,
    StringSessionBobView,
};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::primitives::{otp_decrypt, otp_encrypt, split_key};
use crate::qubit::{channel_transmit, Gate, QubitRegister};
use crate::transcript::Transcript;

/// Published candidate codes: distinct `s`-bit strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    names: Vec<String>,
    codes: Vec<BitString>,
}

impl CandidateSet {
    pub fn from_codes(names: Vec<String>, codes: Vec<BitString>) -> Result<Self> {
        if names.len() < 2 || names.len() != codes.len() {
            return Err(Error::InvalidParameter("need at least 2 candidates, one code each".into()));
        }
        let s = codes[0].len();
        if s == 0 || codes.iter().any(|c| c.len() != s) {
            return Err(Error::InvalidParameter("candidate codes must share a positive length".into()));
        }
        let distinct: BTreeSet<&BitString> = codes.iter().collect();
        let distinct_names: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != codes.len() || distinct_names.len() != names.len() {
            return Err(Error::InvalidParameter("candidate names and codes must be distinct".into()));
        }
        Ok(CandidateSet { names, codes })
    }

    /// Uniform codes drawn without replacement, optionally keeping pairwise
    /// Hamming distance at least `min_distance`.
    pub fn sample<R: Rng + ?Sized>(names: &[String], s: usize, min_distance: usize, rng: &mut R) -> Result<Self> {
        if names.len() < 2 {
            return Err(Error::InvalidParameter("need at least 2 candidates".into()));
        }
        if s == 0 || s >= 64 || (1u64 << s) < names.len() as u64 {
            return Err(Error::InvalidParameter(format!("{} candidates do not fit in {s}-bit codes", names.len())));
        }
        let mut codes: Vec<BitString> = Vec::with_capacity(names.len());
        let mut tries = 0usize;
        while codes.len() < names.len() {
            tries += 1;
            if tries > 100_000 {
                return Err(Error::InvalidParameter(format!(
                    "cannot place {} codes of length {s} at distance {min_distance}",
                    names.len()
                )));
            }
            let c = BitString::random(s, rng);
            let far = codes.iter().all(|o| o != &c && c.hamming_distance(o).is_ok_and(|d| d >= min_distance));
            if far {
                codes.push(c);
            }
        }
        Self::from_codes(names.to_vec(), codes)
    }

    pub fn s(&self) -> usize {
        self.codes[0].len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn codes(&self) -> &[BitString] {
        &self.codes
    }

    pub fn code(&self, idx: usize) -> &BitString {
        &self.codes[idx]
    }

    pub fn index_of(&self, code: &BitString) -> Option<usize> {
        self.codes.iter().position(|c| c == code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElectionPhase {
    Initial,
    KeyDist,
    Voting,
    Counting,
    Done,
}

impl fmt::Display for ElectionPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElectionPhase::Initial => "initial",
            ElectionPhase::KeyDist => "keydist",
            ElectionPhase::Voting => "voting",
            ElectionPhase::Counting => "counting",
            ElectionPhase::Done => "done",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionConfig {
    pub voters: usize,
    pub candidates: Vec<String>,
    /// Candidate code length.
    pub s: usize,
    pub string: StringParams,
    pub loss_p: f64,
    pub flip_p: f64,
    /// Restarts allowed per voter after the first attempt.
    pub max_retries: usize,
    /// Ballot messages the counter processes before counting starts.
    pub message_budget: Option<usize>,
    pub min_code_distance: usize,
    /// Candidate index per voter; drawn uniformly when absent.
    pub votes: Option<Vec<usize>>,
}

impl Default for ElectionConfig {
    fn default() -> Self {
        ElectionConfig {
            voters: 5,
            candidates: vec!["A".into(), "B".into()],
            s: 4,
            string: StringParams::default(),
            loss_p: 0.0,
            flip_p: 0.0,
            max_retries: 5,
            message_budget: None,
            min_code_distance: 0,
            votes: None,
        }
    }
}

impl ElectionConfig {
    pub fn validate(&self) -> Result<()> {
        self.string.validate()?;
        if self.s == 0 {
            return Err(Error::InvalidParameter("s must be positive".into()));
        }
        if self.string.usable_key_len() < 2 * self.s {
            return Err(Error::InvalidParameter(format!(
                "(l - m) - check_bits = {} leaves no room for two {}-bit halves",
                self.string.usable_key_len(),
                self.s
            )));
        }
        for (name, p) in [("loss_p", self.loss_p), ("flip_p", self.flip_p)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1)")));
            }
        }
        if (self.loss_p > 0.0 || self.flip_p > 0.0) && !self.string.coded() {
            return Err(Error::InvalidParameter("a lossy or noisy channel needs an error-correcting code".into()));
        }
        if let Some(v) = &self.votes {
            if v.len() != self.voters || v.iter().any(|&c| c >= self.candidates.len()) {
                return Err(Error::InvalidParameter("votes must give one valid candidate index per voter".into()));
            }
        }
        Ok(())
    }
}

/// Deliberate misbehaviour injected into a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPlan {
    /// Voter whose key distribution register is disturbed in transit.
    pub tamper_session: Option<usize>,
    /// How many of that voter's attempts are disturbed.
    pub tamper_attempts: usize,
    /// Voter whose board entry the counter alters before publishing.
    pub tamper_board: Option<usize>,
    /// Voters whose ballots an eavesdropper resubmits.
    pub replay: Vec<usize>,
    /// Uniformly random ballots injected by an outsider.
    pub forged: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub ciphertext: BitString,
    pub tag: BitString,
}

impl Ballot {
    fn payload(&self) -> Vec<u8> {
        let mut p = self.tag.to_bytes();
        p.extend(self.ciphertext.to_bytes());
        p
    }
}

/// `(E_{K_iR}[v], K_iL)`.
pub fn voter_cast(key_l: &BitString, key_r: &BitString, choice: &BitString) -> Result<Ballot> {
    Ok(Ballot { ciphertext: otp_encrypt(key_r, choice)?, tag: key_l.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    UnknownTag,
    Replay,
    Ineligible,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::UnknownTag => "unknown-tag",
            RejectReason::Replay => "replay",
            RejectReason::Ineligible => "ineligible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardEntry {
    pub tag: BitString,
    pub vote: BitString,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulletinBoard {
    pub entries: Vec<BoardEntry>,
}

impl BulletinBoard {
    pub fn find(&self, tag: &BitString) -> Option<&BoardEntry> {
        self.entries.iter().find(|e| &e.tag == tag)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub counts: Vec<(String, usize)>,
}

impl Tally {
    pub fn from_board(board: &BulletinBoard, candidates: &CandidateSet) -> Self {
        let mut counts: Vec<(String, usize)> = candidates.names().iter().map(|n| (n.clone(), 0)).collect();
        for e in &board.entries {
            if let Some(i) = candidates.index_of(&e.vote) {
                counts[i].1 += 1;
            }
        }
        Tally { counts }
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.counts.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().map(|(_, c)| c).sum()
    }
}

#[derive(Debug, Clone)]
pub struct VoterRecord {
    pub index: usize,
    pub attempts: usize,
    /// `K_i` after the verification bits are removed.
    pub key: Option<BitString>,
    pub key_l: Option<BitString>,
    pub key_r: Option<BitString>,
    pub vote: Option<usize>,
    cast: bool,
    pub verified: Option<bool>,
}

/// Counter-side record of one decoded session.
#[derive(Debug, Clone)]
pub struct CharlieSession {
    pub handle: u64,
    pub raw: BitString,
    pub tag: Option<BitString>,
    pub key: Option<BitString>,
    pub key_l: Option<BitString>,
    pub accepted: bool,
}

/// Administrator-side record of one prepared register.
#[derive(Debug, Clone)]
pub struct BobRecord {
    pub voter: usize,
    pub attempt: usize,
    pub view: StringSessionBobView,
}

#[derive(Debug)]
pub struct ElectionState {
    pub config: ElectionConfig,
    pub faults: FaultPlan,
    pub phase: ElectionPhase,
    pub keys: StringAqkdKeys,
    pub candidates: CandidateSet,
    pub voters: Vec<VoterRecord>,
    pub bob_records: Vec<BobRecord>,
    pub sessions: Vec<CharlieSession>,
    pub rejections: Vec<RejectReason>,
    pub board: BulletinBoard,
    pub tally: Option<Tally>,
    pub transcript: Transcript,
    charlie_pads: BTreeMap<BitString, BitString>,
    counted: BTreeSet<BitString>,
    accepted: Vec<BoardEntry>,
}

fn actor_voter(i: usize) -> String {
    format!("voter-{i}")
}

pub fn initialize_election<R: Rng + ?Sized>(
    config: ElectionConfig,
    faults: FaultPlan,
    rng: &mut R,
) -> Result<ElectionState> {
    config.validate()?;
    let run_id = format!("{:016x}", rng.random::<u64>());
    let mut transcript = Transcript::new(run_id);
    let candidates = CandidateSet::sample(&config.candidates, config.s, config.min_code_distance, rng)?;
    let keys = setup_keys(&config.string, rng)?;
    let phase = ElectionPhase::Initial;
    for (name, code) in candidates.names().iter().zip(candidates.codes()) {
        transcript.record(&phase.to_string(), "bob", "candidate", format!("{name}={code}").as_bytes());
    }
    transcript.record(&phase.to_string(), "bob1", "distribute-shares", &keys.bob1.concat().to_bytes());
    transcript.record(&phase.to_string(), "bob2", "distribute-shares", &keys.bob2.concat().to_bytes());
    let voters = (0..config.voters)
        .map(|index| VoterRecord {
            index,
            attempts: 0,
            key: None,
            key_l: None,
            key_r: None,
            vote: None,
            cast: false,
            verified: None,
        })
        .collect();
    let mut state = ElectionState {
        config,
        faults,
        phase,
        keys,
        candidates,
        voters,
        bob_records: Vec::new(),
        sessions: Vec::new(),
        rejections: Vec::new(),
        board: BulletinBoard::default(),
        tally: None,
        transcript,
        charlie_pads: BTreeMap::new(),
        counted: BTreeSet::new(),
        accepted: Vec::new(),
    };
    state.advance(ElectionPhase::KeyDist)?;
    Ok(state)
}

struct Submission {
    reg: QubitRegister,
    serials: Option<Vec<usize>>,
}

impl ElectionState {
    fn advance(&mut self, to: ElectionPhase) -> Result<()> {
        if to <= self.phase {
            return Err(Error::PhaseTransition { from: self.phase.to_string(), to: to.to_string() });
        }
        self.phase = to;
        self.transcript.record(&to.to_string(), "system", "phase", to.to_string().as_bytes());
        Ok(())
    }

    fn require(&self, phase: ElectionPhase) -> Result<()> {
        if self.phase != phase {
            return Err(Error::PhaseTransition { from: self.phase.to_string(), to: phase.to_string() });
        }
        Ok(())
    }

    fn log(&mut self, actor: &str, event: &str, payload: &[u8]) {
        let phase = self.phase.to_string();
        self.transcript.record(&phase, actor, event, payload);
    }

    fn tampered(&self, voter: usize, attempt: usize) -> bool {
        self.faults.tamper_session == Some(voter) && attempt <= self.faults.tamper_attempts
    }

    /// One round: every pending voter runs a session; the counter decodes
    /// in anonymous delivery order and publishes verification disclosures.
    fn key_distribution_round<R: Rng + ?Sized>(&mut self, pending: &[usize], rng: &mut R) -> Result<()> {
        let params = self.keys.params.clone();
        let vk = self.keys.voter_keys();
        let (loss, flip) = (self.config.loss_p, self.config.flip_p);
        let mut submissions = Vec::new();
        let mut senders = Vec::new();
        let mut voter_keys = Vec::new();
        for &i in pending {
            self.voters[i].attempts += 1;
            let attempt = self.voters[i].attempts;
            let (bob, reg) = bob_prepare(&self.keys, rng)?;
            self.log("bobs", "prepare-register", format!("{}:{}", actor_voter(i), attempt).as_bytes());
            let mut reg = if params.coded() { channel_transmit(reg, loss, flip, rng)? } else { reg };
            voter_unmask(&mut reg, &bob)?;
            self.bob_records.push(BobRecord { voter: i, attempt, view: bob });
            let randomized = if params.coded() {
                voter_randomize_ecc(reg, &vk, &params, rng).map(|(v, r, s)| (v, r, Some(s)))
            } else {
                voter_randomize(reg, &vk, params.l, params.m, rng).map(|(v, r)| (v, r, None))
            };
            let (view, mut reg, serials) = match randomized {
                Ok(x) => x,
                Err(Error::Undecodable(_)) => {
                    self.log(&actor_voter(i), "request-restart", b"loss");
                    continue;
                }
                Err(e) => return Err(e),
            };
            if self.tampered(i, attempt) {
                for b in 0..params.blocks() {
                    reg.apply(b * params.m, Gate::Y)?;
                }
            }
            let reg = if params.coded() { channel_transmit(reg, loss, flip, rng)? } else { reg };
            submissions.push(Submission { reg, serials });
            senders.push(i);
            voter_keys.push(view.key);
        }

        let d = dispatch(submissions, rng);
        let mut counter_keys = Vec::with_capacity(d.delivered.len());
        let mut fresh_tags: BTreeSet<BitString> = BTreeSet::new();
        let mut round_sessions = Vec::new();
        for del in d.delivered {
            let Submission { mut reg, serials } = del.payload;
            self.log("anon", "deliver-register", &del.handle.to_be_bytes());
            let (raw, tag, key, weak) = match serials {
                None => {
                    let dec = charlie_decode(&mut reg, &self.keys, rng)?;
                    (dec.raw.clone(), Some(dec.tag), dec.accepted.then_some(dec.key), Vec::new())
                }
                Some(serials) => {
                    let dec = charlie_decode_ecc(&mut reg, &serials, &self.keys, rng)?;
                    let raw: BitString = dec.code.iter().map(|c| c.unwrap_or(false)).collect();
                    (raw, dec.tag, dec.key, dec.weak)
                }
            };
            let accepted = key.is_some();
            self.log("charlie", if accepted { "decode-ok" } else { "decode-fail" }, &del.handle.to_be_bytes());
            counter_keys.push((del.handle, key.clone().map(|key| SessionKey { key, weak })));
            round_sessions.push(CharlieSession { handle: del.handle, raw, tag, key, key_l: None, accepted });
        }

        let published = publish_disclosures(&counter_keys, params.check_bits, rng)?;
        for (session, (_, d)) in round_sessions.iter_mut().zip(&published) {
            let (Some(key), Some(d)) = (&session.key, d) else {
                session.accepted = false;
                continue;
            };
            let (key_l, _) = split_key(&strip_disclosed(key, d))?;
            // a tag already in use would make two ballots indistinguishable
            if self.charlie_pads.contains_key(&key_l) || !fresh_tags.insert(key_l.clone()) {
                session.accepted = false;
                continue;
            }
            session.key_l = Some(key_l);
        }
        let published: Vec<_> =
            published.into_iter().zip(&round_sessions).map(|((h, d), s)| (h, d.filter(|_| s.accepted))).collect();
        for (h, d) in &published {
            let payload = d.as_ref().map(|d| d.bits.to_bytes()).unwrap_or_default();
            let mut bytes = h.to_be_bytes().to_vec();
            bytes.extend(payload);
            self.log("charlie", "publish-check", &bytes);
        }

        let mut failed_handles = BTreeSet::new();
        for ((&i, key), &handle) in senders.iter().zip(&voter_keys).zip(&d.handles) {
            let ok = disclosure_for(&published, handle).filter(|d| voter_check(key, d));
            self.log(&actor_voter(i), if ok.is_some() { "verify-ok" } else { "verify-fail" }, &handle.to_be_bytes());
            match ok {
                Some(d) => {
                    let stripped = strip_disclosed(key, d);
                    let (l, r) = split_key(&stripped)?;
                    let v = &mut self.voters[i];
                    v.key = Some(stripped);
                    v.key_l = Some(l);
                    v.key_r = Some(r);
                }
                None => {
                    failed_handles.insert(handle);
                }
            }
        }
        for mut s in round_sessions {
            if failed_handles.contains(&s.handle) {
                s.accepted = false;
            }
            if s.accepted {
                let key = s.key.as_ref().expect("accepted session has a key");
                let d = disclosure_for(&published, s.handle).expect("accepted session was disclosed");
                let (l, r) = split_key(&strip_disclosed(key, d))?;
                self.charlie_pads.insert(l, r);
            }
            self.sessions.push(s);
        }
        Ok(())
    }

    /// Runs rounds until every voter holds a verified key.
    pub fn run_key_distribution_phase<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.require(ElectionPhase::KeyDist)?;
        for _ in 0..=self.config.max_retries {
            let pending: Vec<usize> = self.voters.iter().filter(|v| v.key.is_none()).map(|v| v.index).collect();
            if pending.is_empty() {
                break;
            }
            self.key_distribution_round(&pending, rng)?;
        }
        if let Some((index, attempts)) = self.voters.iter().find(|v| v.key.is_none()).map(|v| (v.index, v.attempts)) {
            self.log("system", "abort", actor_voter(index).as_bytes());
            return Err(Error::Aborted(format!("voter {index} failed key distribution after {attempts} attempts")));
        }
        self.advance(ElectionPhase::Voting)
    }

    /// Voter `i` encrypts candidate `choice`; each key is used once.
    pub fn cast(&mut self, i: usize, choice: usize) -> Result<Ballot> {
        self.require(ElectionPhase::Voting)?;
        if choice >= self.candidates.len() {
            return Err(Error::InvalidParameter(format!("candidate {choice} is not on the ballot")));
        }
        let code = self.candidates.code(choice).clone();
        let v = &mut self.voters[i];
        if v.cast {
            return Err(Error::KeyReuse);
        }
        let (Some(l), Some(r)) = (&v.key_l, &v.key_r) else {
            return Err(Error::InvalidParameter(format!("voter {i} holds no key")));
        };
        let ballot = voter_cast(l, r, &code)?;
        v.cast = true;
        v.vote = Some(choice);
        Ok(ballot)
    }

    pub fn charlie_receive_count(&mut self, ballot: &Ballot) -> Result<Verdict> {
        self.require(ElectionPhase::Voting)?;
        let verdict = match self.charlie_pads.get(&ballot.tag) {
            None => Verdict::Rejected(RejectReason::UnknownTag),
            Some(_) if self.counted.contains(&ballot.tag) => Verdict::Rejected(RejectReason::Replay),
            Some(pad) => {
                let v = otp_decrypt(pad, &ballot.ciphertext)?;
                if self.candidates.index_of(&v).is_some() {
                    self.counted.insert(ballot.tag.clone());
                    self.accepted.push(BoardEntry { tag: ballot.tag.clone(), vote: v });
                    Verdict::Accepted
                } else {
                    Verdict::Rejected(RejectReason::Ineligible)
                }
            }
        };
        match verdict {
            Verdict::Accepted => self.log("charlie", "ballot-accepted", &ballot.payload()),
            Verdict::Rejected(r) => {
                self.rejections.push(r);
                self.log("charlie", &format!("ballot-rejected-{r}"), &ballot.payload());
            }
        }
        Ok(verdict)
    }

    /// Casts every ballot, adds the fault plan's replays and forgeries, and
    /// lets the counter process deliveries until the message budget runs
    /// out.
    pub fn run_voting_phase<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.require(ElectionPhase::Voting)?;
        let mut ballots = Vec::new();
        let mut by_voter = BTreeMap::new();
        for i in 0..self.voters.len() {
            let choice = match &self.config.votes {
                Some(v) => v[i],
                None => rng.random_range(0..self.candidates.len()),
            };
            let b = self.cast(i, choice)?;
            self.log(&actor_voter(i), "submit-ballot", &b.payload());
            by_voter.insert(i, b.clone());
            ballots.push(b);
        }
        for &i in &self.faults.replay {
            if let Some(b) = by_voter.get(&i) {
                ballots.push(b.clone());
            }
        }
        let tag_len = self.keys.params.usable_key_len().div_ceil(2);
        for _ in 0..self.faults.forged {
            ballots.push(Ballot {
                ciphertext: BitString::random(self.candidates.s(), rng),
                tag: BitString::random(tag_len, rng),
            });
        }
        let d = dispatch(ballots, rng);
        let budget = self.config.message_budget.unwrap_or(usize::MAX);
        for (k, del) in d.delivered.into_iter().enumerate() {
            if k >= budget {
                self.log("charlie", "deadline-drop", &del.handle.to_be_bytes());
                continue;
            }
            self.log("anon", "deliver-ballot", &del.payload.payload());
            self.charlie_receive_count(&del.payload)?;
        }
        self.advance(ElectionPhase::Counting)
    }

    /// Shuffles and publishes the board, computes the tally, and lets every
    /// voter look for its own entry.
    pub fn publish_and_verify<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<bool>> {
        self.require(ElectionPhase::Counting)?;
        let mut entries = std::mem::take(&mut self.accepted);
        entries.shuffle(rng);
        if let Some(j) = self.faults.tamper_board {
            if let Some(tag) = self.voters.get(j).and_then(|v| v.key_l.clone()) {
                if let Some(e) = entries.iter_mut().find(|e| e.tag == tag) {
                    let idx = self.candidates.index_of(&e.vote).unwrap_or(0);
                    e.vote = self.candidates.code((idx + 1) % self.candidates.len()).clone();
                }
            }
        }
        self.board = BulletinBoard { entries };
        for e in self.board.entries.clone() {
            self.log("charlie", "board-entry", format!("{}:{}", e.tag, e.vote).as_bytes());
        }
        let tally = Tally::from_board(&self.board, &self.candidates);
        for (name, c) in tally.counts.clone() {
            self.log("charlie", "tally", format!("{name}={c}").as_bytes());
        }
        self.tally = Some(tally);
        let mut flags = Vec::with_capacity(self.voters.len());
        for i in 0..self.voters.len() {
            let v = &self.voters[i];
            let ok = match (&v.key_l, v.vote) {
                (Some(tag), Some(choice)) => {
                    self.board.find(tag).is_some_and(|e| &e.vote == self.candidates.code(choice))
                }
                _ => false,
            };
            self.voters[i].verified = Some(ok);
            self.log(&actor_voter(i), if ok { "board-verified" } else { "board-mismatch" }, &[ok as u8]);
            flags.push(ok);
        }
        self.advance(ElectionPhase::Done)?;
        Ok(flags)
    }

    /// Votes actually cast, as candidate indices per voter.
    pub fn cast_votes(&self) -> Vec<Option<usize>> {
        self.voters.iter().map(|v| v.vote).collect()
    }
}

/// All phases with an explicit fault plan; returns the final state.
pub fn run_election<R: Rng + ?Sized>(config: ElectionConfig, faults: FaultPlan, rng: &mut R) -> Result<ElectionState> {
    let mut state = initialize_election(config, faults, rng)?;
    state.run_key_distribution_phase(rng)?;
    state.run_voting_phase(rng)?;
    state.publish_and_verify(rng)?;
    Ok(state)
}

pub fn run_full_election<R: Rng + ?Sized>(
    config: ElectionConfig,
    rng: &mut R,
) -> Result<(Tally, BulletinBoard, Transcript)> {
    let state = run_election(config, FaultPlan::default(), rng)?;
    let tally = state.tally.clone().expect("counting phase produced a tally");
    Ok((tally, state.board, state.transcript))
}

/// Event names that carry tally information.
pub const TALLY_EVENTS: [&str; 2] = ["board-entry", "tally"];

/// True when no tally-bearing event precedes the counting phase.
pub fn fairness_holds(t: &Transcript) -> bool {
    t.events().iter().all(|e| !TALLY_EVENTS.contains(&e.event.as_str()) || e.phase == "counting")
}
