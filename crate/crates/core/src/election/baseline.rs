//! The classical two-administrator election.
//!
//! `Bob1` and `Bob2` each give voter `i` a share `N_ik || T_ik`; the voter
//! and the counter both combine them into `N_i` (ballot pad) and `T_i`
//! (ballot tag). Either administrator alone learns nothing about `T_i`, but
//! the two together hold every `(voter, T_i)` pair, and the board publishes
//! `(T_i, v_i)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{BoardEntry, BulletinBoard, CandidateSet, RejectReason, Tally};
use crate::anonymity::dispatch;
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::primitives::{otp_decrypt, otp_encrypt, xor_combine};
use crate::transcript::Transcript;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub voters: usize,
    pub candidates: Vec<String>,
    pub s: usize,
    pub tag_len: usize,
    pub votes: Option<Vec<usize>>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { voters: 5, candidates: vec!["A".into(), "B".into()], s: 4, tag_len: 16, votes: None }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tag_len == 0 || self.s == 0 {
            return Err(Error::InvalidParameter("s and tag_len must be positive".into()));
        }
        if let Some(v) = &self.votes {
            if v.len() != self.voters || v.iter().any(|&c| c >= self.candidates.len()) {
                return Err(Error::InvalidParameter("votes must give one valid candidate index per voter".into()));
            }
        }
        Ok(())
    }
}

/// One administrator's record for one voter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdminShare {
    pub voter: usize,
    pub pad: BitString,
    pub tag: BitString,
}

/// Registration desk shared by both administrators.
#[derive(Debug, Default)]
pub struct Registrar {
    secrets: Vec<BitString>,
    applied: BTreeSet<usize>,
}

impl Registrar {
    pub fn new(secrets: Vec<BitString>) -> Self {
        Registrar { secrets, applied: BTreeSet::new() }
    }

    /// Accepts voter `id` once, and only with the right secret number.
    pub fn apply(&mut self, id: usize, secret: &BitString) -> Result<()> {
        if self.applied.contains(&id) {
            return Err(Error::AlreadyRegistered(id));
        }
        match self.secrets.get(id) {
            Some(s) if s == secret => {
                self.applied.insert(id);
                Ok(())
            }
            _ => Err(Error::InvalidParameter(format!("voter {id} presented a wrong secret number"))),
        }
    }
}

#[derive(Debug)]
pub struct BaselineOutcome {
    pub tally: Tally,
    pub board: BulletinBoard,
    pub transcript: Transcript,
    pub candidates: CandidateSet,
    pub bob1: Vec<AdminShare>,
    pub bob2: Vec<AdminShare>,
    pub votes: Vec<usize>,
    pub rejections: Vec<RejectReason>,
}

pub fn classical_baseline_run<R: Rng + ?Sized>(config: &BaselineConfig, rng: &mut R) -> Result<BaselineOutcome> {
    config.validate()?;
    let run_id = format!("{:016x}", rng.random::<u64>());
    let mut t = Transcript::new(run_id);
    let candidates = CandidateSet::sample(&config.candidates, config.s, 0, rng)?;
    let secrets: Vec<BitString> = (0..config.voters).map(|_| BitString::random(32, rng)).collect();
    let mut registrar = Registrar::new(secrets.clone());
    let (mut bob1, mut bob2) = (Vec::new(), Vec::new());
    let mut voter_keys = Vec::new();
    let mut charlie_db: BTreeMap<BitString, BitString> = BTreeMap::new();
    for (i, secret) in secrets.iter().enumerate() {
        registrar.apply(i, secret)?;
        t.record("initial", &format!("voter-{i}"), "apply", &secret.to_bytes());
        let s1 =
            AdminShare { voter: i, pad: BitString::random(config.s, rng), tag: BitString::random(config.tag_len, rng) };
        let s2 =
            AdminShare { voter: i, pad: BitString::random(config.s, rng), tag: BitString::random(config.tag_len, rng) };
        let pad = xor_combine(&s1.pad, &s2.pad)?;
        let tag = xor_combine(&s1.tag, &s2.tag)?;
        t.record("initial", "bob1", "share", &s1.tag.concat(&s1.pad).to_bytes());
        t.record("initial", "bob2", "share", &s2.tag.concat(&s2.pad).to_bytes());
        charlie_db.insert(tag.clone(), pad.clone());
        voter_keys.push((pad, tag));
        bob1.push(s1);
        bob2.push(s2);
    }

    let mut votes = Vec::with_capacity(config.voters);
    let mut ballots = Vec::with_capacity(config.voters);
    for (i, (pad, tag)) in voter_keys.iter().enumerate() {
        let choice = match &config.votes {
            Some(v) => v[i],
            None => rng.random_range(0..candidates.len()),
        };
        votes.push(choice);
        let ct = otp_encrypt(pad, candidates.code(choice))?;
        t.record("voting", &format!("voter-{i}"), "submit-ballot", &tag.concat(&ct).to_bytes());
        ballots.push((tag.clone(), ct));
    }
    let mut seen = BTreeSet::new();
    let mut accepted = Vec::new();
    let mut rejections = Vec::new();
    for del in dispatch(ballots, rng).delivered {
        let (tag, ct) = del.payload;
        let verdict = match charlie_db.get(&tag) {
            None => Err(RejectReason::UnknownTag),
            Some(_) if seen.contains(&tag) => Err(RejectReason::Replay),
            Some(pad) => {
                let v = otp_decrypt(pad, &ct)?;
                if candidates.index_of(&v).is_some() {
                    seen.insert(tag.clone());
                    accepted.push(BoardEntry { tag: tag.clone(), vote: v });
                    Ok(())
                } else {
                    Err(RejectReason::Ineligible)
                }
            }
        };
        match verdict {
            Ok(()) => t.record("voting", "charlie", "ballot-accepted", &tag.concat(&ct).to_bytes()),
            Err(r) => {
                rejections.push(r);
                t.record("voting", "charlie", &format!("ballot-rejected-{r}"), &tag.concat(&ct).to_bytes());
            }
        }
    }
    accepted.shuffle(rng);
    let board = BulletinBoard { entries: accepted };
    for e in &board.entries {
        t.record("counting", "charlie", "board-entry", format!("{}:{}", e.tag, e.vote).as_bytes());
    }
    let tally = Tally::from_board(&board, &candidates);
    for (name, c) in &tally.counts {
        t.record("counting", "charlie", "tally", format!("{name}={c}").as_bytes());
    }
    Ok(BaselineOutcome { tally, board, transcript: t, candidates, bob1, bob2, votes, rejections })
}

/// What colluding administrators conclude: for each voter, the board vote
/// whose tag equals the XOR of their two shares.
pub fn administrators_link(
    bob1: &[AdminShare],
    bob2: &[AdminShare],
    board: &BulletinBoard,
) -> Result<Vec<Option<BitString>>> {
    bob1.iter()
        .zip(bob2)
        .map(|(a, b)| {
            let tag = xor_combine(&a.tag, &b.tag)?;
            Ok(board.find(&tag).map(|e| e.vote.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn honest_run_tallies() {
        let mut rng = seeded(70);
        let cfg = BaselineConfig { voters: 5, votes: Some(vec![0, 1, 0, 0, 1]), ..Default::default() };
        let out = classical_baseline_run(&cfg, &mut rng).unwrap();
        assert_eq!(out.tally.get("A"), Some(3));
        assert_eq!(out.tally.get("B"), Some(2));
        assert!(out.rejections.is_empty());
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut rng = seeded(71);
        let secret = BitString::random(32, &mut rng);
        let mut r = Registrar::new(vec![secret.clone()]);
        r.apply(0, &secret).unwrap();
        assert_eq!(r.apply(0, &secret), Err(Error::AlreadyRegistered(0)));
        let mut r = Registrar::new(vec![secret.clone()]);
        assert!(r.apply(0, &(&secret ^ &BitString::ones(32))).is_err());
    }

    #[test]
    fn colluding_administrators_link_everyone() {
        let mut rng = seeded(72);
        for _ in 0..20 {
            let out = classical_baseline_run(&BaselineConfig { voters: 8, ..Default::default() }, &mut rng).unwrap();
            let links = administrators_link(&out.bob1, &out.bob2, &out.board).unwrap();
            for (link, &v) in links.iter().zip(&out.votes) {
                assert_eq!(link.as_ref(), Some(out.candidates.code(v)));
            }
        }
    }
}
