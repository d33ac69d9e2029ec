//! Collusion attacks.
//!
//! *Basis collusion*: `m` dishonest voters, each with an honest register,
//! guess the first block's bases and test whether their block parities
//! coincide. A correct guess always coincides; a wrong one does so with
//! probability `2^-(m-1)`.
//!
//! *Trace collusion*: after an election, both administrators and the
//! counter pool everything they hold and try to name the author of a
//! ballot.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use super::forge::keys_unchecked;
use crate::aqkd_string::{bob_prepare, hypothesis_consistent, StringParams};
use crate::bits::BitString;
use crate::election::baseline::{administrators_link, classical_baseline_run, BaselineConfig};
use crate::election::{run_election, ElectionConfig, ElectionState, FaultPlan};
use crate::error::{Error, Result};
use crate::primitives::xor_combine;
use crate::rng::{trial_rng, SimRng};
use crate::stats::AttackOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessArm {
    Correct,
    Wrong,
}

fn collusion_trial(m: usize, arm: GuessArm, master: u64, idx: u64) -> Result<bool> {
    let mut rng: SimRng = trial_rng(master, idx);
    let params = StringParams { l: m + 1, m, check_bits: 1, ..Default::default() };
    let keys = keys_unchecked(params, &mut rng)?;
    let truth = keys.derived.basis.slice(0, m);
    let guess = match arm {
        GuessArm::Correct => truth.clone(),
        GuessArm::Wrong if m == 0 => truth.clone(),
        GuessArm::Wrong => loop {
            let g = BitString::random(m, &mut rng);
            if g != truth {
                break g;
            }
        },
    };
    let mut parities = Vec::with_capacity(m);
    for _ in 0..m {
        let (_, reg) = bob_prepare(&keys, &mut rng)?;
        let mut block =
            crate::qubit::QubitRegister::from_states((0..m).map(|q| reg.state(q)).collect::<Result<Vec<_>>>()?);
        parities.push(block.measure(&guess, &mut rng)?.bits.parity());
    }
    Ok(parities.windows(2).all(|w| w[0] == w[1]))
}

/// Coincidence frequency of the `m` colluders' block parities.
pub fn basis_collusion_attack<R: Rng + ?Sized>(
    m: usize,
    arm: GuessArm,
    trials: u64,
    rng: &mut R,
) -> Result<AttackOutcome> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidParameter("basis collusion needs m >= 1 and trials >= 1".into()));
    }
    let master: u64 = rng.random();
    let hits =
        (0..trials).into_par_iter().map(|i| collusion_trial(m, arm, master, i).map(u64::from)).sum::<Result<u64>>()?;
    let (name, closed) = match arm {
        GuessArm::Correct => (format!("collusion_coincide_correct_m{m}"), 1.0),
        GuessArm::Wrong => (format!("collusion_coincide_wrong_m{m}"), 0.5f64.powi(m as i32 - 1)),
    };
    Ok(AttackOutcome::from_counts(name, hits, trials, Some(closed)))
}

/// Voters consumed when every wrong guess must be tested once.
pub fn exclusion_cost(m: usize) -> u64 {
    ((1u64 << m) - 1) * m as u64
}

/// Runs the exhaustive search for `m <= 4`: every wrong guess is tested
/// once with `m` fresh colluders. Reports how often a wrong guess is
/// excluded on its single test and the voters consumed.
pub fn exclusion_simulation<R: Rng + ?Sized>(m: usize, searches: u64, rng: &mut R) -> Result<Vec<AttackOutcome>> {
    if !(1..=4).contains(&m) {
        return Err(Error::BudgetExceeded(format!("exclusion search limited to m <= 4, got {m}")));
    }
    let master: u64 = rng.random();
    let per_search: Vec<(u64, u64, u64)> = (0..searches)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64, u64)> {
            let wrong_guesses = (1u64 << m) - 1;
            let mut excluded = 0;
            for g in 0..wrong_guesses {
                if !collusion_trial(m, GuessArm::Wrong, master, i * wrong_guesses + g)? {
                    excluded += 1;
                }
            }
            Ok((excluded, wrong_guesses, wrong_guesses * m as u64))
        })
        .collect::<Result<_>>()?;
    let excluded: u64 = per_search.iter().map(|x| x.0).sum();
    let tested: u64 = per_search.iter().map(|x| x.1).sum();
    let voters = per_search.first().map(|x| x.2).unwrap_or(0) as f64;
    Ok(vec![
        AttackOutcome::from_counts(
            format!("exclusion_single_test_m{m}"),
            excluded,
            tested,
            Some(1.0 - 0.5f64.powi(m as i32 - 1)),
        ),
        AttackOutcome::exact(format!("exclusion_voters_m{m}"), voters, Some(exclusion_cost(m) as f64)),
    ])
}

/// What the colluding administrators and counter hold after an election.
#[derive(Debug)]
pub struct CollusionView<'a> {
    state: &'a ElectionState,
}

impl<'a> CollusionView<'a> {
    pub fn new(state: &'a ElectionState) -> Result<Self> {
        if state.tally.is_none() {
            return Err(Error::IncompleteTranscript("election has not reached counting".into()));
        }
        if state.keys.params.coded() {
            return Err(Error::IncompleteTranscript("coded sessions keep no full outcome string".into()));
        }
        Ok(CollusionView { state })
    }

    /// Voters whose administrator records are consistent with the session
    /// that produced `tag`. `None` if no such session exists.
    pub fn consistent_voters(&self, tag: &BitString) -> Result<Option<Vec<usize>>> {
        let st = self.state;
        let Some(session) = st.sessions.iter().find(|s| s.accepted && s.key_l.as_ref() == Some(tag)) else {
            return Ok(None);
        };
        let decoded = session.tag.as_ref().ok_or_else(|| Error::IncompleteTranscript("session without tag".into()))?;
        let m = st.keys.params.m;
        let mut out = Vec::new();
        for v in 0..st.voters.len() {
            let mut any = false;
            for rec in st.bob_records.iter().filter(|r| r.voter == v) {
                any |= hypothesis_consistent(&session.raw, &rec.view, decoded, m)?;
            }
            if any {
                out.push(v);
            }
        }
        Ok(Some(out))
    }
}

fn trace_params() -> ElectionConfig {
    ElectionConfig {
        string: StringParams { l: 20, m: 2, check_bits: 2, ..Default::default() },
        s: 2,
        max_retries: 10,
        ..Default::default()
    }
}

/// One run: returns (guess correct, every hypothesis consistent).
fn trace_trial(n_voters: usize, master: u64, idx: u64) -> Result<(bool, bool)> {
    let mut rng: SimRng = trial_rng(master, idx);
    let st = run_election(ElectionConfig { voters: n_voters, ..trace_params() }, FaultPlan::default(), &mut rng)?;
    let view = CollusionView::new(&st)?;
    let target = st.board.entries.choose(&mut rng).ok_or_else(|| Error::IncompleteTranscript("empty board".into()))?;
    let consistent = view
        .consistent_voters(&target.tag)?
        .ok_or_else(|| Error::IncompleteTranscript("board tag without session".into()))?;
    let all = consistent.len() == n_voters;
    let guess =
        *consistent.choose(&mut rng).ok_or_else(|| Error::IncompleteTranscript("no consistent voter".into()))?;
    let owner = st.voters.iter().position(|v| v.key_l.as_ref() == Some(&target.tag));
    Ok((owner == Some(guess), all))
}

/// Linking accuracy against the quantum election, plus the fraction of
/// runs in which every voter hypothesis was parity-consistent.
pub fn trace_collusion_attack<R: Rng + ?Sized>(n_voters: usize, runs: u64, rng: &mut R) -> Result<Vec<AttackOutcome>> {
    if n_voters == 0 || runs == 0 {
        return Err(Error::InvalidParameter("trace collusion needs voters and runs".into()));
    }
    let master: u64 = rng.random();
    let results: Vec<(bool, bool)> =
        (0..runs).into_par_iter().map(|i| trace_trial(n_voters, master, i)).collect::<Result<_>>()?;
    let correct = results.iter().filter(|r| r.0).count() as u64;
    let consistent = results.iter().filter(|r| r.1).count() as u64;
    Ok(vec![
        AttackOutcome::from_counts(format!("trace_accuracy_n{n_voters}"), correct, runs, Some(1.0 / n_voters as f64)),
        AttackOutcome::from_counts(format!("trace_all_consistent_n{n_voters}"), consistent, runs, Some(1.0)),
    ])
}

/// The same question against the classical baseline: the administrators'
/// shares name every ballot's author.
pub fn baseline_trace_attack<R: Rng + ?Sized>(n_voters: usize, runs: u64, rng: &mut R) -> Result<AttackOutcome> {
    let mut correct = 0;
    for _ in 0..runs {
        let out = classical_baseline_run(&BaselineConfig { voters: n_voters, ..Default::default() }, rng)?;
        let links = administrators_link(&out.bob1, &out.bob2, &out.board)?;
        let Some(target) = out.board.entries.choose(rng) else { continue };
        let named = out
            .bob1
            .iter()
            .zip(&out.bob2)
            .position(|(a, b)| xor_combine(&a.tag, &b.tag).is_ok_and(|t| t == target.tag));
        if named.is_some_and(|v| links[v].as_ref() == Some(out.candidates.code(out.votes[v]))) {
            correct += 1;
        }
    }
    Ok(AttackOutcome::from_counts(format!("baseline_trace_accuracy_n{n_voters}"), correct, runs, Some(1.0)))
}
