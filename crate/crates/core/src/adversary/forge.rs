//! Forged registers.
//!
//! The forger holds voter-level knowledge (`N`, `L`) but neither `s` nor
//! `M`, and submits a register of uniformly random real qubit states.

use rand::Rng;
use rayon::prelude::*;

use crate::aqkd_string::{
    bob_prepare, charlie_decode, charlie_decode_ecc, voter_randomize, StringAqkdKeys, StringParams,
};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::primitives::{otp_encrypt, EccCode, KeyBundle};
use crate::qubit::{QubitRegister, QubitState};
use crate::rng::{trial_rng, SimRng};
use crate::stats::AttackOutcome;

/// Keys without the `m >= 2` protocol floor, for the degenerate `m = 1`
/// control and block-count experiments.
pub fn keys_unchecked<R: Rng + ?Sized>(params: StringParams, rng: &mut R) -> Result<StringAqkdKeys> {
    let blocks = params.blocks();
    let bob1 = KeyBundle::random(params.l, params.m, blocks, rng)?;
    let bob2 = KeyBundle::random(params.l, params.m, blocks, rng)?;
    let derived = bob1.combine(&bob2)?;
    Ok(StringAqkdKeys { params, bob1, bob2, derived })
}

pub fn random_register<R: Rng + ?Sized>(len: usize, rng: &mut R) -> QubitRegister {
    QubitRegister::from_states((0..len).map(|_| QubitState::random(rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forger {
    RandomState,
    /// Control arm: an honest voter's register.
    Honest,
}

fn forge_trial(m: usize, forger: Forger, master: u64, idx: u64) -> Result<bool> {
    let mut rng: SimRng = trial_rng(master, idx);
    let params = StringParams { l: m + 2, m, check_bits: 1, ..Default::default() };
    let keys = keys_unchecked(params, &mut rng)?;
    let mut reg = match forger {
        Forger::RandomState => random_register((m + 2) * m, &mut rng),
        Forger::Honest => {
            let (_, reg) = bob_prepare(&keys, &mut rng)?;
            voter_randomize(reg, &keys.voter_keys(), m + 2, m, &mut rng)?.1
        }
    };
    Ok(charlie_decode(&mut reg, &keys, &mut rng)?.accepted)
}

/// Acceptance rate of forged registers at `l = m + 2`; closed form
/// `2^-m` for the random-state forger and 1 for the honest control.
pub fn forge_ballot_attack<R: Rng + ?Sized>(
    m: usize,
    trials: u64,
    forger: Forger,
    rng: &mut R,
) -> Result<AttackOutcome> {
    if m == 0 || trials == 0 {
        return Err(Error::InvalidParameter("forge attack needs m >= 1 and trials >= 1".into()));
    }
    let master: u64 = rng.random();
    let hits =
        (0..trials).into_par_iter().map(|i| forge_trial(m, forger, master, i).map(u64::from)).sum::<Result<u64>>()?;
    let (name, closed) = match forger {
        Forger::RandomState => (format!("forge_accept_m{m}"), 0.5f64.powi(m as i32)),
        Forger::Honest => (format!("honest_accept_m{m}"), 1.0),
    };
    Ok(AttackOutcome::from_counts(name, hits, trials, Some(closed)))
}

/// Per-trial result of a forger on the coded path.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedForgery {
    /// Fraction of received code bits differing from the forger's
    /// intended codeword.
    pub error_rate: f64,
    /// Some repetition group holds more errors than the code corrects.
    pub beyond_capability: bool,
    pub rejected: bool,
}

fn coded_forge_trial(params: &StringParams, master: u64, idx: u64) -> Result<CodedForgery> {
    let mut rng: SimRng = trial_rng(master, idx);
    let keys = keys_unchecked(params.clone(), &mut rng)?;
    let vk = keys.voter_keys();
    let key = BitString::random(params.key_len(), &mut rng);
    let tag = otp_encrypt(&vk.pad, &key.concat(&vk.check))?;
    let intended = params.ecc.encode(&tag);
    let mut reg = random_register(params.register_len(), &mut rng);
    let serials: Vec<usize> = (0..reg.len()).collect();
    let dec = charlie_decode_ecc(&mut reg, &serials, &keys, &mut rng)?;
    let r = params.ecc.repeat();
    let wrong: Vec<bool> = dec.code.iter().zip(intended.iter()).map(|(c, e)| *c != Some(e)).collect();
    let beyond = wrong.chunks(r).any(|g| g.iter().filter(|w| **w).count() > params.ecc.capability());
    Ok(CodedForgery {
        error_rate: wrong.iter().filter(|w| **w).count() as f64 / wrong.len() as f64,
        beyond_capability: beyond,
        rejected: !dec.accepted,
    })
}

/// Random-state forger against the coded decoder.
pub fn coded_forgery_trials<R: Rng + ?Sized>(
    params: &StringParams,
    trials: u64,
    rng: &mut R,
) -> Result<Vec<CodedForgery>> {
    if params.ecc == EccCode::None {
        return Err(Error::InvalidParameter("coded forgery needs an error-correcting code".into()));
    }
    params.validate()?;
    let master: u64 = rng.random();
    (0..trials).into_par_iter().map(|i| coded_forge_trial(params, master, i)).collect()
}

/// Rows: mean code error rate (no closed form), fraction of trials beyond
/// the code's capability and fraction rejected.
pub fn coded_forgery_attack<R: Rng + ?Sized>(
    params: &StringParams,
    trials: u64,
    rng: &mut R,
) -> Result<Vec<AttackOutcome>> {
    let results = coded_forgery_trials(params, trials, rng)?;
    let n = results.len() as u64;
    let mean = results.iter().map(|r| r.error_rate).sum::<f64>() / n as f64;
    let var = results.iter().map(|r| (r.error_rate - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    Ok(vec![
        AttackOutcome {
            metric: "forged_code_error_rate".into(),
            estimate: mean,
            trials: n,
            stderr: (var / n as f64).sqrt(),
            closed_form: None,
        },
        AttackOutcome::from_counts(
            "forged_beyond_capability",
            results.iter().filter(|r| r.beyond_capability).count() as u64,
            n,
            None,
        ),
        AttackOutcome::from_counts(
            "forged_decode_failure",
            results.iter().filter(|r| r.rejected).count() as u64,
            n,
            None,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn single_check_bit_is_a_coin() {
        let o = forge_ballot_attack(1, 20_000, Forger::RandomState, &mut seeded(110)).unwrap();
        assert_eq!(o.closed_form, Some(0.5));
        assert_eq!(o.within_sigmas(4.0), Some(true), "{o:?}");
    }

    #[test]
    fn honest_control_always_accepted() {
        let o = forge_ballot_attack(3, 500, Forger::Honest, &mut seeded(111)).unwrap();
        assert_eq!(o.estimate, 1.0);
    }

    #[test]
    fn forged_acceptance_tracks_power_of_two() {
        let o = forge_ballot_attack(4, 20_000, Forger::RandomState, &mut seeded(112)).unwrap();
        assert_eq!(o.within_sigmas(4.0), Some(true), "{o:?}");
    }

    #[test]
    fn coded_forgeries_fail() {
        let p = StringParams { l: 20, m: 2, ecc: EccCode::Repetition { r: 3 }, check_bits: 2, ..Default::default() };
        let rows = coded_forgery_attack(&p, 300, &mut seeded(113)).unwrap();
        assert!((rows[0].estimate - 0.5).abs() < 0.02, "{:?}", rows[0]);
        assert_eq!(rows[1].estimate, 1.0);
        assert_eq!(rows[2].estimate, 1.0);
    }
}
