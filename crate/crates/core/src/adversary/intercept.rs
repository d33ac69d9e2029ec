//! Intercept-resend against the qubit-based protocol.

use rand::Rng;
use rayon::prelude::*;

use crate::aqkd_basic::{charlie_measure_announce, voter_prepare, voter_verify_extract, NoTap, QuantumTap};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::qubit::{encode_conjugate, QubitRegister};
use crate::rng::trial_rng;
use crate::stats::AttackOutcome;

/// Measures every arriving qubit in a uniformly random basis and resends
/// the post-measurement eigenstate. Holds no key material.
pub struct InterceptResend;

impl QuantumTap for InterceptResend {
    fn tap(&mut self, mut reg: QubitRegister, rng: &mut dyn rand::RngCore) -> Result<QubitRegister> {
        let bases = BitString::random(reg.len(), rng);
        let out = reg.measure(&bases, rng)?;
        let mut resent = encode_conjugate(&out.bits, &bases)?;
        for p in out.lost {
            resent.mark_lost(p);
        }
        Ok(resent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterceptParams {
    /// Qubits per session; half of them are checked.
    pub m: usize,
    pub sessions: usize,
    /// Tolerated check mismatch fraction for the threshold arm.
    pub threshold: f64,
    pub attack: bool,
}

impl Default for InterceptParams {
    fn default() -> Self {
        InterceptParams { m: 40, sessions: 10_000, threshold: 0.05, attack: true }
    }
}

struct SessionStats {
    errors: usize,
    qubits: usize,
    check_mismatches: usize,
    detected_strict: bool,
    aborted_at_threshold: bool,
}

fn one_session(p: &InterceptParams, master: u64, idx: u64) -> Result<SessionStats> {
    let mut rng = trial_rng(master, idx);
    let n_i = BitString::random(p.m, &mut rng);
    let (r_i, reg) = voter_prepare(&n_i, p.m, &mut rng)?;
    let mut reg = if p.attack { InterceptResend.tap(reg, &mut rng)? } else { NoTap.tap(reg, &mut rng)? };
    let tag = BitString::zeros(1);
    let rec = charlie_measure_announce(&mut reg, &n_i, &tag, 0.5, &mut rng)?;
    let a = &rec.announcement;
    let check_mismatches = r_i.select(&a.positions).hamming_distance(&a.check_bits)?;
    let strict = voter_verify_extract(&r_i, a, 0.0)?;
    let loose = voter_verify_extract(&r_i, a, p.threshold)?;
    Ok(SessionStats {
        errors: r_i.hamming_distance(&rec.outcome)?,
        qubits: p.m,
        check_mismatches,
        detected_strict: strict.key().is_none(),
        aborted_at_threshold: loose.key().is_none(),
    })
}

/// `P(X > floor(threshold * n))` for `X ~ Bin(n, q)`.
pub fn binomial_tail_above(n: usize, q: f64, threshold: f64) -> f64 {
    let allowed = (threshold * n as f64 + 1e-9).floor() as usize;
    let mut below = 0.0;
    let mut coeff = 1.0f64;
    for k in 0..=allowed.min(n) {
        if k > 0 {
            coeff *= (n - k + 1) as f64 / k as f64;
        }
        below += coeff * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32);
    }
    1.0 - below
}

/// Rows: error rate over all transit qubits, check-bit error rate,
/// zero-tolerance detection and threshold abort frequency.
pub fn intercept_resend_attack<R: Rng + ?Sized>(p: &InterceptParams, rng: &mut R) -> Result<Vec<AttackOutcome>> {
    if p.sessions == 0 || p.m < 2 {
        return Err(Error::InvalidParameter("need at least one session of at least 2 qubits".into()));
    }
    let master: u64 = rng.random();
    let stats: Vec<SessionStats> =
        (0..p.sessions as u64).into_par_iter().map(|i| one_session(p, master, i)).collect::<Result<_>>()?;
    let checks = p.m.div_ceil(2);
    let q = if p.attack { 0.25 } else { 0.0 };
    let sum = |f: &dyn Fn(&SessionStats) -> usize| stats.iter().map(f).sum::<usize>() as u64;
    let n = p.sessions as u64;
    let prefix = if p.attack { "intercept" } else { "no_attack" };
    Ok(vec![
        AttackOutcome::from_counts(format!("{prefix}_error_rate"), sum(&|s| s.errors), sum(&|s| s.qubits), Some(q)),
        AttackOutcome::from_counts(
            format!("{prefix}_check_error_rate"),
            sum(&|s| s.check_mismatches),
            n * checks as u64,
            Some(q),
        ),
        AttackOutcome::from_counts(
            format!("{prefix}_detection_n{checks}"),
            sum(&|s| s.detected_strict as usize),
            n,
            Some(1.0 - (1.0 - q).powi(checks as i32)),
        ),
        AttackOutcome::from_counts(
            format!("{prefix}_abort_at_threshold"),
            sum(&|s| s.aborted_at_threshold as usize),
            n,
            Some(binomial_tail_above(checks, q, p.threshold)),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn tail_oracle() {
        assert!((binomial_tail_above(20, 0.25, 0.0) - (1.0 - 0.75f64.powi(20))).abs() < 1e-12);
        let two_or_more = 1.0 - 0.75f64.powi(20) - 20.0 * 0.25 * 0.75f64.powi(19);
        assert!((binomial_tail_above(20, 0.25, 0.05) - two_or_more).abs() < 1e-12);
        assert_eq!(binomial_tail_above(20, 0.0, 0.0), 0.0);
    }

    #[test]
    fn no_attack_no_errors() {
        let p = InterceptParams { attack: false, sessions: 200, ..Default::default() };
        let rows = intercept_resend_attack(&p, &mut seeded(100)).unwrap();
        assert!(rows.iter().all(|r| r.estimate == 0.0));
    }

    #[test]
    fn attack_near_quarter() {
        let p = InterceptParams { sessions: 500, ..Default::default() };
        let rows = intercept_resend_attack(&p, &mut seeded(101)).unwrap();
        for r in &rows {
            assert_eq!(r.within_sigmas(4.0), Some(true), "{r:?}");
        }
    }

    #[test]
    fn order_independent() {
        let p = InterceptParams { sessions: 64, ..Default::default() };
        let a = intercept_resend_attack(&p, &mut seeded(102)).unwrap();
        let b = intercept_resend_attack(&p, &mut seeded(102)).unwrap();
        assert_eq!(a, b);
    }
}
