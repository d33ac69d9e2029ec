//! Qubit-string-based distributed anonymous key distribution.
//!
//! Bob1 and Bob2 jointly prepare `H^{S2} Y^{R2} H^{S1} Y^{R1} |0>`, where
//! each `R` is drawn block by block so its block parities equal that
//! administrator's `M` share. The voter encrypts `K_i || N` under `L` into a
//! tag `T_i`, expands the tag into a parity-constrained mask `P_i` and
//! applies `Y^{P_i}`. The counter measures in `s = S1 ^ S2`, collapses each
//! block to its parity, strips `M` and decrypts. Nobody holding only
//! `R1`, `R2` and the measured outcome can tell which voter a session came
//! from: every hypothesis is parity-consistent.
//!
//! The coded variant carries the same tag over a lossy, noisy channel. A
//! lost qubit erases its whole block (the counter only knows block
//! parities of `R1 ^ R2`), so the repetition code works on block parities:
//! each tag bit is carried by `r` blocks and decoded by majority over the
//! surviving blocks.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{ensure_len, Error, Result};
use crate::primitives::{
    otp_decrypt, otp_encrypt, parity_collapse, parity_expand, sample_positions, xor_combine, EccCode, KeyBundle,
};
use crate::qubit::{prepare_layered, QubitRegister};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StringParams {
    pub l: usize,
    pub m: usize,
    /// `EccCode::None` selects the noiseless path.
    pub ecc: EccCode,
    /// Bob's optional per-voter Y mask on the Bob-to-voter leg.
    pub flip_mask: bool,
    /// Key bits the counter discloses for verification.
    pub check_bits: usize,
    /// Coded path: largest tolerated fraction of tag bits whose surviving
    /// blocks disagree.
    pub max_disagreement: f64,
}

impl Default for StringParams {
    fn default() -> Self {
        StringParams { l: 32, m: 8, ecc: EccCode::None, flip_mask: false, check_bits: 4, max_disagreement: 0.25 }
    }
}

impl StringParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.l <= self.m {
            return Err(Error::InvalidParameter(format!("need l > m >= 2, got l={}, m={}", self.l, self.m)));
        }
        self.ecc.validate()?;
        if self.check_bits == 0 {
            return Err(Error::InvalidParameter("check_bits must be positive; an empty check is vacuous".into()));
        }
        if self.check_bits > self.key_len() {
            return Err(Error::InvalidParameter(format!(
                "check_bits {} exceeds the {} key bits",
                self.check_bits,
                self.key_len()
            )));
        }
        if !(0.0..=1.0).contains(&self.max_disagreement) {
            return Err(Error::InvalidParameter("max_disagreement outside [0, 1]".into()));
        }
        Ok(())
    }

    /// `|K_i| = l - m`.
    pub fn key_len(&self) -> usize {
        self.l - self.m
    }

    /// Key bits left after the verification disclosure.
    pub fn usable_key_len(&self) -> usize {
        self.key_len() - self.check_bits
    }

    /// Parity blocks in the register.
    pub fn blocks(&self) -> usize {
        self.ecc.encoded_len(self.l)
    }

    pub fn register_len(&self) -> usize {
        self.blocks() * self.m
    }

    pub fn coded(&self) -> bool {
        self.ecc != EccCode::None
    }
}

/// Both administrators' bundles and the XOR-derived strings. The same for
/// every voter.
#[derive(Debug, Clone, PartialEq)]
pub struct StringAqkdKeys {
    pub params: StringParams,
    pub bob1: KeyBundle,
    pub bob2: KeyBundle,
    /// `s`, `M`, `N`, `L` as the counter computes them.
    pub derived: KeyBundle,
}

/// What a voter can compute: `N` and `L` only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoterKeys {
    pub check: BitString,
    pub pad: BitString,
}

impl StringAqkdKeys {
    pub fn voter_keys(&self) -> VoterKeys {
        VoterKeys { check: self.derived.check.clone(), pad: self.derived.pad.clone() }
    }

    /// Recomputes the derived strings from the two bundles.
    pub fn rederive(&self) -> Result<KeyBundle> {
        self.bob1.combine(&self.bob2)
    }
}

pub fn setup_keys<R: Rng + ?Sized>(params: &StringParams, rng: &mut R) -> Result<StringAqkdKeys> {
    params.validate()?;
    let bob1 = KeyBundle::random(params.l, params.m, params.blocks(), rng)?;
    let bob2 = KeyBundle::random(params.l, params.m, params.blocks(), rng)?;
    let derived = bob1.combine(&bob2)?;
    Ok(StringAqkdKeys { params: params.clone(), bob1, bob2, derived })
}

/// Per-session administrator records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringSessionBobView {
    pub r1: BitString,
    pub r2: BitString,
    pub flip_mask: Option<BitString>,
}

pub fn bob_prepare<R: Rng + ?Sized>(
    keys: &StringAqkdKeys,
    rng: &mut R,
) -> Result<(StringSessionBobView, QubitRegister)> {
    let m = keys.params.m;
    let r1 = parity_expand(&keys.bob1.parity, m, rng)?;
    let r2 = parity_expand(&keys.bob2.parity, m, rng)?;
    let mut reg = prepare_layered(&keys.bob1.basis, &r1, &keys.bob2.basis, &r2)?;
    let flip_mask = if keys.params.flip_mask {
        let mask = BitString::random(reg.len(), rng);
        reg.apply_y_mask(&mask)?;
        Some(mask)
    } else {
        None
    };
    Ok((StringSessionBobView { r1, r2, flip_mask }, reg))
}

/// Removes Bob's transit mask, using the key shared with the voter.
pub fn voter_unmask(reg: &mut QubitRegister, view: &StringSessionBobView) -> Result<()> {
    match &view.flip_mask {
        Some(mask) => reg.apply_y_mask(mask),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StringSessionVoterView {
    pub key: BitString,
    pub tag: BitString,
    pub mask: BitString,
    /// Coded path only: the repetition-expanded mask actually applied.
    pub coded_mask: Option<BitString>,
    /// Coded path only: positions received from Bob.
    pub received: Option<Vec<usize>>,
}

fn draw_tag<R: Rng + ?Sized>(vk: &VoterKeys, l: usize, m: usize, rng: &mut R) -> Result<(BitString, BitString)> {
    ensure_len(m, vk.check.len())?;
    ensure_len(l, vk.pad.len())?;
    let key = BitString::random(l - m, rng);
    let tag = otp_encrypt(&vk.pad, &key.concat(&vk.check))?;
    Ok((key, tag))
}

/// Draws `K_i`, forms `T_i = E_L[K_i || N]` and applies `Y^{P_i}` with
/// block parities of `P_i` equal to `T_i`.
pub fn voter_randomize<R: Rng + ?Sized>(
    mut reg: QubitRegister,
    vk: &VoterKeys,
    l: usize,
    m: usize,
    rng: &mut R,
) -> Result<(StringSessionVoterView, QubitRegister)> {
    ensure_len(l * m, reg.len())?;
    let (key, tag) = draw_tag(vk, l, m, rng)?;
    let mask = parity_expand(&tag, m, rng)?;
    reg.apply_y_mask(&mask)?;
    Ok((StringSessionVoterView { key, tag, mask, coded_mask: None, received: None }, reg))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub accepted: bool,
    pub key: BitString,
    pub check: BitString,
    pub tag: BitString,
    /// Raw outcome `r'` in basis `s`.
    pub raw: BitString,
}

/// Noiseless decode: measure in `s`, collapse to block parities, strip
/// `M`, decrypt with `L`, accept iff the check string matches `N`.
pub fn charlie_decode<R: Rng + ?Sized>(
    reg: &mut QubitRegister,
    keys: &StringAqkdKeys,
    rng: &mut R,
) -> Result<DecodeResult> {
    let p = &keys.params;
    if p.coded() {
        return Err(Error::InvalidParameter("coded keys need charlie_decode_ecc".into()));
    }
    ensure_len(p.register_len(), reg.len())?;
    if let Some(pos) = reg.lost_positions().first() {
        return Err(Error::LostPosition(*pos));
    }
    let out = reg.measure(&keys.derived.basis, rng)?;
    let collapsed = parity_collapse(&out.bits, p.m)?;
    let tag = xor_combine(&keys.derived.parity, &collapsed)?;
    let plain = otp_decrypt(&keys.derived.pad, &tag)?;
    let key = plain.slice(0, p.key_len());
    let check = plain.slice(p.key_len(), p.l);
    Ok(DecodeResult { accepted: check == keys.derived.check, key, check, tag, raw: out.bits })
}

/// Coded variant of [`voter_randomize`]. The mask `P_i` is expanded from
/// the tag (so `p_i`, its block parities, equals `T_i`) and each of its
/// blocks is repeated over `r` register blocks. `Y` is applied only where
/// a qubit arrived.
pub fn voter_randomize_ecc<R: Rng + ?Sized>(
    mut reg: QubitRegister,
    vk: &VoterKeys,
    params: &StringParams,
    rng: &mut R,
) -> Result<(StringSessionVoterView, QubitRegister, Vec<usize>)> {
    let (l, m, r) = (params.l, params.m, params.ecc.repeat());
    ensure_len(params.register_len(), reg.len())?;
    let received = reg.received_positions();
    let lost: BTreeSet<usize> = reg.lost_positions().into_iter().collect();
    for g in 0..l {
        let alive = (0..r).any(|c| {
            let b = g * r + c;
            (b * m..(b + 1) * m).all(|q| !lost.contains(&q))
        });
        if !alive {
            return Err(Error::Undecodable(format!("every block carrying tag bit {} was lost", g + 1)));
        }
    }
    let (key, tag) = draw_tag(vk, l, m, rng)?;
    let mask = parity_expand(&tag, m, rng)?;
    let coded_mask = block_repeat(&mask, m, r);
    reg.apply_y_mask(&coded_mask)?;
    let view =
        StringSessionVoterView { key, tag, mask, coded_mask: Some(coded_mask), received: Some(received.clone()) };
    Ok((view, reg, received))
}

/// Repeats each `m`-bit block `r` times in place.
pub fn block_repeat(x: &BitString, m: usize, r: usize) -> BitString {
    x.as_slice().chunks(m).flat_map(|b| std::iter::repeat_n(b, r).flatten().copied()).collect()
}

/// `p_ij`: XOR of block `j` of `P_i`.
pub fn derived_parities(mask: &BitString, m: usize) -> Result<BitString> {
    parity_collapse(mask, m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EccDecodeResult {
    pub accepted: bool,
    pub key: Option<BitString>,
    pub tag: Option<BitString>,
    /// Block-level received code `D'` after stripping `M`; `None` where a
    /// block lost a qubit.
    pub code: Vec<Option<bool>>,
    pub disagreeing_groups: usize,
    /// Key positions decoded from a single surviving copy; a channel flip
    /// there passes decoding unnoticed.
    pub weak: Vec<usize>,
    pub failure: Option<String>,
}

/// Coded decode. `serials` are the positions the voter reports as received
/// from Bob; any block missing a qubit on either leg is an erasure.
pub fn charlie_decode_ecc<R: Rng + ?Sized>(
    reg: &mut QubitRegister,
    serials: &[usize],
    keys: &StringAqkdKeys,
    rng: &mut R,
) -> Result<EccDecodeResult> {
    let p = &keys.params;
    ensure_len(p.register_len(), reg.len())?;
    if let Some(bad) = serials.iter().find(|&&s| s >= reg.len()) {
        return Err(Error::InvalidParameter(format!("serial {bad} outside the register")));
    }
    let reported: BTreeSet<usize> = serials.iter().copied().collect();
    let out = reg.measure(&keys.derived.basis, rng)?;
    let arrived: BTreeSet<usize> = out.received().into_iter().collect();
    let m = p.m;
    let code: Vec<Option<bool>> = (0..p.blocks())
        .map(|b| {
            let span = b * m..(b + 1) * m;
            if span.clone().all(|q| reported.contains(&q) && arrived.contains(&q)) {
                let parity = span.fold(false, |acc, q| acc ^ out.bits.as_slice()[q]);
                Some(parity ^ keys.derived.parity.as_slice()[b])
            } else {
                None
            }
        })
        .collect();
    let fail = |reason: String, code: Vec<Option<bool>>, disagreeing_groups| EccDecodeResult {
        accepted: false,
        key: None,
        tag: None,
        code,
        disagreeing_groups,
        weak: Vec::new(),
        failure: Some(reason),
    };
    let decoded = match p.ecc.decode_punctured(&code) {
        Ok(d) => d,
        Err(e) => return Ok(fail(e.to_string(), code, 0)),
    };
    let rate = decoded.disagreeing_groups as f64 / p.l as f64;
    if rate > p.max_disagreement {
        return Ok(fail(format!("disagreement rate {rate:.3} exceeds budget"), code, decoded.disagreeing_groups));
    }
    let plain = otp_decrypt(&keys.derived.pad, &decoded.data)?;
    let key = plain.slice(0, p.key_len());
    let check = plain.slice(p.key_len(), p.l);
    if check != keys.derived.check {
        return Ok(fail("check string mismatch".into(), code, decoded.disagreeing_groups));
    }
    let r = p.ecc.repeat();
    let weak =
        (0..p.key_len()).filter(|g| code[g * r..(g + 1) * r].iter().filter(|c| c.is_some()).count() == 1).collect();
    Ok(EccDecodeResult {
        accepted: true,
        key: Some(key),
        tag: Some(decoded.data),
        code,
        disagreeing_groups: decoded.disagreeing_groups,
        weak,
        failure: None,
    })
}

/// Key bits the counter publishes so a voter can confirm the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDisclosure {
    pub positions: Vec<usize>,
    pub bits: BitString,
}

pub fn charlie_disclose<R: Rng + ?Sized>(key: &BitString, count: usize, rng: &mut R) -> CheckDisclosure {
    let positions = sample_positions(key.len(), count, rng);
    CheckDisclosure { bits: key.select(&positions), positions }
}

/// Disclosure that covers every position in `weak`, filled up to `count`
/// with uniformly drawn other positions. `None` when `weak` alone exceeds
/// `count`; the counter then refuses the session.
pub fn charlie_disclose_covering<R: Rng + ?Sized>(
    key: &BitString,
    weak: &[usize],
    count: usize,
    rng: &mut R,
) -> Option<CheckDisclosure> {
    let must: BTreeSet<usize> = weak.iter().copied().filter(|&p| p < key.len()).collect();
    if must.len() > count {
        return None;
    }
    let rest: Vec<usize> = (0..key.len()).filter(|p| !must.contains(p)).collect();
    let fill = sample_positions(rest.len(), count.min(key.len()) - must.len(), rng);
    let mut positions: Vec<usize> = must.into_iter().chain(fill.into_iter().map(|i| rest[i])).collect();
    positions.sort_unstable();
    Some(CheckDisclosure { bits: key.select(&positions), positions })
}

pub fn voter_check(key: &BitString, d: &CheckDisclosure) -> bool {
    d.positions.iter().all(|&p| p < key.len()) && key.select(&d.positions) == d.bits
}

/// Drops the disclosed positions; what remains is split into the ballot tag
/// and the ballot pad, so no disclosed bit is ever used for encryption.
pub fn strip_disclosed(key: &BitString, d: &CheckDisclosure) -> BitString {
    let disclosed: BTreeSet<usize> = d.positions.iter().copied().collect();
    (0..key.len()).filter(|p| !disclosed.contains(p)).map(|p| key.as_slice()[p]).collect()
}

/// Counter side of the public verification round: for every session
/// (addressed by reply handle) either a disclosure or `None` when decoding
/// failed or the session was refused.
pub fn publish_disclosures<R: Rng + ?Sized>(
    counter_keys: &[(u64, Option<SessionKey>)],
    check_bits: usize,
    rng: &mut R,
) -> Result<Vec<(u64, Option<CheckDisclosure>)>> {
    if check_bits == 0 {
        return Err(Error::InvalidParameter("check subset of size 0 verifies nothing".into()));
    }
    Ok(counter_keys
        .iter()
        .map(|(h, k)| (*h, k.as_ref().and_then(|k| charlie_disclose_covering(&k.key, &k.weak, check_bits, rng))))
        .collect())
}

/// A decoded key as the counter holds it before verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub key: BitString,
    /// See [`EccDecodeResult::weak`]; empty on the noiseless path.
    pub weak: Vec<usize>,
}

impl From<BitString> for SessionKey {
    fn from(key: BitString) -> Self {
        SessionKey { key, weak: Vec::new() }
    }
}

/// The disclosure addressed to `handle`, if any.
pub fn disclosure_for(published: &[(u64, Option<CheckDisclosure>)], handle: u64) -> Option<&CheckDisclosure> {
    published.iter().find(|(h, _)| *h == handle).and_then(|(_, d)| d.as_ref())
}

/// Publishes disclosures and lets every voter compare them with its own
/// key. Returns one success flag per voter, in `voter_keys` order.
pub fn verification_broadcast<R: Rng + ?Sized>(
    counter_keys: &[(u64, Option<SessionKey>)],
    voter_keys: &[(u64, BitString)],
    check_bits: usize,
    rng: &mut R,
) -> Result<Vec<bool>> {
    let published = publish_disclosures(counter_keys, check_bits, rng)?;
    Ok(voter_keys.iter().map(|(h, key)| disclosure_for(&published, *h).is_some_and(|d| voter_check(key, d))).collect())
}

/// The unlinkability witness: with `r'` from one session and the
/// administrator records `(R1, R2)` of any voter, `r' ^ R1 ^ R2` has block
/// parities equal to the decoded tag.
pub fn hypothesis_consistent(raw: &BitString, bob: &StringSessionBobView, tag: &BitString, m: usize) -> Result<bool> {
    let mask_hat = xor_combine(&xor_combine(raw, &bob.r1)?, &bob.r2)?;
    Ok(parity_collapse(&mask_hat, m)? == *tag)
}

/// Counter-side registry of tags already accepted.
#[derive(Debug, Default)]
pub struct TagRegistry {
    seen: BTreeSet<BitString>,
}

impl TagRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `tag`; false if it was already present.
    pub fn accept(&mut self, tag: &BitString) -> bool {
        self.seen.insert(tag.clone())
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::{channel_transmit, Gate, QubitState};
    use crate::rng::seeded;

    fn params(l: usize, m: usize) -> StringParams {
        StringParams { l, m, check_bits: 1, ..Default::default() }
    }

    #[test]
    fn setup_lengths() {
        let mut rng = seeded(41);
        let k = setup_keys(&params(4, 2), &mut rng).unwrap();
        for b in [&k.bob1, &k.bob2] {
            assert_eq!((b.basis.len(), b.parity.len(), b.check.len(), b.pad.len()), (8, 4, 2, 4));
        }
        assert_eq!(k.rederive().unwrap(), k.derived);
        assert_eq!(k.derived.basis, &k.bob1.basis ^ &k.bob2.basis);
        assert!(setup_keys(&params(2, 2), &mut rng).is_err());
        assert!(setup_keys(&params(2, 3), &mut rng).is_err());
    }

    #[test]
    fn bob_parities_match_shares() {
        let mut rng = seeded(42);
        let k = setup_keys(&params(6, 3), &mut rng).unwrap();
        for _ in 0..100 {
            let (view, _) = bob_prepare(&k, &mut rng).unwrap();
            assert_eq!(parity_collapse(&view.r1, 3).unwrap(), k.bob1.parity);
            assert_eq!(parity_collapse(&view.r2, 3).unwrap(), k.bob2.parity);
        }
    }

    #[test]
    fn bob_register_collapses_to_single_layer() {
        let mut rng = seeded(43);
        let k = setup_keys(&params(4, 3), &mut rng).unwrap();
        for _ in 0..50 {
            let (view, reg) = bob_prepare(&k, &mut rng).unwrap();
            let r = &view.r1 ^ &view.r2;
            for q in 0..reg.len() {
                let reduced = QubitState::ZERO
                    .apply(Gate::y_pow(r.as_slice()[q]))
                    .apply(Gate::h_pow(k.derived.basis.as_slice()[q]));
                assert!(reg.state(q).unwrap().eq_up_to_sign(&reduced, 1e-12));
            }
        }
    }

    #[test]
    fn bob_register_parity_in_s_brute_force() {
        // every key choice for a single block at m = 2
        let mut rng = seeded(44);
        for idx in 0..(1u64 << 6) {
            let key = BitString::from_index(idx, 6);
            let (s1, s2) = (key.slice(0, 2), key.slice(2, 4));
            let (m1, m2) = (key.slice(4, 5), key.slice(5, 6));
            let mut bob1 = KeyBundle::random(3, 2, 1, &mut rng).unwrap();
            let mut bob2 = KeyBundle::random(3, 2, 1, &mut rng).unwrap();
            bob1.basis = s1;
            bob1.parity = m1;
            bob2.basis = s2;
            bob2.parity = m2;
            let derived = bob1.combine(&bob2).unwrap();
            let keys = StringAqkdKeys { params: params(3, 2), bob1, bob2, derived };
            for _ in 0..4 {
                let (_, mut reg) = bob_prepare(&keys, &mut rng).unwrap();
                let out = reg.measure(&keys.derived.basis, &mut rng).unwrap();
                assert_eq!(out.bits.parity(), keys.derived.parity.bit(1));
            }
        }
    }

    #[test]
    fn all_zero_keys_give_even_computational_blocks() {
        let mut rng = seeded(45);
        let mut k = setup_keys(&params(4, 2), &mut rng).unwrap();
        for b in [&mut k.bob1, &mut k.bob2] {
            b.basis = BitString::zeros(8);
            b.parity = BitString::zeros(4);
        }
        k.derived = k.rederive().unwrap();
        let (view, reg) = bob_prepare(&k, &mut rng).unwrap();
        let r = &view.r1 ^ &view.r2;
        for q in 0..8 {
            let e = if r.as_slice()[q] { QubitState::ONE } else { QubitState::ZERO };
            assert!(reg.state(q).unwrap().eq_up_to_sign(&e, 1e-12));
        }
        assert!(parity_collapse(&r, 2).unwrap().iter().all(|b| !b));
    }

    #[test]
    fn voter_mask_parity_is_tag() {
        let mut rng = seeded(46);
        let k = setup_keys(&params(8, 3), &mut rng).unwrap();
        for _ in 0..100 {
            let (_, reg) = bob_prepare(&k, &mut rng).unwrap();
            let (view, _) = voter_randomize(reg, &k.voter_keys(), 8, 3, &mut rng).unwrap();
            assert_eq!(parity_collapse(&view.mask, 3).unwrap(), view.tag);
            assert_eq!(view.tag, otp_encrypt(&k.derived.pad, &view.key.concat(&k.derived.check)).unwrap());
        }
    }

    #[test]
    fn zero_pad_leaves_tag_in_clear() {
        let mut rng = seeded(47);
        let vk = VoterKeys { check: BitString::random(2, &mut rng), pad: BitString::zeros(5) };
        let reg = QubitRegister::from_states(vec![QubitState::ZERO; 10]);
        let (view, _) = voter_randomize(reg, &vk, 5, 2, &mut rng).unwrap();
        assert_eq!(view.tag, view.key.concat(&vk.check));
    }

    #[test]
    fn double_y_restores_outcome() {
        let mut rng = seeded(48);
        let mut reg = QubitRegister::from_states(vec![QubitState::PLUS]);
        reg.apply(0, Gate::Y).unwrap();
        reg.apply(0, Gate::Y).unwrap();
        assert_eq!(reg.measure(&BitString::ones(1), &mut rng).unwrap().bits, BitString::zeros(1));
    }

    #[test]
    fn randomize_rejects_wrong_length() {
        let mut rng = seeded(49);
        let k = setup_keys(&params(4, 2), &mut rng).unwrap();
        let reg = QubitRegister::from_states(vec![QubitState::ZERO; 7]);
        assert!(voter_randomize(reg, &k.voter_keys(), 4, 2, &mut rng).is_err());
    }

    #[test]
    fn end_to_end_identity_small_parameters() {
        let mut rng = seeded(50);
        // l = m leaves an empty key and is rejected; (3, 2) stands in for (2, 2)
        for (l, m) in [(3usize, 2usize), (4, 2), (4, 3)] {
            let p = params(l, m);
            for _ in 0..1000 {
                let k = setup_keys(&p, &mut rng).unwrap();
                let (bob, reg) = bob_prepare(&k, &mut rng).unwrap();
                let (voter, reg) = voter_randomize(reg, &k.voter_keys(), p.l, p.m, &mut rng).unwrap();
                let mut reg = reg;
                let dec = charlie_decode(&mut reg, &k, &mut rng).unwrap();
                assert!(dec.accepted);
                assert_eq!(dec.key, voter.key);
                assert_eq!(dec.check, k.derived.check);
                // parity chain and unlinkability witness
                let expected = &k.derived.parity ^ &voter.tag;
                assert_eq!(parity_collapse(&dec.raw, p.m).unwrap(), expected);
                assert!(hypothesis_consistent(&dec.raw, &bob, &dec.tag, p.m).unwrap());
            }
        }
    }

    #[test]
    fn identity_run_is_all_zero() {
        let mut rng = seeded(51);
        let p = params(4, 2);
        let mut k = setup_keys(&p, &mut rng).unwrap();
        for b in [&mut k.bob1, &mut k.bob2] {
            *b = KeyBundle {
                basis: BitString::zeros(8),
                parity: BitString::zeros(4),
                check: BitString::zeros(2),
                pad: BitString::zeros(4),
            };
        }
        k.derived = k.rederive().unwrap();
        // voter key forced to zero: with zero pad and zero check, tag is zero
        let mut reg = QubitRegister::from_states(vec![QubitState::ZERO; 8]);
        let dec = charlie_decode(&mut reg, &k, &mut rng).unwrap();
        assert_eq!(dec.raw, BitString::zeros(8));
        assert_eq!(dec.tag, BitString::zeros(4));
        assert!(dec.accepted);
    }

    #[test]
    fn flip_mask_is_removed_by_voter() {
        let mut rng = seeded(52);
        let p = StringParams { flip_mask: true, ..params(6, 2) };
        let k = setup_keys(&p, &mut rng).unwrap();
        for _ in 0..100 {
            let (bob, mut reg) = bob_prepare(&k, &mut rng).unwrap();
            assert!(bob.flip_mask.is_some());
            voter_unmask(&mut reg, &bob).unwrap();
            let (voter, mut reg) = voter_randomize(reg, &k.voter_keys(), 6, 2, &mut rng).unwrap();
            let dec = charlie_decode(&mut reg, &k, &mut rng).unwrap();
            assert!(dec.accepted && dec.key == voter.key);
        }
    }

    #[test]
    fn decode_refuses_lost_positions() {
        let mut rng = seeded(53);
        let k = setup_keys(&params(4, 2), &mut rng).unwrap();
        let (_, mut reg) = bob_prepare(&k, &mut rng).unwrap();
        reg.mark_lost(3);
        assert_eq!(charlie_decode(&mut reg, &k, &mut rng).unwrap_err(), Error::LostPosition(3));
    }

    fn coded(l: usize, m: usize) -> StringParams {
        StringParams { l, m, ecc: EccCode::Repetition { r: 3 }, check_bits: 2, ..Default::default() }
    }

    #[test]
    fn coded_zero_loss_round_trip() {
        let mut rng = seeded(54);
        let p = coded(8, 2);
        let k = setup_keys(&p, &mut rng).unwrap();
        for _ in 0..200 {
            let (_, reg) = bob_prepare(&k, &mut rng).unwrap();
            assert_eq!(reg.len(), 48);
            let (voter, mut reg, serials) = voter_randomize_ecc(reg, &k.voter_keys(), &p, &mut rng).unwrap();
            assert_eq!(derived_parities(&voter.mask, 2).unwrap(), voter.tag);
            let dec = charlie_decode_ecc(&mut reg, &serials, &k, &mut rng).unwrap();
            assert!(dec.accepted, "{:?}", dec.failure);
            assert_eq!(dec.key.as_ref(), Some(&voter.key));
            assert_eq!(dec.disagreeing_groups, 0);
            // honest noiseless code has no errors against the encoded tag
            let expected = p.ecc.encode(&voter.tag);
            assert!(dec.code.iter().zip(expected.iter()).all(|(c, e)| *c == Some(e)));
        }
    }

    #[test]
    fn coded_lossy_recovery_rate() {
        let mut rng = seeded(55);
        // 96 qubits: l = 16 tag bits, m = 2, three blocks per bit
        let p = StringParams { l: 16, ..coded(16, 2) };
        assert_eq!(p.register_len(), 96);
        let k = setup_keys(&p, &mut rng).unwrap();
        let trials = 1000;
        let mut ok = 0;
        for _ in 0..trials {
            let (_, reg) = bob_prepare(&k, &mut rng).unwrap();
            let reg = channel_transmit(reg, 0.1, 0.0, &mut rng).unwrap();
            let Ok((voter, mut reg, serials)) = voter_randomize_ecc(reg, &k.voter_keys(), &p, &mut rng) else {
                continue;
            };
            let dec = charlie_decode_ecc(&mut reg, &serials, &k, &mut rng).unwrap();
            if dec.accepted && dec.key.as_ref() == Some(&voter.key) {
                ok += 1;
            }
        }
        // an honest coded session fails only when all three blocks of some
        // tag bit are erased; restart handles those
        let rate = ok as f64 / trials as f64;
        let block_lost = 1.0 - 0.9f64.powi(2);
        let expected = (1.0 - block_lost.powi(3)).powi(16);
        assert!((rate - expected).abs() < 0.03, "rate {rate}, expected {expected}");
    }

    #[test]
    fn coded_lossy_recovery_within_two_attempts() {
        let mut rng = seeded(59);
        let p = StringParams { l: 16, ..coded(16, 2) };
        let k = setup_keys(&p, &mut rng).unwrap();
        let attempt = |rng: &mut crate::rng::SimRng| -> bool {
            let (_, reg) = bob_prepare(&k, rng).unwrap();
            let reg = channel_transmit(reg, 0.1, 0.0, rng).unwrap();
            match voter_randomize_ecc(reg, &k.voter_keys(), &p, rng) {
                Ok((voter, mut reg, serials)) => {
                    let dec = charlie_decode_ecc(&mut reg, &serials, &k, rng).unwrap();
                    dec.accepted && dec.key.as_ref() == Some(&voter.key)
                }
                Err(_) => false,
            }
        };
        let trials = 1000;
        let ok = (0..trials).filter(|_| attempt(&mut rng) || attempt(&mut rng)).count();
        assert!(ok as f64 / trials as f64 >= 0.99, "{ok}/{trials}");
    }

    #[test]
    fn coded_randomize_reports_unrecoverable_loss() {
        let mut rng = seeded(56);
        let p = coded(4, 2);
        let k = setup_keys(&p, &mut rng).unwrap();
        let (_, mut reg) = bob_prepare(&k, &mut rng).unwrap();
        for b in 0..3 {
            reg.mark_lost(b * 2);
        }
        assert!(matches!(voter_randomize_ecc(reg, &k.voter_keys(), &p, &mut rng), Err(Error::Undecodable(_))));
    }

    #[test]
    fn broadcast_flags_only_tampered_session() {
        let mut rng = seeded(57);
        let keys: Vec<(u64, BitString)> = (0..5).map(|h| (h, BitString::random(20, &mut rng))).collect();
        let mut counter: Vec<(u64, Option<SessionKey>)> =
            keys.iter().map(|(h, k)| (*h, Some(k.clone().into()))).collect();
        assert!(verification_broadcast(&counter, &keys, 4, &mut rng).unwrap().iter().all(|f| *f));
        counter[2].1 = Some((&keys[2].1 ^ &BitString::ones(20)).into());
        let flags = verification_broadcast(&counter, &keys, 4, &mut rng).unwrap();
        assert_eq!(flags, vec![true, true, false, true, true]);
        counter[3].1 = None;
        assert!(!verification_broadcast(&counter, &keys, 4, &mut rng).unwrap()[3]);
        assert!(verification_broadcast(&counter, &keys, 0, &mut rng).is_err());
    }

    #[test]
    fn disclosed_bits_never_reach_the_pad() {
        let mut rng = seeded(58);
        for _ in 0..200 {
            let key = BitString::random(24, &mut rng);
            let d = charlie_disclose(&key, 4, &mut rng);
            let kept = strip_disclosed(&key, &d);
            assert_eq!(kept.len(), 20);
            let kept_positions: Vec<usize> = (0..24).filter(|p| !d.positions.contains(p)).collect();
            assert_eq!(kept, key.select(&kept_positions));
        }
    }

    #[test]
    fn params_validation() {
        assert!(StringParams::default().validate().is_ok());
        assert!(StringParams { check_bits: 0, ..Default::default() }.validate().is_err());
        assert!(StringParams { check_bits: 25, ..Default::default() }.validate().is_err());
        assert_eq!(StringParams::default().register_len(), 256);
        assert_eq!(StringParams::default().key_len(), 24);
    }

    #[test]
    fn covering_disclosure_includes_every_weak_position() {
        let mut rng = seeded(140);
        for _ in 0..500 {
            let key = BitString::random(22, &mut rng);
            let nweak = rng.random_range(0..=10);
            let weak = crate::primitives::sample_positions(22, nweak, &mut rng);
            match charlie_disclose_covering(&key, &weak, 8, &mut rng) {
                None => assert!(nweak > 8),
                Some(d) => {
                    assert_eq!(d.positions.len(), 8);
                    assert!(weak.iter().all(|w| d.positions.contains(w)));
                    assert!(d.positions.windows(2).all(|w| w[0] < w[1]));
                    assert!(voter_check(&key, &d));
                }
            }
        }
    }

    #[test]
    fn weak_positions_rest_on_one_copy() {
        let mut rng = seeded(141);
        let params =
            StringParams { l: 20, m: 2, ecc: EccCode::Repetition { r: 3 }, check_bits: 2, ..Default::default() };
        let k = setup_keys(&params, &mut rng).unwrap();
        for _ in 0..200 {
            let (bob, reg) = bob_prepare(&k, &mut rng).unwrap();
            let mut reg = channel_transmit(reg, 0.1, 0.0, &mut rng).unwrap();
            voter_unmask(&mut reg, &bob).unwrap();
            let Ok((_, reg, serials)) = voter_randomize_ecc(reg, &k.voter_keys(), &params, &mut rng) else { continue };
            let mut reg = channel_transmit(reg, 0.1, 0.0, &mut rng).unwrap();
            let dec = charlie_decode_ecc(&mut reg, &serials, &k, &mut rng).unwrap();
            if !dec.accepted {
                continue;
            }
            for g in 0..params.key_len() {
                let alive = dec.code[g * 3..g * 3 + 3].iter().flatten().count();
                assert_eq!(dec.weak.contains(&g), alive == 1);
            }
        }
    }
}
