//! Classical building blocks: XOR combiner, one-time pad, parity blocks,
//! repetition code and key splitting.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{ensure_len, Error, Result};

/// Bitwise XOR of two equal-length strings; the combiner every split
/// secret in the scheme goes through.
pub fn xor_combine(a: &BitString, b: &BitString) -> Result<BitString> {
    ensure_len(a.len(), b.len())?;
    Ok(a ^ b)
}

/// One-time pad: `msg XOR key[..msg.len()]`. Decryption is the same map.
pub fn otp_encrypt(key: &BitString, msg: &BitString) -> Result<BitString> {
    if key.len() < msg.len() {
        return Err(Error::KeyTooShort { key: key.len(), msg: msg.len() });
    }
    Ok(msg.iter().zip(key.iter()).map(|(m, k)| m ^ k).collect())
}

pub fn otp_decrypt(key: &BitString, ct: &BitString) -> Result<BitString> {
    otp_encrypt(key, ct)
}

/// Pad usage tracker for one protocol run: refuses a key it has already
/// seen.
#[derive(Debug, Default)]
pub struct OtpSession {
    used: BTreeSet<BitString>,
}

impl OtpSession {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn encrypt(&mut self, key: &BitString, msg: &BitString) -> Result<BitString> {
        let prefix = key.slice(0, msg.len().min(key.len()));
        if self.used.contains(&prefix) {
            return Err(Error::KeyReuse);
        }
        let ct = otp_encrypt(key, msg)?;
        self.used.insert(prefix);
        Ok(ct)
    }
}

/// Draws `t.len()` blocks of `m` bits; block `j` is uniform over the
/// `2^(m-1)` strings whose XOR is `t_j`.
pub fn parity_expand<R: Rng + ?Sized>(t: &BitString, m: usize, rng: &mut R) -> Result<BitString> {
    if m == 0 {
        return Err(Error::InvalidParameter("block size must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(t.len() * m);
    for target in t.iter() {
        let mut acc = false;
        for _ in 0..m - 1 {
            let b: bool = rng.random();
            acc ^= b;
            out.push(b);
        }
        out.push(acc ^ target);
    }
    Ok(out.into())
}

/// XOR of each consecutive block of `m` bits.
pub fn parity_collapse(x: &BitString, m: usize) -> Result<BitString> {
    if m == 0 || !x.len().is_multiple_of(m) {
        return Err(Error::InvalidParameter(format!("length {} is not a multiple of block size {m}", x.len())));
    }
    Ok(x.as_slice().chunks(m).map(|c| c.iter().fold(false, |a, &b| a ^ b)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "scheme")]
pub enum EccCode {
    None,
    Repetition { r: usize },
}

impl Default for EccCode {
    fn default() -> Self {
        EccCode::Repetition { r: 3 }
    }
}

/// Result of a punctured decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EccDecoded {
    pub data: BitString,
    /// Groups whose surviving copies did not all agree.
    pub disagreeing_groups: usize,
    /// Minority copies overruled by the majority.
    pub corrected: usize,
}

impl EccCode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EccCode::Repetition { r } if r == 0 || r % 2 == 0 => {
                Err(Error::InvalidParameter(format!("repetition factor must be odd, got {r}")))
            }
            _ => Ok(()),
        }
    }

    pub fn repeat(&self) -> usize {
        match *self {
            EccCode::None => 1,
            EccCode::Repetition { r } => r,
        }
    }

    pub fn encoded_len(&self, data_len: usize) -> usize {
        data_len * self.repeat()
    }

    /// Flips per group the code always corrects.
    pub fn capability(&self) -> usize {
        (self.repeat() - 1) / 2
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.repeat() as f64
    }

    pub fn encode(&self, p: &BitString) -> BitString {
        let r = self.repeat();
        p.iter().flat_map(|b| std::iter::repeat_n(b, r)).collect()
    }

    /// Majority decode over the surviving copies of each group. `None`
    /// marks an erased position. A group with no survivors, or with a tie
    /// among its survivors, is undecodable.
    pub fn decode_punctured(&self, received: &[Option<bool>]) -> Result<EccDecoded> {
        let r = self.repeat();
        if !received.len().is_multiple_of(r) {
            return Err(Error::LengthMismatch { expected: received.len().div_ceil(r) * r, actual: received.len() });
        }
        let mut data = Vec::with_capacity(received.len() / r);
        let mut disagreeing_groups = 0;
        let mut corrected = 0;
        for (g, group) in received.chunks(r).enumerate() {
            let ones = group.iter().filter(|b| **b == Some(true)).count();
            let zeros = group.iter().filter(|b| **b == Some(false)).count();
            if ones + zeros == 0 {
                return Err(Error::Undecodable(format!("group {g} fully erased")));
            }
            if ones == zeros {
                return Err(Error::Undecodable(format!("group {g} tied {ones}-{zeros}")));
            }
            if ones > 0 && zeros > 0 {
                disagreeing_groups += 1;
            }
            corrected += ones.min(zeros);
            data.push(ones > zeros);
        }
        Ok(EccDecoded { data: data.into(), disagreeing_groups, corrected })
    }

    pub fn decode(&self, d: &BitString) -> Result<BitString> {
        let received: Vec<_> = d.iter().map(Some).collect();
        self.decode_punctured(&received).map(|x| x.data)
    }
}

pub fn ecc_encode(p: &BitString, code: EccCode) -> BitString {
    code.encode(p)
}

pub fn ecc_decode(d: &BitString, code: EccCode) -> Result<BitString> {
    code.decode(d)
}

/// Splits a key into a tag half and an encryption half, left getting the
/// extra bit on odd lengths.
pub fn split_key(k: &BitString) -> Result<(BitString, BitString)> {
    split_key_at(k, k.len().div_ceil(2))
}

/// Splits with an explicit left length; both halves must be nonempty.
pub fn split_key_at(k: &BitString, left: usize) -> Result<(BitString, BitString)> {
    if k.len() < 2 {
        return Err(Error::InvalidParameter(format!("key of length {} is too short to split", k.len())));
    }
    if left == 0 || left >= k.len() {
        return Err(Error::InvalidParameter(format!("split point {left} outside 1..{}", k.len())));
    }
    Ok((k.slice(0, left), k.slice(left, k.len())))
}

/// Uniform sample of `count` distinct positions out of `0..n`, ascending.
pub fn sample_positions<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<usize> {
    let mut v = sample(rng, n, count.min(n)).into_vec();
    v.sort_unstable();
    v
}

/// One administrator's share of the qubit-string key material:
/// `C = S || M || N || L`.
///
/// `blocks` is the number of parity blocks in the register. Without error
/// correction it equals `l`; the coded variant spreads each tag bit over
/// several blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBundle {
    /// Preparation basis string S, `blocks * m` bits.
    pub basis: BitString,
    /// Block parity string M, `blocks` bits.
    pub parity: BitString,
    /// Eligibility check string N, `m` bits.
    pub check: BitString,
    /// Pad key L, `l` bits.
    pub pad: BitString,
}

impl KeyBundle {
    pub fn random<R: Rng + ?Sized>(l: usize, m: usize, blocks: usize, rng: &mut R) -> Result<Self> {
        if m < 1 || l <= m {
            return Err(Error::InvalidParameter(format!("need l > m >= 1, got l={l}, m={m}")));
        }
        Ok(KeyBundle {
            basis: BitString::random(blocks * m, rng),
            parity: BitString::random(blocks, rng),
            check: BitString::random(m, rng),
            pad: BitString::random(l, rng),
        })
    }

    /// XOR of two shares, field by field.
    pub fn combine(&self, other: &KeyBundle) -> Result<KeyBundle> {
        Ok(KeyBundle {
            basis: xor_combine(&self.basis, &other.basis)?,
            parity: xor_combine(&self.parity, &other.parity)?,
            check: xor_combine(&self.check, &other.check)?,
            pad: xor_combine(&self.pad, &other.pad)?,
        })
    }

    /// The concatenation `S || M || N || L`.
    pub fn concat(&self) -> BitString {
        self.basis.concat(&self.parity).concat(&self.check).concat(&self.pad)
    }
}
