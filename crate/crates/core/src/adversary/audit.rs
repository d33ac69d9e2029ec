//! Exact density-matrix audits of what each party sees in transit.
//!
//! Each view averages the projectors of the register the real pipeline
//! produces (`Y^P` applied to the layered preparation) over every value of
//! the strings that party does not know, with the remaining strings fixed
//! by the seed. Averaging over a subset of the unknowns already yields the
//! reference matrix, and then so does averaging over all of them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::density::{ensemble_density, trace_distance, DensityMatrix};
use crate::error::{Error, Result};
use crate::primitives::parity_expand;
use crate::qubit::{prepare_layered, Gate, QubitRegister};

/// Largest `l * m` enumerated for the whole-register views.
pub const MAX_AUDIT_QUBITS: usize = 8;
/// Amplitudes below this are rounding residue of `H * H`.
const ZERO_AMPLITUDE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditView {
    Outsider,
    Bob1,
    Bob2,
    Charlie,
}

impl AuditView {
    pub const ALL: [AuditView; 4] = [AuditView::Outsider, AuditView::Bob1, AuditView::Bob2, AuditView::Charlie];
}

impl fmt::Display for AuditView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditView::Outsider => "outsider",
            AuditView::Bob1 => "bob1",
            AuditView::Bob2 => "bob2",
            AuditView::Charlie => "charlie",
        })
    }
}

impl FromStr for AuditView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AuditView::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown audit view {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityAudit {
    pub view: AuditView,
    /// One entry for whole-register views, one per block for the counter.
    pub distances: Vec<f64>,
    pub dim: usize,
}

impl DensityAudit {
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

fn clean_vector(reg: &QubitRegister) -> Result<Vec<f64>> {
    let mut v = reg.state_vector()?;
    for a in &mut v {
        if a.abs() < ZERO_AMPLITUDE {
            *a = 0.0;
        }
    }
    Ok(v)
}

fn all_strings(n: usize) -> impl Iterator<Item = BitString> {
    (0..1u64 << n).map(move |x| BitString::from_index(x, n))
}

fn strings_with_parity(n: usize, parity: bool) -> impl Iterator<Item = BitString> {
    all_strings(n).filter(move |s| s.parity() == parity)
}

/// Register for one key assignment: `Y^P H^{S2} Y^{R2} H^{S1} Y^{R1} |0>`.
fn pipeline(s1: &BitString, r1: &BitString, s2: &BitString, r2: &BitString, p: &BitString) -> Result<QubitRegister> {
    let mut reg = prepare_layered(s1, r1, s2, r2)?;
    reg.apply_y_mask(p)?;
    Ok(reg)
}

fn whole_register_view<R: Rng + ?Sized>(view: AuditView, l: usize, m: usize, rng: &mut R) -> Result<DensityAudit> {
    let n = l * m;
    if n > MAX_AUDIT_QUBITS {
        return Err(Error::BudgetExceeded(format!("exact audit limited to {MAX_AUDIT_QUBITS} qubits, got {n}")));
    }
    let s1 = BitString::random(n, rng);
    let s2 = BitString::random(n, rng);
    let r1 = parity_expand(&BitString::random(l, rng), m, rng)?;
    let r2 = parity_expand(&BitString::random(l, rng), m, rng)?;
    let weight = 1.0 / (1u64 << (2 * n)) as f64;
    let mut members = Vec::with_capacity(1 << (2 * n));
    let p_fixed = BitString::random(n, rng);
    for unknown in all_strings(n) {
        for x in all_strings(n) {
            let reg = match view {
                // the outsider knows no administrator string at all
                AuditView::Outsider => pipeline(&s1, &r1, &unknown, &x, &p_fixed)?,
                AuditView::Bob1 => pipeline(&s1, &r1, &unknown, &r2, &x)?,
                AuditView::Bob2 => pipeline(&unknown, &r1, &s2, &r2, &x)?,
                AuditView::Charlie => unreachable!("counter view is blockwise"),
            };
            members.push((clean_vector(&reg)?, weight));
        }
    }
    let rho = ensemble_density(members)?;
    let reference = DensityMatrix::maximally_mixed(1 << n)?;
    Ok(DensityAudit { view, distances: vec![trace_distance(&rho, &reference)?], dim: 1 << n })
}

/// The counter knows `s`, `M` and `T_i` but neither `R1`, `R2` nor `P`
/// individually. Per block, in its measurement frame, the state is a
/// uniform mixture of the `2^(m-1)` strings with parity `M_j ^ T_j`.
fn charlie_view<R: Rng + ?Sized>(l: usize, m: usize, rng: &mut R) -> Result<DensityAudit> {
    if m > MAX_AUDIT_QUBITS || m == 0 {
        return Err(Error::BudgetExceeded(format!(
            "blockwise audit limited to 1..={MAX_AUDIT_QUBITS} qubits per block, got {m}"
        )));
    }
    let m1 = BitString::random(l, rng);
    let m2 = BitString::random(l, rng);
    let tag = BitString::random(l, rng);
    let mut distances = Vec::with_capacity(l);
    for j in 0..l {
        let (s1, s2) = (BitString::random(m, rng), BitString::random(m, rng));
        let s = &s1 ^ &s2;
        let r2 = parity_expand(&m2.slice(j, j + 1), m, rng)?;
        let (p1, pt) = (m1.as_slice()[j], tag.as_slice()[j]);
        let count = 1u64 << (2 * (m - 1));
        let weight = 1.0 / count as f64;
        let mut members = Vec::with_capacity(count as usize);
        for r1 in strings_with_parity(m, p1) {
            for p in strings_with_parity(m, pt) {
                let mut reg = pipeline(&s1, &r1, &s2, &r2, &p)?;
                for q in 0..m {
                    reg.apply(q, Gate::h_pow(s.as_slice()[q]))?;
                }
                members.push((clean_vector(&reg)?, weight));
            }
        }
        let rho = ensemble_density(members)?;
        let target = p1 ^ m2.as_slice()[j] ^ pt;
        // state_vector puts position 0 in the most significant bit; parity
        // does not depend on the order
        let support: Vec<usize> = (0..1usize << m).filter(|x| (x.count_ones() % 2 == 1) == target).collect();
        let reference = DensityMatrix::uniform_over_basis_states(1 << m, &support)?;
        distances.push(trace_distance(&rho, &reference)?);
    }
    Ok(DensityAudit { view: AuditView::Charlie, distances, dim: 1 << m })
}

pub fn density_audit<R: Rng + ?Sized>(view: AuditView, l: usize, m: usize, rng: &mut R) -> Result<DensityAudit> {
    if l == 0 || m == 0 {
        return Err(Error::InvalidParameter("audit needs l, m >= 1".into()));
    }
    match view {
        AuditView::Charlie => charlie_view(l, m, rng),
        _ => whole_register_view(view, l, m, rng),
    }
}
