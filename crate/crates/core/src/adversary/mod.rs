//! Attack models and exact audits.
//!
//! Each attacker is defined by what it holds, listed in [`Capability`].
//! Statistical attacks run independent trials on per-trial generators
//! split from one master seed, so the parallel schedule cannot change a
//! result.

pub mod audit;
pub mod collusion;
pub mod forge;
pub mod intercept;

use std::fmt;
use std::str::FromStr;

use rand::Rng;

pub use audit::{density_audit, AuditView, DensityAudit};
pub use collusion::{basis_collusion_attack, trace_collusion_attack, GuessArm};
pub use forge::{coded_forgery_attack, forge_ballot_attack, Forger};
pub use intercept::{intercept_resend_attack, InterceptParams};

use crate::aqkd_string::StringParams;
use crate::error::{Error, Result};
use crate::primitives::EccCode;
use crate::stats::AttackOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    InterceptResend,
    ForgeBallot,
    BasisCollusion,
    TraceCollusion,
    DensityAudit,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::InterceptResend,
        AttackKind::ForgeBallot,
        AttackKind::BasisCollusion,
        AttackKind::TraceCollusion,
        AttackKind::DensityAudit,
    ];

    pub fn capability(self) -> Capability {
        match self {
            AttackKind::InterceptResend => {
                Capability { keys: &[], transcripts: &["quantum channel"], clone_allowed: false }
            }
            AttackKind::ForgeBallot => Capability { keys: &["N", "L"], transcripts: &[], clone_allowed: false },
            AttackKind::BasisCollusion => {
                Capability { keys: &["N", "L", "m honest registers"], transcripts: &[], clone_allowed: false }
            }
            AttackKind::TraceCollusion => Capability {
                keys: &["bundle 1", "bundle 2", "s", "M", "N", "L", "R1, R2 per voter"],
                transcripts: &["decoded outcomes", "board"],
                clone_allowed: false,
            },
            AttackKind::DensityAudit => Capability { keys: &["per view"], transcripts: &[], clone_allowed: false },
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::InterceptResend => "intercept-resend",
            AttackKind::ForgeBallot => "forge-ballot",
            AttackKind::BasisCollusion => "basis-collusion",
            AttackKind::TraceCollusion => "trace-collusion",
            AttackKind::DensityAudit => "density-audit",
        })
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('_', "-");
        AttackKind::ALL
            .into_iter()
            .find(|k| k.to_string() == norm)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown attack kind {s:?}")))
    }
}

/// Key material, transcripts and quantum abilities an attacker holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capability {
    pub keys: &'static [&'static str],
    pub transcripts: &'static [&'static str],
    pub clone_allowed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub trials: u64,
    pub m: usize,
    pub l: usize,
    pub voters: usize,
    pub view: Option<AuditView>,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        match self.kind {
            AttackKind::InterceptResend if self.m < 2 => {
                Err(Error::InvalidParameter("intercept-resend needs m >= 2 qubits per session".into()))
            }
            AttackKind::ForgeBallot | AttackKind::BasisCollusion if self.m == 0 => {
                Err(Error::InvalidParameter("m must be at least 1".into()))
            }
            AttackKind::TraceCollusion if self.voters == 0 => {
                Err(Error::InvalidParameter("trace collusion needs at least one voter".into()))
            }
            AttackKind::DensityAudit if self.l == 0 || self.m == 0 => {
                Err(Error::InvalidParameter("density audit needs l, m >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Runs one configured attack and returns its statistics rows.
pub fn run_attack<R: Rng + ?Sized>(cfg: &AttackConfig, rng: &mut R) -> Result<Vec<AttackOutcome>> {
    cfg.validate()?;
    match cfg.kind {
        AttackKind::InterceptResend => {
            let p = InterceptParams { m: cfg.m, sessions: cfg.trials as usize, ..Default::default() };
            intercept_resend_attack(&p, rng)
        }
        AttackKind::ForgeBallot => {
            let mut rows = vec![
                forge_ballot_attack(cfg.m, cfg.trials, Forger::RandomState, rng)?,
                forge_ballot_attack(cfg.m, cfg.trials.min(1000), Forger::Honest, rng)?,
            ];
            let coded = StringParams {
                l: cfg.l.max(cfg.m + 2),
                m: cfg.m.max(2),
                ecc: EccCode::Repetition { r: 3 },
                check_bits: 1,
                ..Default::default()
            };
            rows.extend(coded_forgery_attack(&coded, cfg.trials.min(1000), rng)?);
            Ok(rows)
        }
        AttackKind::BasisCollusion => {
            let mut rows = vec![
                basis_collusion_attack(cfg.m, GuessArm::Correct, cfg.trials, rng)?,
                basis_collusion_attack(cfg.m, GuessArm::Wrong, cfg.trials, rng)?,
            ];
            if cfg.m <= 4 {
                rows.extend(collusion::exclusion_simulation(cfg.m, cfg.trials.min(1000), rng)?);
            } else {
                rows.push(AttackOutcome::exact(
                    format!("exclusion_voters_m{}", cfg.m),
                    collusion::exclusion_cost(cfg.m) as f64,
                    Some(collusion::exclusion_cost(cfg.m) as f64),
                ));
            }
            Ok(rows)
        }
        AttackKind::TraceCollusion => {
            let mut rows = trace_collusion_attack(cfg.voters, cfg.trials, rng)?;
            rows.push(collusion::baseline_trace_attack(cfg.voters, cfg.trials.min(1000), rng)?);
            Ok(rows)
        }
        AttackKind::DensityAudit => audit_rows(cfg.view, cfg.l, cfg.m, rng),
    }
}

/// Distance rows for one view or all four, reference distance zero.
pub fn audit_rows<R: Rng + ?Sized>(
    view: Option<AuditView>,
    l: usize,
    m: usize,
    rng: &mut R,
) -> Result<Vec<AttackOutcome>> {
    let views = match view {
        Some(v) => vec![v],
        None => AuditView::ALL.to_vec(),
    };
    views
        .into_iter()
        .map(|v| {
            let a = density_audit(v, l, m, rng)?;
            Ok(AttackOutcome::exact(format!("trace_distance_{v}_l{l}_m{m}"), a.max_distance(), Some(0.0)))
        })
        .collect()
}
