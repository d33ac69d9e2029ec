//! Intercept-resend against the qubit-based protocol, with and without
//! the attacker.

use qelection::adversary::intercept::{intercept_resend_attack, InterceptParams};
use qelection::rng::seeded;
use qelection::stats::to_csv;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(7);
    let mut p = InterceptParams { sessions: 2000, ..Default::default() };
    let mut rows = intercept_resend_attack(&p, &mut rng)?;
    p.attack = false;
    rows.extend(intercept_resend_attack(&p, &mut rng)?);
    print!("{}", to_csv(&rows));
    Ok(())
}
