//! Qubit-based anonymous key distribution: one session per voter, with a
//! fresh restart whenever the check mismatch exceeds the threshold.

use qelection::aqkd_basic::{run_session, BasicConfig, BasicCounter, NoTap};
use qelection::rng::seeded;
use qelection::transcript::Transcript;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(2);
    let cfg = BasicConfig { m: 64, ..Default::default() };
    let mut counter = BasicCounter::new();
    let mut transcript = Transcript::new("example-aqkd-basic");
    for voter in 0..3 {
        let rep = run_session(&cfg, &mut counter, &mut NoTap, &mut transcript, &mut rng)?;
        println!(
            "voter {voter}: attempts {} mismatch {:.3} keys agree {}",
            rep.attempts,
            rep.verification.mismatch_rate(),
            rep.verification.key() == rep.charlie_key.as_ref()
        );
    }
    println!("{} transcript events", transcript.len());
    Ok(())
}
