//! Elections over a channel losing 10% of qubits, with the block
//! repetition code and retries for sessions that fail to decode.

use qelection::aqkd_string::StringParams;
use qelection::election::{run_election, ElectionConfig, FaultPlan};
use qelection::primitives::EccCode;
use qelection::rng::seeded;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(5);
    let cfg = ElectionConfig {
        voters: 6,
        s: 4,
        string: StringParams { l: 24, m: 2, ecc: EccCode::Repetition { r: 3 }, check_bits: 8, ..Default::default() },
        loss_p: 0.1,
        flip_p: 0.0001,
        max_retries: 30,
        ..Default::default()
    };
    for run in 0..5 {
        let st = run_election(cfg.clone(), FaultPlan::default(), &mut rng)?;
        let attempts: usize = st.voters.iter().map(|v| v.attempts).sum();
        let tally = st.tally.as_ref().expect("finished");
        println!("run {run}: {} key sessions for {} voters, tally {:?}", attempts, st.voters.len(), tally.counts);
    }
    Ok(())
}
