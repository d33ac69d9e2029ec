//! A full noiseless election with five voters and two candidates.

use qelection::aqkd_string::StringParams;
use qelection::election::{fairness_holds, run_full_election, ElectionConfig};
use qelection::rng::seeded;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(4);
    let cfg = ElectionConfig {
        voters: 5,
        votes: Some(vec![0, 1, 0, 0, 1]),
        string: StringParams { l: 40, m: 4, check_bits: 4, ..Default::default() },
        ..Default::default()
    };
    let (tally, board, transcript) = run_full_election(cfg, &mut rng)?;
    for e in &board.entries {
        println!("board  tag {}  vote {}", e.tag, e.vote);
    }
    for (name, c) in &tally.counts {
        println!("tally  {name}: {c}");
    }
    println!("fairness holds: {}", fairness_holds(&transcript));
    Ok(())
}
