//! The classical two-administrator election, and what the administrators
//! learn when they pool their records.

use qelection::election::baseline::{administrators_link, classical_baseline_run, BaselineConfig};
use qelection::rng::seeded;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(6);
    let out = classical_baseline_run(&BaselineConfig { voters: 6, ..Default::default() }, &mut rng)?;
    println!("tally {:?}", out.tally.counts);
    for (i, link) in administrators_link(&out.bob1, &out.bob2, &out.board)?.iter().enumerate() {
        let name = link.as_ref().and_then(|c| out.candidates.index_of(c)).map(|k| &out.candidates.names()[k]);
        println!("voter {i} voted for {name:?}");
    }
    Ok(())
}
