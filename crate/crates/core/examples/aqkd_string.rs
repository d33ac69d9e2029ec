//! Qubit-string key distribution, noiseless and over a lossy channel with
//! the block repetition code.

use qelection::aqkd_string::{
    bob_prepare, charlie_decode, charlie_decode_ecc, setup_keys, voter_randomize, voter_randomize_ecc, voter_unmask,
    StringParams,
};
use qelection::primitives::EccCode;
use qelection::qubit::channel_transmit;
use qelection::rng::seeded;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(3);
    let params = StringParams { l: 32, m: 8, ..Default::default() };
    let keys = setup_keys(&params, &mut rng)?;
    let (bob, mut reg) = bob_prepare(&keys, &mut rng)?;
    voter_unmask(&mut reg, &bob)?;
    let (view, mut reg) = voter_randomize(reg, &keys.voter_keys(), params.l, params.m, &mut rng)?;
    let dec = charlie_decode(&mut reg, &keys, &mut rng)?;
    println!("noiseless: voter key {}\n           counter   {}", view.key, dec.key);
    assert!(dec.accepted && dec.key == view.key);

    let params = StringParams { l: 20, m: 2, ecc: EccCode::Repetition { r: 3 }, check_bits: 2, ..Default::default() };
    let keys = setup_keys(&params, &mut rng)?;
    let runs = 2000;
    let mut ok = 0;
    for _ in 0..runs {
        let (bob, reg) = bob_prepare(&keys, &mut rng)?;
        let mut reg = channel_transmit(reg, 0.1, 0.0, &mut rng)?;
        voter_unmask(&mut reg, &bob)?;
        let Ok((view, reg, serials)) = voter_randomize_ecc(reg, &keys.voter_keys(), &params, &mut rng) else {
            continue;
        };
        let mut reg = channel_transmit(reg, 0.1, 0.0, &mut rng)?;
        let dec = charlie_decode_ecc(&mut reg, &serials, &keys, &mut rng)?;
        ok += usize::from(dec.key.as_ref() == Some(&view.key));
    }
    println!("lossy (10% per hop, r=3, l=20): {ok}/{runs} sessions agree on a key");
    Ok(())
}
