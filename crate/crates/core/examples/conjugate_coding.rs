//! Conjugate coding and the layered preparation: measuring in the right
//! basis recovers the value, the wrong basis gives a fair coin, and two
//! layers collapse to one up to sign.

use qelection::qubit::{encode_conjugate, layered_qubit, Basis, Gate, QubitState};
use qelection::rng::seeded;
use qelection::BitString;

fn main() -> qelection::Result<()> {
    let mut rng = seeded(1);
    let values = BitString::random(16, &mut rng);
    let bases = BitString::random(16, &mut rng);
    let mut reg = encode_conjugate(&values, &bases)?;
    let out = reg.measure(&bases, &mut rng)?;
    println!("values   {values}\nbases    {bases}\nmeasured {}", out.bits);
    assert_eq!(out.bits, values);

    let trials = 10_000;
    let plus = QubitState::ZERO.apply(Gate::h_pow(true));
    let ones = (0..trials).filter(|_| plus.measure(Basis::Rectilinear, &mut rng).0).count();
    println!("|+> in the computational basis: P(1) = {:.3}", ones as f64 / trials as f64);

    for code in 0..16u8 {
        let [s1, r1, s2, r2] = [0, 1, 2, 3].map(|k| code >> k & 1 == 1);
        let two = layered_qubit(s1, r1, s2, r2);
        let one = layered_qubit(s1 ^ s2, r1 ^ r2, false, false);
        assert!(two.eq_up_to_sign(&one, 1e-12));
    }
    println!("all 16 layered preparations equal a single layer up to sign");
    Ok(())
}
