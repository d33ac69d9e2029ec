//! Single-qubit pure-state simulation.
//!
//! The only gates the protocols use are I, H and Y = [[0, -1], [1, 0]], all
//! real orthogonal, so amplitudes are kept as signed reals. A global sign is
//! carried along but never observable.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::Rng;

use crate::bits::BitString;
use crate::error::{ensure_len, Error, Result};

pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    I,
    H,
    Y,
}

impl Gate {
    pub fn matrix(self) -> [[f64; 2]; 2] {
        match self {
            Gate::I => [[1.0, 0.0], [0.0, 1.0]],
            Gate::H => [[FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2]],
            Gate::Y => [[0.0, -1.0], [1.0, 0.0]],
        }
    }

    /// `H^b`: identity for 0, Hadamard for 1.
    pub fn h_pow(b: bool) -> Gate {
        if b {
            Gate::H
        } else {
            Gate::I
        }
    }

    /// `Y^b`: identity for 0, Y for 1.
    pub fn y_pow(b: bool) -> Gate {
        if b {
            Gate::Y
        } else {
            Gate::I
        }
    }
}

/// Measurement basis. Bit 0 selects rectilinear, bit 1 diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Rectilinear,
    Diagonal,
}

impl Basis {
    pub fn from_bit(b: bool) -> Basis {
        if b {
            Basis::Diagonal
        } else {
            Basis::Rectilinear
        }
    }

    pub fn bit(self) -> bool {
        self == Basis::Diagonal
    }

    /// Eigenstate for `outcome`: |0>,|1> or |+>,|->.
    pub fn eigenstate(self, outcome: bool) -> QubitState {
        let z = if outcome { QubitState::ONE } else { QubitState::ZERO };
        match self {
            Basis::Rectilinear => z,
            Basis::Diagonal => z.apply(Gate::H),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub amp0: f64,
    pub amp1: f64,
}

impl QubitState {
    pub const ZERO: QubitState = QubitState { amp0: 1.0, amp1: 0.0 };
    pub const ONE: QubitState = QubitState { amp0: 0.0, amp1: 1.0 };
    pub const PLUS: QubitState = QubitState { amp0: FRAC_1_SQRT_2, amp1: FRAC_1_SQRT_2 };
    pub const MINUS: QubitState = QubitState { amp0: FRAC_1_SQRT_2, amp1: -FRAC_1_SQRT_2 };

    /// Normalizes `(amp0, amp1)`; rejects the zero vector.
    pub fn new(amp0: f64, amp1: f64) -> Result<Self> {
        let n = (amp0 * amp0 + amp1 * amp1).sqrt();
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::InvalidParameter("zero or non-finite amplitude vector".into()));
        }
        Ok(QubitState { amp0: amp0 / n, amp1: amp1 / n })
    }

    /// A real pure state with angle drawn uniformly from the circle.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let theta = rng.random::<f64>() * TAU;
        QubitState { amp0: theta.cos(), amp1: theta.sin() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0 * self.amp0 + self.amp1 * self.amp1
    }

    pub fn apply(self, gate: Gate) -> QubitState {
        let m = gate.matrix();
        QubitState { amp0: m[0][0] * self.amp0 + m[0][1] * self.amp1, amp1: m[1][0] * self.amp0 + m[1][1] * self.amp1 }
    }

    /// Born-rule probability of reading 0 in `basis`.
    pub fn prob_zero(&self, basis: Basis) -> f64 {
        match basis {
            Basis::Rectilinear => self.amp0 * self.amp0,
            Basis::Diagonal => {
                let plus = (self.amp0 + self.amp1) * FRAC_1_SQRT_2;
                plus * plus
            }
        }
    }

    /// Samples an outcome and returns it with the post-measurement state.
    pub fn measure<R: Rng + ?Sized>(&self, basis: Basis, rng: &mut R) -> (bool, QubitState) {
        let p0 = self.prob_zero(basis).clamp(0.0, 1.0);
        let outcome = rng.random::<f64>() >= p0;
        (outcome, basis.eigenstate(outcome))
    }

    /// Equality up to the unobservable global sign.
    pub fn eq_up_to_sign(&self, other: &QubitState, tol: f64) -> bool {
        let same = (self.amp0 - other.amp0).abs() < tol && (self.amp1 - other.amp1).abs() < tol;
        let neg = (self.amp0 + other.amp0).abs() < tol && (self.amp1 + other.amp1).abs() < tol;
        same || neg
    }
}

/// `gate` applied to `state`.
pub fn apply_gate(state: QubitState, gate: Gate) -> QubitState {
    state.apply(gate)
}

/// The qubits in transit for one protocol instance.
///
/// Measuring consumes the register: afterwards every position reads as
/// unavailable and a second measurement fails. There is deliberately no
/// `Clone`; the adversary module copies registers only through
/// [`QubitRegister::cheat_clone`].
#[derive(Debug)]
pub struct QubitRegister {
    qubits: Vec<QubitState>,
    lost: Vec<bool>,
    measured: bool,
}

/// Outcome of [`QubitRegister::measure`]. Lost positions hold `false` in
/// `bits` and are listed in `lost`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureOutcome {
    pub bits: BitString,
    pub lost: Vec<usize>,
}

impl MeasureOutcome {
    pub fn received(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|p| self.lost.binary_search(p).is_err()).collect()
    }
}

impl QubitRegister {
    pub fn from_states(qubits: Vec<QubitState>) -> Self {
        let lost = vec![false; qubits.len()];
        QubitRegister { qubits, lost, measured: false }
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn is_measured(&self) -> bool {
        self.measured
    }

    pub fn is_lost(&self, pos: usize) -> bool {
        self.lost[pos]
    }

    pub fn lost_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.lost[p]).collect()
    }

    pub fn received_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| !self.lost[p]).collect()
    }

    /// Simulator introspection of one position's amplitudes.
    pub fn state(&self, pos: usize) -> Result<QubitState> {
        if self.measured {
            return Err(Error::AlreadyMeasured);
        }
        if self.lost[pos] {
            return Err(Error::LostPosition(pos));
        }
        Ok(self.qubits[pos])
    }

    /// Applies `gate` at `pos`; a no-op on lost positions.
    pub fn apply(&mut self, pos: usize, gate: Gate) -> Result<()> {
        if self.measured {
            return Err(Error::AlreadyMeasured);
        }
        if !self.lost[pos] {
            self.qubits[pos] = self.qubits[pos].apply(gate);
        }
        Ok(())
    }

    /// Applies `Y^mask` positionwise, skipping lost positions.
    pub fn apply_y_mask(&mut self, mask: &BitString) -> Result<()> {
        ensure_len(self.len(), mask.len())?;
        for (pos, b) in mask.iter().enumerate() {
            if b {
                self.apply(pos, Gate::Y)?;
            }
        }
        Ok(())
    }

    pub fn mark_lost(&mut self, pos: usize) {
        self.lost[pos] = true;
        self.qubits[pos] = QubitState { amp0: 0.0, amp1: 0.0 };
    }

    /// Copies the register. Physically impossible for unknown states; only
    /// the adversary module and tests reach for it.
    pub fn cheat_clone(&self) -> QubitRegister {
        QubitRegister { qubits: self.qubits.clone(), lost: self.lost.clone(), measured: self.measured }
    }

    /// Measures every surviving position in the basis selected by the
    /// corresponding bit of `basis_bits` and consumes the register.
    pub fn measure<R: Rng + ?Sized>(&mut self, basis_bits: &BitString, rng: &mut R) -> Result<MeasureOutcome> {
        if self.measured {
            return Err(Error::AlreadyMeasured);
        }
        ensure_len(self.len(), basis_bits.len())?;
        let mut bits = Vec::with_capacity(self.len());
        let mut lost = Vec::new();
        for (pos, basis_bit) in basis_bits.iter().enumerate() {
            if self.lost[pos] {
                lost.push(pos);
                bits.push(false);
            } else {
                let (b, _) = self.qubits[pos].measure(Basis::from_bit(basis_bit), rng);
                bits.push(b);
            }
        }
        self.measured = true;
        self.qubits.iter_mut().for_each(|q| *q = QubitState { amp0: 0.0, amp1: 0.0 });
        Ok(MeasureOutcome { bits: bits.into(), lost })
    }

    /// Dense state vector of the whole register (position 0 is the most
    /// significant qubit). Fails on lost or measured registers.
    pub fn state_vector(&self) -> Result<Vec<f64>> {
        if self.measured {
            return Err(Error::AlreadyMeasured);
        }
        if let Some(p) = self.lost.iter().position(|&l| l) {
            return Err(Error::LostPosition(p));
        }
        Ok(tensor_product(&self.qubits))
    }
}

pub fn tensor_product(qubits: &[QubitState]) -> Vec<f64> {
    let mut v = vec![1.0];
    for q in qubits {
        let mut next = Vec::with_capacity(v.len() * 2);
        for a in &v {
            next.push(a * q.amp0);
            next.push(a * q.amp1);
        }
        v = next;
    }
    v
}

/// Conjugate coding: position j holds `H^{basis_j} |value_j>`.
pub fn encode_conjugate(value_bits: &BitString, basis_bits: &BitString) -> Result<QubitRegister> {
    ensure_len(value_bits.len(), basis_bits.len())?;
    let qubits = value_bits
        .iter()
        .zip(basis_bits.iter())
        .map(|(v, b)| {
            let z = if v { QubitState::ONE } else { QubitState::ZERO };
            z.apply(Gate::h_pow(b))
        })
        .collect();
    Ok(QubitRegister::from_states(qubits))
}

/// Single position of the two-layer preparation
/// `H^{s2} Y^{r2} H^{s1} Y^{r1} |0>`.
pub fn layered_qubit(s1: bool, r1: bool, s2: bool, r2: bool) -> QubitState {
    QubitState::ZERO.apply(Gate::y_pow(r1)).apply(Gate::h_pow(s1)).apply(Gate::y_pow(r2)).apply(Gate::h_pow(s2))
}

/// The jointly prepared register of the qubit-string protocol.
pub fn prepare_layered(s1: &BitString, r1: &BitString, s2: &BitString, r2: &BitString) -> Result<QubitRegister> {
    let n = s1.len();
    ensure_len(n, r1.len())?;
    ensure_len(n, s2.len())?;
    ensure_len(n, r2.len())?;
    let qubits =
        (0..n).map(|k| layered_qubit(s1.as_slice()[k], r1.as_slice()[k], s2.as_slice()[k], r2.as_slice()[k])).collect();
    Ok(QubitRegister::from_states(qubits))
}

/// Lossy, noisy channel: each position is lost with probability `loss_p`;
/// each survivor receives a Y flip with probability `flip_p`.
pub fn channel_transmit<R: Rng + ?Sized>(
    mut reg: QubitRegister,
    loss_p: f64,
    flip_p: f64,
    rng: &mut R,
) -> Result<QubitRegister> {
    for p in [loss_p, flip_p] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
    }
    if reg.measured {
        return Err(Error::AlreadyMeasured);
    }
    for pos in 0..reg.len() {
        if reg.lost[pos] {
            continue;
        }
        if loss_p > 0.0 && rng.random_bool(loss_p) {
            reg.mark_lost(pos);
        } else if flip_p > 0.0 && rng.random_bool(flip_p) {
            reg.qubits[pos] = reg.qubits[pos].apply(Gate::Y);
        }
    }
    Ok(reg)
}
