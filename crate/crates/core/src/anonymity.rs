//! Sender-anonymous delivery.
//!
//! Messages lose their sender identity and arrive in an order shuffled by
//! the run's RNG. Each delivery carries a random reply handle that only the
//! sender learns, so a receiver can publish responses addressed to a handle
//! without knowing who holds it.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug)]
pub struct Delivered<T> {
    pub handle: u64,
    pub payload: T,
}

/// What the channel hands back to the senders: `handles[k]` belongs to the
/// k-th submitted message.
#[derive(Debug)]
pub struct Dispatch<T> {
    pub delivered: Vec<Delivered<T>>,
    pub handles: Vec<u64>,
}

pub fn dispatch<T, R: Rng + ?Sized>(messages: Vec<T>, rng: &mut R) -> Dispatch<T> {
    let mut handles = Vec::with_capacity(messages.len());
    let mut delivered = Vec::with_capacity(messages.len());
    for payload in messages {
        let mut handle: u64 = rng.random();
        while handles.contains(&handle) {
            handle = rng.random();
        }
        handles.push(handle);
        delivered.push(Delivered { handle, payload });
    }
    delivered.shuffle(rng);
    Dispatch { delivered, handles }
}
