use rand::Rng;

use crate::features::{LoopStateRecord, PreferencePair};

/// A pair in presentation order with its ±1 target.
#[derive(Clone, Copy, Debug)]
pub struct OrderedPair<'a> {
    pub first: &'a LoopStateRecord,
    pub second: &'a LoopStateRecord,
    pub target: f64,
    pub swapped: bool,
}

/// With probability `swap_prob` per pair, presents `(rejected, chosen)` with
/// target −1; otherwise `(chosen, rejected)` with target +1.
pub fn swap_batch<'a, R: Rng + ?Sized>(
    pairs: impl IntoIterator<Item = &'a PreferencePair>,
    rng: &mut R,
    swap_prob: f64,
) -> Vec<OrderedPair<'a>> {
    pairs
        .into_iter()
        .map(|p| {
            // always draw so the stream does not depend on swap_prob edge cases
            let swapped = rng.random::<f64>() < swap_prob;
            if swapped {
                OrderedPair { first: &p.rejected, second: &p.chosen, target: -1.0, swapped }
            } else {
                OrderedPair { first: &p.chosen, second: &p.rejected, target: 1.0, swapped }
            }
        })
        .collect()
}
