use super::Real;
use crate::{Error, Result};

/// Softmax restricted to positions where `mask` is nonzero; masked positions
/// get exactly zero probability.
pub fn masked_softmax<S: Real>(logits: &[S], mask: &[u8]) -> Result<Vec<S>> {
    if logits.len() != mask.len() {
        return Err(Error::shape("masked_softmax mask", logits.len(), mask.len()));
    }
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m != 0)
        .map(|(&l, _)| l)
        .fold(None, |acc: Option<S>, l| Some(acc.map_or(l, |a| a.max(l))))
        .ok_or(Error::AllMasked)?;
    let mut out: Vec<S> =
        logits.iter().zip(mask).map(|(&l, &m)| if m != 0 { (l - max).exp() } else { S::zero() }).collect();
    let total: S = out.iter().copied().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

/// Gradient of the logits given the softmax output and the gradient of the
/// probabilities. Masked positions receive zero gradient automatically since
/// their probability is zero.
pub fn softmax_backward<S: Real>(probs: &[S], grad_probs: &[S]) -> Vec<S> {
    let dot: S = probs.iter().zip(grad_probs).map(|(&p, &g)| p * g).sum();
    probs.iter().zip(grad_probs).map(|(&p, &g)| p * (g - dot)).collect()
}
