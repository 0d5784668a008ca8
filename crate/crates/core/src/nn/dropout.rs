use rand::Rng;

use super::Real;

/// The multiplicative mask applied by one dropout call (0 or 1/(1-p)).
#[derive(Clone, Debug)]
pub struct DropoutMask<S>(Vec<S>);

impl<S: Real> DropoutMask<S> {
    pub fn identity(len: usize) -> Self {
        Self(vec![S::one(); len])
    }

    pub fn apply(&self, grad: &[S]) -> Vec<S> {
        grad.iter().zip(&self.0).map(|(&g, &m)| g * m).collect()
    }
}

/// Inverted dropout. In eval mode, or with `p == 0`, the input is returned
/// unchanged and no random numbers are drawn.
pub fn dropout<S: Real, R: Rng + ?Sized>(
    x: &[S],
    p: f64,
    training: bool,
    rng: Option<&mut R>,
) -> (Vec<S>, DropoutMask<S>) {
    assert!((0.0..1.0).contains(&p), "dropout rate must lie in [0, 1)");
    match rng {
        Some(rng) if training && p > 0.0 => {
            let scale = S::lit(1.0 / (1.0 - p));
            let mask: Vec<S> = x.iter().map(|_| if rng.random::<f64>() < p { S::zero() } else { scale }).collect();
            let y = x.iter().zip(&mask).map(|(&v, &m)| v * m).collect();
            (y, DropoutMask(mask))
        }
        _ => (x.to_vec(), DropoutMask::identity(x.len())),
    }
}
