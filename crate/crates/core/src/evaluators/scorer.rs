use rand::Rng;

use crate::nn::{
    dropout, gelu, gelu_grad, DropoutMask, LayerNorm, LayerNormCache, Linear, Mode, ParamTensor, Parameterized, Real,
};
use crate::rng::SeededRng;
use crate::Result;

/// `LN -> Linear -> GELU -> Dropout -> Linear -> scalar`.
#[derive(Clone, Debug)]
pub struct Scorer<S> {
    pub norm: LayerNorm<S>,
    pub fc: Linear<S>,
    pub out: Linear<S>,
    pub dropout_rate: f64,
}

#[derive(Clone, Debug)]
pub struct ScorerCache<S> {
    norm: LayerNormCache<S>,
    normed: Vec<S>,
    pre: Vec<S>,
    dropped: Vec<S>,
    mask: DropoutMask<S>,
}

impl<S: Real> Scorer<S> {
    pub fn zeros(name: &str, input: usize, hidden: usize, dropout_rate: f64) -> Self {
        Self {
            norm: LayerNorm::new(&format!("{name}.norm"), input, true),
            fc: Linear::zeros(&format!("{name}.fc"), input, hidden, true),
            out: Linear::zeros(&format!("{name}.out"), hidden, 1, true),
            dropout_rate,
        }
    }

    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.fc.init_uniform(rng);
        self.out.init_uniform(rng);
    }

    pub fn forward(&self, x: &[S], mode: &mut Mode<'_>) -> Result<(S, ScorerCache<S>)> {
        let (normed, norm) = self.norm.forward(x)?;
        let pre = self.fc.forward(&normed)?;
        let act: Vec<S> = pre.iter().map(|&v| gelu(v)).collect();
        let (dropped, mask) = match mode {
            Mode::Train(rng) => dropout(&act, self.dropout_rate, true, Some(&mut **rng)),
            Mode::Eval => dropout(&act, self.dropout_rate, false, None::<&mut SeededRng>),
        };
        let score = self.out.forward(&dropped)?[0];
        Ok((score, ScorerCache { norm, normed, pre, dropped, mask }))
    }

    pub fn backward(&mut self, cache: &ScorerCache<S>, grad: S) -> Vec<S> {
        let g_dropped = self.out.backward(&cache.dropped, &[grad]);
        let g_act = cache.mask.apply(&g_dropped);
        let g_pre: Vec<S> = g_act.iter().zip(&cache.pre).map(|(&g, &p)| g * gelu_grad(p)).collect();
        let g_normed = self.fc.backward(&cache.normed, &g_pre);
        self.norm.backward(&cache.norm, &g_normed)
    }
}

impl<S: Real> Parameterized<S> for Scorer<S> {
    fn params(&self) -> Vec<&ParamTensor<S>> {
        let mut v = self.norm.params();
        v.extend(self.fc.params());
        v.extend(self.out.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut v = self.norm.params_mut();
        v.extend(self.fc.params_mut());
        v.extend(self.out.params_mut());
        v
    }
}
