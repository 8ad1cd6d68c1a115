use rand::Rng as _;

use crate::rng::Rng;
use crate::scalar::Real;

/// Inverted-dropout mask source; inactive at inference.
pub struct Dropout<'r> {
    keep: f64,
    rng: Option<&'r mut Rng>,
}

impl<'r> Dropout<'r> {
    pub fn inactive() -> Self {
        Dropout { keep: 1.0, rng: None }
    }

    pub fn new(keep: f64, rng: &'r mut Rng) -> Self {
        assert!(keep > 0.0 && keep <= 1.0, "keep probability must lie in (0, 1]");
        Dropout { keep, rng: Some(rng) }
    }

    pub fn is_active(&self) -> bool {
        self.rng.is_some() && self.keep < 1.0
    }

    /// Mask of `n` entries, each `0` or `1/keep`; `None` when inactive.
    pub fn mask<T: Real>(&mut self, n: usize) -> Option<Vec<T>> {
        if !self.is_active() {
            return None;
        }
        let keep = self.keep;
        let rng = self.rng.as_mut().expect("active dropout has an rng");
        let scale = T::lit(1.0 / keep);
        Some((0..n).map(|_| if rng.random::<f64>() < keep { scale } else { T::zero() }).collect())
    }
}

/// Applies inverted dropout to `x`; the identity when not training.
pub fn dropout_apply<T: Real>(x: &[T], keep: f64, training: bool, rng: &mut Rng) -> (Vec<T>, Option<Vec<T>>) {
    if !training {
        return (x.to_vec(), None);
    }
    let mut d = Dropout::new(keep, rng);
    match d.mask::<T>(x.len()) {
        Some(m) => (x.iter().zip(&m).map(|(a, b)| *a * *b).collect(), Some(m)),
        None => (x.to_vec(), None),
    }
}
