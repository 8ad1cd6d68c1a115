use super::ai_lstm::AiLstmModel;
use super::cnn::{HandCnnModel, HandPair};
use crate::error::{Error, Result};
use crate::nn::{join, Network, ParamSet, Role, Tensor};
use crate::preprocess::SkelTensor;
use crate::scalar::Real;

/// Index of the largest score; the lowest index wins ties.
pub fn argmax<T: Real>(p: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Element-wise maximum of two score vectors and its argmax. The fused
/// scores are not renormalized.
pub fn fuse_max<T: Real>(p1: &[T], p2: &[T]) -> Result<(Vec<T>, usize)> {
    if p1.len() != p2.len() {
        return Err(Error::Shape(format!("cannot fuse {} and {} scores", p1.len(), p2.len())));
    }
    let s: Vec<T> = p1.iter().zip(p2).map(|(a, b)| a.max(*b)).collect();
    let c = argmax(&s);
    Ok((s, c))
}

/// Skeletal and hand-shape branches, trained separately and fused by
/// [`fuse_max`] at inference.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionModel<T> {
    pub lstm: AiLstmModel<T>,
    pub cnn: HandCnnModel<T>,
}

impl<T: Real> FusionModel<T> {
    pub fn new(lstm: AiLstmModel<T>, cnn: HandCnnModel<T>) -> Result<Self> {
        if lstm.num_classes() != cnn.num_classes() {
            return Err(Error::VocabularyMismatch(format!(
                "lstm branch has {} classes, cnn branch {}",
                lstm.num_classes(),
                cnn.num_classes()
            )));
        }
        Ok(FusionModel { lstm, cnn })
    }

    pub fn predict(&self, skel: &SkelTensor<T>, hands: &HandPair<T>) -> Result<(Vec<T>, usize)> {
        fuse_max(&self.lstm.predict(skel)?, &self.cnn.predict(hands)?)
    }
}

impl<T: Real> ParamSet<T> for FusionModel<T> {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(&str, Role, &'a Tensor<T>)) {
        self.lstm.visit(&join(prefix, "lstm"), f);
        self.cnn.visit(&join(prefix, "cnn"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, Role, &mut Tensor<T>)) {
        self.lstm.visit_mut(&join(prefix, "lstm"), f);
        self.cnn.visit_mut(&join(prefix, "cnn"), f);
    }
}
