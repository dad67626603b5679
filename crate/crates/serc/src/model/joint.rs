//! Joint temporal/causal classifier: the sequence summaries of a temporal
//! model and a causal model are concatenated (temporal first) and fed to a
//! fresh dense 32 + softmax head that predicts the causal label. The two
//! encoders are frozen by default; unfreezing makes every tensor trainable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SercError};
use crate::features::EncodedInstance;
use crate::nn::{
    softmax, softmax_xent, Activation, DenseParams, Gradients, Matrix, ParamAccess, Scalar,
};

use super::serc::{argmax, EncoderTape, SercModel};

#[derive(Debug, Clone)]
pub struct JointModel<F> {
    pub temporal: SercModel<F>,
    pub causal: SercModel<F>,
    pub head_hidden: DenseParams<F>,
    pub head_out: DenseParams<F>,
    /// When set (the default), only the head tensors are trainable.
    pub frozen: bool,
}

impl<F: Scalar> JointModel<F> {
    /// Builds the joint head over two trained encoders. The head is seeded
    /// independently of the encoders.
    pub fn init(
        temporal: SercModel<F>,
        causal: SercModel<F>,
        head_hidden_size: usize,
        seed: u64,
        frozen: bool,
    ) -> Result<Self> {
        if head_hidden_size == 0 {
            return Err(SercError::Config("joint head hidden size must be >= 1".into()));
        }
        if temporal.pos_inv != causal.pos_inv || temporal.dep_inv != causal.dep_inv {
            return Err(SercError::Config(
                "temporal and causal models use different tag inventories".into(),
            ));
        }
        if temporal.config.embedding_dim != causal.config.embedding_dim
            || temporal.config.event_marker != causal.config.event_marker
        {
            return Err(SercError::Config(
                "temporal and causal models expect different input encodings".into(),
            ));
        }
        let feature_width = temporal.config.feature_width() + causal.config.feature_width();
        let num_classes = causal.labels.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let head_hidden =
            DenseParams::init(head_hidden_size, feature_width, Activation::Relu, &mut rng);
        let head_out =
            DenseParams::init(num_classes, head_hidden_size, Activation::Identity, &mut rng);
        Ok(JointModel {
            temporal,
            causal,
            head_hidden,
            head_out,
            frozen,
        })
    }

    /// The same model with every tensor converted to another scalar type.
    pub fn cast<G: Scalar>(&self) -> JointModel<G> {
        JointModel {
            temporal: self.temporal.cast(),
            causal: self.causal.cast(),
            head_hidden: self.head_hidden.cast(),
            head_out: self.head_out.cast(),
            frozen: self.frozen,
        }
    }

    fn joint_feature(&self, x: &EncodedInstance<F>) -> Result<(Vec<F>, EncoderTape<F>, EncoderTape<F>)> {
        let (mut feature, t_tape) = self.temporal.encode_feature(x)?;
        let (c_feature, c_tape) = self.causal.encode_feature(x)?;
        feature.extend_from_slice(&c_feature);
        Ok((feature, t_tape, c_tape))
    }

    /// Class probabilities for one encoded instance.
    pub fn forward(&self, x: &EncodedInstance<F>) -> Result<Vec<F>> {
        let (feature, _, _) = self.joint_feature(x)?;
        let (hidden, _) = crate::nn::dense_forward(&self.head_hidden, &feature)?;
        let (logits, _) = crate::nn::dense_forward(&self.head_out, &hidden)?;
        Ok(softmax(&logits))
    }

    /// One training example against the causal gold label. Encoder gradients
    /// are only produced when the encoders are unfrozen.
    pub fn loss_and_grads(
        &self,
        x: &EncodedInstance<F>,
        weight: F,
        grads: &mut Gradients<F>,
    ) -> Result<(F, usize)> {
        let (feature, t_tape, c_tape) = self.joint_feature(x)?;
        let (hidden, hidden_cache) = crate::nn::dense_forward(&self.head_hidden, &feature)?;
        let (logits, out_cache) = crate::nn::dense_forward(&self.head_out, &hidden)?;
        let (loss, probs, mut dlogits) = softmax_xent(&logits, x.label_id)?;
        for d in &mut dlogits {
            *d *= weight;
        }
        let d_hidden = crate::nn::dense_backward(
            &self.head_out,
            &out_cache,
            &dlogits,
            grads,
            "joint.head_out",
        );
        let d_feature = crate::nn::dense_backward(
            &self.head_hidden,
            &hidden_cache,
            &d_hidden,
            grads,
            "joint.head_hidden",
        );
        if !self.frozen {
            let split = self.temporal.config.feature_width();
            self.temporal
                .encoder_backward(&t_tape, &d_feature[..split], grads, "temporal.");
            self.causal
                .encoder_backward(&c_tape, &d_feature[split..], grads, "causal.");
        }
        Ok((loss * weight, argmax(&probs)))
    }

    /// Loss only, for the finite-difference checker.
    pub fn loss_only(&self, x: &EncodedInstance<F>) -> Result<F> {
        let (feature, _, _) = self.joint_feature(x)?;
        let (hidden, _) = crate::nn::dense_forward(&self.head_hidden, &feature)?;
        let (logits, _) = crate::nn::dense_forward(&self.head_out, &hidden)?;
        let (loss, _, _) = softmax_xent(&logits, x.label_id)?;
        Ok(loss)
    }

    /// Causal label of the argmax probability (ties -> lowest id).
    pub fn predict(&self, x: &EncodedInstance<F>) -> Result<&str> {
        let probs = self.forward(x)?;
        Ok(self.causal.labels.label(argmax(&probs)).expect("class in range"))
    }

    /// Every tensor in the model, trainable or not (checkpointing).
    pub fn all_tensors(&self) -> Vec<(String, &Matrix<F>)> {
        let mut out = Vec::new();
        for (name, m) in self.temporal.tensors() {
            out.push((format!("temporal.{name}"), m));
        }
        for (name, m) in self.causal.tensors() {
            out.push((format!("causal.{name}"), m));
        }
        out.push(("joint.head_hidden.w".into(), &self.head_hidden.w));
        out.push(("joint.head_hidden.b".into(), &self.head_hidden.b));
        out.push(("joint.head_out.w".into(), &self.head_out.w));
        out.push(("joint.head_out.b".into(), &self.head_out.b));
        out
    }

    /// Mutable counterpart of `all_tensors`.
    pub fn all_tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        let mut out = Vec::new();
        for (name, m) in self.temporal.tensors_mut() {
            out.push((format!("temporal.{name}"), m));
        }
        for (name, m) in self.causal.tensors_mut() {
            out.push((format!("causal.{name}"), m));
        }
        out.push(("joint.head_hidden.w".into(), &mut self.head_hidden.w));
        out.push(("joint.head_hidden.b".into(), &mut self.head_hidden.b));
        out.push(("joint.head_out.w".into(), &mut self.head_out.w));
        out.push(("joint.head_out.b".into(), &mut self.head_out.b));
        out
    }
}

/// The trainable view: only the head when frozen, everything otherwise.
impl<F: Scalar> ParamAccess<F> for JointModel<F> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)> {
        if self.frozen {
            vec![
                ("joint.head_hidden.w".into(), &self.head_hidden.w),
                ("joint.head_hidden.b".into(), &self.head_hidden.b),
                ("joint.head_out.w".into(), &self.head_out.w),
                ("joint.head_out.b".into(), &self.head_out.b),
            ]
        } else {
            self.all_tensors()
        }
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        if self.frozen {
            vec![
                ("joint.head_hidden.w".into(), &mut self.head_hidden.w),
                ("joint.head_hidden.b".into(), &mut self.head_hidden.b),
                ("joint.head_out.w".into(), &mut self.head_out.w),
                ("joint.head_out.b".into(), &mut self.head_out.b),
            ]
        } else {
            self.all_tensors_mut()
        }
    }
}
