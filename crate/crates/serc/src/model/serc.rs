//! The single-task architecture: three parallel input BiLSTMs (word 64,
//! dep 32, pos 32), a stacked BiLSTM of 64 over the merged hidden sequences,
//! a dense layer of 32, and a softmax output layer.
//!
//! Merge semantics: the dep and pos hidden sequences are token-aligned and
//! are concatenated feature-wise (2*32 + 2*32 = 128); the result is then
//! concatenated with the word-path hidden sequence (2*64 = 128) along the
//! time axis, path segment first. This is the only arrangement under the
//! 64/32/32 node counts in which all three sequences share one width.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{LabelSet, TagInventory};
use crate::error::{Result, SercError};
use crate::features::EncodedInstance;
use crate::nn::{
    bilstm_backward, bilstm_forward, bilstm_summary, dense_backward, dense_forward,
    softmax, softmax_xent, Activation, BiLstmCache, BiLstmParams, DenseCache, DenseParams,
    Gradients, Matrix, ParamAccess, Scalar,
};

/// Layer sizes and switches. The defaults are the published node counts:
/// input BiLSTMs of 64/32/32, stacked BiLSTM of 64, dense layer of 32.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SercConfig {
    pub word_hidden: usize,
    pub dep_hidden: usize,
    pub pos_hidden: usize,
    pub stacked_hidden: usize,
    pub dense_hidden: usize,
    pub num_classes: usize,
    pub embedding_dim: usize,
    pub seed: u64,
    pub event_marker: bool,
    pub dropout: f64,
}

impl Default for SercConfig {
    fn default() -> Self {
        SercConfig {
            word_hidden: 64,
            dep_hidden: 32,
            pos_hidden: 32,
            stacked_hidden: 64,
            dense_hidden: 32,
            num_classes: 6,
            embedding_dim: 100,
            seed: 0,
            event_marker: false,
            dropout: 0.0,
        }
    }
}

impl SercConfig {
    pub fn validate(&self) -> Result<()> {
        let sizes = [
            self.word_hidden,
            self.dep_hidden,
            self.pos_hidden,
            self.stacked_hidden,
            self.dense_hidden,
            self.num_classes,
            self.embedding_dim,
        ];
        if sizes.iter().any(|s| *s == 0) {
            return Err(SercError::Config("all layer sizes must be >= 1".into()));
        }
        if 2 * self.word_hidden != 2 * self.dep_hidden + 2 * self.pos_hidden {
            return Err(SercError::Config(format!(
                "merge width mismatch: word BiLSTM emits {}, dep+pos emit {}",
                2 * self.word_hidden,
                2 * self.dep_hidden + 2 * self.pos_hidden
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(SercError::Config("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Width of the sequence summary used for classification and as the
    /// joint model's feature.
    pub fn feature_width(&self) -> usize {
        2 * self.stacked_hidden
    }
}

#[derive(Debug, Clone)]
pub struct SercModel<F> {
    pub config: SercConfig,
    pub labels: LabelSet,
    pub pos_inv: TagInventory,
    pub dep_inv: TagInventory,
    pub vocab_digest: String,
    pub word: BiLstmParams<F>,
    pub dep: BiLstmParams<F>,
    pub pos: BiLstmParams<F>,
    pub stacked: BiLstmParams<F>,
    pub dense_hidden: DenseParams<F>,
    pub dense_out: DenseParams<F>,
}

/// Forward caches of everything up to the sequence summary.
#[derive(Debug, Clone)]
pub struct EncoderTape<F> {
    word: BiLstmCache<F>,
    dep: BiLstmCache<F>,
    pos: BiLstmCache<F>,
    stacked: BiLstmCache<F>,
    t1: usize,
    t2: usize,
}

impl<F> EncoderTape<F> {
    /// Time steps of the merged sequence fed to the stacked BiLSTM
    /// (path length plus full-text length).
    pub fn merged_len(&self) -> usize {
        self.t1 + self.t2
    }
}

/// Forward caches of the classification head.
#[derive(Debug, Clone)]
pub struct HeadTape<F> {
    hidden: DenseCache<F>,
    out: DenseCache<F>,
    dropout_mask: Option<Vec<F>>,
}

impl<F: Scalar> SercModel<F> {
    fn tag_input_dims(config: &SercConfig, pos_inv: &TagInventory, dep_inv: &TagInventory) -> (usize, usize) {
        let marker = usize::from(config.event_marker);
        (pos_inv.len() + marker, dep_inv.len() + marker)
    }

    /// Deterministic seeded initialization of every trainable tensor.
    pub fn init(
        config: SercConfig,
        labels: LabelSet,
        pos_inv: TagInventory,
        dep_inv: TagInventory,
        vocab_digest: String,
    ) -> Result<Self> {
        config.validate()?;
        if labels.len() != config.num_classes {
            return Err(SercError::Config(format!(
                "num_classes {} does not match label set of {}",
                config.num_classes,
                labels.len()
            )));
        }
        if pos_inv.is_empty() || dep_inv.is_empty() {
            return Err(SercError::Config("empty tag inventory".into()));
        }
        let (pos_dim, dep_dim) = Self::tag_input_dims(&config, &pos_inv, &dep_inv);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let word = BiLstmParams::init(config.word_hidden, config.embedding_dim, &mut rng);
        let dep = BiLstmParams::init(config.dep_hidden, dep_dim, &mut rng);
        let pos = BiLstmParams::init(config.pos_hidden, pos_dim, &mut rng);
        let stacked = BiLstmParams::init(config.stacked_hidden, 2 * config.word_hidden, &mut rng);
        let dense_hidden = DenseParams::init(
            config.dense_hidden,
            config.feature_width(),
            Activation::Relu,
            &mut rng,
        );
        let dense_out = DenseParams::init(
            config.num_classes,
            config.dense_hidden,
            Activation::Identity,
            &mut rng,
        );
        Ok(SercModel {
            config,
            labels,
            pos_inv,
            dep_inv,
            vocab_digest,
            word,
            dep,
            pos,
            stacked,
            dense_hidden,
            dense_out,
        })
    }

    /// Same shapes as `init` but all tensors zero (checkpoint loading).
    pub fn zeros(
        config: SercConfig,
        labels: LabelSet,
        pos_inv: TagInventory,
        dep_inv: TagInventory,
        vocab_digest: String,
    ) -> Result<Self> {
        let mut m = Self::init(config, labels, pos_inv, dep_inv, vocab_digest)?;
        for (_, tensor) in m.tensors_mut() {
            tensor.scale(F::zero());
        }
        Ok(m)
    }

    /// The same model with every tensor converted to another scalar type
    /// (e.g. f64 or the paired type used for gradient checking).
    pub fn cast<G: Scalar>(&self) -> SercModel<G> {
        SercModel {
            config: self.config.clone(),
            labels: self.labels.clone(),
            pos_inv: self.pos_inv.clone(),
            dep_inv: self.dep_inv.clone(),
            vocab_digest: self.vocab_digest.clone(),
            word: self.word.cast(),
            dep: self.dep.cast(),
            pos: self.pos.cast(),
            stacked: self.stacked.cast(),
            dense_hidden: self.dense_hidden.cast(),
            dense_out: self.dense_out.cast(),
        }
    }

    fn check_input(&self, x: &EncodedInstance<F>) -> Result<()> {
        let (pos_dim, dep_dim) = Self::tag_input_dims(&self.config, &self.pos_inv, &self.dep_inv);
        if x.word_vecs.cols() != self.config.embedding_dim {
            return Err(SercError::Dimension(format!(
                "word vectors of width {} vs embedding dim {}",
                x.word_vecs.cols(),
                self.config.embedding_dim
            )));
        }
        if x.pos_onehots.cols() != pos_dim || x.dep_onehots.cols() != dep_dim {
            return Err(SercError::Dimension(format!(
                "one-hot widths {}x{} vs inventories {}x{}",
                x.pos_onehots.cols(),
                x.dep_onehots.cols(),
                pos_dim,
                dep_dim
            )));
        }
        if x.pos_onehots.rows() != x.dep_onehots.rows() {
            return Err(SercError::Dimension(
                "pos and dep sequences are not index-aligned".into(),
            ));
        }
        Ok(())
    }

    /// Steps (1)-(5) of the pipeline: input BiLSTMs, merge, stacked BiLSTM,
    /// sequence summary.
    pub fn encode_feature(&self, x: &EncodedInstance<F>) -> Result<(Vec<F>, EncoderTape<F>)> {
        self.check_input(x)?;
        let (word_out, word_cache) = bilstm_forward(&self.word, &x.word_vecs)?;
        let (dep_out, dep_cache) = bilstm_forward(&self.dep, &x.dep_onehots)?;
        let (pos_out, pos_cache) = bilstm_forward(&self.pos, &x.pos_onehots)?;
        let t1 = word_out.rows();
        let t2 = dep_out.rows();
        let width = word_out.cols();
        debug_assert_eq!(width, dep_out.cols() + pos_out.cols());

        let mut merged = Matrix::zeros(t1 + t2, width);
        for t in 0..t1 {
            merged.row_mut(t).copy_from_slice(word_out.row(t));
        }
        for t in 0..t2 {
            let row = merged.row_mut(t1 + t);
            row[..dep_out.cols()].copy_from_slice(dep_out.row(t));
            row[dep_out.cols()..].copy_from_slice(pos_out.row(t));
        }

        let (stacked_out, stacked_cache) = bilstm_forward(&self.stacked, &merged)?;
        let feature = bilstm_summary(&stacked_out, self.config.stacked_hidden);
        Ok((
            feature,
            EncoderTape {
                word: word_cache,
                dep: dep_cache,
                pos: pos_cache,
                stacked: stacked_cache,
                t1,
                t2,
            },
        ))
    }

    /// Steps (6)-(7): dense 32 with rectifier (dropout applied to its
    /// activations when a mask is given), then the output dense layer.
    pub fn head_forward(
        &self,
        feature: &[F],
        dropout_mask: Option<Vec<F>>,
    ) -> Result<(Vec<F>, HeadTape<F>)> {
        let (hidden, hidden_cache) = dense_forward(&self.dense_hidden, feature)?;
        let dropped: Vec<F> = match &dropout_mask {
            Some(mask) => hidden.iter().zip(mask).map(|(h, m)| *h * *m).collect(),
            None => hidden,
        };
        let (logits, out_cache) = dense_forward(&self.dense_out, &dropped)?;
        Ok((
            logits,
            HeadTape {
                hidden: hidden_cache,
                out: out_cache,
                dropout_mask,
            },
        ))
    }

    /// Inference: (probs, feature).
    pub fn forward(&self, x: &EncodedInstance<F>) -> Result<(Vec<F>, Vec<F>)> {
        let (feature, _) = self.encode_feature(x)?;
        let (logits, _) = self.head_forward(&feature, None)?;
        Ok((softmax(&logits), feature))
    }

    /// Backward through the head; returns dL/dfeature.
    pub fn head_backward(
        &self,
        tape: &HeadTape<F>,
        dlogits: &[F],
        grads: &mut Gradients<F>,
        prefix: &str,
    ) -> Vec<F> {
        let mut d_hidden = dense_backward(
            &self.dense_out,
            &tape.out,
            dlogits,
            grads,
            &format!("{prefix}dense_out"),
        );
        if let Some(mask) = &tape.dropout_mask {
            for (d, m) in d_hidden.iter_mut().zip(mask) {
                *d *= *m;
            }
        }
        dense_backward(
            &self.dense_hidden,
            &tape.hidden,
            &d_hidden,
            grads,
            &format!("{prefix}dense_hidden"),
        )
    }

    /// Backward from the sequence summary through the whole encoder.
    pub fn encoder_backward(
        &self,
        tape: &EncoderTape<F>,
        d_feature: &[F],
        grads: &mut Gradients<F>,
        prefix: &str,
    ) {
        let hidden = self.config.stacked_hidden;
        let total = tape.t1 + tape.t2;
        let mut d_stacked_out = Matrix::zeros(total, 2 * hidden);
        // Summary = [last forward hidden || time-0 backward hidden].
        d_stacked_out.row_mut(total - 1)[..hidden].copy_from_slice(&d_feature[..hidden]);
        d_stacked_out.row_mut(0)[hidden..].copy_from_slice(&d_feature[hidden..]);

        let d_merged = bilstm_backward(
            &self.stacked,
            &tape.stacked,
            &d_stacked_out,
            grads,
            &format!("{prefix}stacked"),
        );

        let word_width = 2 * self.config.word_hidden;
        let dep_width = 2 * self.config.dep_hidden;
        let mut d_word_out = Matrix::zeros(tape.t1, word_width);
        for t in 0..tape.t1 {
            d_word_out.row_mut(t).copy_from_slice(d_merged.row(t));
        }
        let mut d_dep_out = Matrix::zeros(tape.t2, dep_width);
        let mut d_pos_out = Matrix::zeros(tape.t2, 2 * self.config.pos_hidden);
        for t in 0..tape.t2 {
            let row = d_merged.row(tape.t1 + t);
            d_dep_out.row_mut(t).copy_from_slice(&row[..dep_width]);
            d_pos_out.row_mut(t).copy_from_slice(&row[dep_width..]);
        }

        bilstm_backward(&self.word, &tape.word, &d_word_out, grads, &format!("{prefix}word"));
        bilstm_backward(&self.dep, &tape.dep, &d_dep_out, grads, &format!("{prefix}dep"));
        bilstm_backward(&self.pos, &tape.pos, &d_pos_out, grads, &format!("{prefix}pos"));
    }

    /// Inverted-dropout mask over the hidden dense activations.
    pub fn dropout_mask(&self, rng: &mut ChaCha8Rng) -> Option<Vec<F>> {
        if self.config.dropout <= 0.0 {
            return None;
        }
        let keep = 1.0 - self.config.dropout;
        Some(
            (0..self.config.dense_hidden)
                .map(|_| {
                    if rng.gen_range(0.0..1.0) < keep {
                        F::from_f64(1.0 / keep)
                    } else {
                        F::zero()
                    }
                })
                .collect(),
        )
    }

    /// One training example: forward, softmax cross-entropy against the
    /// instance's gold label (scaled by `weight`), full backward. Returns
    /// (loss, predicted class id).
    pub fn loss_and_grads(
        &self,
        x: &EncodedInstance<F>,
        weight: F,
        grads: &mut Gradients<F>,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(F, usize)> {
        let (feature, enc_tape) = self.encode_feature(x)?;
        let mask = dropout_rng.and_then(|rng| self.dropout_mask(rng));
        let (logits, head_tape) = self.head_forward(&feature, mask)?;
        let (loss, probs, mut dlogits) = softmax_xent(&logits, x.label_id)?;
        for d in &mut dlogits {
            *d *= weight;
        }
        let d_feature = self.head_backward(&head_tape, &dlogits, grads, "");
        self.encoder_backward(&enc_tape, &d_feature, grads, "");
        Ok((loss * weight, argmax(&probs)))
    }

    /// Loss only, no gradients. Used by the finite-difference checker.
    pub fn loss_only(&self, x: &EncodedInstance<F>) -> Result<F> {
        let (feature, _) = self.encode_feature(x)?;
        let (logits, _) = self.head_forward(&feature, None)?;
        let (loss, _, _) = softmax_xent(&logits, x.label_id)?;
        Ok(loss)
    }

    /// Label of the argmax probability; ties break toward the lowest id.
    pub fn predict(&self, x: &EncodedInstance<F>) -> Result<&str> {
        let (probs, _) = self.forward(x)?;
        Ok(self.labels.label(argmax(&probs)).expect("class in range"))
    }
}

/// First index of the maximum value (ties -> lowest index).
pub fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

impl<F: Scalar> ParamAccess<F> for SercModel<F> {
    fn tensors(&self) -> Vec<(String, &Matrix<F>)> {
        let mut out = Vec::with_capacity(28);
        for (name, p) in [
            ("word", &self.word),
            ("dep", &self.dep),
            ("pos", &self.pos),
            ("stacked", &self.stacked),
        ] {
            for (dir, lstm) in [("fwd", &p.fwd), ("bwd", &p.bwd)] {
                out.push((format!("{name}.{dir}.w"), &lstm.w));
                out.push((format!("{name}.{dir}.u"), &lstm.u));
                out.push((format!("{name}.{dir}.b"), &lstm.b));
            }
        }
        out.push(("dense_hidden.w".into(), &self.dense_hidden.w));
        out.push(("dense_hidden.b".into(), &self.dense_hidden.b));
        out.push(("dense_out.w".into(), &self.dense_out.w));
        out.push(("dense_out.b".into(), &self.dense_out.b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<F>)> {
        let mut out = Vec::with_capacity(28);
        for (name, p) in [
            ("word", &mut self.word),
            ("dep", &mut self.dep),
            ("pos", &mut self.pos),
            ("stacked", &mut self.stacked),
        ] {
            for (dir, lstm) in [("fwd", &mut p.fwd), ("bwd", &mut p.bwd)] {
                out.push((format!("{name}.{dir}.w"), &mut lstm.w));
                out.push((format!("{name}.{dir}.u"), &mut lstm.u));
                out.push((format!("{name}.{dir}.b"), &mut lstm.b));
            }
        }
        out.push(("dense_hidden.w".into(), &mut self.dense_hidden.w));
        out.push(("dense_hidden.b".into(), &mut self.dense_hidden.b));
        out.push(("dense_out.w".into(), &mut self.dense_out.w));
        out.push(("dense_out.b".into(), &mut self.dense_out.b));
        out
    }
}
