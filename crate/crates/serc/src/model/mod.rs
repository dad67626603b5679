//! The relation classifiers: the single-task BiLSTM architecture, the joint
//! temporal+causal variant, and the binary checkpoint container.

mod checkpoint;
mod diag;
mod joint;
mod serc;

pub use checkpoint::{
    load_checkpoint, load_joint_checkpoint, save_checkpoint, save_joint_checkpoint,
    CHECKPOINT_MAGIC,
};
pub use diag::{random_reduced_instance, reduced_gradient_check, GradCheckReport};
pub use joint::JointModel;
pub use serc::{argmax, EncoderTape, HeadTape, SercConfig, SercModel};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelSet, TagInventory, TagKind, Task};
    use crate::features::EncodedInstance;
    use crate::nn::{grad_check, FdPair, Gradients, Matrix, ParamAccess, Scalar};
    use crate::SercError;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_config(num_classes: usize) -> SercConfig {
        SercConfig {
            word_hidden: 4,
            dep_hidden: 2,
            pos_hidden: 2,
            stacked_hidden: 4,
            dense_hidden: 5,
            num_classes,
            embedding_dim: 3,
            seed: 7,
            event_marker: false,
            dropout: 0.0,
        }
    }

    fn inventories() -> (TagInventory, TagInventory) {
        (
            TagInventory::from_tags(TagKind::Pos, vec!["NOUN".into(), "VERB".into()]),
            TagInventory::from_tags(TagKind::Dep, vec!["nsubj".into(), "obj".into()]),
        )
    }

    fn tiny_model(seed: u64, task: Task) -> SercModel<f64> {
        let mut config = tiny_config(task.num_classes());
        config.seed = seed;
        let (pos, dep) = inventories();
        SercModel::init(config, LabelSet::for_task(task), pos, dep, "digest".into()).unwrap()
    }

    /// Random instance with valid one-hot rows; T1 path tokens, T2 text tokens.
    fn random_instance<F: Scalar>(
        model: &SercModel<F>,
        t1: usize,
        t2: usize,
        label_id: usize,
        rng: &mut ChaCha8Rng,
    ) -> EncodedInstance<F> {
        let word_vecs = Matrix::from_fn(t1, model.config.embedding_dim, |_, _| {
            F::from_f64(rng.gen_range(-1.0..1.0))
        });
        let marker = usize::from(model.config.event_marker);
        let mut pos_onehots = Matrix::zeros(t2, model.pos_inv.len() + marker);
        let mut dep_onehots = Matrix::zeros(t2, model.dep_inv.len() + marker);
        for t in 0..t2 {
            pos_onehots.set(t, rng.gen_range(0..model.pos_inv.len()), F::one());
            dep_onehots.set(t, rng.gen_range(0..model.dep_inv.len()), F::one());
        }
        EncodedInstance {
            word_vecs,
            pos_onehots,
            dep_onehots,
            label_id,
            task: model.labels.task,
        }
    }


    #[test]
    fn parameter_census_matches_closed_form() {
        let m = tiny_model(1, Task::Causal3);
        let c = &m.config;
        let bilstm = |h: usize, d: usize| 2 * (4 * h * (d + h) + 4 * h);
        let dense = |o: usize, i: usize| o * (i + 1);
        let (pos_dim, dep_dim) = (m.pos_inv.len(), m.dep_inv.len());
        let expected = bilstm(c.word_hidden, c.embedding_dim)
            + bilstm(c.dep_hidden, dep_dim)
            + bilstm(c.pos_hidden, pos_dim)
            + bilstm(c.stacked_hidden, 2 * c.word_hidden)
            + dense(c.dense_hidden, 2 * c.stacked_hidden)
            + dense(c.num_classes, c.dense_hidden);
        assert_eq!(m.param_count(), expected);
        assert_eq!(m.tensors().len(), 28);
    }

    #[test]
    fn merge_width_mismatch_is_config_error() {
        let mut config = SercConfig::default();
        config.dep_hidden = 16;
        let err = config.validate().unwrap_err();
        assert!(matches!(err, SercError::Config(_)), "{err}");
        assert!(err.to_string().contains("128"), "{err}");
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = tiny_model(5, Task::Temporal6);
        let b = tiny_model(5, Task::Temporal6);
        let c = tiny_model(6, Task::Temporal6);
        for ((_, ma), (_, mb)) in a.tensors().into_iter().zip(b.tensors()) {
            assert_eq!(ma, mb);
        }
        assert!(a
            .tensors()
            .into_iter()
            .zip(c.tensors())
            .any(|((_, ma), (_, mc))| ma != mc));
    }

    #[test]
    fn zero_model_predicts_uniformly() {
        let (pos, dep) = inventories();
        let m = SercModel::<f64>::zeros(
            tiny_config(3),
            LabelSet::for_task(Task::Causal3),
            pos,
            dep,
            String::new(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = random_instance(&m, 2, 4, 1, &mut rng);
        let (probs, feature) = m.forward(&x).unwrap();
        assert_eq!(feature.len(), m.config.feature_width());
        for p in &probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
        // All-equal probabilities tie-break to the lowest class id.
        assert_eq!(m.predict(&x).unwrap(), "CAUSES");
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2f64, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5f64, 0.5]), 0);
        assert_eq!(argmax(&[1.0f64]), 0);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let m = tiny_model(11, Task::Causal3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_instance(&m, 3, 5, 2, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads, None).unwrap();
        let mut probe: SercModel<FdPair> = m.cast();
        let xp: EncodedInstance<FdPair> = x.cast();
        let result = grad_check(&mut probe, &grads, |mm| mm.loss_only(&xp), 1e-5).unwrap();
        assert!(
            result.max_rel_err <= 1e-6,
            "max rel err {} at {}",
            result.max_rel_err,
            result.worst_param
        );
    }

    #[test]
    fn a_corrupted_gradient_is_caught_and_named() {
        let m = tiny_model(11, Task::Causal3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_instance(&m, 3, 5, 2, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads, None).unwrap();
        // Fault injection: scale one recurrent-weight gradient by 1.01.
        grads.get_mut("stacked.fwd.u").unwrap().scale(1.01);
        let mut probe: SercModel<FdPair> = m.cast();
        let xp: EncodedInstance<FdPair> = x.cast();
        let result = grad_check(&mut probe, &grads, |mm| mm.loss_only(&xp), 1e-5).unwrap();
        assert!(result.max_rel_err >= 1e-3, "{}", result.max_rel_err);
        assert!(
            result.worst_param.starts_with("stacked.fwd.u"),
            "worst was {}",
            result.worst_param
        );
    }

    #[test]
    fn reduced_diagnostic_reports_tiny_error() {
        let report = reduced_gradient_check(1, 1e-5).unwrap();
        assert!(report.max_rel_err() <= 1e-6, "{:?}", report);
    }

    #[test]
    fn joint_gradients_match_finite_differences_when_unfrozen() {
        let temporal = tiny_model(11, Task::Temporal6);
        let causal = tiny_model(12, Task::Causal3);
        let m = JointModel::init(temporal, causal, 5, 13, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_instance(&m.causal, 3, 5, 1, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads).unwrap();
        let mut probe: JointModel<FdPair> = m.cast();
        let xp: EncodedInstance<FdPair> = x.cast();
        let result = grad_check(&mut probe, &grads, |mm| mm.loss_only(&xp), 1e-5).unwrap();
        assert!(
            result.max_rel_err <= 1e-6,
            "max rel err {} at {}",
            result.max_rel_err,
            result.worst_param
        );
    }

    #[test]
    fn frozen_joint_trains_only_the_head() {
        let temporal = tiny_model(21, Task::Temporal6);
        let causal = tiny_model(22, Task::Causal3);
        let m = JointModel::init(temporal, causal, 5, 23, true).unwrap();
        assert_eq!(
            m.param_names(),
            vec![
                "joint.head_hidden.w",
                "joint.head_hidden.b",
                "joint.head_out.w",
                "joint.head_out.b",
            ]
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_instance(&m.causal, 2, 4, 0, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads).unwrap();
        assert!(grads.iter().all(|(n, _)| n.starts_with("joint.")));
        assert_eq!(grads.len(), 4);
        assert_eq!(m.all_tensors().len(), 28 + 28 + 4);
    }

    #[test]
    fn joint_rejects_mismatched_inventories() {
        let temporal = tiny_model(1, Task::Temporal6);
        let mut causal = tiny_model(2, Task::Causal3);
        causal.pos_inv.insert("EXTRA");
        let err = JointModel::init(temporal, causal, 5, 3, true).unwrap_err();
        assert!(matches!(err, SercError::Config(_)), "{err}");
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let mut config = tiny_config(6);
        config.seed = 31;
        let (pos, dep) = inventories();
        let m = SercModel::<f32>::init(
            config,
            LabelSet::for_task(Task::Temporal6),
            pos,
            dep,
            "abc123".into(),
        )
        .unwrap();
        save_checkpoint(&m, &path, serde_json::json!({"epochs": 0})).unwrap();
        let loaded = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(loaded.config, m.config);
        assert_eq!(loaded.labels, m.labels);
        assert_eq!(loaded.pos_inv.tags(), m.pos_inv.tags());
        assert_eq!(loaded.vocab_digest, "abc123");
        for ((na, ta), (nb, tb)) in m.tensors().into_iter().zip(loaded.tensors()) {
            assert_eq!(na, nb);
            assert_eq!(ta.data(), tb.data(), "tensor {na} not bit-exact");
        }
        // Saving the loaded model reproduces the same bytes.
        let path2 = dir.path().join("m2.ckpt");
        save_checkpoint(&loaded, &path2, serde_json::json!({"epochs": 0})).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn joint_checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.ckpt");
        let temporal = tiny_model(41, Task::Temporal6);
        let causal = tiny_model(42, Task::Causal3);
        let m = JointModel::init(temporal, causal, 5, 43, true).unwrap();
        save_joint_checkpoint(&m, &path, serde_json::Value::Null).unwrap();
        let loaded = load_joint_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded.frozen, true);
        assert_eq!(loaded.head_hidden.out_dim(), 5);
        for ((na, ta), (nb, tb)) in m.all_tensors().into_iter().zip(loaded.all_tensors()) {
            assert_eq!(na, nb);
            // f64 -> f32 storage -> f64: values equal at f32 precision.
            for (a, b) in ta.data().iter().zip(tb.data()) {
                assert_eq!(*a as f32, *b as f32, "tensor {na}");
            }
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ckpt");
        std::fs::write(&path, b"NOTACKPTxxxxxxxxxxxx").unwrap();
        let err = load_checkpoint::<f32>(&path).unwrap_err();
        assert!(matches!(err, SercError::Format(_)), "{err}");
    }

    #[test]
    fn truncated_payload_is_corruption_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ckpt");
        let m = tiny_model(51, Task::Causal3);
        let m32: SercModel<f64> = m;
        save_checkpoint(&m32, &path, serde_json::Value::Null).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 7]).unwrap();
        let err = load_checkpoint::<f64>(&path).unwrap_err();
        assert!(matches!(err, SercError::Corruption(_)), "{err}");
    }

    #[test]
    fn input_width_mismatch_is_dimension_error() {
        let m = tiny_model(61, Task::Causal3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = random_instance(&m, 2, 3, 0, &mut rng);
        x.word_vecs = Matrix::zeros(2, m.config.embedding_dim + 1);
        let err = m.forward(&x).unwrap_err();
        assert!(matches!(err, SercError::Dimension(_)), "{err}");
    }

    #[test]
    fn dropout_mask_is_inverted_and_seeded() {
        let mut m = tiny_model(71, Task::Causal3);
        m.config.dropout = 0.5;
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let a = m.dropout_mask(&mut r1).unwrap();
        let b = m.dropout_mask(&mut r2).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| *v == 0.0 || (*v - 2.0).abs() < 1e-12));
        m.config.dropout = 0.0;
        assert!(m.dropout_mask(&mut r1).is_none());
    }
}
