//! Self-diagnostics: gradient checking of the full architecture at reduced
//! dimensions, small enough to perturb every parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabelSet, TagInventory, TagKind, Task};
use crate::error::Result;
use crate::features::EncodedInstance;
use crate::nn::{grad_check, FdPair, GradCheckResult, Gradients, Matrix, Scalar};

use super::joint::JointModel;
use super::serc::{SercConfig, SercModel};

/// Worst relative errors for the single-task graph and the unfrozen joint
/// graph.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub temporal: GradCheckResult,
    pub joint: GradCheckResult,
}

impl GradCheckReport {
    pub fn max_rel_err(&self) -> f64 {
        self.temporal.max_rel_err.max(self.joint.max_rel_err)
    }
}

fn reduced_config(num_classes: usize, seed: u64) -> SercConfig {
    SercConfig {
        word_hidden: 4,
        dep_hidden: 2,
        pos_hidden: 2,
        stacked_hidden: 4,
        dense_hidden: 5,
        num_classes,
        embedding_dim: 3,
        seed,
        event_marker: false,
        dropout: 0.0,
    }
}

fn reduced_model(seed: u64, task: Task) -> Result<SercModel<f64>> {
    let pos = TagInventory::from_tags(TagKind::Pos, vec!["NOUN".into(), "VERB".into()]);
    let dep = TagInventory::from_tags(TagKind::Dep, vec!["nsubj".into(), "obj".into()]);
    SercModel::init(
        reduced_config(task.num_classes(), seed),
        LabelSet::for_task(task),
        pos,
        dep,
        String::new(),
    )
}

/// Random instance with valid one-hot rows: `t1` path tokens, `t2` text
/// tokens.
pub fn random_reduced_instance<F: Scalar>(
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

/// Check analytic gradients of the reduced single-task model (hidden 4/2/2,
/// stacked 4, embedding dim 3, T1=3, T2=5) and of the reduced unfrozen joint
/// model against central differences at `eps` over every parameter.
pub fn reduced_gradient_check(seed: u64, eps: f64) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let temporal = {
        let m = reduced_model(seed.wrapping_add(1), Task::Temporal6)?;
        let x = random_reduced_instance(&m, 3, 5, 2, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads, None)?;
        let mut probe: SercModel<FdPair> = m.cast();
        let xp: EncodedInstance<FdPair> = x.cast();
        grad_check(&mut probe, &grads, |mm| mm.loss_only(&xp), eps)?
    };

    let joint = {
        let t = reduced_model(seed.wrapping_add(2), Task::Temporal6)?;
        let c = reduced_model(seed.wrapping_add(3), Task::Causal3)?;
        let m = JointModel::init(t, c, 5, seed.wrapping_add(4), false)?;
        let x = random_reduced_instance(&m.causal, 3, 5, 1, &mut rng);
        let mut grads = Gradients::new();
        m.loss_and_grads(&x, 1.0, &mut grads)?;
        let mut probe: JointModel<FdPair> = m.cast();
        let xp: EncodedInstance<FdPair> = x.cast();
        grad_check(&mut probe, &grads, |mm| mm.loss_only(&xp), eps)?
    };

    Ok(GradCheckReport { temporal, joint })
}
