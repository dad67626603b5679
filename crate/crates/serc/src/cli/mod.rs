//! Command-line entry point wiring corpus -> features -> model -> train ->
//! eval. One flat `section.key = value` config file drives every subcommand;
//! any key can be overridden with `--set section.key=value`. Relative paths
//! resolve against `SERC_DATA_DIR` when it is set.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error,
//! 3 numerical failure. Every failure also prints one machine-parsable
//! `ERROR <code> <message>` line on stderr.

mod config;

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::corpus::{
    build_inventories, load_embeddings, parse_conllu, parse_relations, split_corpus, Document,
    EmbeddingTable, LabelSet, RelationInstance, TagInventory, Task,
};
use crate::error::{Result, SercError};
use crate::eval::{render_json, render_text, report, ConfusionMatrix};
use crate::features::{encode_instance, EncodedInstance};
use crate::model::{
    argmax, load_checkpoint, load_joint_checkpoint, reduced_gradient_check, save_checkpoint,
    save_joint_checkpoint, JointModel, SercConfig, SercModel,
};
use crate::train::{history_to_jsonl, train, train_joint, TrainConfig};

pub use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "serc",
    version,
    about = "Temporal and causal event relation classification"
)]
struct Cli {
    /// Flat `section.key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set train.seed=3.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate corpus and relations, write inventories and split manifests.
    Prep,
    /// Train a single-task model; writes model.ckpt and history.jsonl.
    Train,
    /// Train the joint causal head over two checkpoints; writes joint.ckpt.
    TrainJoint,
    /// Score a checkpoint on a split; writes report.txt and report.json.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
    },
    /// Print one predicted label per input instance.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Verify analytic gradients of a reduced model against central
    /// finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        threshold: f64,
    },
}

/// Run one command line; returns the process exit code.
pub fn dispatch(argv: impl Iterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 {
                let first = e.to_string().lines().next().unwrap_or("usage").to_string();
                eprintln!("ERROR 1 {first}");
            }
            return code;
        }
    };
    let cfg = match RunConfig::load(cli.config.as_deref(), &cli.set) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e),
    };
    match run(&cli.command, &cfg) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &SercError) -> i32 {
    let code = e.exit_code();
    eprintln!("ERROR {code} {e}");
    code
}

fn run(command: &Command, cfg: &RunConfig) -> Result<()> {
    match command {
        Command::Prep => prep(cfg),
        Command::Train => cmd_train(cfg),
        Command::TrainJoint => cmd_train_joint(cfg),
        Command::Eval { checkpoint, split } => cmd_eval(cfg, checkpoint, split),
        Command::Predict { checkpoint } => cmd_predict(cfg, checkpoint),
        Command::Gradcheck { seed, threshold } => cmd_gradcheck(*seed, *threshold),
    }
}

struct Data {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
    instances: Vec<RelationInstance>,
}

fn load_data(cfg: &RunConfig, task: Option<Task>) -> Result<Data> {
    let corpus_text = std::fs::read_to_string(cfg.path("paths.corpus")?)?;
    let docs = parse_conllu(&corpus_text)?;
    let relations_text = std::fs::read_to_string(cfg.path("paths.relations")?)?;
    let mut instances = parse_relations(&relations_text)?;
    if let Some(task) = task {
        instances.retain(|i| i.task == task);
        if instances.is_empty() {
            return Err(SercError::validation(format!(
                "no instances with task {}",
                task.name()
            )));
        }
    }
    let by_id = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.clone(), i))
        .collect();
    Ok(Data {
        docs,
        by_id,
        instances,
    })
}

fn ratios(cfg: &RunConfig) -> Result<(f64, f64, f64)> {
    Ok((
        cfg.get_parse("split.train", 0.75)?,
        cfg.get_parse("split.dev", 0.10)?,
        cfg.get_parse("split.test", 0.15)?,
    ))
}

fn task_of(cfg: &RunConfig) -> Result<Task> {
    Task::parse(cfg.get_or("task.kind", "TEMPORAL6"))
}

fn train_config(cfg: &RunConfig) -> Result<TrainConfig> {
    let mut tc = TrainConfig::default();
    tc.max_epochs = cfg.get_parse("train.max_epochs", tc.max_epochs)?;
    tc.batch_size = cfg.get_parse("train.batch_size", tc.batch_size)?;
    tc.optimizer.lr = cfg.get_parse("train.lr", tc.optimizer.lr)?;
    tc.optimizer.beta1 = cfg.get_parse("train.beta1", tc.optimizer.beta1)?;
    tc.optimizer.beta2 = cfg.get_parse("train.beta2", tc.optimizer.beta2)?;
    tc.optimizer.eps = cfg.get_parse("train.eps", tc.optimizer.eps)?;
    tc.grad_clip_norm = cfg.get_parse("train.grad_clip_norm", tc.grad_clip_norm)?;
    tc.patience = cfg.get_parse("train.patience", tc.patience)?;
    tc.seed = cfg.get_parse("train.seed", tc.seed)?;
    tc.unfreeze = cfg.get_parse("train.unfreeze", tc.unfreeze)?;
    tc.validate()?;
    Ok(tc)
}

fn serc_config(cfg: &RunConfig, num_classes: usize) -> Result<SercConfig> {
    let d = SercConfig::default();
    let config = SercConfig {
        word_hidden: cfg.get_parse("model.word_hidden", d.word_hidden)?,
        dep_hidden: cfg.get_parse("model.dep_hidden", d.dep_hidden)?,
        pos_hidden: cfg.get_parse("model.pos_hidden", d.pos_hidden)?,
        stacked_hidden: cfg.get_parse("model.stacked_hidden", d.stacked_hidden)?,
        dense_hidden: cfg.get_parse("model.dense_hidden", d.dense_hidden)?,
        num_classes,
        embedding_dim: cfg.get_parse("model.embedding_dim", d.embedding_dim)?,
        seed: cfg.get_parse("model.seed", d.seed)?,
        event_marker: cfg.get_parse("model.event_marker", d.event_marker)?,
        dropout: cfg.get_parse("model.dropout", d.dropout)?,
    };
    config.validate()?;
    Ok(config)
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.path("paths.out_dir")?;
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn embeddings(cfg: &RunConfig, dim: usize) -> Result<EmbeddingTable> {
    load_embeddings(&cfg.path("paths.embeddings")?, dim)
}

fn encode_all(
    data: &Data,
    instances: &[RelationInstance],
    pos_inv: &TagInventory,
    dep_inv: &TagInventory,
    emb: &EmbeddingTable,
    event_marker: bool,
) -> Result<Vec<EncodedInstance<f32>>> {
    instances
        .iter()
        .map(|inst| {
            let doc_idx = *data.by_id.get(&inst.doc_id).ok_or_else(|| {
                SercError::validation(format!("instance references unknown document {:?}", inst.doc_id))
            })?;
            encode_instance(&data.docs[doc_idx], inst, pos_inv, dep_inv, emb, event_marker)
        })
        .collect()
}

fn prep(cfg: &RunConfig) -> Result<()> {
    let task = task_of(cfg)?;
    let data = load_data(cfg, Some(task))?;
    let (train_set, dev_set, test_set) =
        split_corpus(&data.instances, ratios(cfg)?, cfg.get_parse("split.seed", 0u64)?)?;
    let train_docs = docs_of(&data, &train_set);
    let (vocab, pos_inv, dep_inv) = build_inventories(&train_docs, 1);

    let dir = out_dir(cfg)?;
    let inventories = serde_json::json!({
        "pos_tags": pos_inv.tags(),
        "dep_tags": dep_inv.tags(),
        "vocab_size": vocab.len(),
        "vocab_digest": vocab.digest(),
    });
    std::fs::write(
        dir.join("inventories.json"),
        serde_json::to_string_pretty(&inventories)?,
    )?;
    let doc_ids = |set: &[RelationInstance]| {
        let mut ids: Vec<&str> = set.iter().map(|i| i.doc_id.as_str()).collect();
        ids.dedup();
        ids.iter().map(|s| s.to_string()).collect::<Vec<_>>()
    };
    let splits = serde_json::json!({
        "task": task.name(),
        "counts": {"train": train_set.len(), "dev": dev_set.len(), "test": test_set.len()},
        "train_docs": doc_ids(&train_set),
        "dev_docs": doc_ids(&dev_set),
        "test_docs": doc_ids(&test_set),
    });
    std::fs::write(dir.join("splits.json"), serde_json::to_string_pretty(&splits)?)?;
    println!(
        "prep ok: {} documents, {} instances, splits {}/{}/{}",
        data.docs.len(),
        data.instances.len(),
        train_set.len(),
        dev_set.len(),
        test_set.len()
    );
    Ok(())
}

fn docs_of(data: &Data, instances: &[RelationInstance]) -> Vec<Document> {
    let mut seen = std::collections::HashSet::new();
    instances
        .iter()
        .filter(|i| seen.insert(i.doc_id.clone()))
        .map(|i| data.docs[data.by_id[&i.doc_id]].clone())
        .collect()
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let task = task_of(cfg)?;
    let data = load_data(cfg, Some(task))?;
    let (train_set, dev_set, _) =
        split_corpus(&data.instances, ratios(cfg)?, cfg.get_parse("split.seed", 0u64)?)?;
    let train_docs = docs_of(&data, &train_set);
    let (vocab, pos_inv, dep_inv) = build_inventories(&train_docs, 1);
    let config = serc_config(cfg, task.num_classes())?;
    let emb = embeddings(cfg, config.embedding_dim)?;
    let marker = config.event_marker;
    let encoded_train = encode_all(&data, &train_set, &pos_inv, &dep_inv, &emb, marker)?;
    let encoded_dev = encode_all(&data, &dev_set, &pos_inv, &dep_inv, &emb, marker)?;

    let mut model = SercModel::<f32>::init(
        config,
        LabelSet::for_task(task),
        pos_inv,
        dep_inv,
        vocab.digest(),
    )?;
    let tc = train_config(cfg)?;
    let history = train(&mut model, &encoded_train, &encoded_dev, &tc)?;

    let dir = out_dir(cfg)?;
    let provenance = serde_json::json!({
        "command": "train",
        "task": task.name(),
        "train_seed": tc.seed,
        "epochs_run": history.len(),
    });
    save_checkpoint(&model, dir.join("model.ckpt"), provenance)?;
    std::fs::write(dir.join("history.jsonl"), history_to_jsonl(&history)?)?;
    let best = history
        .iter()
        .filter_map(|e| e.dev_micro_f1)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "train ok: {} epochs, best dev micro-F1 {}",
        history.len(),
        if best.is_finite() {
            format!("{best:.1}")
        } else {
            "n/a".into()
        }
    );
    Ok(())
}

fn cmd_train_joint(cfg: &RunConfig) -> Result<()> {
    let temporal = load_checkpoint::<f32>(&cfg.path("joint.temporal_checkpoint")?)?;
    let causal = load_checkpoint::<f32>(&cfg.path("joint.causal_checkpoint")?)?;
    let head_hidden = cfg.get_parse("joint.head_hidden", 32usize)?;
    let seed = cfg.get_parse("joint.seed", 0u64)?;
    let tc = train_config(cfg)?;
    let mut model = JointModel::init(temporal, causal, head_hidden, seed, !tc.unfreeze)?;

    let data = load_data(cfg, Some(Task::Causal3))?;
    let (train_set, dev_set, _) =
        split_corpus(&data.instances, ratios(cfg)?, cfg.get_parse("split.seed", 0u64)?)?;
    let emb = embeddings(cfg, model.causal.config.embedding_dim)?;
    let marker = model.causal.config.event_marker;
    let encoded_train = encode_all(
        &data,
        &train_set,
        &model.causal.pos_inv,
        &model.causal.dep_inv,
        &emb,
        marker,
    )?;
    let encoded_dev = encode_all(
        &data,
        &dev_set,
        &model.causal.pos_inv,
        &model.causal.dep_inv,
        &emb,
        marker,
    )?;
    let history = train_joint(&mut model, &encoded_train, &encoded_dev, &tc)?;

    let dir = out_dir(cfg)?;
    let provenance = serde_json::json!({
        "command": "train-joint",
        "train_seed": tc.seed,
        "epochs_run": history.len(),
    });
    save_joint_checkpoint(&model, dir.join("joint.ckpt"), provenance)?;
    std::fs::write(dir.join("joint_history.jsonl"), history_to_jsonl(&history)?)?;
    println!("train-joint ok: {} epochs", history.len());
    Ok(())
}

/// Either kind of trained model, behind one prediction interface.
enum AnyModel {
    Single(SercModel<f32>),
    Joint(JointModel<f32>),
}

impl AnyModel {
    fn load(path: &std::path::Path) -> Result<AnyModel> {
        match load_checkpoint::<f32>(path) {
            Ok(m) => Ok(AnyModel::Single(m)),
            Err(SercError::Format(_)) => Ok(AnyModel::Joint(load_joint_checkpoint::<f32>(path)?)),
            Err(e) => Err(e),
        }
    }

    fn base(&self) -> &SercModel<f32> {
        match self {
            AnyModel::Single(m) => m,
            AnyModel::Joint(j) => &j.causal,
        }
    }

    fn labels(&self) -> &LabelSet {
        &self.base().labels
    }

    fn predict_id(&self, x: &EncodedInstance<f32>) -> Result<usize> {
        match self {
            AnyModel::Single(m) => {
                let (probs, _) = m.forward(x)?;
                Ok(argmax(&probs))
            }
            AnyModel::Joint(j) => Ok(argmax(&j.forward(x)?)),
        }
    }
}

fn checkpoint_instances(
    cfg: &RunConfig,
    model: &AnyModel,
) -> Result<(Data, Vec<RelationInstance>, Vec<RelationInstance>, Vec<RelationInstance>)> {
    let task = model.labels().task;
    let data = load_data(cfg, Some(task))?;
    let (train_set, dev_set, test_set) =
        split_corpus(&data.instances, ratios(cfg)?, cfg.get_parse("split.seed", 0u64)?)?;
    Ok((data, train_set, dev_set, test_set))
}

fn cmd_eval(cfg: &RunConfig, checkpoint: &std::path::Path, split: &str) -> Result<()> {
    let model = AnyModel::load(&cfg.resolve(checkpoint))?;
    let configured_task = task_of(cfg)?;
    if model.labels().task != configured_task {
        return Err(SercError::validation(format!(
            "checkpoint targets task {} but the configuration selects {}",
            model.labels().task.name(),
            configured_task.name()
        )));
    }
    let (data, train_set, dev_set, test_set) = checkpoint_instances(cfg, &model)?;
    let chosen = match split {
        "train" => train_set,
        "dev" => dev_set,
        "test" => test_set,
        other => {
            return Err(SercError::validation(format!(
                "unknown split {other:?} (expected train, dev, or test)"
            )))
        }
    };
    let base = model.base();
    let emb = embeddings(cfg, base.config.embedding_dim)?;
    let encoded = encode_all(
        &data,
        &chosen,
        &base.pos_inv,
        &base.dep_inv,
        &emb,
        base.config.event_marker,
    )?;
    let mut cm = ConfusionMatrix::new(model.labels().clone());
    for x in &encoded {
        cm.add(x.label_id, model.predict_id(x)?)?;
    }
    let r = report(&cm)?;
    let text = render_text(&r);
    let dir = out_dir(cfg)?;
    std::fs::write(dir.join("report.txt"), &text)?;
    std::fs::write(dir.join("report.json"), render_json(&r)?)?;
    print!("{text}");
    Ok(())
}

fn cmd_predict(cfg: &RunConfig, checkpoint: &std::path::Path) -> Result<()> {
    let model = AnyModel::load(&cfg.resolve(checkpoint))?;
    let data = load_data(cfg, Some(model.labels().task))?;
    let base = model.base();
    let emb = embeddings(cfg, base.config.embedding_dim)?;
    let encoded = encode_all(
        &data,
        &data.instances,
        &base.pos_inv,
        &base.dep_inv,
        &emb,
        base.config.event_marker,
    )?;
    for x in &encoded {
        let id = model.predict_id(x)?;
        println!("{}", model.labels().label(id).expect("class in range"));
    }
    Ok(())
}

fn cmd_gradcheck(seed: u64, threshold: f64) -> Result<()> {
    let r = reduced_gradient_check(seed, 1e-5)?;
    println!(
        "single-task graph: max relative error {:.3e} at {}",
        r.temporal.max_rel_err, r.temporal.worst_param
    );
    println!(
        "joint graph: max relative error {:.3e} at {}",
        r.joint.max_rel_err, r.joint.worst_param
    );
    if r.max_rel_err() > threshold {
        return Err(SercError::Numerical(format!(
            "gradient check failed: max relative error {:.3e} exceeds threshold {threshold:.1e}",
            r.max_rel_err()
        )));
    }
    println!("gradient check ok (threshold {threshold:.1e})");
    Ok(())
}

#[cfg(test)]
mod tests;
