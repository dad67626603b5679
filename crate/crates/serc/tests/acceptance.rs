//! Acceptance gate: one test per top-level guarantee, each printing a single
//! PASS line with its measurements.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serc::corpus::{
    build_inventories, generate_synthetic, synthetic_embeddings, Coupling, Document, EventMention,
    LabelSet, Sentence, SyntheticSpec, TagInventory, TagKind, Task, Token,
};
use serc::eval::{per_class_metrics, render_text, report, round1, ConfusionMatrix};
use serc::features::{build_dep_graph, encode_instance, extract_path, EncodedInstance};
use serc::model::{
    load_checkpoint, random_reduced_instance, reduced_gradient_check, save_checkpoint, JointModel,
    SercConfig, SercModel,
};
use serc::nn::ParamAccess;
use serc::train::{train, train_joint, TrainConfig};

const EMB_DIM: usize = 16;

fn small_config(num_classes: usize, seed: u64) -> SercConfig {
    SercConfig {
        word_hidden: 16,
        dep_hidden: 8,
        pos_hidden: 8,
        stacked_hidden: 16,
        dense_hidden: 16,
        num_classes,
        embedding_dim: EMB_DIM,
        seed,
        event_marker: false,
        dropout: 0.0,
    }
}

struct Encoded {
    model: SercModel<f32>,
    train: Vec<EncodedInstance<f32>>,
    dev: Vec<EncodedInstance<f32>>,
}

/// Generate a synthetic corpus, build inventories from the training
/// documents, and encode per-task train/dev sets.
fn prepare(
    task: Task,
    coupling: Coupling,
    n_train_docs: usize,
    n_dev_docs: usize,
    corpus_seed: u64,
    model_seed: u64,
) -> (Encoded, Option<Encoded>) {
    let spec = SyntheticSpec {
        sentence_len: (5, 9),
        task,
        instances: n_train_docs + n_dev_docs,
        coupling,
    };
    let corpus = generate_synthetic(&spec, corpus_seed).unwrap();
    let train_docs = &corpus.documents[..n_train_docs];
    let (vocab, pos_inv, dep_inv) = build_inventories(train_docs, 1);
    let emb = synthetic_embeddings(&corpus.documents, EMB_DIM, corpus_seed);

    let doc_index: std::collections::HashMap<&str, usize> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.doc_id.as_str(), i))
        .collect();
    let encode_task = |wanted: Task, seed: u64| {
        let mut train = Vec::new();
        let mut dev = Vec::new();
        for inst in corpus.instances.iter().filter(|i| i.task == wanted) {
            let di = doc_index[inst.doc_id.as_str()];
            let x = encode_instance::<f32>(
                &corpus.documents[di],
                inst,
                &pos_inv,
                &dep_inv,
                &emb,
                false,
            )
            .unwrap();
            if di < n_train_docs {
                train.push(x);
            } else {
                dev.push(x);
            }
        }
        let model = SercModel::<f32>::init(
            small_config(wanted.num_classes(), seed),
            LabelSet::for_task(wanted),
            pos_inv.clone(),
            dep_inv.clone(),
            vocab.digest(),
        )
        .unwrap();
        Encoded { model, train, dev }
    };

    let primary = encode_task(task, model_seed);
    let secondary = (coupling == Coupling::TemporalDrivesCausal)
        .then(|| encode_task(Task::Causal3, model_seed.wrapping_add(1)));
    (primary, secondary)
}

fn accuracy(model: &SercModel<f32>, set: &[EncodedInstance<f32>]) -> f64 {
    let mut cm = ConfusionMatrix::new(model.labels.clone());
    for x in set {
        let id = model.labels.id(model.predict(x).unwrap()).unwrap();
        cm.add(x.label_id, id).unwrap();
    }
    100.0 * cm.correct() as f64 / cm.total() as f64
}

fn joint_accuracy(model: &JointModel<f32>, set: &[EncodedInstance<f32>]) -> f64 {
    let mut cm = ConfusionMatrix::new(model.causal.labels.clone());
    for x in set {
        let id = model.causal.labels.id(model.predict(x).unwrap()).unwrap();
        cm.add(x.label_id, id).unwrap();
    }
    100.0 * cm.correct() as f64 / cm.total() as f64
}

#[test]
fn criterion_1_gradient_correctness() {
    let start = Instant::now();
    let r = reduced_gradient_check(1, 1e-5).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        r.temporal.max_rel_err <= 1e-6,
        "single-task graph: {} at {}",
        r.temporal.max_rel_err,
        r.temporal.worst_param
    );
    assert!(
        r.joint.max_rel_err <= 1e-6,
        "joint graph: {} at {}",
        r.joint.max_rel_err,
        r.joint.worst_param
    );
    assert!(elapsed < 60.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-1 gradient-correctness: single-task {:.2e}, joint {:.2e} (<= 1e-6), {elapsed:.1}s",
        r.temporal.max_rel_err, r.joint.max_rel_err
    );
}

#[test]
fn criterion_2_architecture_census() {
    let start = Instant::now();
    let pos = TagInventory::from_tags(
        TagKind::Pos,
        vec!["NOUN".into(), "VERB".into(), "ADJ".into()],
    );
    let dep = TagInventory::from_tags(TagKind::Dep, vec!["nsubj".into(), "obj".into()]);
    for (task, classes) in [
        (Task::Temporal6, 6),
        (Task::Temporal14, 14),
        (Task::Causal3, 3),
    ] {
        let config = SercConfig {
            num_classes: classes,
            ..SercConfig::default()
        };
        let m = SercModel::<f32>::init(
            config,
            LabelSet::for_task(task),
            pos.clone(),
            dep.clone(),
            String::new(),
        )
        .unwrap();
        let shape = |name: &str| {
            let t = m.param(name).unwrap();
            (t.rows(), t.cols())
        };
        // Input BiLSTMs: 64, 32 and 32 hidden nodes (4H gate rows each).
        assert_eq!(shape("word.fwd.w").0, 4 * 64);
        assert_eq!(shape("dep.fwd.u"), (4 * 32, 32));
        assert_eq!(shape("pos.bwd.u"), (4 * 32, 32));
        // Stacked BiLSTM: 64 nodes over the 128-wide merged sequence.
        assert_eq!(shape("stacked.fwd.w"), (4 * 64, 128));
        // Dense 32 over the 128-wide summary, then the output layer.
        assert_eq!(shape("dense_hidden.w"), (32, 128));
        assert_eq!(shape("dense_out.w"), (classes, 32));

        // Merged sequence: T1 + T2 steps of width 128.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_reduced_instance(&m, 3, 7, 0, &mut rng);
        let (feature, tape) = m.encode_feature(&x).unwrap();
        assert_eq!(tape.merged_len(), 3 + 7);
        assert_eq!(feature.len(), 128);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "took {elapsed:.2}s");
    println!(
        "PASS criterion-2 architecture-census: 64/32/32 inputs, stacked 64, dense 32, outputs 6/14/3, merged T1+T2 x 128, {elapsed:.2}s"
    );
}

#[test]
fn criterion_3_overfit_capability() {
    let start = Instant::now();
    let (mut enc, _) = prepare(Task::Causal3, Coupling::None, 60, 0, 11, 17);
    // Default optimizer hyperparameters; dev = train enables early stop once
    // accuracy saturates, capped at the 200-epoch budget.
    let cfg = TrainConfig {
        max_epochs: 200,
        seed: 11,
        ..TrainConfig::default()
    };
    let train_clone = enc.train.clone();
    let history = train(&mut enc.model, &enc.train, &train_clone, &cfg).unwrap();
    let best = history
        .iter()
        .map(|e| e.train_accuracy)
        .fold(0.0f64, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        best >= 99.0,
        "best train accuracy {best:.1}% after {} epochs",
        history.len()
    );
    assert!(elapsed < 300.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-3 overfit: {best:.1}% train accuracy in {} epochs (>= 99% within 200), {elapsed:.1}s",
        history.len()
    );
}

#[test]
fn criterion_4_joint_benefit() {
    let start = Instant::now();
    let mut causal_accs = Vec::new();
    let mut joint_accs = Vec::new();
    for seed in [1u64, 2, 3] {
        let (mut temporal, causal) = prepare(
            Task::Temporal6,
            Coupling::TemporalDrivesCausal,
            200,
            60,
            seed,
            seed.wrapping_mul(31),
        );
        let mut causal = causal.unwrap();

        // The temporal encoder gets the larger budget; the causal-only model
        // and the joint head share the same smaller one.
        let t_cfg = TrainConfig {
            max_epochs: 40,
            seed,
            ..TrainConfig::default()
        };
        train(&mut temporal.model, &temporal.train, &temporal.dev, &t_cfg).unwrap();

        let c_cfg = TrainConfig {
            max_epochs: 8,
            seed,
            ..TrainConfig::default()
        };
        train(&mut causal.model, &causal.train, &causal.dev, &c_cfg).unwrap();
        causal_accs.push(accuracy(&causal.model, &causal.dev));

        let mut joint = JointModel::init(
            temporal.model.clone(),
            causal.model.clone(),
            32,
            seed.wrapping_mul(7),
            true,
        )
        .unwrap();
        train_joint(&mut joint, &causal.train, &causal.dev, &c_cfg).unwrap();
        joint_accs.push(joint_accuracy(&joint, &causal.dev));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (c_mean, j_mean) = (mean(&causal_accs), mean(&joint_accs));
    let margin = j_mean - c_mean;
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        margin >= 0.0,
        "joint {j_mean:.1}% vs causal-only {c_mean:.1}%"
    );
    assert!(elapsed < 900.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-4 joint-benefit: joint {j_mean:.1}% vs causal-only {c_mean:.1}% mean dev accuracy over seeds 1-3, margin {margin:.1} (expected >= 5, hard floor 0), {elapsed:.1}s"
    );
}

#[test]
fn criterion_5_metric_fixtures() {
    let start = Instant::now();
    // Published (P, R, F1) rows realized as raw counts (tp, support,
    // predicted): the sources computed F1 before rounding P and R.
    let fixtures = [
        (162u64, 194u64, 319u64, 50.8, 83.5, 63.2),
        (2, 9, 2, 100.0, 22.2, 36.4),
        (140, 260, 190, 73.7, 53.8, 62.2),
    ];
    let labels = LabelSet::for_task(Task::Causal3);
    for (tp, support, predicted, p, r, f1) in fixtures {
        let mut cm = ConfusionMatrix::new(labels.clone());
        for _ in 0..tp {
            cm.add(0, 0).unwrap();
        }
        for _ in 0..support - tp {
            cm.add(0, 1).unwrap();
        }
        for _ in 0..predicted - tp {
            cm.add(1, 0).unwrap();
        }
        let m = per_class_metrics(&cm).remove(0);
        assert_eq!(round1(m.precision.unwrap()), p);
        assert_eq!(round1(m.recall.unwrap()), r);
        assert!(
            (round1(m.f1.unwrap()) - f1).abs() <= 0.05,
            "F1 {} vs {f1}",
            round1(m.f1.unwrap())
        );
    }
    // Micro identity on 1000 random single-label confusion matrices.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let mut cm = ConfusionMatrix::new(labels.clone());
        let n = rng.gen_range(1..200);
        for _ in 0..n {
            cm.add(rng.gen_range(0..3), rng.gen_range(0..3)).unwrap();
        }
        let r = report(&cm).unwrap();
        assert_eq!(r.micro.precision, r.accuracy);
        assert_eq!(r.micro.recall, r.accuracy);
        assert_eq!(r.micro.f1, r.accuracy);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-5 metric-fixtures: 3 published F1 rows reproduced, micro identity on 1000 random matrices, {elapsed:.1}s"
    );
}

fn random_tree_tokens(len: usize, rng: &mut ChaCha8Rng) -> Vec<Token> {
    (0..len)
        .map(|j| Token {
            index: j + 1,
            surface: format!("t{j}"),
            pos: "NOUN".into(),
            dep_label: if j == 0 { "root".into() } else { "dep".into() },
            head: if j == 0 { 0 } else { rng.gen_range(0..j) + 1 },
        })
        .collect()
}

/// Independent BFS over an adjacency list; returns the node path.
fn bfs_path(adj: &[Vec<usize>], start: usize, goal: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut seen = vec![false; adj.len()];
    let mut q = VecDeque::from([start]);
    seen[start] = true;
    while let Some(n) = q.pop_front() {
        if n == goal {
            break;
        }
        for &m in &adj[n] {
            if !seen[m] {
                seen[m] = true;
                prev[m] = n;
                q.push_back(m);
            }
        }
    }
    let mut path = vec![goal];
    let mut cur = goal;
    while cur != start {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

#[test]
fn criterion_6_path_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for case in 0..1000 {
        let cross_sentence = case < 200;
        let (doc, e1, e2, adj, node_pos, skip_node) = if cross_sentence {
            let l1 = rng.gen_range(2..=15);
            let l2 = rng.gen_range(2..=15);
            let s1 = random_tree_tokens(l1, &mut rng);
            let s2 = random_tree_tokens(l2, &mut rng);
            // Oracle adjacency: both sentences plus a virtual root node.
            let root = l1 + l2;
            let mut adj = vec![Vec::new(); l1 + l2 + 1];
            let mut node_pos = Vec::new();
            for (si, (toks, base)) in [(&s1, 0), (&s2, l1)].into_iter().enumerate() {
                for (j, tok) in toks.iter().enumerate() {
                    node_pos.push((si, j));
                    let n = base + j;
                    if tok.head == 0 {
                        adj[n].push(root);
                        adj[root].push(n);
                    } else {
                        let h = base + tok.head - 1;
                        adj[n].push(h);
                        adj[h].push(n);
                    }
                }
            }
            let doc = Document {
                doc_id: format!("d{case}"),
                sentences: vec![Sentence { tokens: s1 }, Sentence { tokens: s2 }],
            };
            let e1 = EventMention::new(0, rng.gen_range(0..l1));
            let e2 = EventMention::new(1, rng.gen_range(0..l2));
            (doc, e1, e2, adj, node_pos, Some(root))
        } else {
            let len = rng.gen_range(2..=30);
            let toks = random_tree_tokens(len, &mut rng);
            let mut adj = vec![Vec::new(); len];
            let node_pos: Vec<(usize, usize)> = (0..len).map(|j| (0, j)).collect();
            for (j, tok) in toks.iter().enumerate() {
                if tok.head != 0 {
                    adj[j].push(tok.head - 1);
                    adj[tok.head - 1].push(j);
                }
            }
            let doc = Document {
                doc_id: format!("d{case}"),
                sentences: vec![Sentence { tokens: toks }],
            };
            let a = rng.gen_range(0..len);
            let b = rng.gen_range(0..len);
            (
                doc,
                EventMention::new(0, a),
                EventMention::new(0, b),
                adj,
                node_pos,
                None,
            )
        };

        let graph = build_dep_graph(&doc, &e1, &e2).unwrap();
        let path = extract_path(&graph, &e1, &e2).unwrap();
        let node_of = |m: &EventMention| {
            node_pos
                .iter()
                .position(|&p| p == (m.sentence_idx, m.token_idx))
                .unwrap()
        };
        let oracle: Vec<(usize, usize)> = bfs_path(&adj, node_of(&e1), node_of(&e2))
            .into_iter()
            .filter(|n| Some(*n) != skip_node)
            .map(|n| node_pos[n])
            .collect();
        assert_eq!(path.tokens, oracle, "case {case}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-6 path-oracle: 1000 random trees (200 cross-sentence) match the BFS oracle, {elapsed:.1}s"
    );
}

#[test]
fn criterion_7_determinism_and_persistence() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = TrainConfig {
        max_epochs: 5,
        seed: 7,
        ..TrainConfig::default()
    };
    let run = |path: &std::path::Path| -> Vec<EncodedInstance<f32>> {
        let (mut enc, _) = prepare(Task::Causal3, Coupling::None, 50, 0, 7, 77);
        train(&mut enc.model, &enc.train, &[], &cfg).unwrap();
        save_checkpoint(&enc.model, path, serde_json::json!({"run": "acceptance"})).unwrap();
        enc.train
    };
    let p1 = dir.path().join("a.ckpt");
    let p2 = dir.path().join("b.ckpt");
    let fixture = run(&p1);
    run(&p2);
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "two identical runs differ"
    );

    // load(save(m)) is bit-exact and replays identical predictions.
    let loaded = load_checkpoint::<f32>(&p1).unwrap();
    let p3 = dir.path().join("c.ckpt");
    save_checkpoint(&loaded, &p3, serde_json::json!({"run": "acceptance"})).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p3).unwrap());
    let (mut enc, _) = prepare(Task::Causal3, Coupling::None, 50, 0, 7, 77);
    train(&mut enc.model, &enc.train, &[], &cfg).unwrap();
    assert_eq!(fixture.len(), 50);
    for (i, x) in fixture.iter().enumerate() {
        assert_eq!(
            enc.model.predict(x).unwrap(),
            loaded.predict(x).unwrap(),
            "instance {i}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1}s");
    println!(
        "PASS criterion-7 determinism: bitwise-identical checkpoints, bit-exact round trip, 50-instance replay, {elapsed:.1}s"
    );
}

#[test]
fn criterion_8_robust_reporting() {
    let start = Instant::now();
    // A model that always answers class 0: classes 1 and 2 get no
    // predictions.
    let labels = LabelSet::for_task(Task::Causal3);
    let mut cm = ConfusionMatrix::new(labels.clone());
    for gold in [0usize, 0, 1, 1, 1, 2, 2] {
        cm.add(gold, 0).unwrap();
    }
    let r = report(&cm).unwrap();
    let text = render_text(&r);
    for class in ["CAUSED_BY", "NONE"] {
        let row = text.lines().find(|l| l.starts_with(class)).unwrap();
        assert!(row.contains('-'), "no dash in {row:?}");
    }
    assert!(r.micro.f1.is_finite());
    assert_eq!(r.micro.f1, r.accuracy);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "took {elapsed:.2}s");
    println!(
        "PASS criterion-8 robust-reporting: '-' rendered for predictionless classes, micro metrics defined, {elapsed:.2}s"
    );
}
