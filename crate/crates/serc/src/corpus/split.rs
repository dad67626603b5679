//! Deterministic document-level corpus splitting. Splitting by document
//! keeps every instance of a document in one split, so sentences never leak
//! across train and test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::RelationInstance;
use crate::error::{Result, SercError};

pub fn split_corpus(
    instances: &[RelationInstance],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(
    Vec<RelationInstance>,
    Vec<RelationInstance>,
    Vec<RelationInstance>,
)> {
    let (r_train, r_dev, r_test) = ratios;
    if r_train <= 0.0 || r_dev <= 0.0 || r_test <= 0.0 {
        return Err(SercError::Config("split ratios must be positive".into()));
    }
    if (r_train + r_dev + r_test - 1.0).abs() > 1e-9 {
        return Err(SercError::Config(format!(
            "split ratios must sum to 1, got {}",
            r_train + r_dev + r_test
        )));
    }

    // Group instances by document, preserving first-occurrence order.
    let mut doc_ids: Vec<String> = Vec::new();
    let mut by_doc: std::collections::HashMap<String, Vec<RelationInstance>> =
        std::collections::HashMap::new();
    for inst in instances {
        let entry = by_doc.entry(inst.doc_id.clone()).or_default();
        if entry.is_empty() {
            doc_ids.push(inst.doc_id.clone());
        }
        entry.push(inst.clone());
    }
    if doc_ids.len() < 3 {
        return Err(SercError::Config(format!(
            "need at least 3 documents to split, got {}",
            doc_ids.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    doc_ids.shuffle(&mut rng);

    let total = instances.len() as f64;
    let t1 = total * r_train;
    let t2 = total * (r_train + r_dev);
    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    let mut cum = 0.0f64;
    for doc_id in doc_ids {
        let batch = by_doc.remove(&doc_id).unwrap();
        let count = batch.len() as f64;
        if cum + 1e-9 < t1 {
            train.extend(batch);
        } else if cum + 1e-9 < t2 {
            dev.extend(batch);
        } else {
            test.extend(batch);
        }
        cum += count;
    }
    Ok((train, dev, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EventMention, Task};
    use proptest::prelude::*;

    fn instance(doc: &str, tok: usize) -> RelationInstance {
        RelationInstance {
            doc_id: doc.into(),
            e1: EventMention::new(0, tok),
            e2: EventMention::new(0, tok + 1),
            task: Task::Causal3,
            label: "NONE".into(),
        }
    }

    fn single_instance_corpus(n: usize) -> Vec<RelationInstance> {
        (0..n).map(|d| instance(&format!("d{d}"), 0)).collect()
    }

    #[test]
    fn exact_divisibility_gives_exact_sizes() {
        let corpus = single_instance_corpus(100);
        let (train, dev, test) = split_corpus(&corpus, (0.75, 0.10, 0.15), 7).unwrap();
        assert_eq!((train.len(), dev.len(), test.len()), (75, 10, 15));
    }

    #[test]
    fn same_seed_is_deterministic() {
        let corpus = single_instance_corpus(100);
        let a = split_corpus(&corpus, (0.75, 0.10, 0.15), 7).unwrap();
        let b = split_corpus(&corpus, (0.75, 0.10, 0.15), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_documents_rejected() {
        let corpus = single_instance_corpus(2);
        assert!(split_corpus(&corpus, (0.75, 0.10, 0.15), 1).is_err());
    }

    #[test]
    fn bad_ratios_rejected() {
        let corpus = single_instance_corpus(10);
        assert!(split_corpus(&corpus, (0.8, 0.1, 0.2), 1).is_err());
        assert!(split_corpus(&corpus, (1.0, 0.0, 0.0), 1).is_err());
    }

    #[test]
    fn unequal_documents_partition_exactly() {
        let mut corpus = Vec::new();
        for d in 0..10 {
            for k in 0..(d % 4 + 1) {
                corpus.push(instance(&format!("d{d}"), k));
            }
        }
        let (train, dev, test) = split_corpus(&corpus, (0.6, 0.2, 0.2), 3).unwrap();

        // Set-algebra oracle: union equals input, pairwise disjoint by doc.
        let union_len = train.len() + dev.len() + test.len();
        assert_eq!(union_len, corpus.len());
        let docs = |xs: &[RelationInstance]| {
            xs.iter()
                .map(|i| i.doc_id.clone())
                .collect::<std::collections::HashSet<_>>()
        };
        let (a, b, c) = (docs(&train), docs(&dev), docs(&test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn partition_property(
            doc_sizes in proptest::collection::vec(1usize..5, 3..40),
            seed in 0u64..1000,
        ) {
            let mut corpus = Vec::new();
            for (d, n) in doc_sizes.iter().enumerate() {
                for k in 0..*n {
                    corpus.push(instance(&format!("d{d}"), k));
                }
            }
            let (train, dev, test) = split_corpus(&corpus, (0.75, 0.10, 0.15), seed).unwrap();
            prop_assert_eq!(train.len() + dev.len() + test.len(), corpus.len());
            let docs = |xs: &[RelationInstance]| {
                xs.iter().map(|i| i.doc_id.clone()).collect::<std::collections::HashSet<_>>()
            };
            let (a, b, c) = (docs(&train), docs(&dev), docs(&test));
            prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        }
    }
}
