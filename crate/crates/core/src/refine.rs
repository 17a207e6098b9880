//! Embedding-driven topic curation: prune a topic's least relevant words
//! against the vector space, expand it with vocabulary words above a
//! similarity threshold, and grow symptom sub-topics from small seed
//! clusters.
//!
//! Main-topic expansion admits a word when its best similarity to any
//! retained word is strictly above the threshold; seed-cluster expansion
//! compares against the cluster centroid and is inclusive (`>=`). Words
//! without a vector are exempt from pruning and recorded as such.

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::embed::{cosine, EmbeddingSpace};
use crate::topics::{top_terms, TopicModel, TopicsError};

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("no seed word is present in the embedding vocabulary: {seeds:?}")]
    SeedsOutOfVocabulary { seeds: Vec<String> },
    #[error("prune fraction {0} outside [0, 1]")]
    BadFraction(f64),
    #[error(transparent)]
    Topics(#[from] TopicsError),
}

/// How a word's relevance to its topic is scored during pruning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    /// Cosine against the mean vector of the topic's words.
    CentroidCosine,
    /// Mean pairwise cosine against the other topic words.
    MeanPairwise,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineProvenance {
    pub prune_fraction: f64,
    pub expand_threshold: f64,
    pub relevance: RelevanceMode,
    /// Words kept without scoring because the space has no vector for them.
    pub kept_without_vector: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinedTopic {
    pub topic_id: usize,
    pub label: Option<String>,
    /// Surviving words, in their original topic order.
    pub retained: Vec<String>,
    /// Added words with the similarity that admitted them, descending.
    pub added: Vec<(String, f64)>,
    pub provenance: RefineProvenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedCluster {
    pub label: String,
    pub seeds: Vec<String>,
    /// Expansion words with centroid similarity, descending.
    pub expanded: Vec<(String, f64)>,
    pub threshold: f64,
}

pub struct PruneOutcome {
    pub retained: Vec<String>,
    pub kept_without_vector: Vec<String>,
    pub warning: Option<String>,
}

fn centroid_of<'a>(
    space: &EmbeddingSpace,
    words: impl Iterator<Item = &'a str>,
) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; space.dim()];
    let mut count = 0usize;
    for w in words {
        if let Some(v) = space.vector(w) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let inv = 1.0 / count as f64;
    for s in &mut sum {
        *s *= inv;
    }
    Some(sum)
}

/// Remove the `floor(fraction * |topic|)` least relevant words. Relevance
/// ties are resolved by removing the lower-ranked (later) topic word first.
/// Words without vectors are never removed.
pub fn prune_topic(
    topic_words: &[String],
    space: &EmbeddingSpace,
    fraction: f64,
    mode: RelevanceMode,
) -> Result<PruneOutcome, RefineError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(RefineError::BadFraction(fraction));
    }
    let kept_without_vector: Vec<String> = topic_words
        .iter()
        .filter(|w| space.vector(w).is_none())
        .cloned()
        .collect();
    let scored: Vec<usize> = (0..topic_words.len())
        .filter(|&i| space.vector(&topic_words[i]).is_some())
        .collect();
    if scored.is_empty() {
        return Ok(PruneOutcome {
            retained: topic_words.to_vec(),
            kept_without_vector,
            warning: Some("no topic word has a vector; topic left unchanged".into()),
        });
    }

    let relevance: Vec<(usize, f64)> = match mode {
        RelevanceMode::CentroidCosine => {
            let centroid = centroid_of(space, scored.iter().map(|&i| topic_words[i].as_str()))
                .expect("scored words have vectors");
            scored
                .iter()
                .map(|&i| {
                    let v = space.vector(&topic_words[i]).expect("scored");
                    (i, cosine(v, &centroid))
                })
                .collect()
        }
        RelevanceMode::MeanPairwise => scored
            .iter()
            .map(|&i| {
                let vi = space.vector(&topic_words[i]).expect("scored");
                let others: Vec<f64> = scored
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| cosine(vi, space.vector(&topic_words[j]).expect("scored")))
                    .collect();
                let score = if others.is_empty() {
                    1.0
                } else {
                    others.iter().sum::<f64>() / others.len() as f64
                };
                (i, score)
            })
            .collect(),
    };

    let n_remove = ((fraction * topic_words.len() as f64).floor() as usize).min(relevance.len());
    // lowest relevance first; ties drop the later (lower-ranked) word
    let mut order = relevance;
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)));
    let removed: std::collections::BTreeSet<usize> =
        order.iter().take(n_remove).map(|&(i, _)| i).collect();

    Ok(PruneOutcome {
        retained: topic_words
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed.contains(i))
            .map(|(_, w)| w.clone())
            .collect(),
        kept_without_vector,
        warning: None,
    })
}

/// All vocabulary words outside `retained` whose best similarity to a
/// retained word is strictly above the threshold, descending.
pub fn expand_candidates(
    retained: &[String],
    space: &EmbeddingSpace,
    threshold: f64,
) -> Vec<(String, f64)> {
    let retained_vecs: Vec<&[f64]> = retained.iter().filter_map(|w| space.vector(w)).collect();
    if retained_vecs.is_empty() {
        return Vec::new();
    }
    let in_topic: std::collections::HashSet<&str> = retained.iter().map(|s| s.as_str()).collect();
    let mut added: Vec<(String, f64)> = space
        .terms()
        .iter()
        .filter(|t| !in_topic.contains(t.as_str()))
        .filter_map(|t| {
            let v = space.vector(t).expect("term of the space");
            let best = retained_vecs
                .iter()
                .map(|r| cosine(v, r))
                .fold(f64::NEG_INFINITY, f64::max);
            (best > threshold).then(|| (t.clone(), best))
        })
        .collect();
    added.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    added
}

/// Prune then expand one topic's word list.
pub fn refine_topic(
    topic_id: usize,
    topic_words: &[String],
    space: &EmbeddingSpace,
    fraction: f64,
    threshold: f64,
    mode: RelevanceMode,
) -> Result<RefinedTopic, RefineError> {
    let pruned = prune_topic(topic_words, space, fraction, mode)?;
    let added = expand_candidates(&pruned.retained, space, threshold);
    Ok(RefinedTopic {
        topic_id,
        label: None,
        retained: pruned.retained,
        added,
        provenance: RefineProvenance {
            prune_fraction: fraction,
            expand_threshold: threshold,
            relevance: mode,
            kept_without_vector: pruned.kept_without_vector,
            warnings: pruned.warning.into_iter().collect(),
        },
    })
}

/// Refine every topic of a model: take its `top_m` words by P(w|T), prune,
/// expand. The result is ordered by descending prevalence; `topic_id` keeps
/// the model's original numbering.
#[allow(clippy::too_many_arguments)]
pub fn refine_all(
    model: &TopicModel,
    prevalence: &[f64],
    vocab: &Vocabulary,
    top_m: usize,
    space: &EmbeddingSpace,
    fraction: f64,
    threshold: f64,
    mode: RelevanceMode,
) -> Result<Vec<RefinedTopic>, RefineError> {
    let mut order: Vec<usize> = (0..model.num_topics).collect();
    order.sort_by(|&a, &b| {
        prevalence[b]
            .total_cmp(&prevalence[a])
            .then_with(|| a.cmp(&b))
    });
    let mut out = Vec::with_capacity(model.num_topics);
    for topic in order {
        let words: Vec<String> = top_terms(model, topic, top_m)?
            .into_iter()
            .map(|(w, _)| vocab.term(w).to_owned())
            .collect();
        out.push(refine_topic(
            topic, &words, space, fraction, threshold, mode,
        )?);
    }
    Ok(out)
}

/// Grow a seed cluster: centroid of the seed vectors, then every vocabulary
/// word (seeds excluded) with centroid similarity at or above the threshold.
/// Seeds missing from the space are dropped from the cluster, so the output
/// seed list always lies inside the embedding vocabulary.
pub fn expand_seed_cluster(
    label: &str,
    seeds: &[String],
    space: &EmbeddingSpace,
    threshold: f64,
) -> Result<SeedCluster, RefineError> {
    let present: Vec<String> = seeds
        .iter()
        .filter(|s| space.contains(s))
        .cloned()
        .collect();
    if present.is_empty() {
        return Err(RefineError::SeedsOutOfVocabulary {
            seeds: seeds.to_vec(),
        });
    }
    let centroid = centroid_of(space, present.iter().map(|s| s.as_str())).expect("present seeds");
    let seed_set: std::collections::HashSet<&str> = present.iter().map(|s| s.as_str()).collect();
    let mut expanded: Vec<(String, f64)> = space
        .terms()
        .iter()
        .filter(|t| !seed_set.contains(t.as_str()))
        .filter_map(|t| {
            let sim = cosine(space.vector(t).expect("term of the space"), &centroid);
            (sim >= threshold).then(|| (t.clone(), sim))
        })
        .collect();
    expanded.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(SeedCluster {
        label: label.to_owned(),
        seeds: present,
        expanded,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Two tight vector families around opposite anchors, plus optional
    /// extra structure for specific tests.
    fn two_family_space() -> EmbeddingSpace {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 8;
        let mut terms = Vec::new();
        let mut vectors = Vec::new();
        for (family, base) in [("a", 1.0), ("b", -1.0)] {
            for i in 0..10 {
                terms.push(format!("{family}{i}"));
                for d in 0..dim {
                    let anchor = if d < 4 { base } else { -base };
                    vectors.push(anchor + rng.gen_range(-0.05..0.05));
                }
            }
        }
        EmbeddingSpace::from_vectors(terms, vectors, dim)
    }

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn prune_cardinality_is_exact() {
        let space = two_family_space();
        let topic = words(&["a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9"]);
        let got = prune_topic(&topic, &space, 0.30, RelevanceMode::CentroidCosine).unwrap();
        assert_eq!(got.retained.len(), 7);
    }

    #[test]
    fn prune_cardinality_over_random_fractions() {
        let space = two_family_space();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.gen_range(1..=10usize);
            let topic: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
            let fraction = rng.gen_range(0.0..=1.0);
            let got = prune_topic(&topic, &space, fraction, RelevanceMode::CentroidCosine).unwrap();
            let expected = n - (fraction * n as f64).floor() as usize;
            assert_eq!(got.retained.len(), expected, "n={n} fraction={fraction}");
        }
    }

    #[test]
    fn prune_ties_remove_lowest_ranked_first() {
        // identical vectors: relevance ties; the later topic words go
        let space = EmbeddingSpace::from_vectors(
            words(&["w0", "w1", "w2", "w3"]),
            vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0],
            2,
        );
        let topic = words(&["w0", "w1", "w2", "w3"]);
        let got = prune_topic(&topic, &space, 0.5, RelevanceMode::CentroidCosine).unwrap();
        assert_eq!(got.retained, words(&["w0", "w1"]));
    }

    #[test]
    fn prune_removes_planted_outlier_family() {
        let space = two_family_space();
        let topic = words(&["a0", "a1", "a2", "a3", "a4", "a5", "a6", "b0", "b1", "b2"]);
        let got = prune_topic(&topic, &space, 0.3, RelevanceMode::CentroidCosine).unwrap();
        assert_eq!(got.retained.len(), 7);
        assert!(got.retained.iter().all(|w| w.starts_with('a')));
    }

    #[test]
    fn prune_with_no_vectors_returns_unchanged() {
        let space = two_family_space();
        let topic = words(&["zz0", "zz1", "zz2"]);
        let got = prune_topic(&topic, &space, 0.5, RelevanceMode::CentroidCosine).unwrap();
        assert_eq!(got.retained, topic);
        assert!(got.warning.is_some());
        assert_eq!(got.kept_without_vector.len(), 3);
    }

    #[test]
    fn prune_exempts_unvectored_words() {
        let space = two_family_space();
        // two unvectored words stay even at an aggressive fraction
        let topic = words(&["a0", "zz0", "a1", "zz1", "b0", "b1"]);
        let got = prune_topic(&topic, &space, 0.5, RelevanceMode::CentroidCosine).unwrap();
        assert!(got.retained.contains(&"zz0".to_string()));
        assert!(got.retained.contains(&"zz1".to_string()));
        assert_eq!(got.kept_without_vector, words(&["zz0", "zz1"]));
    }

    #[test]
    fn mean_pairwise_mode_also_drops_outliers() {
        let space = two_family_space();
        let topic = words(&["a0", "a1", "a2", "a3", "a4", "a5", "a6", "b0", "b1", "b2"]);
        let got = prune_topic(&topic, &space, 0.3, RelevanceMode::MeanPairwise).unwrap();
        assert!(got.retained.iter().all(|w| w.starts_with('a')));
    }

    #[test]
    fn expand_threshold_one_adds_nothing() {
        let space = two_family_space();
        let got = expand_candidates(&words(&["a0", "a1"]), &space, 1.0);
        assert!(got.is_empty());
    }

    #[test]
    fn expand_threshold_minus_one_adds_whole_vocabulary() {
        let space = two_family_space();
        let retained = words(&["a0", "a1"]);
        let got = expand_candidates(&retained, &space, -1.0);
        assert_eq!(got.len(), space.len() - retained.len());
    }

    #[test]
    fn expand_recovers_planted_family() {
        let space = two_family_space();
        let retained = words(&["a0", "a1", "a2"]);
        let got = expand_candidates(&retained, &space, 0.6);
        let names: Vec<&str> = got.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(names.len(), 7, "added {names:?}");
        assert!(names.iter().all(|w| w.starts_with('a')));
        for w in got.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn expansion_is_sound_and_complete_by_exhaustive_scan() {
        let space = two_family_space();
        let retained = words(&["a0", "a4", "a7"]);
        let threshold = 0.6;
        let got = expand_candidates(&retained, &space, threshold);
        let added: std::collections::HashMap<&str, f64> =
            got.iter().map(|(w, s)| (w.as_str(), *s)).collect();
        // independent cosine for the oracle
        let oracle_cos = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb)
        };
        for term in space.terms() {
            if retained.contains(term) {
                continue;
            }
            let best = retained
                .iter()
                .map(|r| oracle_cos(space.vector(term).unwrap(), space.vector(r).unwrap()))
                .fold(f64::NEG_INFINITY, f64::max);
            match added.get(term.as_str()) {
                Some(&s) => {
                    assert!(s > threshold, "unsound admission of {term}");
                    assert!((s - best).abs() < 1e-12);
                }
                None => assert!(best <= threshold, "missed {term} at {best}"),
            }
        }
    }

    #[test]
    fn refine_all_produces_one_output_per_topic_by_prevalence() {
        use crate::corpus::{build_vocabulary, TokenizedDoc};
        use crate::weighting::count_matrix;

        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let space = two_family_space();
        // docs over the same a*/b* vocabulary
        let docs: Vec<TokenizedDoc> = (0..60)
            .map(|i| {
                let fam = if i % 3 == 0 { "b" } else { "a" };
                TokenizedDoc {
                    doc_id: format!("d{i}"),
                    tokens: (0..15)
                        .map(|_| format!("{fam}{}", rng.gen_range(0..10)))
                        .collect(),
                }
            })
            .collect();
        let vocab = build_vocabulary(&docs, 1);
        let m = count_matrix(&docs, &vocab).to_weighted();
        let params = crate::topics::LdaParams {
            num_topics: 2,
            iterations: 50,
            alpha: 0.5,
            beta: 0.01,
            seed: 5,
            count_scale: 1.0,
        };
        let model = crate::topics::train_lda(&m, &params).unwrap();
        let lengths = crate::topics::pseudo_doc_lengths(&m, 1.0);
        let prevalence = crate::topics::topic_prevalence(&model, &lengths).unwrap();

        let got = refine_all(
            &model,
            &prevalence,
            &vocab,
            8,
            &space,
            0.25,
            0.6,
            RelevanceMode::CentroidCosine,
        )
        .unwrap();
        assert_eq!(got.len(), 2);
        assert!(prevalence[got[0].topic_id] >= prevalence[got[1].topic_id]);

        // identity configuration: nothing pruned, nothing added
        let identity = refine_all(
            &model,
            &prevalence,
            &vocab,
            8,
            &space,
            0.0,
            1.0,
            RelevanceMode::CentroidCosine,
        )
        .unwrap();
        for rt in &identity {
            let original: Vec<String> = top_terms(&model, rt.topic_id, 8)
                .unwrap()
                .into_iter()
                .map(|(w, _)| vocab.term(w).to_owned())
                .collect();
            assert_eq!(rt.retained, original);
            assert!(rt.added.is_empty());
        }

        // composition oracle: refine_all equals prune then expand per topic
        for rt in &got {
            let topic_words: Vec<String> = top_terms(&model, rt.topic_id, 8)
                .unwrap()
                .into_iter()
                .map(|(w, _)| vocab.term(w).to_owned())
                .collect();
            let pruned =
                prune_topic(&topic_words, &space, 0.25, RelevanceMode::CentroidCosine).unwrap();
            let expanded = expand_candidates(&pruned.retained, &space, 0.6);
            assert_eq!(rt.retained, pruned.retained);
            assert_eq!(rt.added, expanded);
        }
    }

    #[test]
    fn refine_is_deterministic() {
        let space = two_family_space();
        let topic = words(&["a0", "a1", "a2", "b0", "b1"]);
        let a = refine_topic(0, &topic, &space, 0.4, 0.5, RelevanceMode::CentroidCosine).unwrap();
        let b = refine_topic(0, &topic, &space, 0.4, 0.5, RelevanceMode::CentroidCosine).unwrap();
        assert_eq!(a.retained, b.retained);
        assert_eq!(a.added, b.added);
    }

    #[test]
    fn seed_cluster_boundary_is_inclusive() {
        // three words share one vector; seeds with threshold 1.0 capture the
        // other holder of that vector
        let space = EmbeddingSpace::from_vectors(
            words(&["s0", "s1", "other", "far"]),
            vec![
                1.0, 0.0, //
                1.0, 0.0, //
                1.0, 0.0, //
                0.0, 1.0,
            ],
            2,
        );
        let got = expand_seed_cluster("C", &words(&["s0", "s1"]), &space, 1.0).unwrap();
        assert_eq!(got.expanded.len(), 1);
        assert_eq!(got.expanded[0].0, "other");
        assert_eq!(got.expanded[0].1, 1.0);
    }

    #[test]
    fn seed_cluster_threshold_above_one_is_empty() {
        let space = two_family_space();
        let got = expand_seed_cluster("C", &words(&["a0", "a1"]), &space, 1.5).unwrap();
        assert!(got.expanded.is_empty());
    }

    #[test]
    fn seed_cluster_expansion_stays_in_family() {
        let space = two_family_space();
        let got = expand_seed_cluster("A", &words(&["a0", "a1", "a2", "a3"]), &space, 0.8).unwrap();
        assert!(!got.expanded.is_empty());
        for (w, s) in &got.expanded {
            assert!(w.starts_with('a'), "cross-family expansion {w}");
            assert!(*s >= 0.8);
        }
    }

    #[test]
    fn seed_cluster_drops_absent_seeds_but_errors_when_all_missing() {
        let space = two_family_space();
        let got = expand_seed_cluster("A", &words(&["a0", "zz"]), &space, 0.9).unwrap();
        assert_eq!(got.seeds, words(&["a0"]));
        assert!(matches!(
            expand_seed_cluster("A", &words(&["zz", "qq"]), &space, 0.9),
            Err(RefineError::SeedsOutOfVocabulary { .. })
        ));
    }
}
