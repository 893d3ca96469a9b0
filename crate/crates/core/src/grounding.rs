//! Target-object grounding analog: scores the presence of a freeform-
//! described target in a view and implements the confidence-threshold stop
//! condition.
//!
//! The noise model is calibrated so that, at the default threshold of 0.85,
//! a visible target clears the threshold about 87.5% of the time and an
//! absent target produces a spurious detection about 8.3% of the time.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::perception::View;
use crate::rng::{mix, salt, stream};
use crate::world::{SimilarityEntry, WorldMap};

/// Scores a target phrase against whatever is visible in a view.
///
/// The similarity table is scenario-supplied and maps (phrase, object label)
/// pairs to base scores, which lets confusable distractors be scripted as
/// near-threshold entries. A phrase that exactly matches an object's label
/// falls back to `true_pos_base` when the table has no entry for the pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundingModel {
    pub similarity: BTreeMap<(String, String), f64>,
    pub true_pos_base: f64,
    /// Gaussian noise stddev added to true-match scores.
    pub true_pos_noise: f64,
    /// Probability of emitting a spurious detection when nothing matches.
    pub false_pos_rate: f64,
    /// Spurious detections draw their confidence uniformly from this range.
    pub false_pos_range: (f64, f64),
    pub seed: u64,
}

impl Default for GroundingModel {
    fn default() -> Self {
        GroundingModel {
            similarity: BTreeMap::new(),
            true_pos_base: 0.90,
            true_pos_noise: 0.0435,
            false_pos_rate: 0.083,
            false_pos_range: (0.5, 0.9),
            seed: 0,
        }
    }
}

impl GroundingModel {
    pub fn with_similarity(entries: &[SimilarityEntry]) -> Self {
        GroundingModel {
            similarity: crate::world::similarity_table(entries),
            ..Default::default()
        }
    }

    /// A noise-free model: exact-label matches score 1.0, nothing else fires.
    pub fn perfect() -> Self {
        GroundingModel {
            true_pos_base: 1.0,
            true_pos_noise: 0.0,
            false_pos_rate: 0.0,
            ..Default::default()
        }
    }

    /// The per-episode RNG stream; grounding outcomes are deterministic
    /// given (model seed, episode seed, call sequence).
    pub fn episode_rng(&self, episode_seed: u64) -> ChaCha8Rng {
        stream(mix(self.seed, episode_seed), salt::GROUNDING)
    }

    fn base_score(&self, phrase: &str, label: &str) -> Option<f64> {
        if let Some(&s) = self.similarity.get(&(phrase.to_string(), label.to_string())) {
            return (s > 0.0).then_some(s);
        }
        (label == phrase).then_some(self.true_pos_base)
    }
}

/// Outcome of grounding one view against the target phrase.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundingResult {
    pub confidence: f64,
    pub bearing_deg: Option<f64>,
    /// Index of the truly matched object; None for spurious detections.
    pub matched_object: Option<usize>,
}

impl GroundingResult {
    fn none() -> Self {
        GroundingResult { confidence: 0.0, bearing_deg: None, matched_object: None }
    }
}

/// Score one view for the target phrase.
///
/// If some visible object has positive similarity to the phrase, the best
/// such object produces `clamp(similarity + gaussian(noise), 0, 1)` with the
/// bearing toward it. Otherwise a spurious detection fires with probability
/// `false_pos_rate`, aimed at a random visible object (or straight down the
/// view when nothing is visible), with no matched object recorded.
pub fn ground_target(
    model: &GroundingModel,
    rng: &mut ChaCha8Rng,
    map: &WorldMap,
    view: &View,
    target_phrase: &str,
) -> GroundingResult {
    debug_assert!(!target_phrase.is_empty());
    let mut best: Option<(usize, f64)> = None;
    for (i, vis) in view.visible_objects.iter().enumerate() {
        let label = &map.objects()[vis.object].label;
        if let Some(score) = model.base_score(target_phrase, label) {
            match best {
                Some((_, s)) if s >= score => {}
                _ => best = Some((i, score)),
            }
        }
    }

    if let Some((entry_idx, base)) = best {
        let noise = if model.true_pos_noise > 0.0 {
            Normal::new(0.0, model.true_pos_noise).unwrap().sample(rng)
        } else {
            0.0
        };
        let confidence = (base + noise).clamp(0.0, 1.0);
        if confidence > 0.0 {
            let entry = &view.visible_objects[entry_idx];
            return GroundingResult {
                confidence,
                bearing_deg: Some(entry.bearing_deg),
                matched_object: Some(entry.object),
            };
        }
        return GroundingResult::none();
    }

    if model.false_pos_rate > 0.0 && rng.random::<f64>() < model.false_pos_rate {
        let confidence = rng.random_range(model.false_pos_range.0..=model.false_pos_range.1);
        let bearing = if view.visible_objects.is_empty() {
            view.heading_deg
        } else {
            let pick = rng.random_range(0..view.visible_objects.len());
            view.visible_objects[pick].bearing_deg
        };
        return GroundingResult { confidence, bearing_deg: Some(bearing), matched_object: None };
    }
    GroundingResult::none()
}

/// The stop condition: index of the first result whose confidence clears
/// the threshold. Zero-confidence results never trigger, so a threshold of
/// 0 selects the first nonzero score.
pub fn check_stop(results: &[GroundingResult], g_th: f64) -> Option<usize> {
    results
        .iter()
        .position(|r| r.confidence > 0.0 && r.confidence >= g_th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::VisibleObject;
    use crate::world::{ObjectInstance, ObjectKind, Room, WorldMap};

    fn map_with(objects: Vec<ObjectInstance>) -> WorldMap {
        let room = Room {
            id: "room".into(),
            label: "room".into(),
            footprint: (0..8).flat_map(|y| (0..8).map(move |x| crate::grid::Cell::new(x, y))).collect(),
        };
        WorldMap::from_parts(8, 8, 0.25, &[], vec![room], vec![], objects).unwrap()
    }

    fn obj(id: &str, label: &str, kind: ObjectKind, x: i32) -> ObjectInstance {
        ObjectInstance {
            id: id.into(),
            label: label.into(),
            kind,
            position: crate::grid::Cell::new(x, 2),
            extent: [1, 1],
            room_id: Some("room".into()),
        }
    }

    fn view_seeing(objects: &[usize]) -> View {
        View {
            index: 0,
            heading_deg: 0.0,
            visible_objects: objects
                .iter()
                .map(|&o| VisibleObject { object: o, bearing_deg: 10.0 + o as f64, distance_m: 1.0 })
                .collect(),
            depth_rays: vec![],
        }
    }

    #[test]
    fn noiseless_true_positive_scores_one() {
        let map = map_with(vec![obj("t", "cat-shaped mug", ObjectKind::Target, 1)]);
        let mut model = GroundingModel::perfect();
        model
            .similarity
            .insert(("cat-shaped mug".into(), "cat-shaped mug".into()), 1.0);
        let mut rng = model.episode_rng(0);
        let r = ground_target(&model, &mut rng, &map, &view_seeing(&[0]), "cat-shaped mug");
        assert_eq!(r.confidence, 1.0);
        assert_eq!(r.bearing_deg, Some(10.0));
        assert_eq!(r.matched_object, Some(0));
    }

    #[test]
    fn absent_target_with_no_false_positives_scores_zero() {
        let map = map_with(vec![obj("c", "couch", ObjectKind::Common, 1)]);
        let model = GroundingModel::perfect();
        let mut rng = model.episode_rng(0);
        let r = ground_target(&model, &mut rng, &map, &view_seeing(&[0]), "cat-shaped mug");
        assert_eq!(r.confidence, 0.0);
        assert!(r.matched_object.is_none());
    }

    #[test]
    fn false_positive_rate_matches_configuration() {
        let map = map_with(vec![obj("c", "couch", ObjectKind::Common, 1)]);
        let model = GroundingModel::default();
        let mut rng = model.episode_rng(7);
        let view = view_seeing(&[0]);
        let mut fired = 0u32;
        for _ in 0..10_000 {
            let r = ground_target(&model, &mut rng, &map, &view, "cat-shaped mug");
            if r.confidence > 0.0 {
                assert!(r.matched_object.is_none());
                fired += 1;
            }
        }
        let rate = fired as f64 / 10_000.0;
        assert!((rate - 0.083).abs() <= 0.006, "rate {rate}");
    }

    #[test]
    fn true_positive_rate_at_default_threshold() {
        let map = map_with(vec![obj("t", "vase", ObjectKind::Target, 1)]);
        let model = GroundingModel::default();
        let mut rng = model.episode_rng(11);
        let view = view_seeing(&[0]);
        let mut above = 0u32;
        for _ in 0..10_000 {
            let r = ground_target(&model, &mut rng, &map, &view, "vase");
            if r.confidence >= 0.85 {
                above += 1;
            }
        }
        let rate = above as f64 / 10_000.0;
        assert!((rate - 0.875).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn scripted_distractor_uses_table_score() {
        let map = map_with(vec![obj("c", "mug", ObjectKind::Common, 1)]);
        let mut model = GroundingModel::perfect();
        model.similarity.insert(("cat-shaped mug".into(), "mug".into()), 0.8);
        let mut rng = model.episode_rng(0);
        let r = ground_target(&model, &mut rng, &map, &view_seeing(&[0]), "cat-shaped mug");
        assert_eq!(r.confidence, 0.8);
        assert_eq!(r.matched_object, Some(0));
    }

    #[test]
    fn check_stop_picks_first_result_over_threshold() {
        let results = vec![
            GroundingResult { confidence: 0.2, bearing_deg: None, matched_object: None },
            GroundingResult { confidence: 0.9, bearing_deg: Some(1.0), matched_object: Some(0) },
        ];
        assert_eq!(check_stop(&results, 0.85), Some(1));
    }

    #[test]
    fn check_stop_none_when_all_below() {
        let results = vec![
            GroundingResult { confidence: 0.2, bearing_deg: None, matched_object: None },
            GroundingResult { confidence: 0.5, bearing_deg: None, matched_object: None },
        ];
        assert_eq!(check_stop(&results, 0.85), None);
    }

    #[test]
    fn check_stop_threshold_zero_skips_zero_confidence() {
        let results = vec![
            GroundingResult::none(),
            GroundingResult { confidence: 0.1, bearing_deg: None, matched_object: None },
        ];
        assert_eq!(check_stop(&results, 0.0), Some(1));
    }

    #[test]
    fn raising_threshold_never_adds_stops() {
        let map = map_with(vec![obj("t", "vase", ObjectKind::Target, 1)]);
        let model = GroundingModel::default();
        let view = view_seeing(&[0]);
        let thresholds = [0.6, 0.75, 0.8, 0.85, 0.95];
        let mut counts = vec![0u32; thresholds.len()];
        let mut rng = model.episode_rng(3);
        for _ in 0..2_000 {
            let r = ground_target(&model, &mut rng, &map, &view, "vase");
            for (i, &t) in thresholds.iter().enumerate() {
                if check_stop(std::slice::from_ref(&r), t).is_some() {
                    counts[i] += 1;
                }
            }
        }
        for pair in counts.windows(2) {
            assert!(pair[1] <= pair[0], "counts {counts:?}");
        }
    }

    #[test]
    fn perfect_model_fires_iff_target_visible() {
        let map = map_with(vec![
            obj("t", "vase", ObjectKind::Target, 1),
            obj("c", "couch", ObjectKind::Common, 3),
        ]);
        let model = GroundingModel::perfect();
        let mut rng = model.episode_rng(0);
        for _ in 0..100 {
            let seen = ground_target(&model, &mut rng, &map, &view_seeing(&[0, 1]), "vase");
            assert_eq!(check_stop(std::slice::from_ref(&seen), 0.85), Some(0));
            let unseen = ground_target(&model, &mut rng, &map, &view_seeing(&[1]), "vase");
            assert_eq!(check_stop(std::slice::from_ref(&unseen), 0.85), None);
        }
    }
}
