#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgrel/model.hpp"
#include "sgrel/scene_graph.hpp"

namespace sgrel {

// One scored <subject, predicate, object> output for an image.
struct RankedPrediction {
    Box subject_box;
    int subject_class = 0;
    double subject_conf = 1.0;
    Box object_box;
    int object_class = 0;
    double object_conf = 1.0;
    int predicate = 0;  // never the null class
    double score = 0.0; // subject_conf * p(predicate) * object_conf
};

struct EvalConfig {
    double iou_thresh = 0.5;
    int k = 50;       // recall cutoff, applied per image
    int limit = 100;  // predictions kept per image
    // weights per predicate class (null entry ignored); empty derives them
    // from ground-truth frequencies of the evaluated scenes
    std::vector<double> class_weights;
};

enum class MatchMode { rel, phr };

struct EvalReport {
    double recall_at_k = 0.0;
    std::vector<std::optional<double>> ap_rel;  // per predicate class; nullopt when no GT
    std::vector<std::optional<double>> ap_phr;
    double map_rel = 0.0, map_phr = 0.0;
    double wmap_rel = 0.0, wmap_phr = 0.0;
    double score = 0.0;      // 0.2 R@k + 0.4 mAP_rel + 0.4 mAP_phr
    double score_wtd = 0.0;  // same formula on the weighted mAPs
};

// Every ordered entity pair scored with its best non-null predicate, sorted
// by descending score (ties by subject id, object id, predicate index).
std::vector<RankedPrediction> rank_triplets(const PredicateModel& model, const SceneGraph& scene,
                                            int limit);

// Fraction of ground-truth triplets matched by the per-image top-k
// predictions; greedy one-to-one assignment in score order. A match needs
// equal subject/object classes and predicate plus IoU >= iou_thresh on both
// boxes.
double recall_at_k(std::span<const std::vector<RankedPrediction>> predictions,
                   std::span<const SceneGraph> scenes, const EvalConfig& cfg);

// All-point average precision of one predicate class over all images.
// rel matches both boxes; phr matches the enclosing boxes. nullopt when the
// class has no ground-truth instances.
std::optional<double> average_precision(std::span<const std::vector<RankedPrediction>> predictions,
                                        std::span<const SceneGraph> scenes, int predicate,
                                        MatchMode mode, const EvalConfig& cfg);

// Weighted mean over classes with defined AP; weights renormalized over those
// classes.
double weighted_map(std::span<const std::optional<double>> aps, std::span<const double> weights);

double challenge_score(double r_at_k, double map_rel, double map_phr);

// Ground-truth predicate frequency ratios (null entry zero).
std::vector<double> gt_class_weights(std::span<const SceneGraph> scenes,
                                     const PredicateVocabulary& vocab);

EvalReport evaluate_predictions(std::span<const std::vector<RankedPrediction>> predictions,
                                std::span<const SceneGraph> scenes,
                                const PredicateVocabulary& vocab, const EvalConfig& cfg);

// rank_triplets on every scene, then evaluate_predictions.
EvalReport evaluate_model(const PredicateModel& model, std::span<const SceneGraph> scenes,
                          const EvalConfig& cfg);

void write_predictions_jsonl(const std::string& path,
                             std::span<const std::vector<RankedPrediction>> predictions);
std::vector<std::vector<RankedPrediction>> read_predictions_jsonl(const std::string& path);

}  // namespace sgrel
