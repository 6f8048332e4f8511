#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgrel/eval.hpp"
#include "sgrel/losses.hpp"
#include "sgrel/model.hpp"
#include "sgrel/sampler.hpp"
#include "sgrel/synth.hpp"

namespace sgrel {

enum class Optimizer { sgd, momentum, adam };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct ModelConfig {
    int d_app = 16;
    int hidden_spatial = 64;
    int hidden_visual = 64;
    double freq_smoothing = 1.0;
};

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::adam;
    LossConfig loss;
    SamplerConfig sampler;
    ModelConfig model;
    EvalConfig eval;
    int eval_every = 1;  // 0 disables per-epoch validation metrics
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs <= 0) throw std::invalid_argument("TrainConfig: epochs must be positive");
        if (!(learning_rate > 0.0))
            throw std::invalid_argument("TrainConfig: learning_rate must be positive");
        loss.validate();
        sampler.validate();
    }
};

struct EvalSummary {
    double recall_at_k = 0.0;
    double wmap_rel = 0.0;
    double score_wtd = 0.0;
};

struct EpochLog {
    int epoch = 0;
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0, total = 0.0;
    std::optional<EvalSummary> val;
};

struct TrainLog {
    std::vector<EpochLog> epochs;
};

struct TrainResult {
    PredicateModel model;
    TrainLog log;
};

// Raised when the objective turns non-finite; carries the log so far so the
// caller can flush it.
struct DivergenceError : std::runtime_error {
    TrainLog partial_log;
    explicit DivergenceError(const std::string& msg, TrainLog log)
        : std::runtime_error(msg), partial_log(std::move(log)) {}
};

// One optimizer step per scene, one scene per batch. Deterministic given
// (scenes, cfg). Throws NoPositivesError when no scene has annotations.
TrainResult train(const std::vector<SceneGraph>& train_scenes,
                  const std::vector<SceneGraph>& val_scenes, const PredicateVocabulary& vocab,
                  int n_entity_classes, const TrainConfig& cfg);

std::vector<FusionOutput> forward_batch(const PredicateModel& model, const SceneGraph& scene,
                                        const std::vector<std::pair<int, int>>& pairs);

// Number of active margin-hinge terms of a freshly initialized model over the
// given scenes; the margin-sweep diagnostic.
long count_active_hinges_at_init(const std::vector<SceneGraph>& scenes,
                                 const PredicateVocabulary& vocab, int n_entity_classes,
                                 const TrainConfig& cfg);

// ---- finite-difference verification of the analytic gradient ----

struct GradCheckConfig {
    int trials = 100;
    double fd_step = 1e-5;
    std::uint64_t seed = 0;
    RandomSceneOpts scene;
    int hidden = 6;
    double freq_smoothing = 1.0;
    LossConfig loss;
    SamplerConfig sampler;
};

struct WorstCoord {
    std::string block;
    long index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double mean_rel_err = 0.0;
    long n_coords = 0;
    long n_skipped_nonsmooth = 0;  // coords whose FD interval crosses a kink
    int trials = 0;
    std::vector<WorstCoord> worst_per_block;
};

using GradCorruptFn = std::function<void(ModelParams&)>;

// Central differences against the analytic gradient of the full batch
// objective, selections frozen at their forward-pass values. Coordinates
// whose +h/-h evaluations disagree on any ReLU mask, hinge activity or
// clamp flag sit on a kink and are excluded (counted in the report); the
// derivative is not defined there. The corrupt hook perturbs the analytic
// gradient, for negative-control tests.
GradCheckReport grad_check(const GradCheckConfig& cfg, const GradCorruptFn& corrupt = {});

}  // namespace sgrel
