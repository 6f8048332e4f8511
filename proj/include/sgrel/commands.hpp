#pragma once

#include <string>
#include <vector>

#include "sgrel/config.hpp"

namespace sgrel::cmd {

// Exit codes: 0 success, 1 usage/config error, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumerical = 2;

int run_gen(const RunConfig& rc);
int run_train(const RunConfig& rc);
int run_eval(const RunConfig& rc);
int run_gradcheck(const RunConfig& rc);
int run_ablate(const RunConfig& rc);

// Dataset as written by run_gen.
struct StoredDataset {
    PredicateVocabulary vocab;
    int n_entity_classes = 0;
    std::vector<SceneGraph> train, val, test;
    std::vector<SceneKind> train_kinds, val_kinds, test_kinds;
};

StoredDataset load_dataset(const std::string& dir);

// Test metrics of one trained model split by scene kind, as used by the
// ablation grids.
struct AblationCellMetrics {
    double r_at_k = 0.0;
    double wmap_rel = 0.0;
    double wmap_phr = 0.0;
    double score_wtd = 0.0;
    double wmap_rel_confusion = 0.0;
    double wmap_rel_proximal = 0.0;
};

AblationCellMetrics eval_by_kind(const PredicateModel& model,
                                 const std::vector<SceneGraph>& scenes,
                                 const std::vector<SceneKind>& kinds, const EvalConfig& cfg);

}  // namespace sgrel::cmd
