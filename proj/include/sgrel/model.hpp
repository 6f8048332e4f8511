#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgrel/affinity.hpp"
#include "sgrel/geometry.hpp"
#include "sgrel/scene_graph.hpp"

namespace sgrel {

struct MissingAppearanceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row-major dense matrix, just enough for the two desk-scale MLPs.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

// Empirical predicate statistics per (subject class, object class) cell.
// Real-predicate counts come from annotations; null-class counts from the
// unannotated ordered pairs of the same scenes. Frozen after construction.
class FrequencyTable {
public:
    FrequencyTable() = default;
    FrequencyTable(int n_entity_classes, int n_predicates, double smoothing);

    static FrequencyTable build(const std::vector<SceneGraph>& scenes,
                                const PredicateVocabulary& vocab, int n_entity_classes,
                                double smoothing);

    // Smoothed cell distribution; unseen cells are uniform.
    std::vector<double> probabilities(int s_class, int o_class) const;
    // log of the smoothed probabilities, so softmax of this vector alone
    // recovers the empirical distribution.
    std::vector<double> log_probabilities(int s_class, int o_class) const;

    void add_count(int s_class, int o_class, int predicate, double amount = 1.0);

    int n_entity_classes() const { return n_entity_classes_; }
    int n_predicates() const { return n_predicates_; }
    double smoothing() const { return smoothing_; }
    const std::vector<double>& raw_counts() const { return counts_; }
    std::vector<double>& raw_counts() { return counts_; }

    bool operator==(const FrequencyTable&) const = default;

private:
    int n_entity_classes_ = 0;
    int n_predicates_ = 0;
    double smoothing_ = 1.0;
    std::vector<double> counts_;  // [(s*C + o)*P + pred]
};

struct ModelDims {
    int n_predicates = 0;      // null class included
    int n_entity_classes = 0;
    int d_app = 0;             // 0 disables the visual module
    int hidden_spatial = 64;
    int hidden_visual = 64;

    bool operator==(const ModelDims&) const = default;
};

// Learnable weights: spatial MLP (22 -> hidden -> P), visual MLP on the
// concatenated subject/pair/object appearance (3d -> hidden -> P) and the two
// skip projections feeding subject-only / object-only appearance straight
// into the predicate logits.
struct ModelParams {
    ModelDims dims;
    Mat spt_w1;                  // hidden_spatial x 22
    std::vector<double> spt_b1;
    Mat spt_w2;                  // P x hidden_spatial
    std::vector<double> spt_b2;
    Mat vis_w1;                  // hidden_visual x 3*d_app
    std::vector<double> vis_b1;
    Mat vis_w2;                  // P x hidden_visual
    std::vector<double> vis_b2;
    Mat skip_s;                  // P x d_app
    Mat skip_o;                  // P x d_app

    static ModelParams zeros(const ModelDims& dims);
    static ModelParams init(const ModelDims& dims, std::uint64_t seed);  // U[-0.1, 0.1]

    std::size_t n_params() const;
    void for_each_block(const std::function<void(const std::string&, double*, std::size_t)>& fn);
    void for_each_block(
        const std::function<void(const std::string&, const double*, std::size_t)>& fn) const;

    bool operator==(const ModelParams&) const = default;
};

// Per-pair forward result. The three logit vectors fuse additively before the
// softmax; hidden pre-activations and inputs are kept for the backward pass.
struct FusionOutput {
    int subject_id = -1;
    int object_id = -1;
    std::vector<double> f_sem, f_spt, f_vis;  // logits, length P
    std::vector<double> probs;                // softmax(f_sem + f_spt + f_vis)
    double affinity = 0.0;

    std::array<double, 22> spt_in{};
    std::vector<double> spt_hidden_pre;
    std::vector<double> vis_in;  // [f_s; f_p; f_o]
    std::vector<double> vis_hidden_pre;
};

std::vector<double> softmax(std::span<const double> logits);

std::vector<double> spatial_logits(const ModelParams& params, const std::array<double, 22>& feat);
std::vector<double> visual_logits(const ModelParams& params, std::span<const double> f_s,
                                  std::span<const double> f_p, std::span<const double> f_o);

// Frozen frequency table + learnable params + vocabulary.
class PredicateModel {
public:
    PredicateModel() = default;
    PredicateModel(ModelParams params, FrequencyTable table, PredicateVocabulary vocab)
        : params_(std::move(params)), table_(std::move(table)), vocab_(std::move(vocab)) {}

    FusionOutput forward(const SceneGraph& scene, int subject_id, int object_id) const;

    // Accumulates d(loss)/d(params) into grads, given d(loss)/d(logits).
    void backward(const FusionOutput& f, std::span<const double> dlogits, ModelParams& grads) const;

    // Predicted class over the full distribution, null class included.
    // Ties break toward the lowest predicate index.
    int argmax_predicate(const SceneGraph& scene, int subject_id, int object_id) const;

    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }
    const FrequencyTable& table() const { return table_; }
    const PredicateVocabulary& vocab() const { return vocab_; }

private:
    ModelParams params_;
    FrequencyTable table_;
    PredicateVocabulary vocab_;
};

// Versioned JSON checkpoint; doubles round-trip exactly.
void save_checkpoint(const std::string& path, const PredicateModel& model, std::uint64_t seed,
                     const std::string& config_hash);
PredicateModel load_checkpoint(const std::string& path);

}  // namespace sgrel
