#include "sgrel/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "sgrel/contrast.hpp"
#include "sgrel/rng.hpp"

namespace sgrel {

namespace {
constexpr double kLogClamp = 1e-12;
}

FrequencyTable::FrequencyTable(int n_entity_classes, int n_predicates, double smoothing)
    : n_entity_classes_(n_entity_classes),
      n_predicates_(n_predicates),
      smoothing_(smoothing),
      counts_(static_cast<std::size_t>(n_entity_classes) * n_entity_classes * n_predicates, 0.0) {}

void FrequencyTable::add_count(int s_class, int o_class, int predicate, double amount) {
    counts_[(static_cast<std::size_t>(s_class) * n_entity_classes_ + o_class) * n_predicates_ +
            predicate] += amount;
}

FrequencyTable FrequencyTable::build(const std::vector<SceneGraph>& scenes,
                                     const PredicateVocabulary& vocab, int n_entity_classes,
                                     double smoothing) {
    FrequencyTable t(n_entity_classes, vocab.size(), smoothing);
    for (const auto& scene : scenes) {
        std::map<std::pair<int, int>, bool> annotated;
        for (const auto& p : scene.positive_pairs) {
            const auto& s = scene.entity(p.subject_id);
            const auto& o = scene.entity(p.object_id);
            t.add_count(s.entity_class, o.entity_class, p.predicate);
            annotated[{p.subject_id, p.object_id}] = true;
        }
        for (const auto& s : scene.entities) {
            for (const auto& o : scene.entities) {
                if (s.id == o.id) continue;
                if (annotated.count({s.id, o.id})) continue;
                t.add_count(s.entity_class, o.entity_class, vocab.null_index);
            }
        }
    }
    return t;
}

std::vector<double> FrequencyTable::probabilities(int s_class, int o_class) const {
    const std::size_t base =
        (static_cast<std::size_t>(s_class) * n_entity_classes_ + o_class) * n_predicates_;
    double total = 0.0;
    for (int p = 0; p < n_predicates_; ++p) total += counts_[base + p];
    std::vector<double> out(static_cast<std::size_t>(n_predicates_));
    const double denom = total + smoothing_ * n_predicates_;
    if (denom <= 0.0) {
        std::fill(out.begin(), out.end(), 1.0 / n_predicates_);
        return out;
    }
    for (int p = 0; p < n_predicates_; ++p)
        out[static_cast<std::size_t>(p)] = (counts_[base + p] + smoothing_) / denom;
    return out;
}

std::vector<double> FrequencyTable::log_probabilities(int s_class, int o_class) const {
    auto out = probabilities(s_class, o_class);
    for (double& p : out) p = std::log(std::max(p, kLogClamp));
    return out;
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
    ModelParams m;
    m.dims = dims;
    const int P = dims.n_predicates;
    m.spt_w1 = Mat(dims.hidden_spatial, kSpatialFeatureDim);
    m.spt_b1.assign(static_cast<std::size_t>(dims.hidden_spatial), 0.0);
    m.spt_w2 = Mat(P, dims.hidden_spatial);
    m.spt_b2.assign(static_cast<std::size_t>(P), 0.0);
    if (dims.d_app > 0) {
        m.vis_w1 = Mat(dims.hidden_visual, 3 * dims.d_app);
        m.vis_b1.assign(static_cast<std::size_t>(dims.hidden_visual), 0.0);
        m.vis_w2 = Mat(P, dims.hidden_visual);
        m.vis_b2.assign(static_cast<std::size_t>(P), 0.0);
        m.skip_s = Mat(P, dims.d_app);
        m.skip_o = Mat(P, dims.d_app);
    }
    return m;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
    ModelParams m = zeros(dims);
    Rng rng(seed);
    m.for_each_block([&](const std::string&, double* data, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) data[i] = rng.range(-0.1, 0.1);
    });
    return m;
}

std::size_t ModelParams::n_params() const {
    std::size_t n = 0;
    const_cast<ModelParams*>(this)->for_each_block(
        [&](const std::string&, double*, std::size_t k) { n += k; });
    return n;
}

void ModelParams::for_each_block(
    const std::function<void(const std::string&, double*, std::size_t)>& fn) {
    fn("spt_w1", spt_w1.v.data(), spt_w1.v.size());
    fn("spt_b1", spt_b1.data(), spt_b1.size());
    fn("spt_w2", spt_w2.v.data(), spt_w2.v.size());
    fn("spt_b2", spt_b2.data(), spt_b2.size());
    if (dims.d_app > 0) {
        fn("vis_w1", vis_w1.v.data(), vis_w1.v.size());
        fn("vis_b1", vis_b1.data(), vis_b1.size());
        fn("vis_w2", vis_w2.v.data(), vis_w2.v.size());
        fn("vis_b2", vis_b2.data(), vis_b2.size());
        fn("skip_s", skip_s.v.data(), skip_s.v.size());
        fn("skip_o", skip_o.v.data(), skip_o.v.size());
    }
}

void ModelParams::for_each_block(
    const std::function<void(const std::string&, const double*, std::size_t)>& fn) const {
    const_cast<ModelParams*>(this)->for_each_block(
        [&](const std::string& name, double* data, std::size_t n) { fn(name, data, n); });
}

std::vector<double> softmax(std::span<const double> logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

namespace {

// y = w2 * relu(w1 * x + b1) + b2, pre-activation returned for backward
void mlp2_forward(const Mat& w1, const std::vector<double>& b1, const Mat& w2,
                  const std::vector<double>& b2, std::span<const double> x,
                  std::vector<double>& hidden_pre, std::vector<double>& out) {
    hidden_pre.assign(static_cast<std::size_t>(w1.rows), 0.0);
    for (int j = 0; j < w1.rows; ++j) {
        double acc = b1[static_cast<std::size_t>(j)];
        const double* row = w1.v.data() + static_cast<std::size_t>(j) * w1.cols;
        for (int i = 0; i < w1.cols; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
        hidden_pre[static_cast<std::size_t>(j)] = acc;
    }
    out.assign(static_cast<std::size_t>(w2.rows), 0.0);
    for (int k = 0; k < w2.rows; ++k) {
        double acc = b2[static_cast<std::size_t>(k)];
        const double* row = w2.v.data() + static_cast<std::size_t>(k) * w2.cols;
        for (int j = 0; j < w2.cols; ++j) {
            const double hj = hidden_pre[static_cast<std::size_t>(j)];
            if (hj > 0.0) acc += row[j] * hj;
        }
        out[static_cast<std::size_t>(k)] = acc;
    }
}

void mlp2_backward(const Mat& w1, const Mat& w2, std::span<const double> x,
                   const std::vector<double>& hidden_pre, std::span<const double> dout,
                   Mat& gw1, std::vector<double>& gb1, Mat& gw2, std::vector<double>& gb2) {
    std::vector<double> dhidden(static_cast<std::size_t>(w1.rows), 0.0);
    for (int k = 0; k < w2.rows; ++k) {
        const double g = dout[static_cast<std::size_t>(k)];
        if (g == 0.0) continue;
        gb2[static_cast<std::size_t>(k)] += g;
        double* grow = gw2.v.data() + static_cast<std::size_t>(k) * w2.cols;
        const double* row = w2.v.data() + static_cast<std::size_t>(k) * w2.cols;
        for (int j = 0; j < w2.cols; ++j) {
            const double hj = hidden_pre[static_cast<std::size_t>(j)];
            if (hj > 0.0) {
                grow[j] += g * hj;
                dhidden[static_cast<std::size_t>(j)] += g * row[j];
            }
        }
    }
    for (int j = 0; j < w1.rows; ++j) {
        if (hidden_pre[static_cast<std::size_t>(j)] <= 0.0) continue;
        const double g = dhidden[static_cast<std::size_t>(j)];
        if (g == 0.0) continue;
        gb1[static_cast<std::size_t>(j)] += g;
        double* grow = gw1.v.data() + static_cast<std::size_t>(j) * w1.cols;
        for (int i = 0; i < w1.cols; ++i) grow[i] += g * x[static_cast<std::size_t>(i)];
    }
}

}  // namespace

std::vector<double> spatial_logits(const ModelParams& params, const std::array<double, 22>& feat) {
    std::vector<double> hidden, out;
    mlp2_forward(params.spt_w1, params.spt_b1, params.spt_w2, params.spt_b2,
                 std::span<const double>(feat.data(), feat.size()), hidden, out);
    return out;
}

std::vector<double> visual_logits(const ModelParams& params, std::span<const double> f_s,
                                  std::span<const double> f_p, std::span<const double> f_o) {
    const int d = params.dims.d_app;
    std::vector<double> in(static_cast<std::size_t>(3 * d));
    std::copy(f_s.begin(), f_s.end(), in.begin());
    std::copy(f_p.begin(), f_p.end(), in.begin() + d);
    std::copy(f_o.begin(), f_o.end(), in.begin() + 2 * d);
    std::vector<double> hidden, out;
    mlp2_forward(params.vis_w1, params.vis_b1, params.vis_w2, params.vis_b2, in, hidden, out);
    for (int k = 0; k < params.dims.n_predicates; ++k) {
        double acc = 0.0;
        for (int i = 0; i < d; ++i)
            acc += params.skip_s.at(k, i) * f_s[static_cast<std::size_t>(i)] +
                   params.skip_o.at(k, i) * f_o[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(k)] += acc;
    }
    return out;
}

FusionOutput PredicateModel::forward(const SceneGraph& scene, int subject_id, int object_id) const {
    const auto& se = scene.entity(subject_id);
    const auto& oe = scene.entity(object_id);
    const int P = params_.dims.n_predicates;
    const int d = params_.dims.d_app;

    FusionOutput f;
    f.subject_id = subject_id;
    f.object_id = object_id;
    f.f_sem = table_.log_probabilities(se.entity_class, oe.entity_class);

    f.spt_in = spatial_feature(se.box, oe.box, scene.image_size);
    mlp2_forward(params_.spt_w1, params_.spt_b1, params_.spt_w2, params_.spt_b2,
                 std::span<const double>(f.spt_in.data(), f.spt_in.size()), f.spt_hidden_pre,
                 f.f_spt);

    if (d > 0) {
        if (se.appearance.size() != static_cast<std::size_t>(d) ||
            oe.appearance.size() != static_cast<std::size_t>(d))
            throw MissingAppearanceError("scene lacks appearance vectors of length " +
                                         std::to_string(d));
        // predicate-region vector synthesized as the mean of the pair
        f.vis_in.assign(static_cast<std::size_t>(3 * d), 0.0);
        for (int i = 0; i < d; ++i) {
            f.vis_in[static_cast<std::size_t>(i)] = se.appearance[static_cast<std::size_t>(i)];
            f.vis_in[static_cast<std::size_t>(d + i)] =
                0.5 * (se.appearance[static_cast<std::size_t>(i)] +
                       oe.appearance[static_cast<std::size_t>(i)]);
            f.vis_in[static_cast<std::size_t>(2 * d + i)] = oe.appearance[static_cast<std::size_t>(i)];
        }
        mlp2_forward(params_.vis_w1, params_.vis_b1, params_.vis_w2, params_.vis_b2, f.vis_in,
                     f.vis_hidden_pre, f.f_vis);
        for (int k = 0; k < P; ++k) {
            double acc = 0.0;
            for (int i = 0; i < d; ++i)
                acc += params_.skip_s.at(k, i) * se.appearance[static_cast<std::size_t>(i)] +
                       params_.skip_o.at(k, i) * oe.appearance[static_cast<std::size_t>(i)];
            f.f_vis[static_cast<std::size_t>(k)] += acc;
        }
    } else {
        f.f_vis.assign(static_cast<std::size_t>(P), 0.0);
    }

    std::vector<double> logits(static_cast<std::size_t>(P));
    for (int k = 0; k < P; ++k)
        logits[static_cast<std::size_t>(k)] = f.f_sem[static_cast<std::size_t>(k)] +
                                              f.f_spt[static_cast<std::size_t>(k)] +
                                              f.f_vis[static_cast<std::size_t>(k)];
    f.probs = softmax(logits);
    f.affinity = affinity_from_probs(f.probs, vocab_.null_index);
    return f;
}

void PredicateModel::backward(const FusionOutput& f, std::span<const double> dlogits,
                              ModelParams& grads) const {
    mlp2_backward(params_.spt_w1, params_.spt_w2,
                  std::span<const double>(f.spt_in.data(), f.spt_in.size()), f.spt_hidden_pre,
                  dlogits, grads.spt_w1, grads.spt_b1, grads.spt_w2, grads.spt_b2);
    const int d = params_.dims.d_app;
    if (d > 0) {
        mlp2_backward(params_.vis_w1, params_.vis_w2, f.vis_in, f.vis_hidden_pre, dlogits,
                      grads.vis_w1, grads.vis_b1, grads.vis_w2, grads.vis_b2);
        for (int k = 0; k < params_.dims.n_predicates; ++k) {
            const double g = dlogits[static_cast<std::size_t>(k)];
            if (g == 0.0) continue;
            for (int i = 0; i < d; ++i) {
                grads.skip_s.at(k, i) += g * f.vis_in[static_cast<std::size_t>(i)];
                grads.skip_o.at(k, i) += g * f.vis_in[static_cast<std::size_t>(2 * d + i)];
            }
        }
    }
}

int PredicateModel::argmax_predicate(const SceneGraph& scene, int subject_id, int object_id) const {
    const FusionOutput f = forward(scene, subject_id, object_id);
    int best = 0;
    for (int k = 1; k < static_cast<int>(f.probs.size()); ++k)
        if (f.probs[static_cast<std::size_t>(k)] > f.probs[static_cast<std::size_t>(best)]) best = k;
    return best;
}

void save_checkpoint(const std::string& path, const PredicateModel& model, std::uint64_t seed,
                     const std::string& config_hash) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    const auto& d = model.params().dims;
    j["dims"] = {{"n_predicates", d.n_predicates},
                 {"n_entity_classes", d.n_entity_classes},
                 {"d_app", d.d_app},
                 {"hidden_spatial", d.hidden_spatial},
                 {"hidden_visual", d.hidden_visual}};
    j["vocab"] = {{"names", model.vocab().names}, {"null_index", model.vocab().null_index}};
    j["freq"] = {{"smoothing", model.table().smoothing()}, {"counts", model.table().raw_counts()}};
    nlohmann::json params;
    model.params().for_each_block([&](const std::string& name, const double* data, std::size_t n) {
        params[name] = std::vector<double>(data, data + n);
    });
    j["params"] = std::move(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

PredicateModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("checkpoint: unsupported format version");
    ModelDims dims;
    dims.n_predicates = j.at("dims").at("n_predicates").get<int>();
    dims.n_entity_classes = j.at("dims").at("n_entity_classes").get<int>();
    dims.d_app = j.at("dims").at("d_app").get<int>();
    dims.hidden_spatial = j.at("dims").at("hidden_spatial").get<int>();
    dims.hidden_visual = j.at("dims").at("hidden_visual").get<int>();

    PredicateVocabulary vocab;
    vocab.names = j.at("vocab").at("names").get<std::vector<std::string>>();
    vocab.null_index = j.at("vocab").at("null_index").get<int>();
    vocab.validate();

    FrequencyTable table(dims.n_entity_classes, dims.n_predicates,
                         j.at("freq").at("smoothing").get<double>());
    table.raw_counts() = j.at("freq").at("counts").get<std::vector<double>>();
    if (table.raw_counts().size() != static_cast<std::size_t>(dims.n_entity_classes) *
                                         dims.n_entity_classes * dims.n_predicates)
        throw std::runtime_error("checkpoint: frequency table size mismatch");

    ModelParams params = ModelParams::zeros(dims);
    params.for_each_block([&](const std::string& name, double* data, std::size_t n) {
        auto vals = j.at("params").at(name).get<std::vector<double>>();
        if (vals.size() != n) throw std::runtime_error("checkpoint: block size mismatch: " + name);
        std::copy(vals.begin(), vals.end(), data);
    });
    return PredicateModel(std::move(params), std::move(table), std::move(vocab));
}

}  // namespace sgrel
