#include "sgrel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sgrel/rng.hpp"

namespace sgrel {

std::string to_string(Optimizer o) {
    switch (o) {
        case Optimizer::sgd: return "sgd";
        case Optimizer::momentum: return "momentum";
        case Optimizer::adam: return "adam";
    }
    return "adam";
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "momentum") return Optimizer::momentum;
    if (s == "adam") return Optimizer::adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

std::vector<FusionOutput> forward_batch(const PredicateModel& model, const SceneGraph& scene,
                                        const std::vector<std::pair<int, int>>& pairs) {
    std::vector<FusionOutput> out;
    out.reserve(pairs.size());
    for (const auto& [s, o] : pairs) out.push_back(model.forward(scene, s, o));
    return out;
}

namespace {

struct OptimizerState {
    Optimizer kind = Optimizer::adam;
    double lr = 0.01;
    long step_count = 0;
    std::vector<double> m1, m2;  // momentum / Adam moments, flat

    static constexpr double kMomentum = 0.9;
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    void init(std::size_t n) {
        if (kind != Optimizer::sgd) m1.assign(n, 0.0);
        if (kind == Optimizer::adam) m2.assign(n, 0.0);
    }

    void step(ModelParams& params, ModelParams& grads) {
        step_count++;
        std::size_t off = 0;
        params.for_each_block([&](const std::string& name, double* theta, std::size_t n) {
            const double* g = nullptr;
            grads.for_each_block([&](const std::string& gname, const double* gd, std::size_t) {
                if (gname == name) g = gd;
            });
            switch (kind) {
                case Optimizer::sgd:
                    for (std::size_t i = 0; i < n; ++i) theta[i] -= lr * g[i];
                    break;
                case Optimizer::momentum:
                    for (std::size_t i = 0; i < n; ++i) {
                        m1[off + i] = kMomentum * m1[off + i] + g[i];
                        theta[i] -= lr * m1[off + i];
                    }
                    break;
                case Optimizer::adam: {
                    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count));
                    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count));
                    for (std::size_t i = 0; i < n; ++i) {
                        m1[off + i] = kBeta1 * m1[off + i] + (1.0 - kBeta1) * g[i];
                        m2[off + i] = kBeta2 * m2[off + i] + (1.0 - kBeta2) * g[i] * g[i];
                        const double mh = m1[off + i] / bc1;
                        const double vh = m2[off + i] / bc2;
                        theta[i] -= lr * mh / (std::sqrt(vh) + kEps);
                    }
                    break;
                }
            }
            off += n;
        });
    }
};

int max_entity_class(const std::vector<SceneGraph>& scenes) {
    int mx = -1;
    for (const auto& s : scenes)
        for (const auto& e : s.entities) mx = std::max(mx, e.entity_class);
    return mx;
}

}  // namespace

TrainResult train(const std::vector<SceneGraph>& train_scenes,
                  const std::vector<SceneGraph>& val_scenes, const PredicateVocabulary& vocab,
                  int n_entity_classes, const TrainConfig& cfg) {
    cfg.validate();
    vocab.validate();
    if (train_scenes.empty()) throw NoPositivesError("train: no scenes");
    bool any_positive = false;
    for (const auto& s : train_scenes) any_positive |= !s.positive_pairs.empty();
    if (!any_positive) throw NoPositivesError("train: no scene has annotated pairs");
    if (n_entity_classes <= max_entity_class(train_scenes))
        throw std::invalid_argument("train: n_entity_classes too small for the data");

    ModelDims dims;
    dims.n_predicates = vocab.size();
    dims.n_entity_classes = n_entity_classes;
    dims.d_app = cfg.model.d_app;
    dims.hidden_spatial = cfg.model.hidden_spatial;
    dims.hidden_visual = cfg.model.hidden_visual;

    FrequencyTable table =
        FrequencyTable::build(train_scenes, vocab, n_entity_classes, cfg.model.freq_smoothing);
    ModelParams params = ModelParams::init(dims, derive_seed(cfg.seed, 0x706172616dULL));
    PredicateModel model(std::move(params), std::move(table), vocab);

    OptimizerState opt;
    opt.kind = cfg.optimizer;
    opt.lr = cfg.learning_rate;
    opt.init(model.params().n_params());

    std::vector<PairLabels> labels;
    labels.reserve(train_scenes.size());
    for (const auto& s : train_scenes) labels.push_back(PairLabels::build(s));

    TrainLog log;
    std::vector<int> order(train_scenes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x736875ULL));
        shuffle_rng.shuffle(order);

        EpochLog el;
        el.epoch = epoch;
        int steps = 0;
        for (int si : order) {
            const SceneGraph& scene = train_scenes[static_cast<std::size_t>(si)];
            const PairLabels& lab = labels[static_cast<std::size_t>(si)];
            if (lab.n_positive_pairs() == 0) continue;

            SamplerConfig scfg = cfg.sampler;
            scfg.rng_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(si));
            ArgmaxFn argmax = [&](int s, int o) { return model.argmax_predicate(scene, s, o); };
            const SampledBatch batch = sample_batch(scene, lab, scfg, argmax, vocab.null_index);

            const auto outputs = forward_batch(model, scene, batch.pairs);
            const LossBreakdown lb = total_loss(batch, outputs, cfg.loss, vocab.null_index);
            if (!std::isfinite(lb.total))
                throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch),
                                      log);

            ModelParams grads = ModelParams::zeros(model.params().dims);
            for (std::size_t slot = 0; slot < outputs.size(); ++slot)
                model.backward(outputs[slot], lb.dlogits[slot], grads);
            opt.step(model.params(), grads);

            el.l0 += lb.l0;
            el.l1 += lb.l1;
            el.l2 += lb.l2;
            el.l3 += lb.l3;
            el.total += lb.total;
            steps++;
        }
        if (steps > 0) {
            el.l0 /= steps;
            el.l1 /= steps;
            el.l2 /= steps;
            el.l3 /= steps;
            el.total /= steps;
        }
        if (cfg.eval_every > 0 && !val_scenes.empty() &&
            (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
            const EvalReport rep = evaluate_model(model, val_scenes, cfg.eval);
            el.val = EvalSummary{rep.recall_at_k, rep.wmap_rel, rep.score_wtd};
        }
        log.epochs.push_back(el);
    }
    return TrainResult{std::move(model), std::move(log)};
}

long count_active_hinges_at_init(const std::vector<SceneGraph>& scenes,
                                 const PredicateVocabulary& vocab, int n_entity_classes,
                                 const TrainConfig& cfg) {
    ModelDims dims;
    dims.n_predicates = vocab.size();
    dims.n_entity_classes = n_entity_classes;
    dims.d_app = cfg.model.d_app;
    dims.hidden_spatial = cfg.model.hidden_spatial;
    dims.hidden_visual = cfg.model.hidden_visual;
    FrequencyTable table =
        FrequencyTable::build(scenes, vocab, n_entity_classes, cfg.model.freq_smoothing);
    ModelParams params = ModelParams::init(dims, derive_seed(cfg.seed, 0x706172616dULL));
    PredicateModel model(std::move(params), std::move(table), vocab);

    long active = 0;
    for (std::size_t si = 0; si < scenes.size(); ++si) {
        const SceneGraph& scene = scenes[si];
        const PairLabels lab = PairLabels::build(scene);
        if (lab.n_positive_pairs() == 0) continue;
        SamplerConfig scfg = cfg.sampler;
        scfg.rng_seed = derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(si));
        ArgmaxFn argmax = [&](int s, int o) { return model.argmax_predicate(scene, s, o); };
        const SampledBatch batch = sample_batch(scene, lab, scfg, argmax, vocab.null_index);
        const auto outputs = forward_batch(model, scene, batch.pairs);
        const LossBreakdown lb = total_loss(batch, outputs, cfg.loss, vocab.null_index);
        active += lb.active_hinges;
    }
    return active;
}

GradCheckReport grad_check(const GradCheckConfig& cfg, const GradCorruptFn& corrupt) {
    if (cfg.trials < 1) throw std::invalid_argument("grad_check: trials must be >= 1");
    GradCheckReport rep;
    rep.trials = cfg.trials;
    std::map<std::string, WorstCoord> worst;
    double err_sum = 0.0;

    for (int trial = 0; trial < cfg.trials; ++trial) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(trial), 0x6763ULL));
        const SceneGraph scene = random_scene(rng, cfg.scene);
        const PredicateVocabulary vocab = PredicateVocabulary::numbered(cfg.scene.n_predicate_classes);

        ModelDims dims;
        dims.n_predicates = vocab.size();
        dims.n_entity_classes = cfg.scene.n_entity_classes;
        dims.d_app = cfg.scene.d_app;
        dims.hidden_spatial = cfg.hidden;
        dims.hidden_visual = cfg.hidden;
        FrequencyTable table = FrequencyTable::build({scene}, vocab, cfg.scene.n_entity_classes,
                                                     cfg.freq_smoothing);
        PredicateModel model(ModelParams::init(dims, rng.u64()), std::move(table), vocab);

        const PairLabels labels = PairLabels::build(scene);
        SamplerConfig scfg = cfg.sampler;
        scfg.rng_seed = rng.u64();
        ArgmaxFn argmax = [&](int s, int o) { return model.argmax_predicate(scene, s, o); };
        const SampledBatch batch = sample_batch(scene, labels, scfg, argmax, vocab.null_index);

        const auto outputs = forward_batch(model, scene, batch.pairs);
        LossPlan plan;
        const LossBreakdown lb = total_loss(batch, outputs, cfg.loss, vocab.null_index, &plan);

        ModelParams grads = ModelParams::zeros(dims);
        for (std::size_t slot = 0; slot < outputs.size(); ++slot)
            model.backward(outputs[slot], lb.dlogits[slot], grads);
        if (corrupt) corrupt(grads);

        // signature of the evaluation's discrete structure: ReLU masks plus
        // the hinge/clamp flags reported by the plan
        auto eval_at = [&](std::vector<unsigned char>& bits) {
            const auto outs = forward_batch(model, scene, batch.pairs);
            for (const auto& f : outs) {
                for (double v : f.spt_hidden_pre) bits.push_back(v > 0.0 ? 1 : 0);
                for (double v : f.vis_hidden_pre) bits.push_back(v > 0.0 ? 1 : 0);
            }
            return evaluate_plan(plan, outs, vocab.null_index, &bits);
        };

        std::vector<std::pair<std::string, std::pair<double*, std::size_t>>> blocks;
        model.params().for_each_block([&](const std::string& name, double* data, std::size_t n) {
            blocks.push_back({name, {data, n}});
        });
        std::vector<std::pair<std::string, const double*>> grad_blocks;
        grads.for_each_block([&](const std::string& name, const double* data, std::size_t) {
            grad_blocks.push_back({name, data});
        });

        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const auto& [name, blk] = blocks[bi];
            double* data = blk.first;
            const double* gdata = grad_blocks[bi].second;
            for (std::size_t i = 0; i < blk.second; ++i) {
                const double saved = data[i];
                std::vector<unsigned char> bits_plus, bits_minus;
                data[i] = saved + cfg.fd_step;
                const double v_plus = eval_at(bits_plus);
                data[i] = saved - cfg.fd_step;
                const double v_minus = eval_at(bits_minus);
                data[i] = saved;
                if (bits_plus != bits_minus) {
                    rep.n_skipped_nonsmooth++;
                    continue;
                }
                const double numeric = (v_plus - v_minus) / (2.0 * cfg.fd_step);
                const double analytic = gdata[i];
                const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
                const double rel = std::abs(analytic - numeric) / denom;
                rep.n_coords++;
                err_sum += rel;
                rep.max_rel_err = std::max(rep.max_rel_err, rel);
                auto& w = worst[name];
                if (w.index < 0 || rel > w.rel_err) {
                    w.block = name;
                    w.index = static_cast<long>(i);
                    w.analytic = analytic;
                    w.numeric = numeric;
                    w.rel_err = rel;
                }
            }
        }
    }
    rep.mean_rel_err = rep.n_coords > 0 ? err_sum / static_cast<double>(rep.n_coords) : 0.0;
    for (const auto& [name, w] : worst) rep.worst_per_block.push_back(w);
    return rep;
}

}  // namespace sgrel
