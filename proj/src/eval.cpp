#include "sgrel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace sgrel {

namespace {

struct GtTriple {
    Box subject_box;
    int subject_class;
    Box object_box;
    int object_class;
    int predicate;
    bool matched = false;
};

std::vector<GtTriple> gt_triples(const SceneGraph& scene) {
    std::vector<GtTriple> out;
    for (const auto& p : scene.positive_pairs) {
        const auto& s = scene.entity(p.subject_id);
        const auto& o = scene.entity(p.object_id);
        out.push_back({s.box, s.entity_class, o.box, o.entity_class, p.predicate});
    }
    return out;
}

bool labels_match(const RankedPrediction& pr, const GtTriple& gt) {
    return pr.predicate == gt.predicate && pr.subject_class == gt.subject_class &&
           pr.object_class == gt.object_class;
}

// match quality under the mode's box rule; negative when below threshold
double match_overlap(const RankedPrediction& pr, const GtTriple& gt, MatchMode mode,
                     double thresh) {
    if (mode == MatchMode::rel) {
        const double is = iou(pr.subject_box, gt.subject_box);
        const double io = iou(pr.object_box, gt.object_box);
        const double q = std::min(is, io);
        return q >= thresh ? q : -1.0;
    }
    const double q = iou(enclosing_box(pr.subject_box, pr.object_box),
                         enclosing_box(gt.subject_box, gt.object_box));
    return q >= thresh ? q : -1.0;
}

// greedy assignment of one prediction against the unmatched ground truth of
// its image; returns the chosen index or -1
int assign(const RankedPrediction& pr, std::vector<GtTriple>& gts, MatchMode mode, double thresh) {
    int best = -1;
    double best_q = -1.0;
    for (int gi = 0; gi < static_cast<int>(gts.size()); ++gi) {
        auto& gt = gts[static_cast<std::size_t>(gi)];
        if (gt.matched || !labels_match(pr, gt)) continue;
        const double q = match_overlap(pr, gt, mode, thresh);
        if (q > best_q) {
            best_q = q;
            best = gi;
        }
    }
    if (best >= 0 && best_q >= 0.0) {
        gts[static_cast<std::size_t>(best)].matched = true;
        return best;
    }
    return -1;
}

}  // namespace

std::vector<RankedPrediction> rank_triplets(const PredicateModel& model, const SceneGraph& scene,
                                            int limit) {
    struct Scored {
        RankedPrediction pred;
        int sid, oid;
    };
    std::vector<Scored> scored;
    const int null_index = model.vocab().null_index;
    for (const auto& s : scene.entities) {
        for (const auto& o : scene.entities) {
            if (s.id == o.id) continue;
            const FusionOutput f = model.forward(scene, s.id, o.id);
            int best = -1;
            for (int k = 0; k < static_cast<int>(f.probs.size()); ++k) {
                if (k == null_index) continue;
                if (best < 0 || f.probs[static_cast<std::size_t>(k)] >
                                    f.probs[static_cast<std::size_t>(best)])
                    best = k;
            }
            RankedPrediction rp;
            rp.subject_box = s.box;
            rp.subject_class = s.entity_class;
            rp.subject_conf = s.det_confidence;
            rp.object_box = o.box;
            rp.object_class = o.entity_class;
            rp.object_conf = o.det_confidence;
            rp.predicate = best;
            rp.score = s.det_confidence * f.probs[static_cast<std::size_t>(best)] *
                       o.det_confidence;
            scored.push_back({rp, s.id, o.id});
        }
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.pred.score != b.pred.score) return a.pred.score > b.pred.score;
        if (a.sid != b.sid) return a.sid < b.sid;
        if (a.oid != b.oid) return a.oid < b.oid;
        return a.pred.predicate < b.pred.predicate;
    });
    std::vector<RankedPrediction> out;
    for (const auto& s : scored) {
        if (static_cast<int>(out.size()) >= limit) break;
        out.push_back(s.pred);
    }
    return out;
}

double recall_at_k(std::span<const std::vector<RankedPrediction>> predictions,
                   std::span<const SceneGraph> scenes, const EvalConfig& cfg) {
    if (predictions.size() != scenes.size())
        throw std::invalid_argument("recall_at_k: prediction/scene count mismatch");
    long matched = 0, total = 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        auto gts = gt_triples(scenes[i]);
        total += static_cast<long>(gts.size());
        const auto& preds = predictions[i];
        const int kk = std::min<int>(cfg.k, static_cast<int>(preds.size()));
        for (int pi = 0; pi < kk; ++pi)
            if (assign(preds[static_cast<std::size_t>(pi)], gts, MatchMode::rel, cfg.iou_thresh) >= 0)
                matched++;
    }
    return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

std::optional<double> average_precision(std::span<const std::vector<RankedPrediction>> predictions,
                                        std::span<const SceneGraph> scenes, int predicate,
                                        MatchMode mode, const EvalConfig& cfg) {
    if (predictions.size() != scenes.size())
        throw std::invalid_argument("average_precision: prediction/scene count mismatch");
    std::vector<std::vector<GtTriple>> gts(scenes.size());
    long n_gt = 0;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        for (auto& g : gt_triples(scenes[i]))
            if (g.predicate == predicate) {
                gts[i].push_back(g);
                n_gt++;
            }
    }
    if (n_gt == 0) return std::nullopt;

    struct Ref {
        double score;
        int image;
        int index;  // rank within its image's prediction list
    };
    std::vector<Ref> refs;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (std::size_t j = 0; j < predictions[i].size(); ++j)
            if (predictions[i][j].predicate == predicate)
                refs.push_back({predictions[i][j].score, static_cast<int>(i), static_cast<int>(j)});
    std::sort(refs.begin(), refs.end(), [](const Ref& a, const Ref& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.image != b.image) return a.image < b.image;
        return a.index < b.index;
    });

    double ap = 0.0;
    long tp = 0;
    for (std::size_t r = 0; r < refs.size(); ++r) {
        const auto& ref = refs[r];
        const auto& pr = predictions[static_cast<std::size_t>(ref.image)]
                                    [static_cast<std::size_t>(ref.index)];
        if (assign(pr, gts[static_cast<std::size_t>(ref.image)], mode, cfg.iou_thresh) >= 0) {
            tp++;
            ap += static_cast<double>(tp) / static_cast<double>(r + 1);
        }
    }
    return ap / static_cast<double>(n_gt);
}

double weighted_map(std::span<const std::optional<double>> aps, std::span<const double> weights) {
    double wsum = 0.0, acc = 0.0;
    for (std::size_t c = 0; c < aps.size(); ++c) {
        if (!aps[c].has_value()) continue;
        const double w = c < weights.size() ? weights[c] : 0.0;
        wsum += w;
        acc += w * *aps[c];
    }
    return wsum > 0.0 ? acc / wsum : 0.0;
}

double challenge_score(double r_at_k, double map_rel, double map_phr) {
    return 0.2 * r_at_k + 0.4 * map_rel + 0.4 * map_phr;
}

std::vector<double> gt_class_weights(std::span<const SceneGraph> scenes,
                                     const PredicateVocabulary& vocab) {
    std::vector<double> w(static_cast<std::size_t>(vocab.size()), 0.0);
    double total = 0.0;
    for (const auto& s : scenes)
        for (const auto& p : s.positive_pairs) {
            w[static_cast<std::size_t>(p.predicate)] += 1.0;
            total += 1.0;
        }
    if (total > 0.0)
        for (auto& v : w) v /= total;
    return w;
}

EvalReport evaluate_predictions(std::span<const std::vector<RankedPrediction>> predictions,
                                std::span<const SceneGraph> scenes,
                                const PredicateVocabulary& vocab, const EvalConfig& cfg) {
    EvalReport rep;
    rep.recall_at_k = recall_at_k(predictions, scenes, cfg);
    const int P = vocab.size();
    rep.ap_rel.assign(static_cast<std::size_t>(P), std::nullopt);
    rep.ap_phr.assign(static_cast<std::size_t>(P), std::nullopt);
    for (int c = 0; c < P; ++c) {
        if (c == vocab.null_index) continue;
        rep.ap_rel[static_cast<std::size_t>(c)] =
            average_precision(predictions, scenes, c, MatchMode::rel, cfg);
        rep.ap_phr[static_cast<std::size_t>(c)] =
            average_precision(predictions, scenes, c, MatchMode::phr, cfg);
    }
    auto mean_defined = [](const std::vector<std::optional<double>>& aps) {
        double acc = 0.0;
        int n = 0;
        for (const auto& a : aps)
            if (a.has_value()) {
                acc += *a;
                n++;
            }
        return n > 0 ? acc / n : 0.0;
    };
    rep.map_rel = mean_defined(rep.ap_rel);
    rep.map_phr = mean_defined(rep.ap_phr);
    std::vector<double> weights =
        cfg.class_weights.empty() ? gt_class_weights(scenes, vocab) : cfg.class_weights;
    rep.wmap_rel = weighted_map(rep.ap_rel, weights);
    rep.wmap_phr = weighted_map(rep.ap_phr, weights);
    rep.score = challenge_score(rep.recall_at_k, rep.map_rel, rep.map_phr);
    rep.score_wtd = challenge_score(rep.recall_at_k, rep.wmap_rel, rep.wmap_phr);
    return rep;
}

EvalReport evaluate_model(const PredicateModel& model, std::span<const SceneGraph> scenes,
                          const EvalConfig& cfg) {
    std::vector<std::vector<RankedPrediction>> preds;
    preds.reserve(scenes.size());
    for (const auto& s : scenes) preds.push_back(rank_triplets(model, s, cfg.limit));
    return evaluate_predictions(preds, scenes, model.vocab(), cfg);
}

namespace {

nlohmann::json box_json(const Box& b) { return {b.x, b.y, b.w, b.h}; }

Box box_from(const nlohmann::json& j) {
    return Box(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
               j.at(3).get<double>());
}

}  // namespace

void write_predictions_jsonl(const std::string& path,
                             std::span<const std::vector<RankedPrediction>> predictions) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        for (const auto& p : predictions[i]) {
            nlohmann::json j;
            j["image"] = i;
            j["subject"] = {{"box", box_json(p.subject_box)},
                            {"class", p.subject_class},
                            {"conf", p.subject_conf}};
            j["object"] = {{"box", box_json(p.object_box)},
                           {"class", p.object_class},
                           {"conf", p.object_conf}};
            j["predicate"] = p.predicate;
            j["score"] = p.score;
            out << j.dump() << "\n";
        }
    }
}

std::vector<std::vector<RankedPrediction>> read_predictions_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<std::vector<RankedPrediction>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::size_t image = j.at("image").get<std::size_t>();
        if (out.size() <= image) out.resize(image + 1);
        RankedPrediction p;
        p.subject_box = box_from(j.at("subject").at("box"));
        p.subject_class = j.at("subject").at("class").get<int>();
        p.subject_conf = j.at("subject").at("conf").get<double>();
        p.object_box = box_from(j.at("object").at("box"));
        p.object_class = j.at("object").at("class").get<int>();
        p.object_conf = j.at("object").at("conf").get<double>();
        p.predicate = j.at("predicate").get<int>();
        p.score = j.at("score").get<double>();
        out[image].push_back(p);
    }
    return out;
}

}  // namespace sgrel
