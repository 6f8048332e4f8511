#include "sgrel/config.hpp"

#include <fstream>
#include <stdexcept>

namespace sgrel {

using nlohmann::json;

json default_config_json() {
    json j;
    j["seed"] = 1;
    j["out_dir"] = "out";
    j["gen"] = {{"n_scenes", 500},
                {"n_entity_classes", 6},
                {"n_predicate_classes", 4},
                {"confusion_mode", "mixed"},
                {"n_duplicate_instances", 3},
                {"proximity_jitter", 20.0},
                {"cue_strength", 0.3},
                {"d_app", 16}};
    j["model"] = {{"d_app", 16},
                  {"hidden_spatial", 64},
                  {"hidden_visual", 64},
                  {"freq_smoothing", 1.0}};
    j["loss"] = {{"alpha1", 0.2}, {"alpha2", 0.2}, {"alpha3", 0.2},
                 {"lambda1", 1.0}, {"lambda2", 0.5}, {"lambda3", 0.1}};
    j["sampler"] = {{"n_pairs_l0", 512}, {"n_pos_l0", 128}, {"n_pos_anchors", 128}, {"k_neg", 64}};
    j["train"] = {{"epochs", 30},
                  {"learning_rate", 0.01},
                  {"optimizer", "adam"},
                  {"eval_every", 1},
                  {"dataset_dir", "out"}};
    j["eval"] = {{"iou_thresh", 0.5},
                 {"k", 50},
                 {"limit", 100},
                 {"checkpoint", "out/checkpoint.json"},
                 {"dataset_dir", "out"},
                 {"split", "test"}};
    j["gradcheck"] = {{"trials", 100},
                      {"fd_step", 1e-5},
                      {"fail_threshold", 1e-3},
                      {"min_entities", 4},
                      {"max_entities", 6},
                      {"n_entity_classes", 4},
                      {"n_predicate_classes", 3},
                      {"d_app", 4},
                      {"edge_prob", 0.25},
                      {"hidden", 6}};
    j["ablate"] = {{"grids", {"losses", "margins"}},
                   {"seeds", {1, 2, 3, 4, 5}},
                   {"margins", {0.1, 0.2, 0.5, 1.0}}};
    return j;
}

json merge_config(const json& defaults, const json& user) {
    json out = defaults;
    for (const auto& [key, val] : user.items()) {
        if (!defaults.contains(key))
            throw std::invalid_argument("config: unknown key '" + key + "'");
        if (defaults.at(key).is_object() && val.is_object())
            out[key] = merge_config(defaults.at(key), val);
        else
            out[key] = val;
    }
    return out;
}

std::string config_hash_hex(json config, std::uint64_t seed) {
    config.erase("out_dir");
    config["seed"] = seed;
    const std::string s = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt_double(double v) { return json(v).dump(); }

RunConfig load_run_config(const json& merged, const std::uint64_t* seed_override,
                          const std::string* out_override) {
    RunConfig rc;
    rc.seed = seed_override ? *seed_override : merged.at("seed").get<std::uint64_t>();
    rc.out_dir = out_override ? *out_override : merged.at("out_dir").get<std::string>();

    const auto& g = merged.at("gen");
    rc.gen.n_scenes = g.at("n_scenes").get<int>();
    rc.gen.n_entity_classes = g.at("n_entity_classes").get<int>();
    rc.gen.n_predicate_classes = g.at("n_predicate_classes").get<int>();
    rc.gen.confusion_mode = confusion_mode_from_string(g.at("confusion_mode").get<std::string>());
    rc.gen.n_duplicate_instances = g.at("n_duplicate_instances").get<int>();
    rc.gen.proximity_jitter = g.at("proximity_jitter").get<double>();
    rc.gen.cue_strength = g.at("cue_strength").get<double>();
    rc.gen.d_app = g.at("d_app").get<int>();
    rc.gen.seed = rc.seed;

    const auto& m = merged.at("model");
    ModelConfig mc;
    mc.d_app = m.at("d_app").get<int>();
    mc.hidden_spatial = m.at("hidden_spatial").get<int>();
    mc.hidden_visual = m.at("hidden_visual").get<int>();
    mc.freq_smoothing = m.at("freq_smoothing").get<double>();

    const auto& l = merged.at("loss");
    LossConfig lc;
    lc.alpha1 = l.at("alpha1").get<double>();
    lc.alpha2 = l.at("alpha2").get<double>();
    lc.alpha3 = l.at("alpha3").get<double>();
    lc.lambda1 = l.at("lambda1").get<double>();
    lc.lambda2 = l.at("lambda2").get<double>();
    lc.lambda3 = l.at("lambda3").get<double>();

    const auto& s = merged.at("sampler");
    SamplerConfig sc;
    sc.n_pairs_l0 = s.at("n_pairs_l0").get<int>();
    sc.n_pos_l0 = s.at("n_pos_l0").get<int>();
    sc.n_pos_anchors = s.at("n_pos_anchors").get<int>();
    sc.k_neg = s.at("k_neg").get<int>();

    const auto& e = merged.at("eval");
    EvalConfig ec;
    ec.iou_thresh = e.at("iou_thresh").get<double>();
    ec.k = e.at("k").get<int>();
    ec.limit = e.at("limit").get<int>();
    rc.eval.config = ec;
    rc.eval.checkpoint = e.at("checkpoint").get<std::string>();
    rc.eval.dataset_dir = e.at("dataset_dir").get<std::string>();
    rc.eval.split = e.at("split").get<std::string>();

    const auto& t = merged.at("train");
    rc.train.config.epochs = t.at("epochs").get<int>();
    rc.train.config.learning_rate = t.at("learning_rate").get<double>();
    rc.train.config.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
    rc.train.config.eval_every = t.at("eval_every").get<int>();
    rc.train.config.loss = lc;
    rc.train.config.sampler = sc;
    rc.train.config.model = mc;
    rc.train.config.eval = ec;
    rc.train.config.seed = rc.seed;
    rc.train.dataset_dir = t.at("dataset_dir").get<std::string>();

    const auto& gc = merged.at("gradcheck");
    rc.gradcheck.config.trials = gc.at("trials").get<int>();
    rc.gradcheck.config.fd_step = gc.at("fd_step").get<double>();
    rc.gradcheck.fail_threshold = gc.at("fail_threshold").get<double>();
    rc.gradcheck.config.scene.min_entities = gc.at("min_entities").get<int>();
    rc.gradcheck.config.scene.max_entities = gc.at("max_entities").get<int>();
    rc.gradcheck.config.scene.n_entity_classes = gc.at("n_entity_classes").get<int>();
    rc.gradcheck.config.scene.n_predicate_classes = gc.at("n_predicate_classes").get<int>();
    rc.gradcheck.config.scene.d_app = gc.at("d_app").get<int>();
    rc.gradcheck.config.scene.edge_prob = gc.at("edge_prob").get<double>();
    rc.gradcheck.config.hidden = gc.at("hidden").get<int>();
    rc.gradcheck.config.freq_smoothing = mc.freq_smoothing;
    rc.gradcheck.config.loss = lc;
    rc.gradcheck.config.sampler = sc;
    rc.gradcheck.config.seed = rc.seed;

    const auto& ab = merged.at("ablate");
    rc.ablate.grids = ab.at("grids").get<std::vector<std::string>>();
    rc.ablate.seeds = ab.at("seeds").get<std::vector<std::uint64_t>>();
    rc.ablate.margins = ab.at("margins").get<std::vector<double>>();

    rc.config_hash = config_hash_hex(merged, rc.seed);
    return rc;
}

RunConfig load_run_config_file(const std::string& path, const std::uint64_t* seed_override,
                               const std::string* out_override) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json user = json::parse(in);
    return load_run_config(merge_config(default_config_json(), user), seed_override, out_override);
}

}  // namespace sgrel
