#include "sgrel/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "sgrel/scene_io.hpp"

namespace sgrel::cmd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string kind_name(SceneKind k) {
    return k == SceneKind::entity_confusion ? "entity_confusion" : "proximal";
}

SceneKind kind_from_name(const std::string& s) {
    if (s == "entity_confusion") return SceneKind::entity_confusion;
    if (s == "proximal") return SceneKind::proximal;
    throw std::invalid_argument("unknown scene kind: " + s);
}

json gen_echo(const GenConfig& g) {
    return {{"n_scenes", g.n_scenes},
            {"n_entity_classes", g.n_entity_classes},
            {"n_predicate_classes", g.n_predicate_classes},
            {"confusion_mode", to_string(g.confusion_mode)},
            {"n_duplicate_instances", g.n_duplicate_instances},
            {"proximity_jitter", g.proximity_jitter},
            {"cue_strength", g.cue_strength},
            {"d_app", g.d_app}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
}

std::string csv_header_comment(const RunConfig& rc) {
    return "# seed=" + std::to_string(rc.seed) + " config_hash=" + rc.config_hash + "\n";
}

void write_trainlog(const RunConfig& rc, const TrainLog& log) {
    std::string csv = csv_header_comment(rc);
    csv += "epoch,l0,l1,l2,l3,total,val_recall_at_k,val_wmap_rel,val_score_wtd\n";
    json rows = json::array();
    for (const auto& e : log.epochs) {
        csv += std::to_string(e.epoch) + "," + fmt_double(e.l0) + "," + fmt_double(e.l1) + "," +
               fmt_double(e.l2) + "," + fmt_double(e.l3) + "," + fmt_double(e.total) + ",";
        json row = {{"epoch", e.epoch}, {"l0", e.l0},       {"l1", e.l1},
                    {"l2", e.l2},       {"l3", e.l3},       {"total", e.total}};
        if (e.val) {
            csv += fmt_double(e.val->recall_at_k) + "," + fmt_double(e.val->wmap_rel) + "," +
                   fmt_double(e.val->score_wtd);
            row["val"] = {{"recall_at_k", e.val->recall_at_k},
                          {"wmap_rel", e.val->wmap_rel},
                          {"score_wtd", e.val->score_wtd}};
        } else {
            csv += ",,";
        }
        csv += "\n";
        rows.push_back(std::move(row));
    }
    write_text(rc.out_dir + "/trainlog.csv", csv);
    json j = {{"seed", rc.seed}, {"config_hash", rc.config_hash}, {"epochs", std::move(rows)}};
    write_text(rc.out_dir + "/trainlog.json", j.dump(2) + "\n");
}

}  // namespace

StoredDataset load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/metadata.json");
    if (!in) throw std::runtime_error("cannot open dataset metadata in " + dir);
    const json meta = json::parse(in);
    StoredDataset ds;
    ds.vocab.names = meta.at("vocab").at("names").get<std::vector<std::string>>();
    ds.vocab.null_index = meta.at("vocab").at("null_index").get<int>();
    ds.vocab.validate();
    ds.n_entity_classes = meta.at("n_entity_classes").get<int>();
    auto load_split = [&](const std::string& name, std::vector<SceneGraph>& scenes,
                          std::vector<SceneKind>& kinds) {
        const auto& js = meta.at("splits").at(name);
        scenes = read_scenes_jsonl(dir + "/" + js.at("file").get<std::string>());
        for (const auto& k : js.at("kinds")) kinds.push_back(kind_from_name(k.get<std::string>()));
        if (scenes.size() != kinds.size())
            throw std::runtime_error("dataset split " + name + ": kind/scene count mismatch");
    };
    load_split("train", ds.train, ds.train_kinds);
    load_split("val", ds.val, ds.val_kinds);
    load_split("test", ds.test, ds.test_kinds);
    return ds;
}

int run_gen(const RunConfig& rc) {
    const LabeledDataset ds = gen_dataset(rc.gen);
    fs::create_directories(rc.out_dir);
    write_scenes_jsonl(rc.out_dir + "/train.jsonl", ds.train);
    write_scenes_jsonl(rc.out_dir + "/val.jsonl", ds.val);
    write_scenes_jsonl(rc.out_dir + "/test.jsonl", ds.test);

    auto kinds_json = [](const std::vector<SceneKind>& kinds) {
        json a = json::array();
        for (auto k : kinds) a.push_back(kind_name(k));
        return a;
    };
    json meta;
    meta["seed"] = rc.seed;
    meta["config_hash"] = rc.config_hash;
    meta["vocab"] = {{"names", ds.vocab.names}, {"null_index", ds.vocab.null_index}};
    meta["n_entity_classes"] = rc.gen.n_entity_classes;
    meta["gen"] = gen_echo(rc.gen);
    meta["splits"] = {
        {"train",
         {{"file", "train.jsonl"}, {"n", ds.train.size()}, {"kinds", kinds_json(ds.train_kinds)}}},
        {"val", {{"file", "val.jsonl"}, {"n", ds.val.size()}, {"kinds", kinds_json(ds.val_kinds)}}},
        {"test",
         {{"file", "test.jsonl"}, {"n", ds.test.size()}, {"kinds", kinds_json(ds.test_kinds)}}}};
    write_text(rc.out_dir + "/metadata.json", meta.dump(2) + "\n");
    std::cout << "wrote " << ds.train.size() << "/" << ds.val.size() << "/" << ds.test.size()
              << " scenes to " << rc.out_dir << "\n";
    return kExitOk;
}

int run_train(const RunConfig& rc) {
    const StoredDataset ds = load_dataset(rc.train.dataset_dir);
    fs::create_directories(rc.out_dir);
    TrainResult result;
    try {
        result = train(ds.train, ds.val, ds.vocab, ds.n_entity_classes, rc.train.config);
    } catch (const DivergenceError& e) {
        write_trainlog(rc, e.partial_log);
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitNumerical;
    }
    save_checkpoint(rc.out_dir + "/checkpoint.json", result.model, rc.seed, rc.config_hash);
    write_trainlog(rc, result.log);
    std::cout << "trained " << rc.train.config.epochs << " epochs on " << ds.train.size()
              << " scenes\n";
    return kExitOk;
}

int run_eval(const RunConfig& rc) {
    const PredicateModel model = load_checkpoint(rc.eval.checkpoint);
    const StoredDataset ds = load_dataset(rc.eval.dataset_dir);
    if (!(model.vocab() == ds.vocab)) {
        std::cerr << "eval: checkpoint vocabulary does not match the dataset\n";
        return kExitConfig;
    }
    const std::vector<SceneGraph>* scenes = nullptr;
    if (rc.eval.split == "train") scenes = &ds.train;
    else if (rc.eval.split == "val") scenes = &ds.val;
    else if (rc.eval.split == "test") scenes = &ds.test;
    else {
        std::cerr << "eval: unknown split '" << rc.eval.split << "'\n";
        return kExitConfig;
    }

    std::vector<std::vector<RankedPrediction>> preds;
    preds.reserve(scenes->size());
    for (const auto& s : *scenes) preds.push_back(rank_triplets(model, s, rc.eval.config.limit));
    const EvalReport rep = evaluate_predictions(preds, *scenes, ds.vocab, rc.eval.config);

    fs::create_directories(rc.out_dir);
    write_predictions_jsonl(rc.out_dir + "/predictions.jsonl", preds);

    json j;
    j["seed"] = rc.seed;
    j["config_hash"] = rc.config_hash;
    j["recall_at_k"] = rep.recall_at_k;
    j["k"] = rc.eval.config.k;
    auto aps_json = [&](const std::vector<std::optional<double>>& aps) {
        json o = json::object();
        for (int c = 0; c < ds.vocab.size(); ++c) {
            if (c == ds.vocab.null_index) continue;
            const auto& a = aps[static_cast<std::size_t>(c)];
            o[ds.vocab.names[static_cast<std::size_t>(c)]] = a ? json(*a) : json();
        }
        return o;
    };
    j["ap_rel"] = aps_json(rep.ap_rel);
    j["ap_phr"] = aps_json(rep.ap_phr);
    j["map_rel"] = rep.map_rel;
    j["map_phr"] = rep.map_phr;
    j["wmap_rel"] = rep.wmap_rel;
    j["wmap_phr"] = rep.wmap_phr;
    j["score"] = rep.score;
    j["score_wtd"] = rep.score_wtd;
    write_text(rc.out_dir + "/report.json", j.dump(2) + "\n");

    std::string csv = csv_header_comment(rc);
    csv += "r_at_" + std::to_string(rc.eval.config.k) + ",wmap_rel,wmap_phr,score_wtd";
    for (int c = 0; c < ds.vocab.size(); ++c)
        if (c != ds.vocab.null_index)
            csv += ",ap_rel_" + ds.vocab.names[static_cast<std::size_t>(c)];
    csv += "\n" + fmt_double(rep.recall_at_k) + "," + fmt_double(rep.wmap_rel) + "," +
           fmt_double(rep.wmap_phr) + "," + fmt_double(rep.score_wtd);
    for (int c = 0; c < ds.vocab.size(); ++c) {
        if (c == ds.vocab.null_index) continue;
        const auto& a = rep.ap_rel[static_cast<std::size_t>(c)];
        csv += ",";
        csv += a ? fmt_double(*a) : "";
    }
    csv += "\n";
    write_text(rc.out_dir + "/report.csv", csv);
    std::cout << "score_wtd " << fmt_double(rep.score_wtd) << " on " << scenes->size()
              << " scenes\n";
    return kExitOk;
}

int run_gradcheck(const RunConfig& rc) {
    const GradCheckReport rep = grad_check(rc.gradcheck.config);
    fs::create_directories(rc.out_dir);
    json j;
    j["seed"] = rc.seed;
    j["config_hash"] = rc.config_hash;
    j["trials"] = rep.trials;
    j["max_rel_err"] = rep.max_rel_err;
    j["mean_rel_err"] = rep.mean_rel_err;
    j["n_coords"] = rep.n_coords;
    j["n_skipped_nonsmooth"] = rep.n_skipped_nonsmooth;
    json worst = json::array();
    for (const auto& w : rep.worst_per_block)
        worst.push_back({{"block", w.block},
                         {"index", w.index},
                         {"analytic", w.analytic},
                         {"numeric", w.numeric},
                         {"rel_err", w.rel_err}});
    j["worst_per_block"] = std::move(worst);
    write_text(rc.out_dir + "/gradcheck.json", j.dump(2) + "\n");
    std::cout << "gradcheck max_rel_err " << fmt_double(rep.max_rel_err) << " over "
              << rep.n_coords << " coords (" << rep.n_skipped_nonsmooth << " non-smooth skipped)\n";
    return rep.max_rel_err < rc.gradcheck.fail_threshold ? kExitOk : kExitNumerical;
}

AblationCellMetrics eval_by_kind(const PredicateModel& model,
                                 const std::vector<SceneGraph>& scenes,
                                 const std::vector<SceneKind>& kinds, const EvalConfig& cfg) {
    std::vector<std::vector<RankedPrediction>> preds;
    preds.reserve(scenes.size());
    for (const auto& s : scenes) preds.push_back(rank_triplets(model, s, cfg.limit));

    AblationCellMetrics m;
    const EvalReport all = evaluate_predictions(preds, scenes, model.vocab(), cfg);
    m.r_at_k = all.recall_at_k;
    m.wmap_rel = all.wmap_rel;
    m.wmap_phr = all.wmap_phr;
    m.score_wtd = all.score_wtd;

    for (SceneKind kind : {SceneKind::entity_confusion, SceneKind::proximal}) {
        std::vector<SceneGraph> sub_scenes;
        std::vector<std::vector<RankedPrediction>> sub_preds;
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            if (kinds[i] != kind) continue;
            sub_scenes.push_back(scenes[i]);
            sub_preds.push_back(preds[i]);
        }
        if (sub_scenes.empty()) continue;
        const EvalReport rep = evaluate_predictions(sub_preds, sub_scenes, model.vocab(), cfg);
        if (kind == SceneKind::entity_confusion)
            m.wmap_rel_confusion = rep.wmap_rel;
        else
            m.wmap_rel_proximal = rep.wmap_rel;
    }
    return m;
}

int run_ablate(const RunConfig& rc) {
    fs::create_directories(rc.out_dir);
    const LossConfig base_loss = rc.train.config.loss;

    for (const std::string& grid : rc.ablate.grids) {
        if (grid == "losses") {
            // the eight loss subsets, cross-entropy always on
            const int rows[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
                                    {1, 1, 0}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
            std::string csv = csv_header_comment(rc);
            csv += "seed,l1,l2,l3,r_at_k,wmap_rel,wmap_phr,score_wtd,wmap_rel_confusion,"
                   "wmap_rel_proximal\n";
            std::vector<AblationCellMetrics> sums(8);
            for (std::uint64_t seed : rc.ablate.seeds) {
                GenConfig gcfg = rc.gen;
                gcfg.seed = seed;
                const LabeledDataset ds = gen_dataset(gcfg);
                for (int r = 0; r < 8; ++r) {
                    TrainConfig tc = rc.train.config;
                    tc.seed = seed;
                    tc.eval_every = 0;
                    tc.loss.lambda1 = rows[r][0] ? base_loss.lambda1 : 0.0;
                    tc.loss.lambda2 = rows[r][1] ? base_loss.lambda2 : 0.0;
                    tc.loss.lambda3 = rows[r][2] ? base_loss.lambda3 : 0.0;
                    const TrainResult res =
                        train(ds.train, {}, ds.vocab, gcfg.n_entity_classes, tc);
                    const AblationCellMetrics m =
                        eval_by_kind(res.model, ds.test, ds.test_kinds, rc.eval.config);
                    csv += std::to_string(seed) + "," + std::to_string(rows[r][0]) + "," +
                           std::to_string(rows[r][1]) + "," + std::to_string(rows[r][2]) + "," +
                           fmt_double(m.r_at_k) + "," + fmt_double(m.wmap_rel) + "," +
                           fmt_double(m.wmap_phr) + "," + fmt_double(m.score_wtd) + "," +
                           fmt_double(m.wmap_rel_confusion) + "," +
                           fmt_double(m.wmap_rel_proximal) + "\n";
                    auto& s = sums[static_cast<std::size_t>(r)];
                    s.r_at_k += m.r_at_k;
                    s.wmap_rel += m.wmap_rel;
                    s.wmap_phr += m.wmap_phr;
                    s.score_wtd += m.score_wtd;
                    s.wmap_rel_confusion += m.wmap_rel_confusion;
                    s.wmap_rel_proximal += m.wmap_rel_proximal;
                }
            }
            const double n = static_cast<double>(rc.ablate.seeds.size());
            for (int r = 0; r < 8; ++r) {
                const auto& s = sums[static_cast<std::size_t>(r)];
                csv += "mean," + std::to_string(rows[r][0]) + "," + std::to_string(rows[r][1]) +
                       "," + std::to_string(rows[r][2]) + "," + fmt_double(s.r_at_k / n) + "," +
                       fmt_double(s.wmap_rel / n) + "," + fmt_double(s.wmap_phr / n) + "," +
                       fmt_double(s.score_wtd / n) + "," + fmt_double(s.wmap_rel_confusion / n) +
                       "," + fmt_double(s.wmap_rel_proximal / n) + "\n";
            }
            write_text(rc.out_dir + "/ablation_losses.csv", csv);
        } else if (grid == "margins") {
            std::string csv = csv_header_comment(rc);
            csv += "seed,m,r_at_k,wmap_rel,wmap_phr,score_wtd,active_hinges_init\n";
            std::vector<AblationCellMetrics> sums(rc.ablate.margins.size());
            std::vector<double> hinge_sums(rc.ablate.margins.size(), 0.0);
            for (std::uint64_t seed : rc.ablate.seeds) {
                GenConfig gcfg = rc.gen;
                gcfg.seed = seed;
                const LabeledDataset ds = gen_dataset(gcfg);
                for (std::size_t mi = 0; mi < rc.ablate.margins.size(); ++mi) {
                    const double margin = rc.ablate.margins[mi];
                    TrainConfig tc = rc.train.config;
                    tc.seed = seed;
                    tc.eval_every = 0;
                    tc.loss.alpha1 = tc.loss.alpha2 = tc.loss.alpha3 = margin;
                    const long hinges = count_active_hinges_at_init(ds.train, ds.vocab,
                                                                    gcfg.n_entity_classes, tc);
                    const TrainResult res =
                        train(ds.train, {}, ds.vocab, gcfg.n_entity_classes, tc);
                    const AblationCellMetrics m =
                        eval_by_kind(res.model, ds.test, ds.test_kinds, rc.eval.config);
                    csv += std::to_string(seed) + "," + fmt_double(margin) + "," +
                           fmt_double(m.r_at_k) + "," + fmt_double(m.wmap_rel) + "," +
                           fmt_double(m.wmap_phr) + "," + fmt_double(m.score_wtd) + "," +
                           std::to_string(hinges) + "\n";
                    auto& s = sums[mi];
                    s.r_at_k += m.r_at_k;
                    s.wmap_rel += m.wmap_rel;
                    s.wmap_phr += m.wmap_phr;
                    s.score_wtd += m.score_wtd;
                    hinge_sums[mi] += static_cast<double>(hinges);
                }
            }
            const double n = static_cast<double>(rc.ablate.seeds.size());
            for (std::size_t mi = 0; mi < rc.ablate.margins.size(); ++mi) {
                const auto& s = sums[mi];
                csv += "mean," + fmt_double(rc.ablate.margins[mi]) + "," +
                       fmt_double(s.r_at_k / n) + "," + fmt_double(s.wmap_rel / n) + "," +
                       fmt_double(s.wmap_phr / n) + "," + fmt_double(s.score_wtd / n) + "," +
                       fmt_double(hinge_sums[mi] / n) + "\n";
            }
            write_text(rc.out_dir + "/ablation_margins.csv", csv);
        } else {
            std::cerr << "ablate: unknown grid '" << grid << "'\n";
            return kExitConfig;
        }
    }
    return kExitOk;
}

}  // namespace sgrel::cmd
