#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgrel/eval.hpp"
#include "sgrel/losses.hpp"
#include "sgrel/sampler.hpp"
#include "sgrel/synth.hpp"
#include "sgrel/trainer.hpp"

namespace sgrel {

struct TrainSettings {
    TrainConfig config;
    std::string dataset_dir = "out";
};

struct EvalSettings {
    EvalConfig config;
    std::string checkpoint = "out/checkpoint.json";
    std::string dataset_dir = "out";
    std::string split = "test";
};

struct GradCheckSettings {
    GradCheckConfig config;
    double fail_threshold = 1e-3;
};

struct AblateSettings {
    std::vector<std::string> grids = {"losses", "margins"};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> margins = {0.1, 0.2, 0.5, 1.0};
};

struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    GenConfig gen;
    TrainSettings train;
    EvalSettings eval;
    GradCheckSettings gradcheck;
    AblateSettings ablate;
    std::string config_hash;  // filled by load_run_config
};

// Complete default configuration, the documented schema.
nlohmann::json default_config_json();

// Defaults deep-merged with the user file; unknown keys are rejected.
nlohmann::json merge_config(const nlohmann::json& defaults, const nlohmann::json& user);

// Parses a merged configuration. seed_override / out_override, when set,
// replace the file's values (out_dir never enters the config hash).
RunConfig load_run_config(const nlohmann::json& merged, const std::uint64_t* seed_override,
                          const std::string* out_override);

RunConfig load_run_config_file(const std::string& path, const std::uint64_t* seed_override,
                               const std::string* out_override);

// FNV-1a over the canonical dump (out_dir excluded) plus the effective seed.
std::string config_hash_hex(nlohmann::json config, std::uint64_t seed);

// Shortest round-trip decimal form, shared by every CSV writer.
std::string fmt_double(double v);

}  // namespace sgrel
