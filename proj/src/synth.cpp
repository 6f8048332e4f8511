#include "sgrel/synth.hpp"

#include <algorithm>
#include <cmath>

namespace sgrel {

std::string to_string(ConfusionMode m) {
    switch (m) {
        case ConfusionMode::entity_instance: return "entity-instance";
        case ConfusionMode::proximal_pairs: return "proximal-pairs";
        case ConfusionMode::mixed: return "mixed";
    }
    return "mixed";
}

ConfusionMode confusion_mode_from_string(const std::string& s) {
    if (s == "entity-instance") return ConfusionMode::entity_instance;
    if (s == "proximal-pairs") return ConfusionMode::proximal_pairs;
    if (s == "mixed") return ConfusionMode::mixed;
    throw std::invalid_argument("unknown confusion_mode: " + s);
}

namespace {

constexpr double kImageSide = 1000.0;
constexpr double kBoxMin = 50.0;
constexpr double kBoxMax = 200.0;
constexpr double kProtoScale = 0.5;
constexpr double kNoiseSigma = 0.1;
constexpr int kPatternChannels = 4;

int cue_channel(int d_app) { return d_app - 1; }
int pattern_channel(int d_app, int pair_index) {
    return d_app - 1 - kPatternChannels + (pair_index % kPatternChannels);
}
int n_proto_channels(int d_app) { return d_app - 1 - kPatternChannels; }

// Class prototype, derived from the dataset seed alone so every scene of a
// dataset shares it. Cue and pattern channels stay zero.
std::vector<double> class_prototype(std::uint64_t seed, int entity_class, int d_app) {
    Rng rng(derive_seed(seed, 0x70726f74ULL, static_cast<std::uint64_t>(entity_class)));
    std::vector<double> v(static_cast<std::size_t>(d_app), 0.0);
    for (int i = 0; i < n_proto_channels(d_app); ++i)
        v[static_cast<std::size_t>(i)] = kProtoScale * rng.normal();
    return v;
}

void add_proto_noise(std::vector<double>& v, int d_app, Rng& rng) {
    for (int i = 0; i < n_proto_channels(d_app); ++i)
        v[static_cast<std::size_t>(i)] += kNoiseSigma * rng.normal();
}

// Box of the given size with its center clamped so the box stays inside the
// image.
Box box_at(double cx, double cy, double w, double h) {
    double x = cx - 0.5 * w;
    double y = cy - 0.5 * h;
    x = std::clamp(x, 0.0, kImageSide - w);
    y = std::clamp(y, 0.0, kImageSide - h);
    return Box(x, y, w, h);
}

double rand_box_side(Rng& rng) { return rng.range(kBoxMin, kBoxMax); }

}  // namespace

SceneGraph gen_entity_confusion_scene(const GenConfig& cfg, Rng& rng) {
    cfg.validate();
    SceneGraph s;
    s.image_size = ImageSize(kImageSide, kImageSide);

    const int subject_class = rng.uniform_int(0, cfg.n_entity_classes - 1);
    int object_class = rng.uniform_int(0, cfg.n_entity_classes - 2);
    if (object_class >= subject_class) object_class++;
    const int predicate = rng.uniform_int(0, cfg.n_predicate_classes - 1);
    const int n_dup = cfg.n_duplicate_instances;
    const int true_index = rng.uniform_int(0, n_dup - 1);

    const double scx = rng.range(250.0, kImageSide - 250.0);
    const double scy = rng.range(250.0, kImageSide - 250.0);

    EntityInstance subject;
    subject.id = 0;
    subject.box = box_at(scx, scy, rand_box_side(rng), rand_box_side(rng));
    subject.entity_class = subject_class;
    subject.det_confidence = rng.range(0.8, 1.0);
    subject.appearance = class_prototype(cfg.seed, subject_class, cfg.d_app);
    add_proto_noise(subject.appearance, cfg.d_app, rng);
    s.entities.push_back(subject);

    // duplicates share one appearance vector and crowd around the subject
    std::vector<double> shared = class_prototype(cfg.seed, object_class, cfg.d_app);
    add_proto_noise(shared, cfg.d_app, rng);
    const double dup_w = rand_box_side(rng);
    const double dup_h = rand_box_side(rng);
    for (int i = 0; i < n_dup; ++i) {
        EntityInstance obj;
        obj.id = 1 + i;
        const double angle = rng.range(0.0, 6.283185307179586);
        const double dist = rng.range(40.0, 120.0) + rng.range(-cfg.proximity_jitter,
                                                               cfg.proximity_jitter);
        obj.box = box_at(scx + dist * std::cos(angle), scy + dist * std::sin(angle), dup_w, dup_h);
        obj.entity_class = object_class;
        obj.det_confidence = rng.range(0.8, 1.0);
        obj.appearance = shared;
        if (i == true_index)
            obj.appearance[static_cast<std::size_t>(cue_channel(cfg.d_app))] += cfg.cue_strength;
        s.entities.push_back(obj);
    }
    s.positive_pairs.push_back({0, 1 + true_index, predicate});
    s.validate();
    return s;
}

SceneGraph gen_proximal_ambiguity_scene(const GenConfig& cfg, Rng& rng) {
    cfg.validate();
    SceneGraph s;
    s.image_size = ImageSize(kImageSide, kImageSide);

    const int k = cfg.n_duplicate_instances;
    const int subject_class = rng.uniform_int(0, cfg.n_entity_classes - 1);
    int object_class = rng.uniform_int(0, cfg.n_entity_classes - 2);
    if (object_class >= subject_class) object_class++;
    const int predicate = rng.uniform_int(0, cfg.n_predicate_classes - 1);

    const double radius = rng.range(140.0, 220.0);
    const double ccx = rng.range(radius + 120.0, kImageSide - radius - 120.0);
    const double ccy = rng.range(radius + 120.0, kImageSide - radius - 120.0);
    const double phase = rng.range(0.0, 6.283185307179586);

    auto jitter = [&]() { return rng.range(-cfg.proximity_jitter, cfg.proximity_jitter); };

    // subjects and objects interleaved on a circle; matching is a random
    // permutation so geometry says nothing about who pairs with whom
    std::vector<int> perm(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);

    for (int t = 0; t < k; ++t) {
        const double a = phase + 6.283185307179586 * t / k;
        EntityInstance subject;
        subject.id = t;
        subject.box = box_at(ccx + radius * std::cos(a) + jitter(),
                             ccy + radius * std::sin(a) + jitter(), rand_box_side(rng),
                             rand_box_side(rng));
        subject.entity_class = subject_class;
        subject.det_confidence = rng.range(0.8, 1.0);
        subject.appearance = class_prototype(cfg.seed, subject_class, cfg.d_app);
        add_proto_noise(subject.appearance, cfg.d_app, rng);
        subject.appearance[static_cast<std::size_t>(pattern_channel(cfg.d_app, t))] +=
            cfg.cue_strength;
        s.entities.push_back(subject);
    }
    for (int u = 0; u < k; ++u) {
        const double a = phase + 6.283185307179586 * (u + 0.5) / k;
        EntityInstance obj;
        obj.id = k + u;
        obj.box = box_at(ccx + radius * std::cos(a) + jitter(),
                         ccy + radius * std::sin(a) + jitter(), rand_box_side(rng),
                         rand_box_side(rng));
        obj.entity_class = object_class;
        obj.det_confidence = rng.range(0.8, 1.0);
        obj.appearance = class_prototype(cfg.seed, object_class, cfg.d_app);
        add_proto_noise(obj.appearance, cfg.d_app, rng);
        s.entities.push_back(obj);
    }
    for (int t = 0; t < k; ++t) {
        const int obj_index = perm[static_cast<std::size_t>(t)];
        s.entities[static_cast<std::size_t>(k + obj_index)]
            .appearance[static_cast<std::size_t>(pattern_channel(cfg.d_app, t))] +=
            cfg.cue_strength;
        s.positive_pairs.push_back({t, k + obj_index, predicate});
    }
    s.validate();
    return s;
}

LabeledDataset gen_dataset(const GenConfig& cfg) {
    cfg.validate();
    LabeledDataset ds;
    ds.config = cfg;
    ds.vocab = PredicateVocabulary::numbered(cfg.n_predicate_classes);

    const int n = cfg.n_scenes;
    const int n_train = static_cast<int>(std::floor(0.70 * n));
    const int n_val = static_cast<int>(std::floor(0.15 * n));

    for (int i = 0; i < n; ++i) {
        SceneKind kind;
        switch (cfg.confusion_mode) {
            case ConfusionMode::entity_instance: kind = SceneKind::entity_confusion; break;
            case ConfusionMode::proximal_pairs: kind = SceneKind::proximal; break;
            default: kind = (i % 2 == 0) ? SceneKind::entity_confusion : SceneKind::proximal;
        }
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i), 0x7363656eULL));
        SceneGraph scene = kind == SceneKind::entity_confusion
                               ? gen_entity_confusion_scene(cfg, rng)
                               : gen_proximal_ambiguity_scene(cfg, rng);
        if (i < n_train) {
            ds.train.push_back(std::move(scene));
            ds.train_kinds.push_back(kind);
        } else if (i < n_train + n_val) {
            ds.val.push_back(std::move(scene));
            ds.val_kinds.push_back(kind);
        } else {
            ds.test.push_back(std::move(scene));
            ds.test_kinds.push_back(kind);
        }
    }
    return ds;
}

SceneGraph random_scene(Rng& rng, const RandomSceneOpts& opts) {
    SceneGraph s;
    s.image_size = ImageSize(kImageSide, kImageSide);
    const int n = rng.uniform_int(opts.min_entities, opts.max_entities);
    for (int i = 0; i < n; ++i) {
        EntityInstance e;
        e.id = i;
        const double w = rng.range(kBoxMin, 300.0);
        const double h = rng.range(kBoxMin, 300.0);
        e.box = Box(rng.range(0.0, kImageSide - w), rng.range(0.0, kImageSide - h), w, h);
        e.entity_class = rng.uniform_int(0, opts.n_entity_classes - 1);
        e.det_confidence = rng.range(0.5, 1.0);
        if (opts.d_app > 0) {
            e.appearance.resize(static_cast<std::size_t>(opts.d_app));
            for (auto& v : e.appearance) v = 0.6 * rng.normal();
        }
        s.entities.push_back(std::move(e));
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && rng.bernoulli(opts.edge_prob))
                s.positive_pairs.push_back({i, j, rng.uniform_int(0, opts.n_predicate_classes - 1)});
    if (s.positive_pairs.empty()) {
        const int i = rng.uniform_int(0, n - 1);
        int j = rng.uniform_int(0, n - 2);
        if (j >= i) j++;
        s.positive_pairs.push_back({i, j, rng.uniform_int(0, opts.n_predicate_classes - 1)});
    }
    s.validate();
    return s;
}

}  // namespace sgrel
