#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sgrel/scene_graph.hpp"

namespace sgrel {

// Probability vector over predicate classes, the null class included.
struct PredicateDistribution {
    std::vector<double> probs;

    void validate() const {
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw std::invalid_argument("PredicateDistribution: negative or non-finite entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("PredicateDistribution: probabilities do not sum to 1");
    }
};

// Probability that the pair is related at all: one minus the null-class mass,
// i.e. the total mass of the real predicate classes.
inline double affinity(const PredicateDistribution& d, const PredicateVocabulary& vocab) {
    return 1.0 - d.probs.at(static_cast<std::size_t>(vocab.null_index));
}

inline double affinity_from_probs(const std::vector<double>& probs, int null_index) {
    return 1.0 - probs[static_cast<std::size_t>(null_index)];
}

}  // namespace sgrel
