// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable alignment pipeline: score fusion, relaxed patch selection
// with a straight-through estimator, aggregation, redundant fusion, and the
// bidirectional triplet loss over a mini-batch. Forward values agree with
// the plain ops in ops.hpp; gradients flow through the soft relaxation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "masc/ad/params.hpp"
#include "masc/ad/tape.hpp"
#include "masc/lsa/ops.hpp"
#include "masc/lsa/types.hpp"

namespace masc::lsa {

struct LsaConfig {
    int dim = 8;
    int scorer_hidden = 16;
    int agg_hidden = 16;
    int n_f_max = 8;     // width of the aggregation head
    double beta = 0.5;
    double tau = 1.0;
    double gamma = 0.2;
    GumbelForm gumbel_form = GumbelForm::kLogOfSum;
    bool halve_alignment = false;
    // Selection must leave enough patches for aggregation to compress.
    int min_keep = 2;

    // N_f = ceil(N_p / 2), clamped to [1, min(n_f_max, N_p - 1)].
    int n_f_for(int n_p) const;
};

struct PairFeatures {
    PatchFeatures image;
    TokenFeatures text;
};

// Noise and discrete decisions of one selection pass. Replaying them turns
// the pipeline into a smooth function of the parameters with the straight-
// through values held at their recorded operating point, which is the map a
// finite-difference check of the estimator's gradient must probe.
struct PairDecisions {
    Mat noise;             // N_v x 2
    std::vector<int> hard;
    Vec soft_keep;         // soft column 0 at decision time
};

class LsaNetwork {
public:
    explicit LsaNetwork(LsaConfig cfg, std::string prefix = "lsa");

    const LsaConfig& config() const { return cfg_; }

    // Registers parameter tensors under the prefix; no-op when present.
    void init_params(ad::ParamStore& store, std::uint64_t seed) const;

    // Calibrated visual sequence for one pair: (N_f + 2) x d. Fresh noise
    // and decisions come from noise_seed unless frozen replays earlier ones;
    // record, when given, captures what was used.
    ad::Value calibrate(ad::ParamSession& ps, const PairFeatures& pair,
                        std::uint64_t noise_seed, const PairDecisions* frozen = nullptr,
                        PairDecisions* record = nullptr) const;

    // Max-correspondence score between a calibrated sequence and tokens.
    ad::Value score(ad::ParamSession& ps, ad::Value calibrated, const Mat& tokens) const;

    // Triplet loss with hardest negatives over B >= 2 pairs, summed.
    ad::Value batch_loss(ad::ParamSession& ps, const std::vector<PairFeatures>& pairs,
                         std::uint64_t seed,
                         const std::vector<PairDecisions>* frozen = nullptr,
                         std::vector<PairDecisions>* record = nullptr) const;

    // Reference pipeline through the plain ops with the same noise path.
    struct Reference {
        ValueScores scores;
        DecisionMask mask;
        CalibratedPatches calibrated;
    };
    Reference run_reference(const ad::ParamStore& store, const PairFeatures& pair,
                            std::uint64_t noise_seed) const;

    std::vector<std::string> scorer_param_names() const;
    std::vector<std::string> param_names() const;

    // Noise seed for pair k of a batch seeded with seed.
    static std::uint64_t pair_seed(std::uint64_t seed, std::size_t k);

private:
    ScorerParams scorer_from(const ad::ParamStore& store) const;
    AggParams agg_from(const ad::ParamStore& store) const;

    LsaConfig cfg_;
    std::string prefix_;
};

}  // namespace masc::lsa
