// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Data types for linguistic-aware semantic alignment: dynamic patch
// selection, semantic patch calibration, and patch-token alignment.

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace masc::lsa {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Visual features of one image: a global (cls) vector plus one row per patch.
struct PatchFeatures {
    Vec cls;
    Mat patches;  // N_v x d

    int n() const { return static_cast<int>(patches.rows()); }
    int dim() const { return static_cast<int>(patches.cols()); }
};

// Linguistic features of one sentence: one row per token plus a pooled
// sentence vector used as the text side of the attentive scores.
struct TokenFeatures {
    Mat tokens;  // N_s x d
    Vec global;

    int n() const { return static_cast<int>(tokens.rows()); }
    int dim() const { return static_cast<int>(tokens.cols()); }
};

// Per-patch value scores and their fusion.
struct ValueScores {
    Vec p_s;
    Vec p_l;
    Vec p_e;
    Vec p_f;
    double beta = 0.5;
};

// Which logits feed the two-category relaxed sampling.
enum class GumbelForm {
    kLogOfSum,        // softmax(log(m + G) / tau), the printed form
    kCanonicalLogits  // softmax((log m + G) / tau)
};

struct GumbelConfig {
    double tau = 1.0;
    GumbelForm form = GumbelForm::kLogOfSum;
};

// Relaxed and discrete selection decisions. hard[i] = 1 keeps patch i.
struct DecisionMask {
    Mat soft;               // N_v x 2, rows sum to 1
    std::vector<int> hard;  // N_v entries in {0,1}
    double tau = 1.0;
};

// Calibrated visual sequence: cls, N_f aggregated patches, one fused
// redundant patch. weights are the column-stochastic aggregation weights.
struct CalibratedPatches {
    Vec cls;
    Mat aggregated;      // N_f x d
    Vec redundant_fused; // d
    Mat weights;         // N_p x N_f
    bool redundant_empty = false;
};

// Pairwise alignment scores for a mini-batch; K(i, j) scores image i against
// sentence j, so the diagonal holds the positive pairs.
struct AlignmentBatch {
    Mat K;
    double gamma = 0.2;
};

// Two-layer feedforward scorer, R^d -> R^1, sigmoid applied by the op.
struct ScorerParams {
    Mat w1;  // d x h
    Mat b1;  // 1 x h
    Mat w2;  // h x 1
    Mat b2;  // 1 x 1
};

// Two-layer feedforward aggregator head, R^d -> R^{N_f_max}; ops use the
// leading N_f columns.
struct AggParams {
    Mat w1;  // d x h
    Mat b1;  // 1 x h
    Mat w2;  // h x N_f_max
    Mat b2;  // 1 x N_f_max
};

}  // namespace masc::lsa
