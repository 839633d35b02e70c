// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations of the alignment-module operations in plain
// Eigen. These define the numeric contracts; the differentiable network in
// network.hpp must agree with them value-for-value.

#pragma once

#include <cstdint>
#include <utility>

#include "masc/lsa/types.hpp"

namespace masc::lsa {

// Per-patch significance: sigmoid of a two-layer feedforward map.
Vec significance_scores(const Mat& patches, const ScorerParams& sp);

// Attentive scores against the sentence vector and the visual global vector,
// each min-max normalized over the N_v patches. A degenerate (all-equal)
// score vector maps to all ones.
std::pair<Vec, Vec> attentive_scores(const Mat& patches, const Vec& text_global,
                                     const Vec& visual_global);

// p_f = (1 - beta) p_s + (beta / 2)(p_l + p_e)
Vec fuse_scores(const Vec& p_s, const Vec& p_l, const Vec& p_e, double beta);

// N x 2 i.i.d. Gumbel draws, row i = (noise_keep, noise_drop).
Mat sample_gumbel_noise(int n, std::uint64_t seed);

// Two-category relaxed selection with explicit noise. Row i logits are
// (m_i, 1 - m_i) with m_i = p_f_i clamped to [1e-6, 1 - 1e-6]. hard is the
// row argmax with ties broken toward keeping.
DecisionMask gumbel_select_with_noise(const Vec& p_f, const GumbelConfig& cfg, const Mat& noise);
DecisionMask gumbel_select(const Vec& p_f, const GumbelConfig& cfg, std::uint64_t seed);

// Compresses N_p selected patch rows into N_f aggregated rows through a
// column-stochastic weight matrix. Returns (aggregated, weights).
std::pair<Mat, Mat> aggregate_patches(const Mat& selected, int n_f, const AggParams& ap);

struct FusedRedundant {
    Vec value;
    bool empty_set = false;
};

// Softmax of p_f over the patches the mask dropped, applied as convex
// weights over those patch rows. An empty set yields the zero vector with
// empty_set raised; callers append it regardless to keep sequence length.
FusedRedundant fuse_redundant(const Mat& patches, const Vec& p_f, const DecisionMask& mask);

// Max-correspondence alignment between the calibrated visual sequence and
// the sentence tokens: mean over rows of the row max plus mean over columns
// of the column max of the pairwise cosine matrix. halve applies the
// alternative 1/2 scaling.
double alignment_score(const CalibratedPatches& calibrated, const TokenFeatures& tokens,
                       bool halve = false);

// Bidirectional triplet loss with hardest-negative mining, summed over the
// batch.
double alignment_loss(const AlignmentBatch& batch);

// Pairwise cosine with the zero-norm-row convention (similarity 0).
Mat cosine_matrix(const Mat& a, const Mat& b);

// Forces at least min_keep kept patches, promoting the highest-p_f dropped
// patches (ties to the lower index). Shared by the reference and
// differentiable pipelines.
void apply_min_keep(std::vector<int>& hard, const Vec& p_f, int min_keep);

}  // namespace masc::lsa
