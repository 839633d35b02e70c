// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/lsa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "masc/common/random.hpp"

namespace masc::lsa {

namespace {

Vec softmax_vec(const Vec& x) {
    double mx = x.maxCoeff();
    Vec e = (x.array() - mx).exp();
    return e / e.sum();
}

Vec minmax_norm(const Vec& raw) {
    double mn = raw.minCoeff();
    double mx = raw.maxCoeff();
    if (mx - mn == 0.0) return Vec::Ones(raw.size());
    return (raw.array() - mn) / (mx - mn);
}

}  // namespace

Vec significance_scores(const Mat& patches, const ScorerParams& sp) {
    if (patches.rows() < 1) throw std::invalid_argument("significance_scores: no patches");
    if (!patches.allFinite())
        throw std::invalid_argument("significance_scores: non-finite patch features");
    if (sp.w1.rows() != patches.cols())
        throw std::invalid_argument("significance_scores: scorer width mismatch");
    Mat h = ((patches * sp.w1).rowwise() + sp.b1.row(0)).array().tanh();
    Vec z = (h * sp.w2).rowwise().sum() + Vec::Constant(patches.rows(), sp.b2(0, 0));
    return z.unaryExpr([](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
    });
}

std::pair<Vec, Vec> attentive_scores(const Mat& patches, const Vec& text_global,
                                     const Vec& visual_global) {
    if (patches.cols() != text_global.size() || patches.cols() != visual_global.size())
        throw std::invalid_argument("attentive_scores: width mismatch");
    double d = static_cast<double>(patches.cols());
    Vec raw_l = (patches * text_global) / d;
    Vec raw_e = (patches * visual_global) / d;
    return {minmax_norm(raw_l), minmax_norm(raw_e)};
}

Vec fuse_scores(const Vec& p_s, const Vec& p_l, const Vec& p_e, double beta) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("fuse_scores: beta outside [0,1]");
    if (p_s.size() != p_l.size() || p_s.size() != p_e.size())
        throw std::invalid_argument("fuse_scores: size mismatch");
    auto in_unit = [](const Vec& v) { return v.minCoeff() >= 0.0 && v.maxCoeff() <= 1.0; };
    if (!in_unit(p_s) || !in_unit(p_l) || !in_unit(p_e))
        throw std::invalid_argument("fuse_scores: component outside [0,1]");
    return (1.0 - beta) * p_s + (beta / 2.0) * (p_l + p_e);
}

Mat sample_gumbel_noise(int n, std::uint64_t seed) {
    RandomStream rng(seed);
    Mat noise(n, 2);
    for (int i = 0; i < n; ++i) {
        noise(i, 0) = rng.gumbel();
        noise(i, 1) = rng.gumbel();
    }
    return noise;
}

DecisionMask gumbel_select_with_noise(const Vec& p_f, const GumbelConfig& cfg, const Mat& noise) {
    if (cfg.tau <= 0.0) throw std::invalid_argument("gumbel_select: tau must be positive");
    int n = static_cast<int>(p_f.size());
    if (noise.rows() != n || noise.cols() != 2)
        throw std::invalid_argument("gumbel_select: noise must be N x 2");
    DecisionMask mask;
    mask.tau = cfg.tau;
    mask.soft.resize(n, 2);
    mask.hard.resize(static_cast<std::size_t>(n));
    constexpr double kEps = 1e-6;
    constexpr double kLogFloor = 1e-10;
    for (int i = 0; i < n; ++i) {
        double m1 = std::clamp(p_f(i), kEps, 1.0 - kEps);
        double m2 = 1.0 - m1;
        Vec logits(2);
        if (cfg.form == GumbelForm::kLogOfSum) {
            logits(0) = std::log(std::max(m1 + noise(i, 0), kLogFloor)) / cfg.tau;
            logits(1) = std::log(std::max(m2 + noise(i, 1), kLogFloor)) / cfg.tau;
        } else {
            logits(0) = (std::log(std::max(m1, kLogFloor)) + noise(i, 0)) / cfg.tau;
            logits(1) = (std::log(std::max(m2, kLogFloor)) + noise(i, 1)) / cfg.tau;
        }
        Vec row = softmax_vec(logits);
        mask.soft.row(i) = row.transpose();
        mask.hard[static_cast<std::size_t>(i)] = row(0) >= row(1) ? 1 : 0;
    }
    return mask;
}

DecisionMask gumbel_select(const Vec& p_f, const GumbelConfig& cfg, std::uint64_t seed) {
    return gumbel_select_with_noise(p_f, cfg, sample_gumbel_noise(static_cast<int>(p_f.size()), seed));
}

std::pair<Mat, Mat> aggregate_patches(const Mat& selected, int n_f, const AggParams& ap) {
    int n_p = static_cast<int>(selected.rows());
    if (n_f < 1) throw std::invalid_argument("aggregate_patches: N_f must be at least 1");
    if (n_f >= n_p) throw std::invalid_argument("aggregate_patches: N_f must be below N_p");
    if (ap.w2.cols() < n_f) throw std::invalid_argument("aggregate_patches: head narrower than N_f");
    Mat h = ((selected * ap.w1).rowwise() + ap.b1.row(0)).array().tanh();
    Mat z = ((h * ap.w2).rowwise() + ap.b2.row(0)).leftCols(n_f);
    Mat w(n_p, n_f);
    for (int j = 0; j < n_f; ++j) w.col(j) = softmax_vec(z.col(j));
    Mat aggregated = w.transpose() * selected;
    return {aggregated, w};
}

FusedRedundant fuse_redundant(const Mat& patches, const Vec& p_f, const DecisionMask& mask) {
    int n = static_cast<int>(patches.rows());
    if (p_f.size() != n || static_cast<int>(mask.hard.size()) != n)
        throw std::invalid_argument("fuse_redundant: size mismatch");
    std::vector<int> red;
    for (int i = 0; i < n; ++i)
        if (mask.hard[static_cast<std::size_t>(i)] == 0) red.push_back(i);
    FusedRedundant out;
    if (red.empty()) {
        out.value = Vec::Zero(patches.cols());
        out.empty_set = true;
        return out;
    }
    Vec scores(static_cast<Eigen::Index>(red.size()));
    for (std::size_t k = 0; k < red.size(); ++k)
        scores(static_cast<Eigen::Index>(k)) = p_f(red[k]);
    Vec w = softmax_vec(scores);
    out.value = Vec::Zero(patches.cols());
    for (std::size_t k = 0; k < red.size(); ++k)
        out.value += w(static_cast<Eigen::Index>(k)) * patches.row(red[k]).transpose();
    return out;
}

Mat cosine_matrix(const Mat& a, const Mat& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("cosine_matrix: width mismatch");
    Vec na = a.rowwise().norm();
    Vec nb = b.rowwise().norm();
    Mat c(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            double den = na(i) * nb(j);
            c(i, j) = den == 0.0 ? 0.0 : a.row(i).dot(b.row(j)) / den;
        }
    }
    return c;
}

double alignment_score(const CalibratedPatches& calibrated, const TokenFeatures& tokens,
                       bool halve) {
    if (tokens.n() < 1) throw std::invalid_argument("alignment_score: no tokens");
    Mat rows(calibrated.aggregated.rows() + 2, calibrated.aggregated.cols());
    rows.row(0) = calibrated.cls.transpose();
    rows.middleRows(1, calibrated.aggregated.rows()) = calibrated.aggregated;
    rows.row(rows.rows() - 1) = calibrated.redundant_fused.transpose();
    Mat c = cosine_matrix(rows, tokens.tokens);
    double k = c.rowwise().maxCoeff().mean() + c.colwise().maxCoeff().mean();
    return halve ? 0.5 * k : k;
}

double alignment_loss(const AlignmentBatch& batch) {
    int b = static_cast<int>(batch.K.rows());
    if (batch.K.cols() != b) throw std::invalid_argument("alignment_loss: K must be square");
    if (b < 2) throw std::invalid_argument("alignment_loss: batch must contain at least 2 pairs");
    if (batch.gamma <= 0.0) throw std::invalid_argument("alignment_loss: margin must be positive");
    if (!batch.K.allFinite()) throw std::invalid_argument("alignment_loss: non-finite scores");
    double loss = 0.0;
    for (int i = 0; i < b; ++i) {
        double pos = batch.K(i, i);
        double hard_col = -std::numeric_limits<double>::infinity();
        double hard_row = hard_col;
        for (int j = 0; j < b; ++j) {
            if (j == i) continue;
            hard_col = std::max(hard_col, batch.K(i, j));
            hard_row = std::max(hard_row, batch.K(j, i));
        }
        loss += std::max(0.0, batch.gamma - pos + hard_col);
        loss += std::max(0.0, batch.gamma - pos + hard_row);
    }
    return loss;
}

void apply_min_keep(std::vector<int>& hard, const Vec& p_f, int min_keep) {
    int kept = 0;
    for (int h : hard) kept += h;
    if (kept >= min_keep) return;
    std::vector<int> dropped;
    for (int i = 0; i < static_cast<int>(hard.size()); ++i)
        if (hard[static_cast<std::size_t>(i)] == 0) dropped.push_back(i);
    std::stable_sort(dropped.begin(), dropped.end(),
                     [&](int a, int b) { return p_f(a) > p_f(b); });
    for (int i : dropped) {
        if (kept >= min_keep) break;
        hard[static_cast<std::size_t>(i)] = 1;
        ++kept;
    }
}

}  // namespace masc::lsa
