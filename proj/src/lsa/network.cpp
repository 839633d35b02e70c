// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/lsa/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "masc/common/hash.hpp"

namespace masc::lsa {

namespace {
constexpr double kProbEps = 1e-6;
constexpr double kLogFloor = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

int LsaConfig::n_f_for(int n_p) const {
    int n_f = (n_p + 1) / 2;
    n_f = std::min(n_f, std::min(n_f_max, n_p - 1));
    return std::max(n_f, 1);
}

LsaNetwork::LsaNetwork(LsaConfig cfg, std::string prefix)
    : cfg_(cfg), prefix_(std::move(prefix)) {
    if (cfg_.dim < 1 || cfg_.scorer_hidden < 1 || cfg_.agg_hidden < 1 || cfg_.n_f_max < 1)
        throw std::invalid_argument("LsaNetwork: dimensions must be positive");
    if (cfg_.beta < 0.0 || cfg_.beta > 1.0) throw std::invalid_argument("LsaNetwork: beta outside [0,1]");
    if (cfg_.tau <= 0.0) throw std::invalid_argument("LsaNetwork: tau must be positive");
    if (cfg_.gamma <= 0.0) throw std::invalid_argument("LsaNetwork: gamma must be positive");
    if (cfg_.min_keep < 2) throw std::invalid_argument("LsaNetwork: min_keep must be at least 2");
}

void LsaNetwork::init_params(ad::ParamStore& store, std::uint64_t seed) const {
    if (store.has(prefix_ + ".scorer.w1")) return;
    RandomStream rng(seed);
    store.add(prefix_ + ".scorer.w1", ad::xavier_uniform(cfg_.dim, cfg_.scorer_hidden, rng));
    store.add(prefix_ + ".scorer.b1", Mat::Zero(1, cfg_.scorer_hidden));
    store.add(prefix_ + ".scorer.w2", ad::xavier_uniform(cfg_.scorer_hidden, 1, rng));
    store.add(prefix_ + ".scorer.b2", Mat::Zero(1, 1));
    store.add(prefix_ + ".agg.w1", ad::xavier_uniform(cfg_.dim, cfg_.agg_hidden, rng));
    store.add(prefix_ + ".agg.b1", Mat::Zero(1, cfg_.agg_hidden));
    store.add(prefix_ + ".agg.w2", ad::xavier_uniform(cfg_.agg_hidden, cfg_.n_f_max, rng));
    store.add(prefix_ + ".agg.b2", Mat::Zero(1, cfg_.n_f_max));
}

std::vector<std::string> LsaNetwork::scorer_param_names() const {
    return {prefix_ + ".scorer.w1", prefix_ + ".scorer.b1", prefix_ + ".scorer.w2",
            prefix_ + ".scorer.b2"};
}

std::vector<std::string> LsaNetwork::param_names() const {
    std::vector<std::string> names = scorer_param_names();
    names.push_back(prefix_ + ".agg.w1");
    names.push_back(prefix_ + ".agg.b1");
    names.push_back(prefix_ + ".agg.w2");
    names.push_back(prefix_ + ".agg.b2");
    return names;
}

std::uint64_t LsaNetwork::pair_seed(std::uint64_t seed, std::size_t k) {
    return fnv1a64_combine(fnv1a64_combine(seed ^ 0x9e3779b97f4a7c15ull, "pair"),
                           std::to_string(k));
}

ScorerParams LsaNetwork::scorer_from(const ad::ParamStore& store) const {
    return {store.at(prefix_ + ".scorer.w1"), store.at(prefix_ + ".scorer.b1"),
            store.at(prefix_ + ".scorer.w2"), store.at(prefix_ + ".scorer.b2")};
}

AggParams LsaNetwork::agg_from(const ad::ParamStore& store) const {
    return {store.at(prefix_ + ".agg.w1"), store.at(prefix_ + ".agg.b1"),
            store.at(prefix_ + ".agg.w2"), store.at(prefix_ + ".agg.b2")};
}

ad::Value LsaNetwork::calibrate(ad::ParamSession& ps, const PairFeatures& pair,
                                std::uint64_t noise_seed, const PairDecisions* frozen,
                                PairDecisions* record) const {
    ad::Tape& t = ps.tape();
    const Mat& patches = pair.image.patches;
    int n_v = static_cast<int>(patches.rows());
    if (n_v < cfg_.min_keep)
        throw std::invalid_argument("calibrate: fewer patches than min_keep");
    if (static_cast<int>(patches.cols()) != cfg_.dim)
        throw std::invalid_argument("calibrate: feature width mismatch");
    if (!patches.allFinite()) throw std::invalid_argument("calibrate: non-finite patches");

    // significance scores
    ad::Value x = t.constant(patches);
    ad::Value h = tanh_v(add_rowvec(matmul(x, ps[prefix_ + ".scorer.w1"]),
                                    ps[prefix_ + ".scorer.b1"]));
    ad::Value z = add_rowvec(matmul(h, ps[prefix_ + ".scorer.w2"]), ps[prefix_ + ".scorer.b2"]);
    ad::Value p_s = sigmoid(z);  // N_v x 1

    // attentive scores carry no parameters; they enter as constants
    auto [p_l, p_e] = attentive_scores(patches, pair.text.global, pair.image.cls);
    Mat attentive_part = (cfg_.beta / 2.0) * (p_l + p_e);
    ad::Value p_f = add(scalar_mul(p_s, 1.0 - cfg_.beta), t.constant(attentive_part));

    // relaxed two-category selection
    Mat noise = frozen ? frozen->noise : sample_gumbel_noise(n_v, noise_seed);
    ad::Value m1 = clamp(p_f, kProbEps, 1.0 - kProbEps);
    ad::Value m2 = sub(t.constant(Mat::Ones(n_v, 1)), m1);
    ad::Value m = concat_cols(m1, m2);
    ad::Value logits;
    if (cfg_.gumbel_form == GumbelForm::kLogOfSum) {
        logits = scalar_mul(log_v(clamp(add_const(m, noise), kLogFloor, kInf)), 1.0 / cfg_.tau);
    } else {
        logits = scalar_mul(add_const(log_v(clamp(m, kLogFloor, kInf)), noise), 1.0 / cfg_.tau);
    }
    ad::Value soft = softmax_rows(logits);

    std::vector<int> hard;
    Vec soft_base;
    if (frozen) {
        hard = frozen->hard;
        soft_base = frozen->soft_keep;
    } else {
        hard.resize(static_cast<std::size_t>(n_v));
        for (int i = 0; i < n_v; ++i)
            hard[static_cast<std::size_t>(i)] = soft.val()(i, 0) >= soft.val()(i, 1) ? 1 : 0;
        apply_min_keep(hard, p_f.val().col(0), cfg_.min_keep);
        soft_base = soft.val().col(0);
    }
    if (record) {
        record->noise = noise;
        record->hard = hard;
        record->soft_keep = soft_base;
    }

    // straight-through: forward carries the hard decision, backward the soft
    Mat shift(n_v, 1);
    for (int i = 0; i < n_v; ++i)
        shift(i, 0) = static_cast<double>(hard[static_cast<std::size_t>(i)]) - soft_base(i);
    ad::Value st = add_const(slice_cols(soft, 0, 1), shift);  // N_v x 1

    std::vector<int> kept, red;
    for (int i = 0; i < n_v; ++i)
        (hard[static_cast<std::size_t>(i)] == 1 ? kept : red).push_back(i);
    int n_p = static_cast<int>(kept.size());
    int n_f = cfg_.n_f_for(n_p);

    // aggregation over kept patches, scaled by the straight-through gate
    Mat kept_rows(n_p, cfg_.dim);
    for (int k = 0; k < n_p; ++k) kept_rows.row(k) = patches.row(kept[static_cast<std::size_t>(k)]);
    ad::Value vp = mul_colvec(t.constant(kept_rows), gather_rows(st, kept));
    ad::Value h2 = tanh_v(add_rowvec(matmul(vp, ps[prefix_ + ".agg.w1"]), ps[prefix_ + ".agg.b1"]));
    ad::Value z2 = add_rowvec(matmul(h2, ps[prefix_ + ".agg.w2"]), ps[prefix_ + ".agg.b2"]);
    ad::Value w = softmax_cols(slice_cols(z2, 0, n_f));
    ad::Value aggregated = matmul(transpose(w), vp);  // n_f x d

    // redundant fusion; the empty set contributes a detached zero row
    ad::Value red_row;
    if (red.empty()) {
        red_row = t.constant(Mat::Zero(1, cfg_.dim));
    } else {
        Mat red_rows(static_cast<Eigen::Index>(red.size()), cfg_.dim);
        for (std::size_t k = 0; k < red.size(); ++k)
            red_rows.row(static_cast<Eigen::Index>(k)) = patches.row(red[k]);
        ad::Value w_red = softmax_cols(gather_rows(p_f, red));
        red_row = matmul(transpose(w_red), t.constant(red_rows));
    }

    ad::Value cls = t.constant(pair.image.cls.transpose());
    return concat_rows(concat_rows(cls, aggregated), red_row);
}

ad::Value LsaNetwork::score(ad::ParamSession& ps, ad::Value calibrated, const Mat& tokens) const {
    ad::Tape& t = ps.tape();
    if (tokens.rows() < 1) throw std::invalid_argument("score: no tokens");
    ad::Value a = cosine_rows(calibrated, t.constant(tokens));
    ad::Value k = add(mean_all(rowwise_max(a)), mean_all(colwise_max(a)));
    return cfg_.halve_alignment ? scalar_mul(k, 0.5) : k;
}

ad::Value LsaNetwork::batch_loss(ad::ParamSession& ps, const std::vector<PairFeatures>& pairs,
                                 std::uint64_t seed,
                                 const std::vector<PairDecisions>* frozen,
                                 std::vector<PairDecisions>* record) const {
    ad::Tape& t = ps.tape();
    std::size_t b = pairs.size();
    if (b < 2) throw std::invalid_argument("batch_loss: at least 2 pairs required");
    if (frozen && frozen->size() != b)
        throw std::invalid_argument("batch_loss: frozen decisions do not match batch");
    if (record) record->resize(b);

    std::vector<ad::Value> calib(b);
    for (std::size_t i = 0; i < b; ++i) {
        calib[i] = calibrate(ps, pairs[i], pair_seed(seed, i),
                             frozen ? &(*frozen)[i] : nullptr,
                             record ? &(*record)[i] : nullptr);
    }

    std::vector<std::vector<ad::Value>> k(b, std::vector<ad::Value>(b));
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < b; ++j)
            k[i][j] = score(ps, calib[i], pairs[j].text.tokens);

    ad::Value loss = t.constant(Mat::Zero(1, 1));
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t hard_col = i == 0 ? 1 : 0;
        std::size_t hard_row = hard_col;
        for (std::size_t j = 0; j < b; ++j) {
            if (j == i) continue;
            if (k[i][j].scalar() > k[i][hard_col].scalar()) hard_col = j;
            if (k[j][i].scalar() > k[hard_row][i].scalar()) hard_row = j;
        }
        ad::Value pos = k[i][i];
        loss = add(loss, relu(scalar_add(sub(k[i][hard_col], pos), cfg_.gamma)));
        loss = add(loss, relu(scalar_add(sub(k[hard_row][i], pos), cfg_.gamma)));
    }
    return loss;
}

LsaNetwork::Reference LsaNetwork::run_reference(const ad::ParamStore& store,
                                                const PairFeatures& pair,
                                                std::uint64_t noise_seed) const {
    const Mat& patches = pair.image.patches;
    int n_v = static_cast<int>(patches.rows());
    if (n_v < cfg_.min_keep)
        throw std::invalid_argument("run_reference: fewer patches than min_keep");

    Reference out;
    out.scores.beta = cfg_.beta;
    out.scores.p_s = significance_scores(patches, scorer_from(store));
    std::tie(out.scores.p_l, out.scores.p_e) =
        attentive_scores(patches, pair.text.global, pair.image.cls);
    out.scores.p_f = fuse_scores(out.scores.p_s, out.scores.p_l, out.scores.p_e, cfg_.beta);

    GumbelConfig gc{cfg_.tau, cfg_.gumbel_form};
    Mat noise = sample_gumbel_noise(n_v, noise_seed);
    out.mask = gumbel_select_with_noise(out.scores.p_f, gc, noise);
    apply_min_keep(out.mask.hard, out.scores.p_f, cfg_.min_keep);

    std::vector<int> kept;
    for (int i = 0; i < n_v; ++i)
        if (out.mask.hard[static_cast<std::size_t>(i)] == 1) kept.push_back(i);
    Mat kept_rows(static_cast<Eigen::Index>(kept.size()), patches.cols());
    for (std::size_t k = 0; k < kept.size(); ++k)
        kept_rows.row(static_cast<Eigen::Index>(k)) = patches.row(kept[k]);

    int n_f = cfg_.n_f_for(static_cast<int>(kept.size()));
    std::tie(out.calibrated.aggregated, out.calibrated.weights) =
        aggregate_patches(kept_rows, n_f, agg_from(store));
    FusedRedundant fused = fuse_redundant(patches, out.scores.p_f, out.mask);
    out.calibrated.cls = pair.image.cls;
    out.calibrated.redundant_fused = fused.value;
    out.calibrated.redundant_empty = fused.empty_set;
    return out;
}

}  // namespace masc::lsa
