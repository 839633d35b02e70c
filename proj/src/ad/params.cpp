// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/ad/params.hpp"

#include <cmath>
#include <stdexcept>

namespace masc::ad {

void ParamStore::add(const std::string& name, Mat value) {
    if (has(name)) throw std::invalid_argument("parameter already defined: " + name);
    params_.emplace(name, std::move(value));
}

Mat& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

const Mat& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [k, v] : params_) out.push_back(k);
    return out;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : params_) n += static_cast<std::size_t>(v.size());
    return n;
}

Value ParamSession::operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Value v = tape_->leaf(store_->at(name));
    bound_.emplace(name, v);
    return v;
}

std::map<std::string, Mat> ParamSession::grads() const {
    std::map<std::string, Mat> out;
    for (const auto& [name, v] : bound_) out.emplace(name, tape_->grad(v));
    return out;
}

void AdamW::step(ParamStore& store, const std::map<std::string, Mat>& grads) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& [name, g] : grads) {
        Mat& p = store.at(name);
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw std::invalid_argument("gradient shape mismatch for " + name);
        auto mi = m_.find(name);
        if (mi == m_.end()) mi = m_.emplace(name, Mat::Zero(p.rows(), p.cols())).first;
        auto vi = v_.find(name);
        if (vi == v_.end()) vi = v_.emplace(name, Mat::Zero(p.rows(), p.cols())).first;
        Mat& m = mi->second;
        Mat& v = vi->second;
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
        Mat mhat = m / bc1;
        Mat vhat = v / bc2;
        Mat update = mhat.array() / (vhat.array().sqrt() + cfg_.eps);
        p -= cfg_.lr * (update + cfg_.weight_decay * p);
    }
}

Mat xavier_uniform(int rows, int cols, RandomStream& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform_in(-limit, limit);
    return m;
}

}  // namespace masc::ad
