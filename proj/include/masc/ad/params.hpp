// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Named parameter tensors with a per-tape binding session and an AdamW
// optimizer. One store can back several sub-networks; names are dotted
// paths such as "lsa.scorer.w1" or "model.enc0.wq".

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "masc/ad/tape.hpp"
#include "masc/common/random.hpp"

namespace masc::ad {

class ParamStore {
public:
    bool has(const std::string& name) const { return params_.count(name) != 0; }
    void add(const std::string& name, Mat value);
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;
    std::vector<std::string> names() const;
    std::size_t count() const { return params_.size(); }
    // Total number of scalar entries across all tensors.
    std::size_t scalar_count() const;

    std::map<std::string, Mat>& raw() { return params_; }
    const std::map<std::string, Mat>& raw() const { return params_; }

private:
    std::map<std::string, Mat> params_;
};

// Binds store tensors to leaves on one tape. Repeated lookups of a name
// return the same leaf so gradient contributions accumulate.
class ParamSession {
public:
    ParamSession(ParamStore& store, Tape& tape) : store_(&store), tape_(&tape) {}

    Tape& tape() { return *tape_; }

    Value operator[](const std::string& name);

    // Gradients of every bound parameter, collected after Tape::backward.
    std::map<std::string, Mat> grads() const;

private:
    ParamStore* store_;
    Tape* tape_;
    std::map<std::string, Value> bound_;
};

struct AdamWConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. Moment buffers are created on first
// sight of a parameter name.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

    void step(ParamStore& store, const std::map<std::string, Mat>& grads);

    const AdamWConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

    // Checkpoint access.
    std::int64_t t() const { return t_; }
    void set_t(std::int64_t t) { t_ = t; }
    std::map<std::string, Mat>& m() { return m_; }
    std::map<std::string, Mat>& v() { return v_; }

private:
    AdamWConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, Mat> m_;
    std::map<std::string, Mat> v_;
};

// Uniform Glorot initialization.
Mat xavier_uniform(int rows, int cols, RandomStream& rng);

}  // namespace masc::ad
