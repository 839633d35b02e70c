// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Eager reverse-mode automatic differentiation over Eigen matrices.
// Values are computed as ops are applied; backward() replays the tape in
// reverse creation order. Graphs are built per step and discarded.

#pragma once

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <vector>

namespace masc::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Lightweight handle to a tape node.
class Value {
public:
    Value() = default;

    bool defined() const { return tape_ != nullptr; }
    const Mat& val() const;
    Eigen::Index rows() const { return val().rows(); }
    Eigen::Index cols() const { return val().cols(); }
    double scalar() const { return val()(0, 0); }

    Tape* tape() const { return tape_; }
    int id() const { return idx_; }

private:
    friend class Tape;
    Value(Tape* t, int i) : tape_(t), idx_(i) {}
    Tape* tape_ = nullptr;
    int idx_ = -1;
};

class Tape {
public:
    // Node the gradient will not flow behind.
    Value constant(Mat v);
    // Differentiable input (parameter or feature requiring gradient).
    Value leaf(Mat v);

    // Seeds d(root)/d(root) = 1 and runs the tape backward. root must be 1x1.
    void backward(const Value& root);

    const Mat& val(const Value& v) const;
    // Gradient accumulated for v (zeros if the node was never reached).
    Mat grad(const Value& v) const;

    std::size_t size() const { return nodes_.size(); }

    // --- internals used by the op builders ---
    struct Node {
        Mat value;
        Mat grad;  // lazily allocated
        bool requires_grad = false;
        std::function<void(Tape&)> backprop;
    };

    Value emit(Mat value, bool requires_grad, std::function<void(Tape&)> bp);
    Node& node(int i) { return nodes_[static_cast<std::size_t>(i)]; }
    const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    Mat& grad_buf(int i);
    // Accumulates g into node i's gradient when that node wants gradient.
    void accum(int i, const Mat& g);

private:
    std::deque<Node> nodes_;
};

// ---- op builders -----------------------------------------------------------

Value add(Value a, Value b);              // same shape
Value add_const(Value a, const Mat& c);   // value-only shift, identity backward
Value scalar_add(Value a, double s);
Value sub(Value a, Value b);
Value neg(Value a);
Value mul(Value a, Value b);              // elementwise
Value scalar_mul(Value a, double s);
Value div(Value a, Value b);              // elementwise
Value matmul(Value a, Value b);
Value transpose(Value a);
Value sigmoid(Value a);
Value tanh_v(Value a);
Value relu(Value a);
Value exp_v(Value a);
Value log_v(Value a);
Value sqrt_v(Value a);
Value square(Value a);
Value clamp(Value a, double lo, double hi);  // gradient passes where lo < x < hi (and at x==lo/hi)
Value softmax_rows(Value a);
Value softmax_cols(Value a);
Value sum_all(Value a);    // 1x1
Value mean_all(Value a);   // 1x1
Value rowwise_sum(Value a);   // n x 1
Value rowwise_mean(Value a);  // n x 1
Value rowwise_max(Value a);   // n x 1, subgradient to first argmax
Value colwise_max(Value a);   // 1 x m, subgradient to first argmax
Value concat_rows(Value a, Value b);
Value concat_cols(Value a, Value b);
Value slice_rows(Value a, int r0, int n);
Value slice_cols(Value a, int c0, int n);
Value gather_rows(Value a, std::vector<int> idx);
// Per-row negative log-likelihood of targets under softmax(logits): n x 1.
Value cross_entropy_rows(Value logits, std::vector<int> targets);

// ---- composites (no custom backward) ---------------------------------------

// a (n x m) + bias (1 x m), broadcast down rows
Value add_rowvec(Value a, Value bias);
// scale rows of a (n x m) by column vector s (n x 1)
Value mul_colvec(Value a, Value s);
Value div_colvec(Value a, Value s);
// x / sqrt(mean(x^2) + eps) * gain, gain is 1 x m
Value rms_norm(Value x, Value gain, double eps = 1e-8);
// pairwise cosine similarity between rows of a (n x d) and rows of b (m x d);
// zero rows yield similarity 0 via a tiny norm floor
Value cosine_rows(Value a, Value b, double eps2 = 1e-24);

}  // namespace masc::ad
