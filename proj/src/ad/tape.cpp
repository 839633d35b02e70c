// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/ad/tape.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace masc::ad {

const Mat& Value::val() const {
    return tape_->node(idx_).value;
}

Value Tape::constant(Mat v) {
    return emit(std::move(v), false, nullptr);
}

Value Tape::leaf(Mat v) {
    return emit(std::move(v), true, nullptr);
}

Value Tape::emit(Mat value, bool requires_grad, std::function<void(Tape&)> bp) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(bp);
    nodes_.push_back(std::move(n));
    return Value(this, static_cast<int>(nodes_.size()) - 1);
}

Mat& Tape::grad_buf(int i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accum(int i, const Mat& g) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad) return;
    grad_buf(i) += g;
}

void Tape::backward(const Value& root) {
    if (root.tape() != this) throw std::invalid_argument("backward: value from another tape");
    const Node& r = node(root.id());
    if (r.value.rows() != 1 || r.value.cols() != 1)
        throw std::invalid_argument("backward: root must be a 1x1 scalar");
    if (!r.requires_grad) return;
    grad_buf(root.id())(0, 0) += 1.0;
    for (int i = root.id(); i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.requires_grad || !n.backprop || n.grad.size() == 0) continue;
        n.backprop(*this);
    }
}

const Mat& Tape::val(const Value& v) const {
    return node(v.id()).value;
}

Mat Tape::grad(const Value& v) const {
    const Node& n = node(v.id());
    if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

namespace {

Tape& tape_of(const Value& a) {
    if (!a.defined()) throw std::invalid_argument("op on default-constructed value");
    return *a.tape();
}

void check_same_tape(const Value& a, const Value& b) {
    if (a.tape() != b.tape()) throw std::invalid_argument("op on values from different tapes");
}

void check_same_shape(const Value& a, const Value& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

bool needs_grad(Tape& t, const Value& a) { return t.node(a.id()).requires_grad; }

}  // namespace

Value add(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    check_same_shape(a, b, "add");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Value out = t.emit(a.val() + b.val(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        tp.accum(ai, g);
        tp.accum(bi, g);
    };
    return out;
}

Value add_const(Value a, const Mat& c) {
    Tape& t = tape_of(a);
    if (a.rows() != c.rows() || a.cols() != c.cols())
        throw std::invalid_argument("add_const: shape mismatch");
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val() + c, rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) { tp.accum(ai, tp.node(oi).grad); };
    return out;
}

Value scalar_add(Value a, double s) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array() + s, rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) { tp.accum(ai, tp.node(oi).grad); };
    return out;
}

Value sub(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    check_same_shape(a, b, "sub");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Value out = t.emit(a.val() - b.val(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        tp.accum(ai, g);
        tp.accum(bi, -g);
    };
    return out;
}

Value neg(Value a) { return scalar_mul(a, -1.0); }

Value mul(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    check_same_shape(a, b, "mul");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Value out = t.emit(a.val().cwiseProduct(b.val()), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        tp.accum(ai, g.cwiseProduct(tp.node(bi).value));
        tp.accum(bi, g.cwiseProduct(tp.node(ai).value));
    };
    return out;
}

Value scalar_mul(Value a, double s) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val() * s, rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, s](Tape& tp) { tp.accum(ai, tp.node(oi).grad * s); };
    return out;
}

Value div(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    check_same_shape(a, b, "div");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Value out = t.emit(a.val().cwiseQuotient(b.val()), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        const Mat& bv = tp.node(bi).value;
        tp.accum(ai, g.cwiseQuotient(bv));
        tp.accum(bi, -g.cwiseProduct(tp.node(oi).value).cwiseQuotient(bv));
    };
    return out;
}

Value matmul(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Value out = t.emit(a.val() * b.val(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        tp.accum(ai, g * tp.node(bi).value.transpose());
        tp.accum(bi, tp.node(ai).value.transpose() * g);
    };
    return out;
}

Value transpose(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().transpose(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        tp.accum(ai, tp.node(oi).grad.transpose());
    };
    return out;
}

Value sigmoid(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Mat y = a.val().unaryExpr([](double x) {
        if (x >= 0.0) {
            double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        double e = std::exp(x);
        return e / (1.0 + e);
    });
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& yv = tp.node(oi).value;
        tp.accum(ai, tp.node(oi).grad.cwiseProduct(
                         yv.cwiseProduct(Mat::Ones(yv.rows(), yv.cols()) - yv)));
    };
    return out;
}

Value tanh_v(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array().tanh(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& yv = tp.node(oi).value;
        Mat d = (1.0 - yv.array().square()).matrix();
        tp.accum(ai, tp.node(oi).grad.cwiseProduct(d));
    };
    return out;
}

Value relu(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().cwiseMax(0.0), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        Mat mask = (tp.node(ai).value.array() > 0.0).cast<double>().matrix();
        tp.accum(ai, tp.node(oi).grad.cwiseProduct(mask));
    };
    return out;
}

Value exp_v(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array().exp(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        tp.accum(ai, tp.node(oi).grad.cwiseProduct(tp.node(oi).value));
    };
    return out;
}

Value log_v(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array().log(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        tp.accum(ai, tp.node(oi).grad.cwiseQuotient(tp.node(ai).value));
    };
    return out;
}

Value sqrt_v(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array().sqrt(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        tp.accum(ai, (tp.node(oi).grad.array() * 0.5 / tp.node(oi).value.array()).matrix());
    };
    return out;
}

Value square(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().array().square(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        tp.accum(ai, (tp.node(oi).grad.array() * 2.0 * tp.node(ai).value.array()).matrix());
    };
    return out;
}

Value clamp(Value a, double lo, double hi) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().cwiseMax(lo).cwiseMin(hi), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, lo, hi](Tape& tp) {
        const Mat& x = tp.node(ai).value;
        Mat mask = ((x.array() >= lo) && (x.array() <= hi)).cast<double>().matrix();
        tp.accum(ai, tp.node(oi).grad.cwiseProduct(mask));
    };
    return out;
}

namespace {

Mat softmax_rows_plain(const Mat& x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mx = x.row(i).maxCoeff();
        Eigen::ArrayXd e = (x.row(i).array() - mx).exp();
        y.row(i) = (e / e.sum()).matrix();
    }
    return y;
}

}  // namespace

Value softmax_rows(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(softmax_rows_plain(a.val()), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& y = tp.node(oi).value;
        const Mat& g = tp.node(oi).grad;
        Mat gy = g.cwiseProduct(y);
        Eigen::VectorXd s = gy.rowwise().sum();
        Mat dx = (gy.array() - y.array().colwise() * s.array()).matrix();
        tp.accum(ai, dx);
    };
    return out;
}

Value softmax_cols(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(softmax_rows_plain(a.val().transpose()).transpose(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& y = tp.node(oi).value;
        const Mat& g = tp.node(oi).grad;
        Mat gy = g.cwiseProduct(y);
        Eigen::RowVectorXd s = gy.colwise().sum();
        Mat dx = (gy.array() - y.array().rowwise() * s.array()).matrix();
        tp.accum(ai, dx);
    };
    return out;
}

Value sum_all(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Mat s(1, 1);
    s(0, 0) = a.val().sum();
    Value out = t.emit(std::move(s), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& av = tp.node(ai).value;
        tp.accum(ai, Mat::Constant(av.rows(), av.cols(), tp.node(oi).grad(0, 0)));
    };
    return out;
}

Value mean_all(Value a) {
    double n = static_cast<double>(a.val().size());
    return scalar_mul(sum_all(a), 1.0 / n);
}

Value rowwise_sum(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().rowwise().sum(), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        const Mat& av = tp.node(ai).value;
        tp.accum(ai, g * Mat::Ones(1, av.cols()));
    };
    return out;
}

Value rowwise_mean(Value a) {
    double m = static_cast<double>(a.val().cols());
    return scalar_mul(rowwise_sum(a), 1.0 / m);
}

Value rowwise_max(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    const Mat& x = a.val();
    Mat y(x.rows(), 1);
    std::vector<int> arg(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Index j;
        y(i, 0) = x.row(i).maxCoeff(&j);
        arg[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, arg](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        const Mat& av = tp.node(ai).value;
        Mat dx = Mat::Zero(av.rows(), av.cols());
        for (Eigen::Index i = 0; i < av.rows(); ++i)
            dx(i, arg[static_cast<std::size_t>(i)]) = g(i, 0);
        tp.accum(ai, dx);
    };
    return out;
}

Value colwise_max(Value a) {
    Tape& t = tape_of(a);
    bool rg = needs_grad(t, a);
    int ai = a.id();
    const Mat& x = a.val();
    Mat y(1, x.cols());
    std::vector<int> arg(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        Eigen::Index i;
        y(0, j) = x.col(j).maxCoeff(&i);
        arg[static_cast<std::size_t>(j)] = static_cast<int>(i);
    }
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, arg](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        const Mat& av = tp.node(ai).value;
        Mat dx = Mat::Zero(av.rows(), av.cols());
        for (Eigen::Index j = 0; j < av.cols(); ++j)
            dx(arg[static_cast<std::size_t>(j)], j) = g(0, j);
        tp.accum(ai, dx);
    };
    return out;
}

Value concat_rows(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    if (a.cols() != b.cols()) throw std::invalid_argument("concat_rows: column mismatch");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Mat y(a.rows() + b.rows(), a.cols());
    y.topRows(a.rows()) = a.val();
    y.bottomRows(b.rows()) = b.val();
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        Eigen::Index ar = tp.node(ai).value.rows();
        tp.accum(ai, g.topRows(ar));
        tp.accum(bi, g.bottomRows(g.rows() - ar));
    };
    return out;
}

Value concat_cols(Value a, Value b) {
    Tape& t = tape_of(a);
    check_same_tape(a, b);
    if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
    bool rg = needs_grad(t, a) || needs_grad(t, b);
    int ai = a.id(), bi = b.id();
    Mat y(a.rows(), a.cols() + b.cols());
    y.leftCols(a.cols()) = a.val();
    y.rightCols(b.cols()) = b.val();
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, bi, oi](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        Eigen::Index ac = tp.node(ai).value.cols();
        tp.accum(ai, g.leftCols(ac));
        tp.accum(bi, g.rightCols(g.cols() - ac));
    };
    return out;
}

Value slice_rows(Value a, int r0, int n) {
    Tape& t = tape_of(a);
    if (r0 < 0 || n < 0 || r0 + n > a.rows()) throw std::invalid_argument("slice_rows: out of range");
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().middleRows(r0, n), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, r0, n](Tape& tp) {
        const Mat& av = tp.node(ai).value;
        Mat dx = Mat::Zero(av.rows(), av.cols());
        dx.middleRows(r0, n) = tp.node(oi).grad;
        tp.accum(ai, dx);
    };
    return out;
}

Value slice_cols(Value a, int c0, int n) {
    Tape& t = tape_of(a);
    if (c0 < 0 || n < 0 || c0 + n > a.cols()) throw std::invalid_argument("slice_cols: out of range");
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Value out = t.emit(a.val().middleCols(c0, n), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, c0, n](Tape& tp) {
        const Mat& av = tp.node(ai).value;
        Mat dx = Mat::Zero(av.rows(), av.cols());
        dx.middleCols(c0, n) = tp.node(oi).grad;
        tp.accum(ai, dx);
    };
    return out;
}

Value gather_rows(Value a, std::vector<int> idx) {
    Tape& t = tape_of(a);
    for (int i : idx)
        if (i < 0 || i >= a.rows()) throw std::invalid_argument("gather_rows: index out of range");
    bool rg = needs_grad(t, a);
    int ai = a.id();
    Mat y(static_cast<Eigen::Index>(idx.size()), a.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) y.row(static_cast<Eigen::Index>(k)) = a.val().row(idx[k]);
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, idx = std::move(idx)](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        const Mat& av = tp.node(ai).value;
        Mat dx = Mat::Zero(av.rows(), av.cols());
        for (std::size_t k = 0; k < idx.size(); ++k)
            dx.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
        tp.accum(ai, dx);
    };
    return out;
}

Value cross_entropy_rows(Value logits, std::vector<int> targets) {
    Tape& t = tape_of(logits);
    const Mat& x = logits.val();
    if (static_cast<Eigen::Index>(targets.size()) != x.rows())
        throw std::invalid_argument("cross_entropy_rows: one target per row required");
    for (int c : targets)
        if (c < 0 || c >= x.cols()) throw std::invalid_argument("cross_entropy_rows: target out of range");
    bool rg = needs_grad(t, logits);
    int ai = logits.id();
    Mat y(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mx = x.row(i).maxCoeff();
        double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
        y(i, 0) = lse - x(i, targets[static_cast<std::size_t>(i)]);
    }
    Value out = t.emit(std::move(y), rg, nullptr);
    int oi = out.id();
    if (rg) t.node(oi).backprop = [ai, oi, targets = std::move(targets)](Tape& tp) {
        const Mat& g = tp.node(oi).grad;
        Mat p = softmax_rows_plain(tp.node(ai).value);
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            p(i, targets[static_cast<std::size_t>(i)]) -= 1.0;
        tp.accum(ai, p.array().colwise() * Eigen::Map<const Eigen::ArrayXd>(g.data(), g.rows()));
    };
    return out;
}

// ---- composites -------------------------------------------------------------

Value add_rowvec(Value a, Value bias) {
    Tape& t = tape_of(a);
    if (bias.rows() != 1 || bias.cols() != a.cols())
        throw std::invalid_argument("add_rowvec: bias must be 1 x cols(a)");
    Value ones = t.constant(Mat::Ones(a.rows(), 1));
    return add(a, matmul(ones, bias));
}

Value mul_colvec(Value a, Value s) {
    Tape& t = tape_of(a);
    if (s.cols() != 1 || s.rows() != a.rows())
        throw std::invalid_argument("mul_colvec: scale must be rows(a) x 1");
    Value ones = t.constant(Mat::Ones(1, a.cols()));
    return mul(a, matmul(s, ones));
}

Value div_colvec(Value a, Value s) {
    Tape& t = tape_of(a);
    if (s.cols() != 1 || s.rows() != a.rows())
        throw std::invalid_argument("div_colvec: scale must be rows(a) x 1");
    Value ones = t.constant(Mat::Ones(1, a.cols()));
    return div(a, matmul(s, ones));
}

Value rms_norm(Value x, Value gain, double eps) {
    Value ms = rowwise_mean(square(x));
    Value r = sqrt_v(scalar_add(ms, eps));
    Value xn = div_colvec(x, r);
    Tape& t = tape_of(x);
    Value ones = t.constant(Mat::Ones(x.rows(), 1));
    return mul(xn, matmul(ones, gain));
}

Value cosine_rows(Value a, Value b, double eps2) {
    Value na = sqrt_v(scalar_add(rowwise_sum(square(a)), eps2));
    Value nb = sqrt_v(scalar_add(rowwise_sum(square(b)), eps2));
    Value num = matmul(a, transpose(b));
    Value den = matmul(na, transpose(nb));
    return div(num, den);
}

}  // namespace masc::ad
