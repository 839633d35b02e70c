// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/eval/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace masc::eval {

namespace {

double safe_div(double num, double den) { return den == 0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

}  // namespace

MetricReport accuracy_f1(const std::vector<Sentiment>& predictions,
                         const std::vector<Sentiment>& golds) {
    if (predictions.empty()) throw std::invalid_argument("no predictions to score");
    if (predictions.size() != golds.size())
        throw std::invalid_argument("prediction and gold counts differ");

    MetricReport r;
    r.n = static_cast<int>(predictions.size());
    int correct = 0;
    int undiscerned = 0;
    std::array<std::array<int, 3>, 3> tp_fp_fn{};  // [class][0]=tp [1]=fp [2]=fn
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        Sentiment g = golds[i];
        Sentiment p = predictions[i];
        if (g == Sentiment::kUndiscerned)
            throw std::invalid_argument("gold labels cannot be undiscerned");
        int gi = static_cast<int>(g);
        if (p == g) {
            ++correct;
            ++tp_fp_fn[static_cast<std::size_t>(gi)][0];
        } else {
            ++tp_fp_fn[static_cast<std::size_t>(gi)][2];
            if (p == Sentiment::kUndiscerned)
                ++undiscerned;
            else
                ++tp_fp_fn[static_cast<std::size_t>(static_cast<int>(p))][1];
        }
    }

    r.accuracy = static_cast<double>(correct) / r.n;
    r.dis_rate = static_cast<double>(undiscerned) / r.n;

    double macro_sum = 0;
    int tp_total = 0;
    int predicted_total = 0;
    for (int c = 0; c < 3; ++c) {
        auto& counts = tp_fp_fn[static_cast<std::size_t>(c)];
        ClassStats& s = r.per_class[static_cast<std::size_t>(c)];
        s.support = counts[0] + counts[2];
        s.predicted = counts[0] + counts[1];
        s.precision = safe_div(counts[0], s.predicted);
        s.recall = safe_div(counts[0], s.support);
        s.f1 = f1_of(s.precision, s.recall);
        macro_sum += s.f1;
        tp_total += counts[0];
        predicted_total += s.predicted;
    }
    r.macro_f1 = macro_sum / 3.0;
    double micro_p = safe_div(tp_total, predicted_total);
    double micro_r = static_cast<double>(tp_total) / r.n;
    r.micro_f1 = f1_of(micro_p, micro_r);
    return r;
}

MetricReport accuracy_f1(const std::vector<Sentiment>& predictions,
                         const std::vector<std::string>& gold_labels) {
    std::vector<Sentiment> golds;
    golds.reserve(gold_labels.size());
    for (const std::string& label : gold_labels)
        golds.push_back(learning::sentiment_from_label(label));
    return accuracy_f1(predictions, golds);
}

std::string render_metric_report_text(const MetricReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof(buf), "n          %d\n", r.n);
    out += buf;
    std::snprintf(buf, sizeof(buf), "accuracy   %.4f\n", r.accuracy);
    out += buf;
    std::snprintf(buf, sizeof(buf), "macro-f1   %.4f\n", r.macro_f1);
    out += buf;
    std::snprintf(buf, sizeof(buf), "micro-f1   %.4f\n", r.micro_f1);
    out += buf;
    std::snprintf(buf, sizeof(buf), "dis-rate   %.4f\n", r.dis_rate);
    out += buf;
    out += "class      prec    recall  f1      support predicted\n";
    static const char* names[] = {"positive", "neutral", "negative"};
    for (int c = 0; c < 3; ++c) {
        const ClassStats& s = r.per_class[static_cast<std::size_t>(c)];
        std::snprintf(buf, sizeof(buf), "%-10s %.4f  %.4f  %.4f  %-7d %d\n", names[c],
                      s.precision, s.recall, s.f1, s.support, s.predicted);
        out += buf;
    }
    return out;
}

}  // namespace masc::eval
