// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Classification metrics. Accuracy is exact match; a prediction the parser
// could not discern counts as wrong but stays in the denominator. F1
// averages over the three gold classes, with undiscerned treated as a
// prediction-only class that is never gold.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "masc/learning/sequences.hpp"

namespace masc::eval {

using learning::Sentiment;

enum class F1Averaging { kMacro, kMicro };

struct ClassStats {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int support = 0;    // gold count
    int predicted = 0;  // prediction count
};

struct MetricReport {
    int n = 0;
    double accuracy = 0;
    double macro_f1 = 0;
    double micro_f1 = 0;
    double dis_rate = 0;  // fraction of undiscerned predictions
    // Indexed positive, neutral, negative.
    std::array<ClassStats, 3> per_class{};

    double f1(F1Averaging avg) const {
        return avg == F1Averaging::kMacro ? macro_f1 : micro_f1;
    }
};

// Rejects empty inputs, length mismatches, and undiscerned golds.
MetricReport accuracy_f1(const std::vector<Sentiment>& predictions,
                         const std::vector<Sentiment>& golds);
MetricReport accuracy_f1(const std::vector<Sentiment>& predictions,
                         const std::vector<std::string>& gold_labels);

std::string render_metric_report_text(const MetricReport& r);

}  // namespace masc::eval
