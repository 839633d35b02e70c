// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0

#include "masc/learning/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace masc::learning {

void LossWeights::validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    if (!(lambda > 0.0) || !(lambda < 1.0))
        throw std::invalid_argument("lambda must lie in (0, 1)");
}

double generation_loss(const std::vector<Mat>& logits,
                       const std::vector<std::vector<int>>& targets) {
    if (logits.size() != targets.size())
        throw std::invalid_argument("generation_loss: one target sequence per logits matrix");
    if (logits.empty()) throw std::invalid_argument("generation_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const Mat& x = logits[i];
        const std::vector<int>& t = targets[i];
        if (static_cast<Eigen::Index>(t.size()) != x.rows())
            throw std::invalid_argument("generation_loss: logits rows and target length differ");
        for (Eigen::Index n = 0; n < x.rows(); ++n) {
            int c = t[static_cast<std::size_t>(n)];
            if (c < 0 || c >= x.cols())
                throw std::invalid_argument("generation_loss: target id out of vocabulary");
            double mx = x.row(n).maxCoeff();
            double lse = mx + std::log((x.row(n).array() - mx).exp().sum());
            total += lse - x(n, c);
        }
    }
    return total / static_cast<double>(logits.size());
}

double total_loss(double l_sc, double l_srg, double l_irg, double l_align,
                  const LossWeights& w) {
    w.validate();
    for (double l : {l_sc, l_srg, l_irg, l_align})
        if (!(l >= 0.0) || !std::isfinite(l))
            throw std::invalid_argument("total_loss: component losses must be finite and >= 0");
    return w.alpha * l_sc + 0.5 * (1.0 - w.alpha) * (l_srg + l_irg) + w.lambda * l_align;
}

}  // namespace masc::learning
