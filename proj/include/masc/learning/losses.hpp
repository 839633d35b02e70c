// Copyright (C) 2026 masckit contributors
// SPDX-License-Identifier: Apache-2.0
//
// Generation loss and the combined multi-task objective.

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace masc::learning {

using Mat = Eigen::MatrixXd;

struct LossWeights {
    double alpha = 0.2;
    double lambda = 0.2;

    void validate() const;  // both must lie strictly inside (0, 1)
};

// Mean over samples of the summed per-token negative log-likelihood.
// logits[i] is T_i x |vocab|; targets[i] holds T_i token ids.
double generation_loss(const std::vector<Mat>& logits,
                       const std::vector<std::vector<int>>& targets);

// alpha * l_sc + (1-alpha)/2 * (l_srg + l_irg) + lambda * l_align
double total_loss(double l_sc, double l_srg, double l_irg, double l_align,
                  const LossWeights& w);

}  // namespace masc::learning
