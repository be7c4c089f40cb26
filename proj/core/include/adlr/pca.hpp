// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// Activity-embedding extraction (mean of per-token frozen hidden states)
// and a deterministic 2-D PCA projection for external plotting.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "adlr/gpt.hpp"
#include "adlr/tokenize.hpp"

namespace adlr {

struct ActivityEmbedding {
  std::string label;
  std::vector<double> mean_vector;  // mean over token positions
};

// One embedding per sequence. Throws UsageError on an empty list.
std::vector<ActivityEmbedding> embed_activities(
    const GptModel<float>& frozen, const std::vector<TokenizedSequence>& seqs);

struct Projection2D {
  std::vector<std::array<double, 2>> coords;
  std::vector<double> mean;                    // column means
  std::array<std::vector<double>, 2> basis;    // top-2 eigenvectors
  std::array<double, 2> component_variance;    // descending
};

// Centered PCA to the top-2 principal components (Jacobi eigensolver on the
// covariance matrix). Requires at least 2 vectors of equal dimension >= 2.
Projection2D project_2d(const std::vector<std::vector<double>>& vectors);

void save_projection_csv(const std::string& path,
                         const std::vector<ActivityEmbedding>& embeddings,
                         const Projection2D& projection);

}  // namespace adlr
