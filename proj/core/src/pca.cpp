// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "adlr/errors.hpp"

namespace adlr {

std::vector<ActivityEmbedding> embed_activities(
    const GptModel<float>& frozen, const std::vector<TokenizedSequence>& seqs) {
  if (seqs.empty()) throw UsageError("embed_activities: no sequences");
  std::vector<ActivityEmbedding> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    FloatMatrix h = embed(frozen, s.token_ids);
    ActivityEmbedding e;
    e.label = s.source_label;
    e.mean_vector.assign(h.cols, 0.0);
    for (size_t r = 0; r < h.rows; ++r)
      for (size_t c = 0; c < h.cols; ++c) e.mean_vector[c] += h.at(r, c);
    for (auto& v : e.mean_vector) v /= static_cast<double>(h.rows);
    out.push_back(std::move(e));
  }
  return out;
}

namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix; returns (eigenvalues,
// eigenvectors as columns of V).
void jacobi_eigen(std::vector<double>& a, size_t n, std::vector<double>& eigvals,
                  std::vector<double>& v) {
  v.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  eigvals.resize(n);
  for (size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace

Projection2D project_2d(const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 2) throw UsageError("project_2d: need at least 2 vectors");
  const size_t n = vectors.size();
  const size_t d = vectors[0].size();
  if (d < 2) throw UsageError("project_2d: vector dimension must be >= 2");
  for (const auto& vec : vectors)
    if (vec.size() != d) throw UsageError("project_2d: ragged input");

  Projection2D proj;
  proj.mean.assign(d, 0.0);
  for (const auto& vec : vectors)
    for (size_t j = 0; j < d; ++j) proj.mean[j] += vec[j];
  for (auto& m : proj.mean) m /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  for (const auto& vec : vectors) {
    for (size_t i = 0; i < d; ++i) {
      const double ci = vec[i] - proj.mean[i];
      for (size_t j = i; j < d; ++j)
        cov[i * d + j] += ci * (vec[j] - proj.mean[j]);
    }
  }
  for (size_t i = 0; i < d; ++i)
    for (size_t j = i; j < d; ++j) {
      cov[i * d + j] /= static_cast<double>(n);
      cov[j * d + i] = cov[i * d + j];
    }

  std::vector<double> eigvals, eigvecs;
  jacobi_eigen(cov, d, eigvals, eigvecs);

  std::array<size_t, 2> top{0, 1};
  if (eigvals[top[1]] > eigvals[top[0]]) std::swap(top[0], top[1]);
  for (size_t i = 2; i < d; ++i) {
    if (eigvals[i] > eigvals[top[0]]) {
      top[1] = top[0];
      top[0] = i;
    } else if (eigvals[i] > eigvals[top[1]]) {
      top[1] = i;
    }
  }

  for (int k = 0; k < 2; ++k) {
    proj.basis[k].resize(d);
    for (size_t j = 0; j < d; ++j) proj.basis[k][j] = eigvecs[j * d + top[k]];
    proj.component_variance[k] = std::max(0.0, eigvals[top[k]]);
  }

  proj.coords.reserve(n);
  for (const auto& vec : vectors) {
    std::array<double, 2> xy{0.0, 0.0};
    for (size_t j = 0; j < d; ++j) {
      const double c = vec[j] - proj.mean[j];
      xy[0] += c * proj.basis[0][j];
      xy[1] += c * proj.basis[1][j];
    }
    proj.coords.push_back(xy);
  }
  return proj;
}

void save_projection_csv(const std::string& path,
                         const std::vector<ActivityEmbedding>& embeddings,
                         const Projection2D& projection) {
  if (embeddings.size() != projection.coords.size())
    throw UsageError("save_projection_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write projection csv: " + path);
  out << "label,x,y\n";
  for (size_t i = 0; i < embeddings.size(); ++i)
    out << embeddings[i].label << ',' << projection.coords[i][0] << ','
        << projection.coords[i][1] << '\n';
}

}  // namespace adlr
