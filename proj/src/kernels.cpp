#include "featurescope/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace featurescope::kernels {

double squared_distance(const double* a, const double* b, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    const double t0 = a[k] - b[k];
    const double t1 = a[k + 1] - b[k + 1];
    const double t2 = a[k + 2] - b[k + 2];
    const double t3 = a[k + 3] - b[k + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; k < d; ++k) {
    const double t = a[k] - b[k];
    s0 += t * t;
  }
  return (s0 + s1) + (s2 + s3);
}

double dot(const double* a, const double* b, std::size_t d) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < d; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

namespace {

inline void euclidean_row(const double* x, std::size_t n, std::size_t d, std::size_t i, double* out) {
  out[i * n + i] = 0.0;
  for (std::size_t j = i + 1; j < n; ++j) {
    const double v = std::sqrt(squared_distance(x + i * d, x + j * d, d));
    out[i * n + j] = v;
    out[j * n + i] = v;
  }
}

inline void cosine_row(const double* x, const double* norms, std::size_t n, std::size_t d,
                       std::size_t i, double* out) {
  out[i * n + i] = 0.0;
  for (std::size_t j = i + 1; j < n; ++j) {
    const double sim = dot(x + i * d, x + j * d, d) / (norms[i] * norms[j]);
    // Rounding can push |sim| slightly past 1; distances stay in [0, 2].
    const double v = std::clamp(1.0 - sim, 0.0, 2.0);
    out[i * n + j] = v;
    out[j * n + i] = v;
  }
}

inline double silhouette_point(const double* pts, std::size_t n, std::size_t dim,
                               const std::size_t* codes, std::size_t n_classes,
                               const std::size_t* counts, std::size_t i, double* sums) {
  std::fill(sums, sums + n_classes, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    sums[codes[j]] += std::sqrt(squared_distance(pts + i * dim, pts + j * dim, dim));
  }
  const std::size_t own = codes[i];
  if (counts[own] <= 1) return 0.0;
  const double a = sums[own] / static_cast<double>(counts[own] - 1);
  double b = INFINITY;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (c == own || counts[c] == 0) continue;
    b = std::min(b, sums[c] / static_cast<double>(counts[c]));
  }
  const double denom = std::max(a, b);
  return denom > 0.0 ? (b - a) / denom : 0.0;
}

std::vector<std::size_t> class_sizes(std::span<const std::size_t> codes, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (std::size_t c : codes) ++counts[c];
  return counts;
}

}  // namespace

void pairwise_euclidean_serial(std::span<const double> x, std::size_t n, std::size_t d,
                               std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) euclidean_row(x.data(), n, d, i, out.data());
}

void pairwise_euclidean_omp(std::span<const double> x, std::size_t n, std::size_t d,
                            std::span<double> out) {
  const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (long long i = 0; i < rows; ++i) {
    euclidean_row(x.data(), n, d, static_cast<std::size_t>(i), out.data());
  }
}

void pairwise_cosine_serial(std::span<const double> x, std::span<const double> norms,
                            std::size_t n, std::size_t d, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) cosine_row(x.data(), norms.data(), n, d, i, out.data());
}

void pairwise_cosine_omp(std::span<const double> x, std::span<const double> norms,
                         std::size_t n, std::size_t d, std::span<double> out) {
  const long long rows = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (long long i = 0; i < rows; ++i) {
    cosine_row(x.data(), norms.data(), n, d, static_cast<std::size_t>(i), out.data());
  }
}

void silhouette_serial(std::span<const double> points, std::size_t n, std::size_t dim,
                       std::span<const std::size_t> codes, std::size_t n_classes,
                       std::span<double> out) {
  const auto counts = class_sizes(codes, n_classes);
  std::vector<double> sums(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = silhouette_point(points.data(), n, dim, codes.data(), n_classes, counts.data(), i,
                              sums.data());
  }
}

void silhouette_omp(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const std::size_t> codes, std::size_t n_classes,
                    std::span<double> out) {
  const auto counts = class_sizes(codes, n_classes);
  const long long rows = static_cast<long long>(n);
#pragma omp parallel
  {
    std::vector<double> sums(n_classes);
#pragma omp for schedule(static)
    for (long long i = 0; i < rows; ++i) {
      out[static_cast<std::size_t>(i)] =
          silhouette_point(points.data(), n, dim, codes.data(), n_classes, counts.data(),
                           static_cast<std::size_t>(i), sums.data());
    }
  }
}

}  // namespace featurescope::kernels
