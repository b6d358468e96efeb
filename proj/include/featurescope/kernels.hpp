#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// variant that evaluates exactly the same per-element expression, so the two
// agree bit-for-bit; tests assert that and bench/ measures the speedup.

#include <cstddef>
#include <span>

namespace featurescope::kernels {

/// Squared Euclidean distance with four interleaved accumulators.
double squared_distance(const double* a, const double* b, std::size_t d);
double dot(const double* a, const double* b, std::size_t d);

// `x` is n×d row-major; `out` is n×n row-major, fully written (symmetric,
// zero diagonal).
void pairwise_euclidean_serial(std::span<const double> x, std::size_t n, std::size_t d,
                               std::span<double> out);
void pairwise_euclidean_omp(std::span<const double> x, std::size_t n, std::size_t d,
                            std::span<double> out);

// `norms` holds the n row norms, all non-zero.
void pairwise_cosine_serial(std::span<const double> x, std::span<const double> norms,
                            std::size_t n, std::size_t d, std::span<double> out);
void pairwise_cosine_omp(std::span<const double> x, std::span<const double> norms,
                         std::size_t n, std::size_t d, std::span<double> out);

// Per-point silhouette values (Rousseeuw): a = mean distance to the other
// members of the own class, b = smallest mean distance to another present
// class, s = (b - a) / max(a, b); singleton classes give s = 0. `codes` are
// class indices in [0, n_classes). `out` receives n values.
void silhouette_serial(std::span<const double> points, std::size_t n, std::size_t dim,
                       std::span<const std::size_t> codes, std::size_t n_classes,
                       std::span<double> out);
void silhouette_omp(std::span<const double> points, std::size_t n, std::size_t dim,
                    std::span<const std::size_t> codes, std::size_t n_classes,
                    std::span<double> out);

}  // namespace featurescope::kernels
