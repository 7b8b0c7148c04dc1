#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "fforge/parallel.hpp"
#include "fforge/raster.hpp"

namespace fforge {

/// Gaussian RGBXY kernel bandwidths and the Chebyshev neighbourhood radius.
struct KernelParams {
  double sigma_rgb = 0.1;
  double sigma_xy = 4.0;
  int radius = 5;

  void validate() const {
    if (!(sigma_rgb > 0.0) || !(sigma_xy > 0.0) || radius <= 0) {
      throw std::invalid_argument("KernelParams: bandwidths and radius must be positive");
    }
  }
};

/// Sparse symmetric pairwise weights over the pixels of one image, without
/// self-edges. Pixel index is row*width + col.
template <typename Scalar>
struct AffinityMatrix {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> weights;
  /// Row sums, W * 1.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> degree;

  [[nodiscard]] Eigen::Index n() const { return weights.rows(); }
};

/// k x n matrix; row k is the vectorized k-th channel.
template <typename Scalar>
using SoftmaxMask = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
struct EnergyResult {
  Scalar energy = 0;
  SoftmaxMask<Scalar> grad;
};

/// w(i,j) = exp(-|rgb_i - rgb_j|^2 / (2 sigma_rgb^2) - |p_i - p_j|^2 / (2 sigma_xy^2))
/// for 0 < |p_i - p_j|_inf <= radius. Each unordered pair is evaluated once and
/// stored in both triangles, so the result is bitwise symmetric.
template <typename Scalar>
AffinityMatrix<Scalar> build_affinity(const IntensityImage& image, const KernelParams& params) {
  params.validate();
  if (image.empty()) throw std::invalid_argument("build_affinity: empty image");
  const int w = image.width();
  const int h = image.height();
  const int r = params.radius;
  const double inv_rgb = 1.0 / (2.0 * params.sigma_rgb * params.sigma_rgb);
  const double inv_xy = 1.0 / (2.0 * params.sigma_xy * params.sigma_xy);
  using Triplet = Eigen::Triplet<Scalar>;

  std::vector<std::vector<Triplet>> per_row(static_cast<std::size_t>(h));
  parallel_for(h, [&](int y) {
    auto& out = per_row[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * w + x;
      const auto ci = image.pixel(y, x).template cast<double>();
      // Forward half-neighbourhood: later rows, or same row to the right.
      for (int dy = 0; dy <= r; ++dy) {
        const int yy = y + dy;
        if (yy >= h) break;
        for (int dx = -r; dx <= r; ++dx) {
          if (dy == 0 && dx <= 0) continue;
          const int xx = x + dx;
          if (xx < 0 || xx >= w) continue;
          const Eigen::Index j = static_cast<Eigen::Index>(yy) * w + xx;
          const double color = (ci - image.pixel(yy, xx).template cast<double>()).square().sum();
          const double space = static_cast<double>(dx * dx + dy * dy);
          const Scalar wij = static_cast<Scalar>(std::exp(-color * inv_rgb - space * inv_xy));
          out.emplace_back(i, j, wij);
          out.emplace_back(j, i, wij);
        }
      }
    }
  });

  std::vector<Triplet> all;
  for (auto& row : per_row) all.insert(all.end(), row.begin(), row.end());
  AffinityMatrix<Scalar> m;
  const Eigen::Index n = static_cast<Eigen::Index>(w) * h;
  m.weights.resize(n, n);
  m.weights.setFromTriplets(all.begin(), all.end());
  m.degree = m.weights * Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(n);
  return m;
}

namespace detail {
template <typename Scalar>
void check_energy_dims(const SoftmaxMask<Scalar>& s, const AffinityMatrix<Scalar>& w, const char* what) {
  if (s.cols() != w.n()) {
    throw std::invalid_argument(std::string(what) + ": softmax has " + std::to_string(s.cols()) +
                                " pixels, affinity has " + std::to_string(w.n()));
  }
}
}  // namespace detail

/// Potts energy sum_k S_k^T W (1 - S_k) and its gradient W1 - 2 W S_k
/// (W symmetric).
template <typename Scalar>
EnergyResult<Scalar> potts_energy(const SoftmaxMask<Scalar>& s, const AffinityMatrix<Scalar>& w) {
  detail::check_energy_dims(s, w, "potts_energy");
  EnergyResult<Scalar> out;
  out.grad.resize(s.rows(), s.cols());
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sk = s.row(k).transpose();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wsk = w.weights * sk;
    out.energy += sk.dot(w.degree) - sk.dot(wsk);
    out.grad.row(k) = (w.degree - Scalar(2) * wsk).transpose();
  }
  return out;
}

/// Normalized cut energy sum_k S_k^T W (1 - S_k) / (1^T W S_k). Channels whose
/// association 1^T W S_k falls below `eps` contribute neither energy nor
/// gradient.
template <typename Scalar>
EnergyResult<Scalar> ncut_energy(const SoftmaxMask<Scalar>& s, const AffinityMatrix<Scalar>& w,
                                 Scalar eps = Scalar(1e-8)) {
  detail::check_energy_dims(s, w, "ncut_energy");
  if (!(eps > Scalar(0))) throw std::invalid_argument("ncut_energy: eps must be positive");
  EnergyResult<Scalar> out;
  out.grad = SoftmaxMask<Scalar>::Zero(s.rows(), s.cols());
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sk = s.row(k).transpose();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> wsk = w.weights * sk;
    const Scalar den = w.degree.dot(sk);
    if (den < eps) continue;
    const Scalar num = sk.dot(w.degree) - sk.dot(wsk);
    out.energy += num / den;
    out.grad.row(k) = ((w.degree - Scalar(2) * wsk) / den - w.degree * (num / (den * den))).transpose();
  }
  return out;
}

}  // namespace fforge
