#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fforge/affinity.hpp"
#include "fforge/layers.hpp"

namespace fforge {

/// Probability clamp used inside every log term.
inline constexpr double kProbEps = 1e-7;

namespace detail {

template <typename Scalar>
Scalar clamp_prob(Scalar p, Scalar eps) {
  return std::clamp(p, eps, Scalar(1) - eps);
}

template <typename Scalar>
bool inside_clamp(Scalar p, Scalar eps) {
  return p > eps && p < Scalar(1) - eps;
}

template <typename Scalar>
Scalar mean_log_one_minus(std::span<const Scalar> d, Scalar eps) {
  if (d.empty()) throw std::invalid_argument("loss: empty batch");
  Scalar acc = 0;
  for (Scalar v : d) acc += std::log(Scalar(1) - clamp_prob(v, eps));
  return acc / Scalar(d.size());
}

template <typename Scalar>
Scalar mean_log(std::span<const Scalar> d, Scalar eps) {
  if (d.empty()) throw std::invalid_argument("loss: empty batch");
  Scalar acc = 0;
  for (Scalar v : d) acc += std::log(clamp_prob(v, eps));
  return acc / Scalar(d.size());
}

template <typename Scalar>
std::span<const Scalar> span_of(const Tensor<Scalar>& t) {
  return {t.data.data(), static_cast<std::size_t>(t.data.size())};
}

}  // namespace detail

/// Generator adversarial loss E[log(1 - D(G(x,z)))]; the generator minimizes it.
template <typename Scalar>
Scalar adversarial_loss_g(std::span<const Scalar> d_on_fake, Scalar eps = Scalar(kProbEps)) {
  return detail::mean_log_one_minus(d_on_fake, eps);
}

/// Non-saturating alternative -E[log D(G(x,z))].
template <typename Scalar>
Scalar adversarial_loss_g_non_saturating(std::span<const Scalar> d_on_fake, Scalar eps = Scalar(kProbEps)) {
  return -detail::mean_log(d_on_fake, eps);
}

/// Discriminator loss E[log(1 - D(R(y)))] + E[log D(G(x,z))]; D minimizes it,
/// so reconstructed ideal masks are labelled true and regularized ones false.
template <typename Scalar>
Scalar discriminator_loss(std::span<const Scalar> d_on_recon, std::span<const Scalar> d_on_fake,
                          Scalar eps = Scalar(kProbEps)) {
  return detail::mean_log_one_minus(d_on_recon, eps) + detail::mean_log(d_on_fake, eps);
}

/// Mean binary cross entropy. With `one_sided`, only the -t log p term is kept.
template <typename Scalar>
Scalar reconstruction_loss(std::span<const Scalar> pred, std::span<const Scalar> target, bool one_sided = false,
                           Scalar eps = Scalar(kProbEps)) {
  if (pred.size() != target.size()) throw std::invalid_argument("reconstruction_loss: dimension mismatch");
  if (pred.empty()) throw std::invalid_argument("reconstruction_loss: empty input");
  Scalar acc = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const Scalar p = detail::clamp_prob(pred[i], eps);
    const Scalar t = target[i];
    acc -= t * std::log(p);
    if (!one_sided) acc -= (Scalar(1) - t) * std::log(Scalar(1) - p);
  }
  return acc / Scalar(pred.size());
}

// Tape versions. Each returns a (1,1,1,1) node.

template <typename Scalar>
Var adversarial_loss_g(Tape<Scalar>& tape, Var d_on_fake, bool non_saturating = false,
                       Scalar eps = Scalar(kProbEps)) {
  const auto d = detail::span_of(tape.value(d_on_fake));
  Tensor<Scalar> out(detail::scalar_shape());
  out.data[0] = non_saturating ? adversarial_loss_g_non_saturating(d, eps) : adversarial_loss_g(d, eps);
  return tape.record(std::move(out), [d_on_fake, non_saturating, eps](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(d_on_fake)) return;
    const Scalar g = t.grad(self).data[0];
    const auto& d = t.value(d_on_fake).data;
    auto& gd = t.grad(d_on_fake).data;
    const Scalar inv_n = Scalar(1) / Scalar(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!detail::inside_clamp(d[i], eps)) continue;
      gd[i] += non_saturating ? -g * inv_n / d[i] : -g * inv_n / (Scalar(1) - d[i]);
    }
  });
}

template <typename Scalar>
Var discriminator_loss(Tape<Scalar>& tape, Var d_on_recon, Var d_on_fake, Scalar eps = Scalar(kProbEps)) {
  Tensor<Scalar> out(detail::scalar_shape());
  out.data[0] = discriminator_loss(detail::span_of(tape.value(d_on_recon)), detail::span_of(tape.value(d_on_fake)), eps);
  return tape.record(std::move(out), [d_on_recon, d_on_fake, eps](Tape<Scalar>& t, Var self) {
    const Scalar g = t.grad(self).data[0];
    if (t.requires_grad(d_on_recon)) {
      const auto& d = t.value(d_on_recon).data;
      auto& gd = t.grad(d_on_recon).data;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (detail::inside_clamp(d[i], eps)) gd[i] += -g / (Scalar(d.size()) * (Scalar(1) - d[i]));
      }
    }
    if (t.requires_grad(d_on_fake)) {
      const auto& d = t.value(d_on_fake).data;
      auto& gd = t.grad(d_on_fake).data;
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (detail::inside_clamp(d[i], eps)) gd[i] += g / (Scalar(d.size()) * d[i]);
      }
    }
  });
}

template <typename Scalar>
Var reconstruction_loss(Tape<Scalar>& tape, Var pred, const Tensor<Scalar>& target, bool one_sided = false,
                        Scalar eps = Scalar(kProbEps)) {
  require_shape(target.shape, tape.shape(pred), "reconstruction_loss");
  Tensor<Scalar> out(detail::scalar_shape());
  out.data[0] = reconstruction_loss(detail::span_of(tape.value(pred)), detail::span_of(target), one_sided, eps);
  return tape.record(std::move(out), [pred, target, one_sided, eps](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(pred)) return;
    const Scalar g = t.grad(self).data[0] / Scalar(target.size());
    const auto& p = t.value(pred).data;
    auto& gp = t.grad(pred).data;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (!detail::inside_clamp(p[i], eps)) continue;
      const Scalar ti = target.data[i];
      Scalar d = -ti / p[i];
      if (!one_sided) d += (Scalar(1) - ti) / (Scalar(1) - p[i]);
      gp[i] += g * d;
    }
  });
}

enum class EnergyKind { kPotts, kNcut };

/// Batch mean of the Potts or normalized-cut energy of a channel-softmax
/// tensor (N,k,H,W), one affinity matrix per sample. With `per_pixel`, each
/// sample's energy is divided by its pixel count.
template <typename Scalar>
Var regularized_energy(Tape<Scalar>& tape, Var softmax, const std::vector<AffinityMatrix<Scalar>>* affinities,
                       EnergyKind kind, bool per_pixel = true, Scalar ncut_eps = Scalar(1e-8)) {
  const Shape s = tape.shape(softmax);
  if (static_cast<int>(affinities->size()) != s.n) {
    throw std::invalid_argument("regularized_energy: one affinity matrix per sample required");
  }
  const Scalar scale = Scalar(1) / (Scalar(s.n) * (per_pixel ? Scalar(s.plane()) : Scalar(1)));
  Tensor<Scalar> grad(s);
  Tensor<Scalar> out(detail::scalar_shape());
  for (int n = 0; n < s.n; ++n) {
    const SoftmaxMask<Scalar> sm = tape.value(softmax).sample(n);
    const auto& w = (*affinities)[static_cast<std::size_t>(n)];
    EnergyResult<Scalar> e = kind == EnergyKind::kPotts ? potts_energy(sm, w) : ncut_energy(sm, w, ncut_eps);
    out.data[0] += scale * e.energy;
    grad.sample(n) = scale * e.grad;
  }
  return tape.record(std::move(out), [softmax, grad = std::move(grad)](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(softmax)) return;
    t.grad(softmax).data += t.grad(self).data[0] * grad.data;
  });
}

}  // namespace fforge
