#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fforge/autodiff.hpp"

namespace fforge {

enum class Mode { kTrain, kEval };

/// Per-channel batch normalization state: affine parameters plus running
/// statistics used in eval mode.
template <typename Scalar>
struct BatchNorm2d {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  Array running_mean;
  Array running_var;
  bool initialized = false;
  Scalar momentum = Scalar(0.1);
  Scalar eps = Scalar(1e-5);

  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, int channels)
      : gamma(name + ".gamma", Shape{1, channels, 1, 1}),
        beta(name + ".beta", Shape{1, channels, 1, 1}),
        running_mean(Array::Zero(channels)),
        running_var(Array::Ones(channels)) {
    gamma.value.data.setOnes();
  }

  [[nodiscard]] int channels() const { return gamma.value.shape.c; }
};

namespace detail {

// Unfolds one CHW sample into a (C*k*k, H*W) patch matrix with zero "same" padding.
template <typename Scalar>
void im2col(const Scalar* src, int channels, int height, int width, int k, RowMatrix<Scalar>& cols) {
  const int pad = k / 2;
  cols.resize(static_cast<Eigen::Index>(channels) * k * k, static_cast<Eigen::Index>(height) * width);
  for (int ci = 0; ci < channels; ++ci) {
    const Scalar* plane = src + static_cast<std::ptrdiff_t>(ci) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Scalar* row = cols.row((ci * k + ky) * k + kx).data();
        for (int y = 0; y < height; ++y) {
          const int sy = y + ky - pad;
          for (int x = 0; x < width; ++x) {
            const int sx = x + kx - pad;
            row[y * width + x] = (sy >= 0 && sy < height && sx >= 0 && sx < width)
                                     ? plane[sy * width + sx]
                                     : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, int channels, int height, int width, int k, Scalar* dst) {
  const int pad = k / 2;
  for (int ci = 0; ci < channels; ++ci) {
    Scalar* plane = dst + static_cast<std::ptrdiff_t>(ci) * height * width;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Scalar* row = cols.row((ci * k + ky) * k + kx).data();
        for (int y = 0; y < height; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= height) continue;
          for (int x = 0; x < width; ++x) {
            const int sx = x + kx - pad;
            if (sx >= 0 && sx < width) plane[sy * width + sx] += row[y * width + x];
          }
        }
      }
    }
  }
}

inline Shape scalar_shape() { return Shape{1, 1, 1, 1}; }

}  // namespace detail

/// Same-padded, stride-1 cross-correlation. Weight shape is
/// (out_ch, in_ch, k, k) with odd k; bias shape is (1, out_ch, 1, 1).
template <typename Scalar>
Var conv2d(Tape<Scalar>& tape, Var input, Parameter<Scalar>& weight, Parameter<Scalar>& bias) {
  const Shape in = tape.shape(input);
  const Shape ws = weight.value.shape;
  if (ws.h != ws.w || ws.h % 2 == 0) throw std::invalid_argument("conv2d: kernel must be odd and square");
  if (ws.c != in.c) {
    throw std::invalid_argument("conv2d: channel mismatch, input has " + std::to_string(in.c) +
                                " channels, weight expects " + std::to_string(ws.c));
  }
  if (bias.value.shape.c != ws.n) throw std::invalid_argument("conv2d: bias length mismatch");
  const int k = ws.h;
  const Eigen::Index patch = static_cast<Eigen::Index>(ws.c) * k * k;
  using ConstMap = Eigen::Map<const RowMatrix<Scalar>>;
  using Map = Eigen::Map<RowMatrix<Scalar>>;

  Tensor<Scalar> out(Shape{in.n, ws.n, in.h, in.w});
  {
    const ConstMap wmat(weight.value.data.data(), ws.n, patch);
    const Tensor<Scalar>& x = tape.value(input);
    RowMatrix<Scalar> cols;
    for (int n = 0; n < in.n; ++n) {
      auto y = out.sample(n);
      if (k == 1) {
        y.noalias() = wmat * x.sample(n);
      } else {
        detail::im2col(x.data.data() + n * in.sample(), in.c, in.h, in.w, k, cols);
        y.noalias() = wmat * cols;
      }
      y.colwise() += bias.value.data.matrix();
    }
  }

  Parameter<Scalar>* wp = &weight;
  Parameter<Scalar>* bp = &bias;
  return tape.record(std::move(out), [input, wp, bp, in, k, patch](Tape<Scalar>& t, Var self) {
    const Tensor<Scalar>& gy = t.grad(self);
    const Tensor<Scalar>& x = t.value(input);
    const Shape ws = wp->value.shape;
    const ConstMap wmat(wp->value.data.data(), ws.n, patch);
    Map gw(wp->grad.data.data(), ws.n, patch);
    const bool want_input = t.requires_grad(input);
    Tensor<Scalar>* gx = want_input ? &t.grad(input) : nullptr;
    RowMatrix<Scalar> cols;
    RowMatrix<Scalar> gcols;
    for (int n = 0; n < in.n; ++n) {
      const auto gyn = gy.sample(n);
      bp->grad.data.matrix() += gyn.rowwise().sum();
      if (k == 1) {
        gw.noalias() += gyn * x.sample(n).transpose();
        if (gx) gx->sample(n).noalias() += wmat.transpose() * gyn;
      } else {
        detail::im2col(x.data.data() + n * in.sample(), in.c, in.h, in.w, k, cols);
        gw.noalias() += gyn * cols.transpose();
        if (gx) {
          gcols.noalias() = wmat.transpose() * gyn;
          detail::col2im_add(gcols, in.c, in.h, in.w, k, gx->data.data() + n * in.sample());
        }
      }
    }
  });
}

/// Batch normalization over (N, H, W) per channel. Train mode normalizes with
/// batch statistics and updates the running estimates; eval mode uses the
/// running estimates and fails if no train step has populated them.
template <typename Scalar>
Var batch_norm(Tape<Scalar>& tape, Var input, BatchNorm2d<Scalar>& bn, Mode mode) {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  const Shape s = tape.shape(input);
  if (s.c != bn.channels()) {
    throw std::invalid_argument("batch_norm: channel mismatch");
  }
  if (mode == Mode::kEval && !bn.initialized) {
    throw std::logic_error("batch_norm: eval mode requested before running statistics exist (" +
                           bn.gamma.name + ")");
  }
  const Tensor<Scalar>& x = tape.value(input);
  const Eigen::Index count = static_cast<Eigen::Index>(s.n) * s.plane();
  Array mean = Array::Zero(s.c);
  Array var = Array::Zero(s.c);
  if (mode == Mode::kTrain) {
    for (int n = 0; n < s.n; ++n) mean += x.sample(n).array().rowwise().sum();
    mean /= Scalar(count);
    for (int n = 0; n < s.n; ++n) {
      var += (x.sample(n).array().colwise() - mean).square().rowwise().sum();
    }
    var /= Scalar(count);
    const Array unbiased = count > 1 ? Array(var * Scalar(count) / Scalar(count - 1)) : var;
    if (!bn.initialized) {
      bn.running_mean = mean;
      bn.running_var = unbiased;
      bn.initialized = true;
    } else {
      bn.running_mean = (Scalar(1) - bn.momentum) * bn.running_mean + bn.momentum * mean;
      bn.running_var = (Scalar(1) - bn.momentum) * bn.running_var + bn.momentum * unbiased;
    }
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  const Array inv_std = (var + bn.eps).rsqrt();
  const Array gamma = bn.gamma.value.data;
  const Array beta = bn.beta.value.data;

  Tensor<Scalar> xhat(s);
  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n) {
    xhat.sample(n).array() = (x.sample(n).array().colwise() - mean).colwise() * inv_std;
    out.sample(n).array() = (xhat.sample(n).array().colwise() * gamma).colwise() + beta;
  }

  BatchNorm2d<Scalar>* bp = &bn;
  return tape.record(
      std::move(out), [input, bp, mode, s, count, inv_std, xhat = std::move(xhat)](Tape<Scalar>& t, Var self) {
        const Tensor<Scalar>& gy = t.grad(self);
        Array sum_gy = Array::Zero(s.c);
        Array sum_gy_xhat = Array::Zero(s.c);
        for (int n = 0; n < s.n; ++n) {
          sum_gy += gy.sample(n).array().rowwise().sum();
          sum_gy_xhat += (gy.sample(n).array() * xhat.sample(n).array()).rowwise().sum();
        }
        bp->gamma.grad.data += sum_gy_xhat;
        bp->beta.grad.data += sum_gy;
        if (!t.requires_grad(input)) return;
        Tensor<Scalar>& gx = t.grad(input);
        const Array gamma = bp->gamma.value.data;
        if (mode == Mode::kTrain) {
          // d/dx of gamma * (x - mean(x)) / std(x)
          const Array a = gamma * inv_std / Scalar(count);
          for (int n = 0; n < s.n; ++n) {
            auto g = gx.sample(n).array();
            const auto gyn = gy.sample(n).array();
            const auto xh = xhat.sample(n).array();
            g += ((gyn * Scalar(count)).colwise() - sum_gy - (xh.colwise() * sum_gy_xhat)).colwise() * a;
          }
        } else {
          const Array a = gamma * inv_std;
          for (int n = 0; n < s.n; ++n) gx.sample(n).array() += gy.sample(n).array().colwise() * a;
        }
      });
}

/// 2x2 / stride-2 max pooling. Ties route the gradient to the first element
/// in scan order.
template <typename Scalar>
Var max_pool2(Tape<Scalar>& tape, Var input) {
  const Shape s = tape.shape(input);
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw std::invalid_argument("max_pool2: spatial dims must be even, got " + to_string(s));
  }
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  const Tensor<Scalar>& x = tape.value(input);
  Tensor<Scalar> out(os);
  std::vector<std::ptrdiff_t> argmax(static_cast<std::size_t>(os.size()));
  std::ptrdiff_t o = 0;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const std::ptrdiff_t base = (static_cast<std::ptrdiff_t>(n) * s.c + c) * s.plane();
      for (int y = 0; y < os.h; ++y) {
        for (int xo = 0; xo < os.w; ++xo, ++o) {
          std::ptrdiff_t best = base + (2 * y) * s.w + 2 * xo;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const std::ptrdiff_t idx = base + (2 * y + dy) * s.w + 2 * xo + dx;
              if (x.data[idx] > x.data[best]) best = idx;
            }
          }
          argmax[static_cast<std::size_t>(o)] = best;
          out.data[o] = x.data[best];
        }
      }
    }
  }
  return tape.record(std::move(out), [input, argmax = std::move(argmax)](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const Tensor<Scalar>& gy = t.grad(self);
    Tensor<Scalar>& gx = t.grad(input);
    for (std::size_t i = 0; i < argmax.size(); ++i) gx.data[argmax[i]] += gy.data[static_cast<Eigen::Index>(i)];
  });
}

/// Nearest-neighbour 2x up-sampling.
template <typename Scalar>
Var upsample2(Tape<Scalar>& tape, Var input) {
  const Shape s = tape.shape(input);
  const Shape os{s.n, s.c, s.h * 2, s.w * 2};
  const Tensor<Scalar>& x = tape.value(input);
  Tensor<Scalar> out(os);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < os.h; ++y)
        for (int xo = 0; xo < os.w; ++xo) out.at(n, c, y, xo) = x.at(n, c, y / 2, xo / 2);
  return tape.record(std::move(out), [input, s, os](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const Tensor<Scalar>& gy = t.grad(self);
    Tensor<Scalar>& gx = t.grad(input);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < os.h; ++y)
          for (int xo = 0; xo < os.w; ++xo) gx.at(n, c, y / 2, xo / 2) += gy.at(n, c, y, xo);
  });
}

template <typename Scalar>
Var relu(Tape<Scalar>& tape, Var input) {
  Tensor<Scalar> out = tape.value(input);
  out.data = out.data.max(Scalar(0));
  return tape.record(std::move(out), [input](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const auto& x = t.value(input).data;
    t.grad(input).data += (x > Scalar(0)).select(t.grad(self).data, Scalar(0));
  });
}

template <typename Scalar>
Var sigmoid(Tape<Scalar>& tape, Var input) {
  Tensor<Scalar> out = tape.value(input);
  out.data = Scalar(1) / (Scalar(1) + (-out.data).exp());
  return tape.record(std::move(out), [input](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const auto& y = t.value(self).data;
    t.grad(input).data += t.grad(self).data * y * (Scalar(1) - y);
  });
}

/// Softmax across the channel axis, stabilized by subtracting the channel max.
template <typename Scalar>
Var softmax_channels(Tape<Scalar>& tape, Var input) {
  const Shape s = tape.shape(input);
  Tensor<Scalar> out = tape.value(input);
  for (int n = 0; n < s.n; ++n) {
    auto m = out.sample(n);
    const auto mx = m.colwise().maxCoeff().eval();
    m.rowwise() -= mx;
    m = m.array().exp().matrix();
    const auto sum = m.colwise().sum().eval();
    m.array().rowwise() /= sum.array();
  }
  return tape.record(std::move(out), [input, s](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const Tensor<Scalar>& y = t.value(self);
    const Tensor<Scalar>& gy = t.grad(self);
    Tensor<Scalar>& gx = t.grad(input);
    for (int n = 0; n < s.n; ++n) {
      const auto yn = y.sample(n).array();
      const auto dot = (yn * gy.sample(n).array()).colwise().sum().eval();
      gx.sample(n).array() += yn * (gy.sample(n).array().rowwise() - dot);
    }
  });
}

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  require_shape(tape.shape(b), tape.shape(a), "add");
  Tensor<Scalar> out = tape.value(a);
  out.data += tape.value(b).data;
  return tape.record(std::move(out), [a, b](Tape<Scalar>& t, Var self) {
    if (t.requires_grad(a)) t.grad(a).data += t.grad(self).data;
    if (t.requires_grad(b)) t.grad(b).data += t.grad(self).data;
  });
}

/// Stacks tensors along the batch axis.
template <typename Scalar>
Var concat_batch(Tape<Scalar>& tape, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_batch: no inputs");
  Shape s = tape.shape(parts.front());
  s.n = 0;
  for (Var p : parts) {
    const Shape ps = tape.shape(p);
    if (ps.c != s.c || ps.h != s.h || ps.w != s.w) throw std::invalid_argument("concat_batch: shape mismatch");
    s.n += ps.n;
  }
  Tensor<Scalar> out(s);
  std::ptrdiff_t offset = 0;
  for (Var p : parts) {
    const auto& d = tape.value(p).data;
    out.data.segment(offset, d.size()) = d;
    offset += d.size();
  }
  return tape.record(std::move(out), [parts](Tape<Scalar>& t, Var self) {
    std::ptrdiff_t off = 0;
    for (Var p : parts) {
      const std::ptrdiff_t len = t.value(p).size();
      if (t.requires_grad(p)) t.grad(p).data += t.grad(self).data.segment(off, len);
      off += len;
    }
  });
}

/// Rows [begin, begin+count) of the batch axis.
template <typename Scalar>
Var slice_batch(Tape<Scalar>& tape, Var input, int begin, int count) {
  const Shape s = tape.shape(input);
  if (begin < 0 || count < 0 || begin + count > s.n) throw std::out_of_range("slice_batch");
  const Shape os{count, s.c, s.h, s.w};
  Tensor<Scalar> out(os);
  out.data = tape.value(input).data.segment(begin * s.sample(), os.size());
  return tape.record(std::move(out), [input, begin, s, os](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    t.grad(input).data.segment(begin * s.sample(), os.size()) += t.grad(self).data;
  });
}

/// Stacks tensors along the channel axis.
template <typename Scalar>
Var concat_channels(Tape<Scalar>& tape, Var a, Var b) {
  const Shape sa = tape.shape(a);
  const Shape sb = tape.shape(b);
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
    throw std::invalid_argument("concat_channels: shape mismatch " + to_string(sa) + " vs " + to_string(sb));
  }
  Tensor<Scalar> out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    out.sample(n).topRows(sa.c) = tape.value(a).sample(n);
    out.sample(n).bottomRows(sb.c) = tape.value(b).sample(n);
  }
  return tape.record(std::move(out), [a, b, sa, sb](Tape<Scalar>& t, Var self) {
    const Tensor<Scalar>& gy = t.grad(self);
    for (int n = 0; n < sa.n; ++n) {
      if (t.requires_grad(a)) t.grad(a).sample(n) += gy.sample(n).topRows(sa.c);
      if (t.requires_grad(b)) t.grad(b).sample(n) += gy.sample(n).bottomRows(sb.c);
    }
  });
}

/// Channel `c` as an (N, 1, H, W) tensor.
template <typename Scalar>
Var select_channel(Tape<Scalar>& tape, Var input, int channel) {
  const Shape s = tape.shape(input);
  if (channel < 0 || channel >= s.c) throw std::out_of_range("select_channel");
  Tensor<Scalar> out(Shape{s.n, 1, s.h, s.w});
  for (int n = 0; n < s.n; ++n) out.sample(n) = tape.value(input).sample(n).row(channel);
  return tape.record(std::move(out), [input, channel, s](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    for (int n = 0; n < s.n; ++n) t.grad(input).sample(n).row(channel) += t.grad(self).sample(n);
  });
}

/// Mean over H and W, producing (N, C, 1, 1).
template <typename Scalar>
Var global_avg_pool(Tape<Scalar>& tape, Var input) {
  const Shape s = tape.shape(input);
  Tensor<Scalar> out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) out.sample(n) = tape.value(input).sample(n).rowwise().mean();
  return tape.record(std::move(out), [input, s](Tape<Scalar>& t, Var self) {
    if (!t.requires_grad(input)) return;
    const Scalar inv = Scalar(1) / Scalar(s.plane());
    for (int n = 0; n < s.n; ++n) {
      t.grad(input).sample(n).colwise() += t.grad(self).sample(n).col(0) * inv;
    }
  });
}

/// Weighted sum of scalar nodes.
template <typename Scalar>
Var weighted_sum(Tape<Scalar>& tape, const std::vector<Var>& terms, const std::vector<Scalar>& weights) {
  if (terms.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
  Tensor<Scalar> out(detail::scalar_shape());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (tape.value(terms[i]).size() != 1) throw std::invalid_argument("weighted_sum: terms must be scalars");
    out.data[0] += weights[i] * tape.value(terms[i]).data[0];
  }
  return tape.record(std::move(out), [terms, weights](Tape<Scalar>& t, Var self) {
    const Scalar g = t.grad(self).data[0];
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (weights[i] != Scalar(0) && t.requires_grad(terms[i])) t.grad(terms[i]).data[0] += weights[i] * g;
    }
  });
}

}  // namespace fforge
