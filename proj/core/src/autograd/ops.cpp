#include "propspan/autograd/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace propspan::ag {

namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ContractError(std::string(op) + ": " + detail);
}

template <typename T>
void require_rank2(const Tensor<T>& a, const char* op) {
  require(a.defined() && a.rank() == 2, op,
          "expected a rank-2 tensor, got " + (a.defined() ? shape_string(a.shape()) : "undefined"));
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), op,
          "shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

template <typename T, typename F, typename D>
Tensor<T> unary(const char* op, const Tensor<T>& a, F forward, D derivative) {
  std::vector<T> out(a.size());
  const auto x = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(x[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a}, [a, derivative](detail::Node<T>& self) {
    auto ga = grad_sink(a);
    if (ga.empty()) return;
    const auto xv = a.values();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * derivative(xv[i], self.value[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul",
          "inner dimensions differ: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  std::vector<T> out(m * n, T{0});
  const T* av = a.values().data();
  const T* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = av[i * k + p];
      if (aip == T{0}) continue;
      const T* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return make_result<T>("matmul", {m, n}, std::move(out), {a, b}, [a, b, m, k, n](detail::Node<T>& self) {
    const T* g = self.grad.data();
    if (auto ga = grad_sink(a); !ga.empty()) {
      const T* bv = b.values().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          T acc{0};
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (auto gb = grad_sink(b); !gb.empty()) {
      const T* av = a.values().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = av[i * k + p];
          if (aip == T{0}) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<T> out(m * n);
  const auto x = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return make_result<T>("transpose", {n, m}, std::move(out), {a}, [a, m, n](detail::Node<T>& self) {
    auto ga = grad_sink(a);
    if (ga.empty()) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [a, b](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    if (auto gb = grad_sink(b); !gb.empty())
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [a, b](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
    if (auto gb = grad_sink(b); !gb.empty())
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [a, b](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * b.values()[i];
    if (auto gb = grad_sink(b); !gb.empty())
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * a.values()[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_result<T>("scale", a.shape(), std::move(out), {a}, [a, factor](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> add_row_vector(const Tensor<T>& a, const Tensor<T>& bias) {
  require_rank2(a, "add_row_vector");
  const std::size_t m = a.dim(0), n = a.dim(1);
  require(bias.size() == n && (bias.rank() == 1 || (bias.rank() == 2 && bias.dim(0) == 1)),
          "add_row_vector",
          "bias " + shape_string(bias.shape()) + " does not match " + shape_string(a.shape()));
  std::vector<T> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.values()[j];
  return make_result<T>("add_row_vector", a.shape(), std::move(out), {a, bias},
                        [a, bias, m, n](detail::Node<T>& self) {
                          if (auto ga = grad_sink(a); !ga.empty())
                            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
                          if (auto gb = grad_sink(bias); !gb.empty())
                            for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
                        });
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  require(!parts.empty(), "concat", "no inputs");
  require(axis <= 1, "concat", "axis must be 0 or 1");
  for (const auto& p : parts) require_rank2(p, "concat");
  const std::size_t other = 1 - axis;
  const std::size_t fixed = parts[0].dim(other);
  std::size_t total = 0;
  for (const auto& p : parts) {
    require(p.dim(other) == fixed, "concat",
            "shape mismatch " + shape_string(parts[0].shape()) + " vs " + shape_string(p.shape()));
    total += p.dim(axis);
  }
  const Shape shape = axis == 0 ? Shape{total, fixed} : Shape{fixed, total};
  std::vector<T> out(shape_size(shape));
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  if (axis == 0) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.values().begin(), p.values().end(), out.begin() + static_cast<std::ptrdiff_t>(offset));
      offset += p.size();
    }
  } else {
    std::size_t col = 0;
    for (const auto& p : parts) {
      const std::size_t w = p.dim(1);
      for (std::size_t i = 0; i < fixed; ++i)
        for (std::size_t j = 0; j < w; ++j) out[i * total + col + j] = p.values()[i * w + j];
      col += w;
    }
  }
  return make_result<T>("concat", shape, std::move(out), inputs,
                        [inputs, axis, fixed, total](detail::Node<T>& self) {
                          std::size_t offset = 0;
                          for (const auto& p : inputs) {
                            auto gp = grad_sink(p);
                            if (axis == 0) {
                              if (!gp.empty())
                                for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[offset + i];
                              offset += p.size();
                            } else {
                              const std::size_t w = p.dim(1);
                              if (!gp.empty())
                                for (std::size_t i = 0; i < fixed; ++i)
                                  for (std::size_t j = 0; j < w; ++j)
                                    gp[i * w + j] += self.grad[i * total + offset + j];
                              offset += w;
                            }
                          }
                        });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice");
  require(axis <= 1, "slice", "axis must be 0 or 1");
  require(begin <= end && end <= a.dim(axis), "slice",
          "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside " +
              shape_string(a.shape()) + " on axis " + std::to_string(axis));
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (axis == 0) {
    std::vector<T> out(a.values().begin() + static_cast<std::ptrdiff_t>(begin * n),
                       a.values().begin() + static_cast<std::ptrdiff_t>(end * n));
    return make_result<T>("slice", {end - begin, n}, std::move(out), {a}, [a, begin, n](detail::Node<T>& self) {
      if (auto ga = grad_sink(a); !ga.empty())
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[begin * n + i] += self.grad[i];
    });
  }
  const std::size_t w = end - begin;
  std::vector<T> out(m * w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = a.values()[i * n + begin + j];
  return make_result<T>("slice", {m, w}, std::move(out), {a}, [a, begin, m, n, w](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) ga[i * n + begin + j] += self.grad[i * w + j];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  require(shape_size(shape) == a.size(), "reshape",
          "cannot reshape " + shape_string(a.shape()) + " to " + shape_string(shape));
  std::vector<T> out(a.values().begin(), a.values().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {a}, [a](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const int> ids) {
  require_rank2(table, "embedding_lookup");
  const std::size_t vocab = table.dim(0), n = table.dim(1);
  std::vector<int> rows(ids.begin(), ids.end());
  std::vector<T> out(rows.size() * n);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    require(rows[t] >= 0 && static_cast<std::size_t>(rows[t]) < vocab, "embedding_lookup",
            "id " + std::to_string(rows[t]) + " outside table " + shape_string(table.shape()));
    std::copy_n(table.values().begin() + static_cast<std::ptrdiff_t>(rows[t] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(t * n));
  }
  return make_result<T>("embedding_lookup", {rows.size(), n}, std::move(out), {table},
                        [table, rows, n](detail::Node<T>& self) {
                          auto gt = grad_sink(table);
                          if (gt.empty()) return;
                          for (std::size_t t = 0; t < rows.size(); ++t)
                            for (std::size_t j = 0; j < n; ++j)
                              gt[static_cast<std::size_t>(rows[t]) * n + j] += self.grad[t * n + j];
                        });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, std::size_t axis) {
  require_rank2(a, "softmax");
  require(axis <= 1, "softmax", "axis must be 0 or 1");
  const std::size_t m = a.dim(0), n = a.dim(1);
  // Address element e of lane l as base(l) + e * stride.
  const std::size_t lanes = axis == 1 ? m : n;
  const std::size_t length = axis == 1 ? n : m;
  const std::size_t stride = axis == 1 ? 1 : n;
  auto base = [=](std::size_t l) { return axis == 1 ? l * n : l; };

  std::vector<T> out(a.size());
  const auto x = a.values();
  for (std::size_t l = 0; l < lanes; ++l) {
    T hi = -std::numeric_limits<T>::infinity();
    for (std::size_t e = 0; e < length; ++e) hi = std::max(hi, x[base(l) + e * stride]);
    T total{0};
    for (std::size_t e = 0; e < length; ++e) {
      const auto idx = base(l) + e * stride;
      out[idx] = std::exp(x[idx] - hi);
      total += out[idx];
    }
    for (std::size_t e = 0; e < length; ++e) out[base(l) + e * stride] /= total;
  }
  return make_result<T>("softmax", a.shape(), std::move(out), {a},
                        [a, lanes, length, stride, base](detail::Node<T>& self) {
                          auto ga = grad_sink(a);
                          if (ga.empty()) return;
                          for (std::size_t l = 0; l < lanes; ++l) {
                            T dot{0};
                            for (std::size_t e = 0; e < length; ++e) {
                              const auto idx = base(l) + e * stride;
                              dot += self.grad[idx] * self.value[idx];
                            }
                            for (std::size_t e = 0; e < length; ++e) {
                              const auto idx = base(l) + e * stride;
                              ga[idx] += self.value[idx] * (self.grad[idx] - dot);
                            }
                          }
                        });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta, T epsilon) {
  require_rank2(a, "layer_norm");
  const std::size_t m = a.dim(0), n = a.dim(1);
  require(gamma.size() == n && beta.size() == n, "layer_norm",
          "gain/bias " + shape_string(gamma.shape()) + "/" + shape_string(beta.shape()) +
              " do not match " + shape_string(a.shape()));
  std::vector<T> out(a.size());
  auto normalized = std::make_shared<std::vector<T>>(a.size());
  auto inv_std = std::make_shared<std::vector<T>>(m);
  const auto x = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += x[i * n + j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (x[i * n + j] - mu) * (x[i * n + j] - mu);
    var /= static_cast<T>(n);
    const T inv = T{1} / std::sqrt(var + epsilon);
    (*inv_std)[i] = inv;
    for (std::size_t j = 0; j < n; ++j) {
      const T xh = (x[i * n + j] - mu) * inv;
      (*normalized)[i * n + j] = xh;
      out[i * n + j] = gamma.values()[j] * xh + beta.values()[j];
    }
  }
  return make_result<T>(
      "layer_norm", a.shape(), std::move(out), {a, gamma, beta},
      [a, gamma, beta, normalized, inv_std, m, n](detail::Node<T>& self) {
        const auto& xh = *normalized;
        if (auto gg = grad_sink(gamma); !gg.empty())
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gg[j] += self.grad[i * n + j] * xh[i * n + j];
        if (auto gb = grad_sink(beta); !gb.empty())
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
        auto ga = grad_sink(a);
        if (ga.empty()) return;
        const T count = static_cast<T>(n);
        for (std::size_t i = 0; i < m; ++i) {
          T sum_d{0}, sum_dx{0};
          for (std::size_t j = 0; j < n; ++j) {
            const T d = self.grad[i * n + j] * gamma.values()[j];
            sum_d += d;
            sum_dx += d * xh[i * n + j];
          }
          for (std::size_t j = 0; j < n; ++j) {
            const T d = self.grad[i * n + j] * gamma.values()[j];
            ga[i * n + j] += (*inv_std)[i] / count * (count * d - sum_d - xh[i * n + j] * sum_dx);
          }
        }
      });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  const T inv_sqrt2 = T{1} / std::sqrt(T{2});
  const T inv_sqrt_2pi = T{1} / std::sqrt(T{2} * std::numbers::pi_v<T>);
  return unary<T>(
      "gelu", a, [=](T x) { return T{0.5} * x * (T{1} + std::erf(x * inv_sqrt2)); },
      [=](T x, T) {
        const T cdf = T{0.5} * (T{1} + std::erf(x * inv_sqrt2));
        return cdf + x * inv_sqrt_2pi * std::exp(T{-0.5} * x * x);
      });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary<T>("tanh", a, [](T x) { return std::tanh(x); }, [](T, T y) { return T{1} - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary<T>(
      "sigmoid", a,
      [](T x) {
        if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
        const T e = std::exp(x);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Tensor<T> causal_mask(const Tensor<T>& scores, std::size_t offset) {
  require_rank2(scores, "causal_mask");
  const std::size_t m = scores.dim(0), n = scores.dim(1);
  std::vector<T> out(scores.values().begin(), scores.values().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + offset + 1; j < n; ++j) out[i * n + j] = -std::numeric_limits<T>::infinity();
  return make_result<T>("causal_mask", scores.shape(), std::move(out), {scores},
                        [scores, m, n, offset](detail::Node<T>& self) {
                          auto gs = grad_sink(scores);
                          if (gs.empty()) return;
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n && j <= i + offset; ++j)
                              gs[i * n + j] += self.grad[i * n + j];
                        });
}

template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, bool causal) {
  require_rank2(q, "scaled_dot_attention");
  require_rank2(k, "scaled_dot_attention");
  require_rank2(v, "scaled_dot_attention");
  require(q.dim(1) == k.dim(1) && k.dim(0) == v.dim(0), "scaled_dot_attention",
          "incompatible q/k/v " + shape_string(q.shape()) + " " + shape_string(k.shape()) + " " +
              shape_string(v.shape()));
  require(!causal || k.dim(0) >= q.dim(0), "scaled_dot_attention",
          "causal attention needs at least as many keys as queries");
  auto scores = scale(matmul(q, transpose(k)), T{1} / std::sqrt(static_cast<T>(q.dim(1))));
  if (causal) scores = causal_mask(scores, k.dim(0) - q.dim(0));
  return matmul(softmax(scores, 1), v);
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total{0};
  for (T x : a.values()) total += x;
  return make_result<T>("sum", {1}, {total}, {a}, [a](detail::Node<T>& self) {
    if (auto ga = grad_sink(a); !ga.empty())
      for (auto& g : ga) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  require(a.size() > 0, "mean", "empty tensor");
  return scale(sum(a), T{1} / static_cast<T>(a.size()));
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double probability, Rng& rng) {
  require(probability >= 0.0 && probability < 1.0, "dropout", "probability must lie in [0, 1)");
  if (probability == 0.0) return a;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - probability));
  std::bernoulli_distribution drop(probability);
  std::vector<T> mask(a.size());
  for (auto& m : mask) m = drop(rng) ? T{0} : keep_scale;
  return mul(a, Tensor<T>::constant(a.shape(), std::move(mask)));
}

#define PROPSPAN_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> transpose(const Tensor<T>&);                                                \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> add_row_vector(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                            \
  template Tensor<T> slice(const Tensor<T>&, std::size_t, std::size_t, std::size_t);             \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> embedding_lookup(const Tensor<T>&, std::span<const int>);                   \
  template Tensor<T> softmax(const Tensor<T>&, std::size_t);                                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);        \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> tanh(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> causal_mask(const Tensor<T>&, std::size_t);                                 \
  template Tensor<T> scaled_dot_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                          bool);                                                 \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> mean(const Tensor<T>&);                                                     \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&);

PROPSPAN_INSTANTIATE_OPS(float)
PROPSPAN_INSTANTIATE_OPS(double)
PROPSPAN_INSTANTIATE_OPS(long double)

}  // namespace propspan::ag
