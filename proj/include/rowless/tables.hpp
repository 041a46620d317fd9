#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rowless/errors.hpp"
#include "rowless/math.hpp"
#include "rowless/rng.hpp"

namespace rowless {

// Adam hyperparameters. beta1/beta2 are fixed defaults; the learning rate and
// epsilon vary per experiment and must be stated explicitly in run configs.
template <typename T>
struct AdamOptions {
  T learning_rate = T(0.01);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
};

// One Adam update of a single parameter slice. The slice keeps its own step
// count so bias correction stays exact under sparse updates: a slice that is
// touched for the t-th time is corrected as if it had seen t updates, no
// matter how many batches went by in between.
template <typename T>
void adam_step(std::span<T> param, std::span<const T> grad, std::span<T> m,
               std::span<T> v, std::int64_t& step, const AdamOptions<T>& opt) {
  if (param.size() != grad.size()) {
    throw dimension_error("adam_step: parameter/gradient length mismatch");
  }
  for (T g : grad) {
    if (!std::isfinite(g)) {
      throw divergence_error("adam_step: non-finite gradient");
    }
  }
  ++step;
  const T bc1 = T(1) - std::pow(opt.beta1, T(step));
  const T bc2 = T(1) - std::pow(opt.beta2, T(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (T(1) - opt.beta1) * grad[i];
    v[i] = opt.beta2 * v[i] + (T(1) - opt.beta2) * grad[i] * grad[i];
    const T m_hat = m[i] / bc1;
    const T v_hat = v[i] / bc2;
    param[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

// Dense parameter matrix with paired Adam moment state. Rows are the sparse
// update granularity.
template <typename T>
struct EmbeddingTable {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> weight;
  std::vector<T> moment1;
  std::vector<T> moment2;
  std::vector<std::int64_t> step;

  bool empty() const { return rows == 0 || cols == 0; }
  std::size_t parameter_count() const { return rows * cols; }

  void resize(std::string table_name, std::size_t r, std::size_t c) {
    name = std::move(table_name);
    rows = r;
    cols = c;
    weight.assign(r * c, T(0));
    moment1.assign(r * c, T(0));
    moment2.assign(r * c, T(0));
    step.assign(r, 0);
  }

  std::span<T> row(std::size_t i) { return {weight.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const {
    return {weight.data() + i * cols, cols};
  }

  void init_uniform(Rng& rng, T scale) {
    for (T& w : weight) {
      w = static_cast<T>((2.0 * rng.next_real() - 1.0) * scale);
    }
  }

  void apply_row_update(std::size_t i, std::span<const T> grad,
                        const AdamOptions<T>& opt) {
    adam_step(row(i), grad,
              std::span<T>(moment1.data() + i * cols, cols),
              std::span<T>(moment2.data() + i * cols, cols), step[i], opt);
  }
};

// Gradients accumulated by one batch, keyed by (table id, row index).
// An ordered map keeps the optimizer apply order deterministic.
template <typename T>
class GradSink {
 public:
  using Key = std::pair<int, std::size_t>;

  explicit GradSink(T clip_norm = T(0)) : clip_norm_(clip_norm) {}

  void add(int table, std::size_t row, std::span<const T> grad) {
    auto& slot = grads_[{table, row}];
    if (slot.empty()) slot.assign(grad.size(), T(0));
    for (std::size_t i = 0; i < grad.size(); ++i) slot[i] += grad[i];
  }

  void scale(T factor) {
    for (auto& [key, g] : grads_) {
      for (T& x : g) x *= factor;
    }
  }

  T global_norm() const {
    T sq = 0;
    for (const auto& [key, g] : grads_) {
      for (T x : g) sq += x * x;
    }
    return std::sqrt(sq);
  }

  // Rescales every accumulated entry so the global L2 norm does not exceed
  // clip_norm. Identity when the norm is already within bounds or when no
  // clip norm is set. Returns the pre-clip norm.
  T clip() {
    const T norm = global_norm();
    if (clip_norm_ > T(0) && norm > clip_norm_) {
      scale(clip_norm_ / norm);
    }
    return norm;
  }

  T clip_norm() const { return clip_norm_; }
  void set_clip_norm(T c) { clip_norm_ = c; }
  bool empty() const { return grads_.empty(); }
  std::size_t size() const { return grads_.size(); }
  void clear() { grads_.clear(); }

  const std::map<Key, std::vector<T>>& entries() const { return grads_; }
  std::map<Key, std::vector<T>>& entries() { return grads_; }

 private:
  std::map<Key, std::vector<T>> grads_;
  T clip_norm_;
};

// Applies every accumulated gradient to its owning table row. l2 weight decay
// is added to the gradient of touched rows only, before the Adam step.
template <typename T>
void apply_updates(std::vector<EmbeddingTable<T>*>& tables, GradSink<T>& sink,
                   const AdamOptions<T>& opt, T l2) {
  for (auto& [key, grad] : sink.entries()) {
    EmbeddingTable<T>* table = tables[static_cast<std::size_t>(key.first)];
    if (l2 > T(0)) {
      auto w = table->row(key.second);
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += l2 * w[i];
    }
    table->apply_row_update(key.second, grad, opt);
  }
}

}  // namespace rowless
