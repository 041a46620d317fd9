#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "rowless/errors.hpp"

namespace rowless {

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw dimension_error("dot: length mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  T acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
  return dot(std::span<const T>(a), std::span<const T>(b));
}

// Branch-on-sign logistic. The result is clamped to the open interval (0, 1)
// so that extreme scores keep a usable gradient sign and stay valid inputs to
// log/ranking code.
template <typename T>
T sigmoid(T x) {
  T s;
  if (x >= T(0)) {
    const T e = std::exp(-x);
    s = T(1) / (T(1) + e);
  } else {
    const T e = std::exp(x);
    s = e / (T(1) + e);
  }
  if (s <= T(0)) s = std::numeric_limits<T>::denorm_min();
  const T one_minus = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  if (s >= T(1)) s = one_minus;
  return s;
}

// log(sigmoid(x)) without overflow on either tail.
template <typename T>
T log_sigmoid(T x) {
  if (x >= T(0)) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Probability that (row, column) holds: sigmoid of the embedding dot product.
template <typename T>
T sigmoid_score(std::span<const T> row_vec, std::span<const T> col_vec) {
  return sigmoid(dot(row_vec, col_vec));
}

template <typename T>
T sigmoid_score(const std::vector<T>& row_vec, const std::vector<T>& col_vec) {
  return sigmoid(dot(row_vec, col_vec));
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// In-place softmax, stabilized by subtracting the max score.
template <typename T>
void softmax_inplace(std::vector<T>& scores) {
  T m = scores[0];
  for (T s : scores) m = std::max(m, s);
  T total = 0;
  for (T& s : scores) {
    s = std::exp(s - m);
    total += s;
  }
  for (T& s : scores) s /= total;
}

}  // namespace rowless
