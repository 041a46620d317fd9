#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rowless/errors.hpp"
#include "rowless/tables.hpp"
#include "rowless/vocab.hpp"

namespace rowless {

// Gate packing order inside the stacked LSTM weight tables. Rows
// [g*H, (g+1)*H) of wx/wh and bias entries [g*H, (g+1)*H) belong to gate g.
enum LstmGate { kGateInput = 0, kGateForget = 1, kGateCandidate = 2, kGateOutput = 3 };

template <typename T>
struct LstmStep {
  TokId token;
  std::vector<T> h_prev, c_prev;
  std::vector<T> i, f, g, o, c, tanh_c;
};

template <typename T>
struct LstmCache {
  std::vector<LstmStep<T>> steps;
  std::vector<T> hidden;        // final hidden state
  std::vector<T> projected;     // hidden mapped to the model dimension (may equal hidden)
  bool has_projection = false;
};

// Single-layer LSTM consuming the token sequence left to right from an
// all-zero initial state. The final hidden state is the column encoding.
template <typename T>
LstmCache<T> lstm_forward(const EmbeddingTable<T>& tokens,
                          const EmbeddingTable<T>& wx,
                          const EmbeddingTable<T>& wh,
                          const EmbeddingTable<T>& bias,
                          const EmbeddingTable<T>& proj,
                          std::span<const TokId> seq) {
  if (seq.empty()) throw encoding_error("lstm_forward: empty token sequence");
  const std::size_t hidden = wh.cols;
  const std::size_t embed = wx.cols;
  LstmCache<T> cache;
  cache.steps.reserve(seq.size());
  std::vector<T> h(hidden, T(0)), c(hidden, T(0)), z(4 * hidden);
  for (TokId tok : seq) {
    LstmStep<T> step;
    step.token = tok;
    step.h_prev = h;
    step.c_prev = c;
    const auto x = tokens.row(tok);
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
      T acc = bias.weight[r];
      const auto wx_row = wx.row(r);
      for (std::size_t e = 0; e < embed; ++e) acc += wx_row[e] * x[e];
      const auto wh_row = wh.row(r);
      for (std::size_t u = 0; u < hidden; ++u) acc += wh_row[u] * step.h_prev[u];
      z[r] = acc;
    }
    step.i.resize(hidden);
    step.f.resize(hidden);
    step.g.resize(hidden);
    step.o.resize(hidden);
    step.c.resize(hidden);
    step.tanh_c.resize(hidden);
    for (std::size_t u = 0; u < hidden; ++u) {
      step.i[u] = sigmoid(z[kGateInput * hidden + u]);
      step.f[u] = sigmoid(z[kGateForget * hidden + u]);
      step.g[u] = std::tanh(z[kGateCandidate * hidden + u]);
      step.o[u] = sigmoid(z[kGateOutput * hidden + u]);
      step.c[u] = step.f[u] * step.c_prev[u] + step.i[u] * step.g[u];
      step.tanh_c[u] = std::tanh(step.c[u]);
      h[u] = step.o[u] * step.tanh_c[u];
      c[u] = step.c[u];
    }
    cache.steps.push_back(std::move(step));
  }
  cache.hidden = h;
  if (!proj.empty()) {
    cache.has_projection = true;
    cache.projected.assign(proj.rows, T(0));
    for (std::size_t r = 0; r < proj.rows; ++r) {
      cache.projected[r] = dot(proj.row(r), std::span<const T>(h));
    }
  } else {
    cache.projected = h;
  }
  return cache;
}

// Backpropagation through time. d_out is the gradient at the encoder output
// (after projection when one is configured). Parameter gradients go to the
// sink under the given table ids; nothing else is touched.
template <typename T>
void lstm_backward(const EmbeddingTable<T>& tokens, const EmbeddingTable<T>& wx,
                   const EmbeddingTable<T>& wh, const EmbeddingTable<T>& bias,
                   const EmbeddingTable<T>& proj, const LstmCache<T>& cache,
                   std::span<const T> d_out, GradSink<T>& sink, int tokens_id,
                   int wx_id, int wh_id, int bias_id, int proj_id) {
  const std::size_t hidden = wh.cols;
  const std::size_t embed = wx.cols;

  std::vector<T> dh(hidden, T(0));
  if (cache.has_projection) {
    for (std::size_t r = 0; r < proj.rows; ++r) {
      const auto p_row = proj.row(r);
      std::vector<T> dp(p_row.size());
      for (std::size_t u = 0; u < hidden; ++u) {
        dp[u] = d_out[r] * cache.hidden[u];
        dh[u] += d_out[r] * p_row[u];
      }
      sink.add(proj_id, r, dp);
    }
  } else {
    for (std::size_t u = 0; u < hidden; ++u) dh[u] = d_out[u];
  }

  std::vector<T> dwx(4 * hidden * embed, T(0));
  std::vector<T> dwh(4 * hidden * hidden, T(0));
  std::vector<T> db(4 * hidden, T(0));
  std::vector<T> dc(hidden, T(0)), dz(4 * hidden);

  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const LstmStep<T>& s = cache.steps[t];
    for (std::size_t u = 0; u < hidden; ++u) {
      const T do_ = dh[u] * s.tanh_c[u];
      dc[u] += dh[u] * s.o[u] * (T(1) - s.tanh_c[u] * s.tanh_c[u]);
      const T di = dc[u] * s.g[u];
      const T df = dc[u] * s.c_prev[u];
      const T dg = dc[u] * s.i[u];
      dz[kGateInput * hidden + u] = di * s.i[u] * (T(1) - s.i[u]);
      dz[kGateForget * hidden + u] = df * s.f[u] * (T(1) - s.f[u]);
      dz[kGateCandidate * hidden + u] = dg * (T(1) - s.g[u] * s.g[u]);
      dz[kGateOutput * hidden + u] = do_ * s.o[u] * (T(1) - s.o[u]);
    }
    const auto x = tokens.row(s.token);
    std::vector<T> dx(embed, T(0));
    std::vector<T> dh_prev(hidden, T(0));
    for (std::size_t r = 0; r < 4 * hidden; ++r) {
      const T dzr = dz[r];
      db[r] += dzr;
      T* dwx_row = dwx.data() + r * embed;
      const auto wx_row = wx.row(r);
      for (std::size_t e = 0; e < embed; ++e) {
        dwx_row[e] += dzr * x[e];
        dx[e] += dzr * wx_row[e];
      }
      T* dwh_row = dwh.data() + r * hidden;
      const auto wh_row = wh.row(r);
      for (std::size_t u = 0; u < hidden; ++u) {
        dwh_row[u] += dzr * s.h_prev[u];
        dh_prev[u] += dzr * wh_row[u];
      }
    }
    sink.add(tokens_id, s.token, dx);
    for (std::size_t u = 0; u < hidden; ++u) {
      dh[u] = dh_prev[u];
      dc[u] = dc[u] * s.f[u];
    }
  }

  for (std::size_t r = 0; r < 4 * hidden; ++r) {
    sink.add(wx_id, r, std::span<const T>(dwx.data() + r * embed, embed));
    sink.add(wh_id, r, std::span<const T>(dwh.data() + r * hidden, hidden));
  }
  sink.add(bias_id, 0, db);
}

}  // namespace rowless
