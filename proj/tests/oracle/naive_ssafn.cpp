#include "naive_ssafn.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using shtnet::Tensor;
using shtnet::ssafn::Weights;

namespace {

using Vec = std::vector<double>;

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out[o] = b[o] + sum_i x[i] * W[i][o]; W stored row-major [in, out].
Vec dense(const Vec& x, const Weights& w, const std::string& name) {
  const Tensor& W = w.at(name + ".weight");
  const Tensor& b = w.at(name + ".bias");
  const std::size_t in = W.dim(0);
  const std::size_t out = W.dim(1);
  Vec y(out);
  for (std::size_t o = 0; o < out; ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < in; ++i) s += x[i] * W[i * out + o];
    y[o] = s;
  }
  return y;
}

double idx3(const Tensor& a, std::size_t c, std::size_t t, std::size_t f) {
  return a[(c * a.dim(1) + t) * a.dim(2) + f];
}

void layer_norm(Vec& v, const Weights& w, const std::string& name, double eps) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  const Tensor& g = w.at(name + ".weight");
  const Tensor& b = w.at(name + ".bias");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mean) / std::sqrt(var + eps) * g[i] + b[i];
}

void softmax(Vec& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    s += x;
  }
  for (double& x : v) x /= s;
}

}  // namespace

Tensor cbam(const Tensor& a, const Weights& w, const std::string& prefix) {
  const std::size_t C = a.dim(0), T = a.dim(1), F = a.dim(2);
  Vec pooled(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) pooled[c] += idx3(a, c, t, f);
    }
    pooled[c] /= static_cast<double>(T * F);
  }
  Vec hidden = dense(pooled, w, prefix + ".fc1");
  for (double& h : hidden) h = std::max(0.0, h);
  Vec gate = dense(hidden, w, prefix + ".fc2");
  for (double& g : gate) g = sig(g);

  Tensor x(a.shape());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) x[(c * T + t) * F + f] = idx3(a, c, t, f) * gate[c];
    }
  }

  const Tensor& k = w.at(prefix + ".conv.weight");
  const double bias = w.at(prefix + ".conv.bias")[0];
  const long ks = static_cast<long>(k.dim(1));
  Tensor out(a.shape());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t f = 0; f < F; ++f) {
      double s = bias;
      for (long dy = 0; dy < ks; ++dy) {
        for (long dx = 0; dx < ks; ++dx) {
          const long tt = static_cast<long>(t) + dy - ks / 2;
          const long ff = static_cast<long>(f) + dx - ks / 2;
          if (tt < 0 || ff < 0 || tt >= static_cast<long>(T) || ff >= static_cast<long>(F)) continue;
          double mean = 0.0;
          double mx = -INFINITY;
          for (std::size_t c = 0; c < C; ++c) {
            const double v = idx3(x, c, static_cast<std::size_t>(tt), static_cast<std::size_t>(ff));
            mean += v;
            mx = std::max(mx, v);
          }
          mean /= static_cast<double>(C);
          s += k[(0 * ks + dy) * ks + dx] * mean + k[(1 * ks + dy) * ks + dx] * mx;
        }
      }
      const double g = sig(s);
      for (std::size_t c = 0; c < C; ++c) out[(c * T + t) * F + f] = idx3(x, c, t, f) * g;
    }
  }
  return out;
}

Tensor coord(const Tensor& a, const Weights& w, const std::string& prefix) {
  const std::size_t C = a.dim(0), T = a.dim(1), F = a.dim(2);
  auto hswish = [](double v) { return v * std::min(6.0, std::max(0.0, v + 3.0)) / 6.0; };
  std::vector<Vec> gate_t(T), gate_f(F);
  for (std::size_t t = 0; t < T; ++t) {
    Vec d(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t f = 0; f < F; ++f) d[c] += idx3(a, c, t, f) / static_cast<double>(F);
    }
    Vec z = dense(d, w, prefix + ".reduce");
    for (double& v : z) v = hswish(v);
    gate_t[t] = dense(z, w, prefix + ".time");
    for (double& v : gate_t[t]) v = sig(v);
  }
  for (std::size_t f = 0; f < F; ++f) {
    Vec d(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < T; ++t) d[c] += idx3(a, c, t, f) / static_cast<double>(T);
    }
    Vec z = dense(d, w, prefix + ".reduce");
    for (double& v : z) v = hswish(v);
    gate_f[f] = dense(z, w, prefix + ".freq");
    for (double& v : gate_f[f]) v = sig(v);
  }
  Tensor out(a.shape());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) out[(c * T + t) * F + f] = idx3(a, c, t, f) * gate_t[t][c] * gate_f[f][c];
    }
  }
  return out;
}

Tensor joint_attention(const Tensor& a, const Weights& w, int block) {
  const std::string p = "ja" + std::to_string(block);
  auto plus = [](const Tensor& x, const Tensor& y) {
    Tensor z(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
    return z;
  };
  return plus(a, coord(plus(a, cbam(plus(a, cbam(a, w, p + ".cbam1")), w, p + ".cbam2")), w, p + ".coord"));
}

Tensor rsacc(const Tensor& a, const Weights& w) {
  const auto& cfg = w.config();
  const std::size_t C = a.dim(0), T = a.dim(1), F = a.dim(2);
  Tensor x(a.shape());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t f = 0; f < F; ++f) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += std::log(idx3(a, c, t, f) + cfg.log_floor);
      mean /= static_cast<double>(T);
      double var = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        const double d = std::log(idx3(a, c, t, f) + cfg.log_floor) - mean;
        var += d * d;
      }
      var /= static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) {
        x[(c * T + t) * F + f] = (std::log(idx3(a, c, t, f) + cfg.log_floor) - mean) / std::sqrt(var + cfg.mvn_eps);
      }
    }
  }
  Tensor out(std::vector<std::size_t>{T, F});
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<Vec> q(C), k(C);
    Vec v(C);
    for (std::size_t c = 0; c < C; ++c) {
      Vec row(F);
      for (std::size_t f = 0; f < F; ++f) row[f] = idx3(x, c, t, f);
      q[c] = dense(row, w, "rsacc.query");
      k[c] = dense(row, w, "rsacc.key");
      v[c] = dense(row, w, "rsacc.value")[0];
    }
    for (std::size_t i = 0; i < C; ++i) {
      Vec s(C);
      for (std::size_t j = 0; j < C; ++j) {
        double d = 0.0;
        for (std::size_t e = 0; e < cfg.embed_dim; ++e) d += q[i][e] * k[j][e];
        s[j] = d / std::sqrt(static_cast<double>(cfg.embed_dim));
      }
      softmax(s);
      double weight = 0.0;
      for (std::size_t j = 0; j < C; ++j) weight += s[j] * v[j];
      for (std::size_t f = 0; f < F; ++f) out[t * F + f] += weight * idx3(a, i, t, f);
    }
  }
  return out;
}

Tensor mhsa(const Tensor& x, const Weights& w) {
  const auto& cfg = w.config();
  const std::size_t T = x.dim(0), F = x.dim(1), D = cfg.attn_dim, H = cfg.heads, dh = D / H;
  std::vector<Vec> h(T), q(T), k(T), v(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec row(x.data() + t * F, x.data() + (t + 1) * F);
    h[t] = dense(row, w, "mhsa.in_proj");
  }
  for (std::size_t t = 0; t < T; ++t) {
    q[t] = dense(h[t], w, "mhsa.query");
    k[t] = dense(h[t], w, "mhsa.key");
    v[t] = dense(h[t], w, "mhsa.value");
  }
  std::vector<Vec> ctx(T, Vec(D, 0.0));
  for (std::size_t head = 0; head < H; ++head) {
    for (std::size_t i = 0; i < T; ++i) {
      Vec s(T);
      for (std::size_t j = 0; j < T; ++j) {
        double d = 0.0;
        for (std::size_t e = head * dh; e < (head + 1) * dh; ++e) d += q[i][e] * k[j][e];
        s[j] = d / std::sqrt(static_cast<double>(dh));
      }
      softmax(s);
      for (std::size_t j = 0; j < T; ++j) {
        for (std::size_t e = head * dh; e < (head + 1) * dh; ++e) ctx[i][e] += s[j] * v[j][e];
      }
    }
  }
  Tensor out(x.shape());
  for (std::size_t t = 0; t < T; ++t) {
    Vec attn = dense(ctx[t], w, "mhsa.out");
    Vec y(D);
    for (std::size_t e = 0; e < D; ++e) y[e] = h[t][e] + attn[e];
    layer_norm(y, w, "mhsa.norm1", cfg.layer_norm_eps);
    if (cfg.ffn_dim > 0) {
      Vec inner = dense(y, w, "mhsa.ffn1");
      for (double& u : inner) u = std::max(0.0, u);
      Vec ff = dense(inner, w, "mhsa.ffn2");
      for (std::size_t e = 0; e < D; ++e) y[e] += ff[e];
      layer_norm(y, w, "mhsa.norm2", cfg.layer_norm_eps);
    }
    Vec g = dense(y, w, "mhsa.out_proj");
    for (std::size_t f = 0; f < F; ++f) out[t * F + f] = x[t * F + f] * g[f];
  }
  return out;
}

Tensor forward(const Tensor& a, const Weights& w) {
  const auto& cfg = w.config();
  Tensor x = a;
  if (cfg.joint_attention) x = joint_attention(joint_attention(x, w, 1), w, 2);
  Tensor y(std::vector<std::size_t>{a.dim(1), a.dim(2)});
  if (cfg.rsacc) {
    y = rsacc(x, w);
  } else {
    const std::size_t C = x.dim(0), T = x.dim(1), F = x.dim(2);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t f = 0; f < F; ++f) {
        double s = 0.0;
        for (std::size_t c = 0; c < C; ++c) s += idx3(x, c, t, f);
        y[t * F + f] = s / static_cast<double>(C);
      }
    }
  }
  return cfg.mhsa ? mhsa(y, w) : y;
}

}  // namespace oracle
