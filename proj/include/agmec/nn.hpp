#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "agmec/error.hpp"
#include "agmec/rng.hpp"

namespace agmec {

/// Fully connected network, ReLU on hidden layers, linear output.
/// Parameters live in one flat vector; layer l stores its weight matrix
/// (out × in, row-major) followed by its bias vector.
class Mlp {
 public:
  struct Cache {
    // act[0] is the input, act[l + 1] the output of layer l.
    std::vector<std::vector<double>> act;
  };

  Mlp() = default;

  /// All parameters zero.
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes))
  {
    if (sizes_.size() < 2) throw ConfigError("network needs at least an input and an output layer");
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw ConfigError("layer sizes must be positive");
      offsets_.push_back(n);
      n += static_cast<std::size_t>(sizes_[l + 1]) * (sizes_[l] + 1);
    }
    params_.assign(n, 0.0);
  }

  /// He initialisation: weights N(0, 2/fan_in), biases zero.
  static Mlp he_init(std::vector<int> sizes, Rng& rng)
  {
    Mlp net(std::move(sizes));
    for (int l = 0; l < net.layers(); ++l) {
      const double scale = std::sqrt(2.0 / net.sizes_[l]);
      for (int o = 0; o < net.sizes_[l + 1]; ++o)
        for (int i = 0; i < net.sizes_[l]; ++i) net.weight(l, o, i) = scale * standard_normal(rng);
    }
    return net;
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double& weight(int l, int o, int i) { return params_[offsets_[l] + o * sizes_[l] + i]; }
  double weight(int l, int o, int i) const { return params_[offsets_[l] + o * sizes_[l] + i]; }
  double& bias(int l, int o) { return params_[bias_offset(l) + o]; }
  double bias(int l, int o) const { return params_[bias_offset(l) + o]; }

  std::vector<double> forward(std::span<const double> x) const
  {
    Cache c;
    return forward(x, c);
  }

  std::vector<double> forward(std::span<const double> x, Cache& cache) const
  {
    if (static_cast<int>(x.size()) != inputs()) throw ConfigError("network input has wrong length");
    cache.act.resize(sizes_.size());
    cache.act[0].assign(x.begin(), x.end());
    for (int l = 0; l < layers(); ++l) {
      const auto& in = cache.act[l];
      auto& out = cache.act[l + 1];
      out.assign(sizes_[l + 1], 0.0);
      const double* w = &params_[offsets_[l]];
      const double* b = &params_[bias_offset(l)];
      const bool hidden = l + 1 < layers();
      for (int o = 0; o < sizes_[l + 1]; ++o) {
        double s = b[o];
        const double* row = w + static_cast<std::size_t>(o) * sizes_[l];
        for (int i = 0; i < sizes_[l]; ++i) s += row[i] * in[i];
        out[o] = hidden && s < 0.0 ? 0.0 : s;
      }
    }
    return cache.act.back();
  }

  /// Adds dL/dθ to `grad` given dL/d(output) for the cached forward pass.
  void backward(const Cache& cache, std::span<const double> grad_out, std::vector<double>& grad) const
  {
    if (static_cast<int>(grad_out.size()) != outputs()) throw ConfigError("output gradient has wrong length");
    if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
    std::vector<double> delta(grad_out.begin(), grad_out.end());
    std::vector<double> prev;
    for (int l = layers() - 1; l >= 0; --l) {
      const auto& in = cache.act[l];
      const int n_in = sizes_[l];
      double* gw = &grad[offsets_[l]];
      double* gb = &grad[bias_offset(l)];
      const double* w = &params_[offsets_[l]];
      prev.assign(n_in, 0.0);
      for (int o = 0; o < sizes_[l + 1]; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        const std::size_t row = static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) {
          gw[row + i] += d * in[i];
          prev[i] += d * w[row + i];
        }
      }
      if (l > 0)
        for (int i = 0; i < n_in; ++i)
          if (in[i] <= 0.0) prev[i] = 0.0;  // ReLU'
      delta.swap(prev);
    }
  }

 private:
  std::size_t bias_offset(int l) const
  {
    return offsets_[l] + static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Bias-corrected Adam.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0)
  {
  }

  long steps() const { return t_; }

  void step(std::vector<double>& params, const std::vector<double>& grad)
  {
    if (params.size() != m_.size() || grad.size() != m_.size())
      throw ConfigError("Adam: parameter/gradient size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
      params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

 private:
  double lr_ = 1e-3, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Checkpoint format:
//   agmec-mlp 1
//   sizes <n0> <n1> ...
//   one line per weight row, then one line of biases, layer by layer
inline void write_mlp(std::ostream& os, const Mlp& net)
{
  char buf[64];
  auto put = [&](double v) {
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, r.ptr - buf);
  };
  os << "agmec-mlp 1\nsizes";
  for (int s : net.sizes()) os << ' ' << s;
  os << '\n';
  for (int l = 0; l < net.layers(); ++l) {
    const int n_in = net.sizes()[l], n_out = net.sizes()[l + 1];
    for (int o = 0; o < n_out; ++o) {
      for (int i = 0; i < n_in; ++i) {
        if (i) os << ' ';
        put(net.weight(l, o, i));
      }
      os << '\n';
    }
    for (int o = 0; o < n_out; ++o) {
      if (o) os << ' ';
      put(net.bias(l, o));
    }
    os << '\n';
  }
}

inline std::string serialize(const Mlp& net)
{
  std::ostringstream os;
  write_mlp(os, net);
  return os.str();
}

/// Reads a checkpoint. A non-empty `expected` must match the stored sizes.
inline Mlp read_mlp(std::istream& is, const std::string& source = "<mlp>",
                    const std::vector<int>& expected = {})
{
  std::string line;
  int lineno = 0;
  auto next = [&](const char* what) {
    if (!std::getline(is, line)) throw ParseError(source, 0, std::string("unexpected end of file, expected ") + what);
    ++lineno;
  };
  auto numbers = [&](std::size_t from, std::size_t count) {
    std::vector<double> out;
    const char* p = line.data() + from;
    const char* end = line.data() + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v;
      auto r = std::from_chars(p, end, v);
      if (r.ec != std::errc() || (r.ptr < end && *r.ptr != ' ' && *r.ptr != '\t' && *r.ptr != '\r'))
        throw ParseError(source, lineno, "malformed number");
      if (!std::isfinite(v)) throw ParseError(source, lineno, "non-finite value");
      out.push_back(v);
      p = r.ptr;
    }
    if (count && out.size() != count)
      throw ParseError(source, lineno, "expected " + std::to_string(count) + " values, got " +
                                           std::to_string(out.size()));
    return out;
  };

  next("header");
  if (line != "agmec-mlp 1" && line != "agmec-mlp 1\r") throw ParseError(source, lineno, "bad header");
  next("sizes");
  if (line.rfind("sizes", 0) != 0) throw ParseError(source, lineno, "expected 'sizes'");
  std::vector<int> sizes;
  for (double v : numbers(5, 0)) {
    if (v != std::floor(v) || v < 1 || v > 1e6) throw ParseError(source, lineno, "bad layer size");
    sizes.push_back(static_cast<int>(v));
  }
  if (sizes.size() < 2) throw ParseError(source, lineno, "need at least two layer sizes");
  if (!expected.empty() && sizes != expected) throw ParseError(source, lineno, "layer sizes do not match");

  Mlp net(sizes);
  for (int l = 0; l < net.layers(); ++l) {
    for (int o = 0; o < sizes[l + 1]; ++o) {
      next("weights");
      const auto row = numbers(0, sizes[l]);
      for (int i = 0; i < sizes[l]; ++i) net.weight(l, o, i) = row[i];
    }
    next("biases");
    const auto b = numbers(0, sizes[l + 1]);
    for (int o = 0; o < sizes[l + 1]; ++o) net.bias(l, o) = b[o];
  }
  return net;
}

inline Mlp deserialize(const std::string& text, const std::vector<int>& expected = {})
{
  std::istringstream is(text);
  return read_mlp(is, "<mlp>", expected);
}

}  // namespace agmec
