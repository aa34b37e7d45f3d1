#include "polarndf/ndf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "polarndf/error.hpp"
#include "polarndf/kernels.hpp"

namespace polarndf {

Representation parse_representation(std::string_view text) {
  if (text == "polar") return Representation::polar;
  if (text == "angular") return Representation::angular;
  throw Error(ErrorKind::Config, "unknown representation '" + std::string(text) + "'");
}

std::string_view to_string(Representation r) { return r == Representation::polar ? "polar" : "angular"; }

NdfArchitecture NdfArchitecture::for_skeleton(const Skeleton& skel, Representation rep) {
  NdfArchitecture a;
  a.parent_connection = skel.parent_connections();
  a.representation = rep;
  a.skeleton_hash = skel.hash();
  return a;
}

namespace {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Hidden units are centered at zero: softplus(z) - ln 2.
inline double act_value(Activation a, double z) { return a == Activation::softplus ? softplus(z) - std::numbers::ln2 : z; }
inline double act_d1(Activation a, double z) { return a == Activation::softplus ? sigmoid(z) : 1.0; }
inline double act_d2(Activation a, double z) {
  if (a != Activation::softplus) return 0.0;
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

void dense_forward(const DenseLayout& L, const double* params, NdfWorkspace::Layer& c, bool tangent) {
  const double* w = params + L.weight_offset;
  const double* b = params + L.bias_offset;
  const auto in = static_cast<std::size_t>(L.in);
  for (int o = 0; o < L.out; ++o) {
    const double* row = w + static_cast<std::size_t>(o) * in;
    double s = b[o];
    for (std::size_t i = 0; i < in; ++i) s += row[i] * c.x[i];
    c.pre[static_cast<std::size_t>(o)] = s;
    c.y[static_cast<std::size_t>(o)] = act_value(L.act, s);
    if (tangent) {
      double sd = 0.0;
      for (std::size_t i = 0; i < in; ++i) sd += row[i] * c.xd[i];
      c.pd[static_cast<std::size_t>(o)] = sd;
      c.yd[static_cast<std::size_t>(o)] = act_d1(L.act, s) * sd;
    }
  }
}

// Reverse through y = act(W x + b), yd = act'(pre) * (W xd), given the
// adjoints of y and yd. Produces adjoints of x and xd, and accumulates the
// parameter adjoints when `grad` is non-null.
void dense_reverse(const DenseLayout& L, const double* params, NdfWorkspace::Layer& c, bool tangent, double* grad) {
  const double* w = params + L.weight_offset;
  const auto in = static_cast<std::size_t>(L.in);
  const auto out = static_cast<std::size_t>(L.out);
  for (std::size_t o = 0; o < out; ++o) {
    const double d1 = act_d1(L.act, c.pre[o]);
    double pb = c.ybar[o] * d1;
    if (tangent) {
      pb += c.ydbar[o] * act_d2(L.act, c.pre[o]) * c.pd[o];
      c.pdbar[o] = c.ydbar[o] * d1;
    }
    c.pbar[o] = pb;
  }
  std::fill(c.xbar.begin(), c.xbar.end(), 0.0);
  if (tangent) std::fill(c.xdbar.begin(), c.xdbar.end(), 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = w + o * in;
    const double pb = c.pbar[o];
    for (std::size_t i = 0; i < in; ++i) c.xbar[i] += row[i] * pb;
    if (tangent) {
      const double pdb = c.pdbar[o];
      for (std::size_t i = 0; i < in; ++i) c.xdbar[i] += row[i] * pdb;
    }
  }
  if (grad != nullptr) {
    double* gw = grad + L.weight_offset;
    double* gb = grad + L.bias_offset;
    for (std::size_t o = 0; o < out; ++o) {
      double* grow = gw + o * in;
      const double pb = c.pbar[o];
      for (std::size_t i = 0; i < in; ++i) grow[i] += pb * c.x[i];
      if (tangent) {
        const double pdb = c.pdbar[o];
        for (std::size_t i = 0; i < in; ++i) grow[i] += pdb * c.xd[i];
      }
      gb[o] += pb;
    }
  }
}

// Forward pass over the whole network; with `direction` non-empty the
// directional derivative along it is propagated alongside.
double run_forward(const NdfModel& model, std::span<const double> x, std::span<const double> direction,
                   NdfWorkspace& ws) {
  const auto& arch = model.architecture();
  const double* params = model.parameters().data();
  const bool tangent = !direction.empty();
  const std::size_t J = arch.num_connections();
  const auto d_in = static_cast<std::size_t>(arch.input_per_connection());
  const auto L = static_cast<std::size_t>(arch.embedding_dim);

  for (std::size_t j = 0; j < J; ++j) {
    auto& hid = ws.layers[2 * j];
    for (std::size_t k = 0; k < d_in; ++k) {
      hid.x[k] = x[3 * j + k];
      if (tangent) hid.xd[k] = direction[3 * j + k];
    }
    const int parent = arch.parent_connection[j];
    for (std::size_t k = 0; k < L; ++k) {
      hid.x[d_in + k] = parent < 0 ? 0.0 : ws.layers[2 * static_cast<std::size_t>(parent) + 1].y[k];
      if (tangent) hid.xd[d_in + k] = parent < 0 ? 0.0 : ws.layers[2 * static_cast<std::size_t>(parent) + 1].yd[k];
    }
    dense_forward(model.encoder_hidden(j), params, hid, tangent);
    auto& eo = ws.layers[2 * j + 1];
    eo.x = hid.y;
    if (tangent) eo.xd = hid.yd;
    dense_forward(model.encoder_out(j), params, eo, tangent);
  }

  const std::size_t first = model.first_decoder_layer();
  auto& d0 = ws.layers[first];
  for (std::size_t j = 0; j < J; ++j) {
    const auto& e = ws.layers[2 * j + 1];
    std::copy(e.y.begin(), e.y.end(), d0.x.begin() + static_cast<std::ptrdiff_t>(j * L));
    if (tangent) std::copy(e.yd.begin(), e.yd.end(), d0.xd.begin() + static_cast<std::ptrdiff_t>(j * L));
  }
  for (std::size_t l = first; l < model.layers().size(); ++l) {
    if (l > first) {
      ws.layers[l].x = ws.layers[l - 1].y;
      if (tangent) ws.layers[l].xd = ws.layers[l - 1].yd;
    }
    dense_forward(model.layers()[l], params, ws.layers[l], tangent);
  }
  const auto& last = ws.layers.back();
  ws.out_pre = last.y[0];
  ws.out_pre_dot = tangent ? last.yd[0] : 0.0;
  return softplus(ws.out_pre);
}

// Reverse sweep seeded with adjoints of f and (when tangent) of df/dx . dir.
// Adds parameter adjoints to `param_grad` (if non-null) and writes the input
// adjoint to `input_grad` (if non-empty).
void run_reverse(const NdfModel& model, double f_bar, double fdot_bar, bool tangent, double* param_grad,
                 std::span<double> input_grad, NdfWorkspace& ws) {
  const auto& arch = model.architecture();
  const double* params = model.parameters().data();
  const std::size_t J = arch.num_connections();
  const auto d_in = static_cast<std::size_t>(arch.input_per_connection());
  const auto L = static_cast<std::size_t>(arch.embedding_dim);
  const std::size_t first = model.first_decoder_layer();

  // f = softplus(o); fdot = sigmoid(o) * odot.
  const double o = ws.out_pre;
  auto& last = ws.layers.back();
  last.ybar[0] = f_bar * sigmoid(o) + (tangent ? fdot_bar * act_d2(Activation::softplus, o) * ws.out_pre_dot : 0.0);
  if (tangent) last.ydbar[0] = fdot_bar * sigmoid(o);

  for (std::size_t l = model.layers().size(); l-- > first;) {
    auto& c = ws.layers[l];
    if (l + 1 < model.layers().size()) {
      c.ybar = ws.layers[l + 1].xbar;
      if (tangent) c.ydbar = ws.layers[l + 1].xdbar;
    }
    dense_reverse(model.layers()[l], params, c, tangent, param_grad);
  }

  const auto& z = ws.layers[first];
  std::copy(z.xbar.begin(), z.xbar.end(), ws.embedding_bar.begin());
  if (tangent) std::copy(z.xdbar.begin(), z.xdbar.end(), ws.embedding_dbar.begin());
  if (!input_grad.empty()) std::fill(input_grad.begin(), input_grad.end(), 0.0);

  for (std::size_t j = J; j-- > 0;) {
    auto& eo = ws.layers[2 * j + 1];
    std::copy_n(ws.embedding_bar.begin() + static_cast<std::ptrdiff_t>(j * L), L, eo.ybar.begin());
    if (tangent) std::copy_n(ws.embedding_dbar.begin() + static_cast<std::ptrdiff_t>(j * L), L, eo.ydbar.begin());
    dense_reverse(model.encoder_out(j), params, eo, tangent, param_grad);
    auto& hid = ws.layers[2 * j];
    hid.ybar = eo.xbar;
    if (tangent) hid.ydbar = eo.xdbar;
    dense_reverse(model.encoder_hidden(j), params, hid, tangent, param_grad);
    if (!input_grad.empty()) {
      for (std::size_t k = 0; k < d_in; ++k) input_grad[3 * j + k] = hid.xbar[k];
    }
    const int parent = arch.parent_connection[j];
    if (parent >= 0) {
      const auto p = static_cast<std::size_t>(parent) * L;
      for (std::size_t k = 0; k < L; ++k) {
        ws.embedding_bar[p + k] += hid.xbar[d_in + k];
        if (tangent) ws.embedding_dbar[p + k] += hid.xdbar[d_in + k];
      }
    }
  }
}

}  // namespace

NdfModel::NdfModel(NdfArchitecture arch, std::uint64_t seed) : arch_(std::move(arch)), seed_(seed) {
  build_layout();
  std::mt19937_64 rng(seed);
  for (const auto& L : layers_) {
    // Variance-scaled normal init, zero biases.
    std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(L.in)));
    for (std::size_t i = 0; i < static_cast<std::size_t>(L.in * L.out); ++i) params_[L.weight_offset + i] = dist(rng);
  }
}

NdfModel::NdfModel(NdfArchitecture arch, std::uint64_t seed, std::vector<double> params)
    : arch_(std::move(arch)), seed_(seed) {
  build_layout();
  if (params.size() != params_.size()) {
    throw Error(ErrorKind::LengthMismatch, "expected " + std::to_string(params_.size()) + " parameters, got " +
                                               std::to_string(params.size()));
  }
  params_ = std::move(params);
}

void NdfModel::build_layout() {
  const std::size_t J = arch_.num_connections();
  if (J == 0) throw Error(ErrorKind::Config, "model needs at least one connection");
  if (arch_.embedding_dim < 1 || arch_.encoder_hidden < 1) throw Error(ErrorKind::Config, "layer widths must be >= 1");
  for (std::size_t j = 0; j < J; ++j) {
    if (arch_.parent_connection[j] >= static_cast<int>(j)) {
      throw Error(ErrorKind::Config, "parent connections must precede their children");
    }
  }
  layers_.clear();
  std::size_t offset = 0;
  auto add = [&](int in, int out, Activation act) {
    DenseLayout L{in, out, offset, offset + static_cast<std::size_t>(in * out), act};
    offset += static_cast<std::size_t>(in * out + out);
    layers_.push_back(L);
  };
  const int d_in = arch_.input_per_connection();
  for (std::size_t j = 0; j < J; ++j) {
    add(d_in + arch_.embedding_dim, arch_.encoder_hidden, Activation::softplus);
    add(arch_.encoder_hidden, arch_.embedding_dim, Activation::identity);
  }
  int width = static_cast<int>(J) * arch_.embedding_dim;
  for (int h : arch_.decoder_hidden) {
    if (h < 1) throw Error(ErrorKind::Config, "decoder widths must be >= 1");
    add(width, h, Activation::softplus);
    width = h;
  }
  add(width, 1, Activation::identity);
  params_.assign(offset, 0.0);
}

NdfWorkspace::NdfWorkspace(const NdfModel& model) {
  for (const auto& L : model.layers()) {
    Layer c;
    const auto in = static_cast<std::size_t>(L.in);
    const auto out = static_cast<std::size_t>(L.out);
    c.x.assign(in, 0.0);
    c.xd.assign(in, 0.0);
    c.xbar.assign(in, 0.0);
    c.xdbar.assign(in, 0.0);
    c.pre.assign(out, 0.0);
    c.y.assign(out, 0.0);
    c.pd.assign(out, 0.0);
    c.yd.assign(out, 0.0);
    c.ybar.assign(out, 0.0);
    c.ydbar.assign(out, 0.0);
    c.pbar.assign(out, 0.0);
    c.pdbar.assign(out, 0.0);
    layers.push_back(std::move(c));
  }
  const auto n = model.architecture().num_connections() * static_cast<std::size_t>(model.architecture().embedding_dim);
  embedding_bar.assign(n, 0.0);
  embedding_dbar.assign(n, 0.0);
}

double forward(const NdfModel& model, std::span<const double> x, NdfWorkspace& ws) {
  return run_forward(model, x, {}, ws);
}

double forward(const NdfModel& model, const PolarPose& x) {
  NdfWorkspace ws(model);
  return forward(model, x.flat(), ws);
}

double input_gradient(const NdfModel& model, std::span<const double> x, std::span<double> grad, NdfWorkspace& ws) {
  const double f = run_forward(model, x, {}, ws);
  run_reverse(model, 1.0, 0.0, false, nullptr, grad, ws);
  return f;
}

std::vector<double> input_gradient(const NdfModel& model, const PolarPose& x) {
  NdfWorkspace ws(model);
  std::vector<double> g(model.input_size(), 0.0);
  input_gradient(model, x.flat(), g, ws);
  return g;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  real += o.real;
  fake += o.fake;
  grad += o.grad;
  total += o.total;
  num_real += o.num_real;
  num_fake += o.num_fake;
  return *this;
}

LossBreakdown sample_loss(const NdfModel& model, std::span<const double> x, double target, bool is_real,
                          const LossWeights& weights, std::span<double> param_grad, NdfWorkspace& ws) {
  LossBreakdown out;
  double* pg = param_grad.empty() ? nullptr : param_grad.data();
  const double w_dist = is_real ? weights.real : weights.fake;
  const bool with_grad_term = is_real && weights.grad_loss;

  double f = 0.0;
  double f_bar = 0.0;
  auto dist_term = [&](double value) {
    const double e = value - target;
    const double loss = weights.squared ? e * e : std::abs(e);
    // Subgradient 0 at e == 0.
    f_bar = w_dist * (weights.squared ? 2.0 * e : (e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0)));
    return loss;
  };

  if (!with_grad_term) {
    f = run_forward(model, x, {}, ws);
    const double loss = dist_term(f);
    if (pg != nullptr) run_reverse(model, f_bar, 0.0, false, pg, {}, ws);
    (is_real ? out.real : out.fake) = loss;
    (is_real ? out.num_real : out.num_fake) = 1;
    out.total = w_dist * loss;
    return out;
  }

  // The gradient norm ||g(theta)|| differentiates as u . dg/dtheta with
  // u = g / ||g|| held fixed, i.e. the parameter gradient of the directional
  // derivative of f along u: a tangent forward pass followed by a reverse
  // sweep over the (primal, tangent) pair.
  std::vector<double> g(model.input_size(), 0.0);
  f = input_gradient(model, x, g, ws);
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  const double dist_loss = dist_term(f);
  const double grad_loss = weights.squared ? norm2 : norm;
  out.real = dist_loss;
  out.grad = grad_loss;
  out.num_real = 1;
  out.total = w_dist * dist_loss + weights.grad * grad_loss;
  if (pg == nullptr) return out;

  if (norm > 0.0) {
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = g[i] / norm;
    const double fdot_bar = weights.grad * (weights.squared ? 2.0 * norm : 1.0);
    run_forward(model, x, u, ws);
    run_reverse(model, f_bar, fdot_bar, true, pg, {}, ws);
  } else {
    run_forward(model, x, {}, ws);
    run_reverse(model, f_bar, 0.0, false, pg, {}, ws);
  }
  return out;
}

LossBreakdown loss_and_param_gradients(const NdfModel& model, std::span<const LabeledPose> batch,
                                       const LossWeights& weights, std::vector<double>& param_grad) {
  return kernels::omp::batch_loss(model, batch, weights, param_grad);
}

}  // namespace polarndf
