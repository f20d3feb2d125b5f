#include "ldvae/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ldvae {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::exp: return "exp";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "softplus") return Activation::softplus;
  if (name == "exp") return Activation::exp;
  throw DomainError("unknown activation: " + name);
}

namespace {

double softplus(double x) {
  if (x > kSoftplusLinearCutoff) return x;
  return std::log1p(std::exp(x));
}

double softplus_grad(double x) {
  if (x > kSoftplusLinearCutoff) return 1.0;
  return 1.0 / (1.0 + std::exp(-x));
}

} // namespace

Tensor2 apply_activation(const Tensor2& input, Activation kind) {
  Tensor2 out = input;
  switch (kind) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = out[i] > 0.0 ? out[i] : 0.0;
      break;
    case Activation::softplus:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus(out[i]);
      break;
    case Activation::exp:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
      break;
  }
  return out;
}

GradientTape::ValueId GradientTape::push(Tensor2 value, BackwardFn backward) {
  check_open();
  nodes_.push_back(Node{std::move(value), Tensor2(), std::move(backward)});
  return nodes_.size() - 1;
}

void GradientTape::check_open() const {
  if (spent_) throw StateError("tape already consumed by backward()");
}

void GradientTape::check_id(ValueId id) const {
  if (id >= nodes_.size())
    throw StateError("invalid tape value id " + std::to_string(id));
}

GradientTape::ValueId GradientTape::constant(Tensor2 value) {
  return push(std::move(value), nullptr);
}

GradientTape::ValueId GradientTape::parameter(Tensor2 value) {
  const ValueId id = push(std::move(value), nullptr);
  parameter_ids_.push_back(id);
  return id;
}

GradientTape::ValueId GradientTape::affine(ValueId input, ValueId weights,
                                           ValueId bias) {
  check_id(input);
  check_id(weights);
  check_id(bias);
  const Tensor2& x = value(input);
  const Tensor2& w = value(weights);
  const Tensor2& b = value(bias);
  if (x.cols() != w.rows())
    throw ShapeError("affine: input cols " + std::to_string(x.cols()) +
                     " != weight rows " + std::to_string(w.rows()));
  if (b.rows() != 1 || b.cols() != w.cols())
    throw ShapeError("affine: bias must be 1x" + std::to_string(w.cols()));

  Tensor2 out = matmul(x, w);
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out.at(r, c) += b.at(0, c);

  return push(std::move(out), [input, weights, bias](const Tensor2& g,
                                                     GradientTape& t) {
    const Tensor2& x = t.value(input);
    const Tensor2& w = t.value(weights);
    t.accumulate_grad(input, matmul_transpose_b(g, w));
    t.accumulate_grad(weights, matmul_transpose_a(x, g));
    Tensor2 db(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) db.at(0, c) += g.at(r, c);
    t.accumulate_grad(bias, db);
  });
}

GradientTape::ValueId GradientTape::activation(ValueId input, Activation kind) {
  check_id(input);
  Tensor2 out = apply_activation(value(input), kind);
  return push(std::move(out), [input, kind](const Tensor2& g, GradientTape& t) {
    const Tensor2& x = t.value(input);
    Tensor2 dx = g;
    switch (kind) {
      case Activation::identity:
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < dx.size(); ++i)
          if (x[i] <= 0.0) dx[i] = 0.0;
        break;
      case Activation::softplus:
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= softplus_grad(x[i]);
        break;
      case Activation::exp:
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= std::exp(x[i]);
        break;
    }
    t.accumulate_grad(input, dx);
  });
}

GradientTape::ValueId GradientTape::add(ValueId a, ValueId b) {
  check_id(a);
  check_id(b);
  if (!value(a).same_shape(value(b))) throw ShapeError("add: shape mismatch");
  Tensor2 out = value(a);
  add_in_place(out, value(b));
  return push(std::move(out), [a, b](const Tensor2& g, GradientTape& t) {
    t.accumulate_grad(a, g);
    t.accumulate_grad(b, g);
  });
}

GradientTape::ValueId GradientTape::mul(ValueId a, ValueId b) {
  check_id(a);
  check_id(b);
  if (!value(a).same_shape(value(b))) throw ShapeError("mul: shape mismatch");
  Tensor2 out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= value(b)[i];
  return push(std::move(out), [a, b](const Tensor2& g, GradientTape& t) {
    const Tensor2& va = t.value(a);
    const Tensor2& vb = t.value(b);
    Tensor2 da = g;
    Tensor2 db = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
      da[i] *= vb[i];
      db[i] *= va[i];
    }
    t.accumulate_grad(a, da);
    t.accumulate_grad(b, db);
  });
}

GradientTape::ValueId GradientTape::scale(ValueId a, double factor) {
  check_id(a);
  Tensor2 out = value(a);
  scale_in_place(out, factor);
  return push(std::move(out), [a, factor](const Tensor2& g, GradientTape& t) {
    Tensor2 da = g;
    scale_in_place(da, factor);
    t.accumulate_grad(a, da);
  });
}

GradientTape::ValueId GradientTape::add_scalar(ValueId a, double shift) {
  check_id(a);
  Tensor2 out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += shift;
  return push(std::move(out), [a](const Tensor2& g, GradientTape& t) {
    t.accumulate_grad(a, g);
  });
}

GradientTape::ValueId GradientTape::sum(ValueId a) {
  check_id(a);
  double acc = 0.0;
  for (std::size_t i = 0; i < value(a).size(); ++i) acc += value(a)[i];
  Tensor2 out(1, 1, {acc});
  return push(std::move(out), [a](const Tensor2& g, GradientTape& t) {
    const Tensor2& v = t.value(a);
    Tensor2 da(v.rows(), v.cols());
    for (std::size_t i = 0; i < da.size(); ++i) da[i] = g[0];
    t.accumulate_grad(a, da);
  });
}

GradientTape::ValueId GradientTape::clamp(ValueId a, double lo, double hi) {
  check_id(a);
  Tensor2 out = value(a);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::min(hi, std::max(lo, out[i]));
  return push(std::move(out), [a, lo, hi](const Tensor2& g, GradientTape& t) {
    const Tensor2& v = t.value(a);
    Tensor2 da = g;
    for (std::size_t i = 0; i < da.size(); ++i)
      if (v[i] < lo || v[i] > hi) da[i] = 0.0;
    t.accumulate_grad(a, da);
  });
}

GradientTape::ValueId GradientTape::slice_cols(ValueId a, std::size_t first,
                                               std::size_t count) {
  check_id(a);
  const Tensor2& v = value(a);
  if (first + count > v.cols()) throw ShapeError("slice_cols: out of range");
  Tensor2 out(v.rows(), count);
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out.at(r, c) = v.at(r, first + c);
  return push(std::move(out), [a, first, count](const Tensor2& g,
                                                GradientTape& t) {
    const Tensor2& v = t.value(a);
    Tensor2 da(v.rows(), v.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < count; ++c) da.at(r, first + c) = g.at(r, c);
    t.accumulate_grad(a, da);
  });
}

GradientTape::ValueId GradientTape::custom(Tensor2 value, BackwardFn backward) {
  return push(std::move(value), std::move(backward));
}

const Tensor2& GradientTape::value(ValueId id) const {
  check_id(id);
  return nodes_[id].value;
}

void GradientTape::accumulate_grad(ValueId id, const Tensor2& grad) {
  check_id(id);
  Node& node = nodes_[id];
  if (node.grad.empty()) {
    node.grad = grad;
  } else {
    add_in_place(node.grad, grad);
  }
}

const Tensor2& GradientTape::grad(ValueId id) const {
  check_id(id);
  return nodes_[id].grad;
}

std::vector<Tensor2> GradientTape::backward(ValueId output,
                                            const Tensor2& output_grad) {
  check_open();
  if (nodes_.empty()) throw StateError("backward on an empty tape");
  check_id(output);
  if (!value(output).same_shape(output_grad))
    throw ShapeError("backward: output_grad shape mismatch");
  spent_ = true;

  nodes_[output].grad = output_grad;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.empty()) continue;
    node.backward(node.grad, *this);
  }

  std::vector<Tensor2> result;
  result.reserve(parameter_ids_.size());
  for (ValueId id : parameter_ids_) {
    if (nodes_[id].grad.empty())
      result.emplace_back(nodes_[id].value.rows(), nodes_[id].value.cols());
    else
      result.push_back(nodes_[id].grad);
  }
  return result;
}

std::vector<Tensor2> GradientTape::backward(ValueId output) {
  check_id(output);
  if (value(output).size() != 1)
    throw ShapeError("scalar backward requires a 1x1 output");
  return backward(output, Tensor2(1, 1, {1.0}));
}

AdamState AdamState::create(const std::vector<Tensor2>& params,
                            double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.first_moment.reserve(params.size());
  state.second_moment.reserve(params.size());
  for (const Tensor2& p : params) {
    state.first_moment.emplace_back(p.rows(), p.cols());
    state.second_moment.emplace_back(p.rows(), p.cols());
  }
  return state;
}

void adam_step(const std::vector<Tensor2*>& params,
               const std::vector<Tensor2>& grads, AdamState& state) {
  if (params.size() != grads.size() ||
      params.size() != state.first_moment.size())
    throw ShapeError("adam_step: parameter/gradient/moment counts disagree");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->same_shape(grads[i]) ||
        !params[i]->same_shape(state.first_moment[i]))
      throw ShapeError("adam_step: shape mismatch at parameter " +
                       std::to_string(i));

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor2& p = *params[i];
    const Tensor2& g = grads[i];
    Tensor2& m = state.first_moment[i];
    Tensor2& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(std::vector<Tensor2>& params, const std::vector<Tensor2>& grads,
               AdamState& state) {
  std::vector<Tensor2*> pointers;
  pointers.reserve(params.size());
  for (Tensor2& p : params) pointers.push_back(&p);
  adam_step(pointers, grads, state);
}

} // namespace ldvae
