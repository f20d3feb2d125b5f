#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ldvae/tensor.hpp"

namespace ldvae {

enum class Activation { identity, relu, softplus, exp };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Elementwise activation without a tape.
Tensor2 apply_activation(const Tensor2& input, Activation kind);

// Softplus switches to the identity above this point; the gradient there is
// taken as exactly 1 so alpha stays finite for large pre-activations.
inline constexpr double kSoftplusLinearCutoff = 30.0;

/// Reverse-mode tape over a fixed op set: affine, the four activations,
/// elementwise add/mul, scalar scale/shift, sum, clamp, column slice, and
/// custom ops registered with an explicit backward rule (the probabilistic
/// ops live in distributions.hpp). Ops replay in exact reverse order of
/// recording; a tape is single use.
class GradientTape {
public:
  using ValueId = std::size_t;
  using BackwardFn = std::function<void(const Tensor2& out_grad, GradientTape&)>;

  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;
  GradientTape(GradientTape&&) = default;
  GradientTape& operator=(GradientTape&&) = default;

  /// Leaf with no gradient tracking.
  ValueId constant(Tensor2 value);
  /// Leaf whose gradient is reported by backward(), in registration order.
  ValueId parameter(Tensor2 value);

  /// input (BxI) * weights (IxO) + bias (1xO) broadcast per row.
  ValueId affine(ValueId input, ValueId weights, ValueId bias);
  ValueId activation(ValueId input, Activation kind);
  ValueId add(ValueId a, ValueId b);
  ValueId mul(ValueId a, ValueId b);
  ValueId scale(ValueId a, double factor);
  ValueId add_scalar(ValueId a, double shift);
  ValueId sum(ValueId a);
  ValueId clamp(ValueId a, double lo, double hi);
  ValueId slice_cols(ValueId a, std::size_t first, std::size_t count);

  /// Record a precomputed value together with its backward rule. The rule
  /// receives the upstream gradient and must push gradients to its inputs
  /// via accumulate_grad().
  ValueId custom(Tensor2 value, BackwardFn backward);

  const Tensor2& value(ValueId id) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t parameter_count() const { return parameter_ids_.size(); }

  /// Propagates output_grad from `output` back to every parameter and
  /// returns their gradients in registration order. The tape is spent
  /// afterwards; recording or replaying again raises StateError.
  std::vector<Tensor2> backward(ValueId output, const Tensor2& output_grad);

  /// Convenience for scalar outputs: seeds with d(out)/d(out) = 1.
  std::vector<Tensor2> backward(ValueId output);

  /// For use inside custom backward rules.
  void accumulate_grad(ValueId id, const Tensor2& grad);
  const Tensor2& grad(ValueId id) const;

private:
  struct Node {
    Tensor2 value;
    Tensor2 grad; // empty until first accumulation
    BackwardFn backward;
  };

  ValueId push(Tensor2 value, BackwardFn backward);
  void check_open() const;
  void check_id(ValueId id) const;

  std::vector<Node> nodes_;
  std::vector<ValueId> parameter_ids_;
  bool spent_ = false;
};

struct AdamState {
  std::size_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<Tensor2> first_moment;
  std::vector<Tensor2> second_moment;

  /// Moments start at zero with the shapes of `params`.
  static AdamState create(const std::vector<Tensor2>& params, double learning_rate);
};

/// Bias-corrected adaptive-moment update, in place.
void adam_step(std::vector<Tensor2>& params, const std::vector<Tensor2>& grads,
               AdamState& state);

/// Same update through parameter pointers (for tensors owned elsewhere).
void adam_step(const std::vector<Tensor2*>& params,
               const std::vector<Tensor2>& grads, AdamState& state);

} // namespace ldvae
