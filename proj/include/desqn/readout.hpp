#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "desqn/numerics.hpp"

namespace desqn {

enum class ReadoutKind { mlp, linear };

std::string_view to_string(ReadoutKind kind) noexcept;
ReadoutKind parse_readout_kind(std::string_view name);

/// One gradient buffer per parameter tensor, in parameters() order.
struct GradientSet {
  std::vector<Vector> buffers;

  void zero();
  bool all_finite() const;
};

/// Supervised regression batch: row s of `inputs` is sample s, and only the
/// Q-value of `actions[s]` is fitted to `targets[s]`.
struct TrainingBatch {
  Matrix inputs;
  std::vector<std::size_t> actions;
  Vector targets;

  std::size_t size() const noexcept { return actions.size(); }
};

/// Scratch buffers for batched passes; reusing one avoids per-step allocation.
/// Layouts are column-per-sample so the GEMM kernels vectorise along the batch.
struct ReadoutWorkspace {
  Matrix inputs_t;  // d_in x B
  Matrix hidden_t;  // n_hidden x B (post-ReLU)
  Matrix q_t;       // n_actions x B
  Matrix delta_q;   // n_actions x B
  Matrix delta_h;   // n_hidden x B
};

/// Two-layer readout: q = W2 * relu(W1 * input + b1) + b2.
class MlpReadout {
 public:
  MlpReadout(std::size_t d_in, std::size_t n_hidden, std::size_t n_actions);
  static MlpReadout glorot(std::size_t d_in, std::size_t n_hidden, std::size_t n_actions,
                           SeededRng& rng);

  std::size_t input_size() const noexcept { return w1.cols(); }
  std::size_t hidden_size() const noexcept { return w1.rows(); }
  std::size_t n_actions() const noexcept { return w2.rows(); }

  void forward(std::span<const double> input, std::span<double> q, Vector& hidden) const;
  void forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const;
  /// Leaves Q-values in ws.q_t (n_actions x B).
  void forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const;
  double backward_mse(const TrainingBatch& batch, GradientSet& grads, ReadoutWorkspace& ws) const;

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  Matrix w1;  // n_hidden x d_in
  Vector b1;
  Matrix w2;  // n_actions x n_hidden
  Vector b2;
};

/// Single linear layer: q = W * input + b.
class LinearReadout {
 public:
  LinearReadout(std::size_t d_in, std::size_t n_actions);
  static LinearReadout glorot(std::size_t d_in, std::size_t n_actions, SeededRng& rng);

  std::size_t input_size() const noexcept { return w.cols(); }
  std::size_t hidden_size() const noexcept { return 0; }
  std::size_t n_actions() const noexcept { return w.rows(); }

  void forward(std::span<const double> input, std::span<double> q, Vector& unused) const;
  void forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const;
  /// Leaves Q-values in ws.q_t (n_actions x B).
  void forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const;
  double backward_mse(const TrainingBatch& batch, GradientSet& grads, ReadoutWorkspace& ws) const;

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  Matrix w;  // n_actions x d_in
  Vector b;
};

/// Q-value head of either architecture.
class Readout {
 public:
  Readout(MlpReadout net) : impl_(std::move(net)) {}
  Readout(LinearReadout net) : impl_(std::move(net)) {}

  /// Glorot-uniform weights per layer, zero biases. n_hidden is ignored for
  /// the linear kind.
  static Readout init(ReadoutKind kind, std::size_t d_in, std::size_t n_hidden,
                      std::size_t n_actions, SeededRng& rng);

  ReadoutKind kind() const noexcept;
  std::size_t input_size() const noexcept;
  std::size_t hidden_size() const noexcept;
  std::size_t n_actions() const noexcept;
  bool same_architecture(const Readout& other) const noexcept;

  Vector forward(std::span<const double> input) const;
  /// Allocation-free variant; `scratch` is resized as needed.
  void forward(std::span<const double> input, std::span<double> q, Vector& scratch) const;
  /// q_out becomes B x n_actions.
  void forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const;
  void forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const;

  /// Mean over the batch of (q[action] - target)^2 and its exact gradient.
  double backward_mse(const TrainingBatch& batch, GradientSet& grads, ReadoutWorkspace& ws) const;
  std::pair<double, GradientSet> backward_mse(const TrainingBatch& batch) const;

  GradientSet zero_gradients() const;
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::size_t parameter_count() const;
  bool parameters_finite() const;

  const MlpReadout* as_mlp() const noexcept { return std::get_if<MlpReadout>(&impl_); }
  MlpReadout* as_mlp() noexcept { return std::get_if<MlpReadout>(&impl_); }
  const LinearReadout* as_linear() const noexcept { return std::get_if<LinearReadout>(&impl_); }
  LinearReadout* as_linear() noexcept { return std::get_if<LinearReadout>(&impl_); }

  /// Text checkpoint: a header line, then one line per tensor in
  /// parameters() order (w1, b1, w2, b2 or w, b), row-major, %.17g.
  void save(std::ostream& out) const;
  static Readout load(std::istream& in);

 private:
  std::variant<MlpReadout, LinearReadout> impl_;
};

/// dst <- src, bitwise. Throws architecture_mismatch on differing shapes.
void copy_parameters(const Readout& src, Readout& dst);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values) noexcept;

}  // namespace desqn
