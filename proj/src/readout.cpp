#include "desqn/readout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "desqn/kernels.hpp"

namespace desqn {

std::string_view to_string(ReadoutKind kind) noexcept {
  return kind == ReadoutKind::mlp ? "mlp" : "linear";
}

ReadoutKind parse_readout_kind(std::string_view name) {
  if (name == "mlp") return ReadoutKind::mlp;
  if (name == "linear") return ReadoutKind::linear;
  throw Error(Errc::invalid_config, "unknown readout kind: " + std::string(name));
}

void GradientSet::zero() {
  for (auto& b : buffers) std::fill(b.begin(), b.end(), 0.0);
}

bool GradientSet::all_finite() const {
  return std::all_of(buffers.begin(), buffers.end(), [](const Vector& b) {
    return std::all_of(b.begin(), b.end(), [](double v) { return std::isfinite(v); });
  });
}

std::size_t argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

namespace {

void require_dims(std::size_t d_in, std::size_t n_hidden, std::size_t n_actions) {
  if (d_in < 1 || n_hidden < 1 || n_actions < 1)
    throw Error(Errc::invalid_dimension, "readout dimensions must be >= 1");
}

Matrix glorot_matrix(std::size_t fan_out, std::size_t fan_in, SeededRng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return uniform_matrix(fan_out, fan_in, -bound, bound, rng);
}

void transpose_into(const Matrix& src, Matrix& dst) {
  dst.reshape(src.cols(), src.rows());
  const std::size_t r = src.rows(), c = src.cols();
  for (std::size_t i = 0; i < r; ++i) {
    const double* s = src.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) dst.data()[j * r + i] = s[j];
  }
}

// C (m x n, row-major) = A (m x k, row-major) * B (k x n, row-major)
void matmul(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false) {
  kernels::active().gemm({a.rows(), b.cols(), a.cols(), a.data(), a.cols(), 1, b.data(), b.cols(),
                          c.data(), c.cols(), accumulate});
}

void check_batch(const TrainingBatch& batch, std::size_t d_in, std::size_t n_actions) {
  const std::size_t n = batch.size();
  if (n == 0) throw Error(Errc::empty_batch, "backward_mse needs at least one sample");
  if (batch.targets.size() != n || batch.inputs.rows() != n)
    throw Error(Errc::dimension_mismatch, "batch inputs/actions/targets lengths differ");
  if (batch.inputs.cols() != d_in) throw Error(Errc::dimension_mismatch, "batch input width");
  for (std::size_t a : batch.actions)
    if (a >= n_actions) throw Error(Errc::dimension_mismatch, "batch action index out of range");
  require_finite(batch.targets, Errc::invalid_config, "batch targets must be finite");
}

// Fills ws.delta_q with d(loss)/dq for the selected actions and returns the loss.
double selected_action_errors(const TrainingBatch& batch, ReadoutWorkspace& ws) {
  const std::size_t n = batch.size();
  const std::size_t n_actions = ws.q_t.rows();
  ws.delta_q.reshape(n_actions, n);
  std::fill(ws.delta_q.flat().begin(), ws.delta_q.flat().end(), 0.0);
  const double scale = 2.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t a = batch.actions[s];
    const double err = ws.q_t(a, s) - batch.targets[s];
    loss += err * err;
    ws.delta_q(a, s) = scale * err;
  }
  return loss / static_cast<double>(n);
}

}  // namespace

// ---------------------------------------------------------------------------
// MlpReadout

MlpReadout::MlpReadout(std::size_t d_in, std::size_t n_hidden, std::size_t n_actions) {
  require_dims(d_in, n_hidden, n_actions);
  w1 = Matrix(n_hidden, d_in);
  b1.assign(n_hidden, 0.0);
  w2 = Matrix(n_actions, n_hidden);
  b2.assign(n_actions, 0.0);
}

MlpReadout MlpReadout::glorot(std::size_t d_in, std::size_t n_hidden, std::size_t n_actions,
                              SeededRng& rng) {
  MlpReadout net(d_in, n_hidden, n_actions);
  net.w1 = glorot_matrix(n_hidden, d_in, rng);
  net.w2 = glorot_matrix(n_actions, n_hidden, rng);
  return net;
}

void MlpReadout::forward(std::span<const double> input, std::span<double> q, Vector& hidden) const {
  if (input.size() != input_size()) throw Error(Errc::dimension_mismatch, "readout input length");
  if (q.size() != n_actions()) throw Error(Errc::dimension_mismatch, "readout output length");
  const auto& k = kernels::active();
  hidden.resize(hidden_size());
  k.gemv(hidden_size(), input_size(), w1.data(), input_size(), input.data(), hidden.data(), false);
  for (std::size_t h = 0; h < hidden.size(); ++h) hidden[h] = std::max(0.0, hidden[h] + b1[h]);
  k.gemv(n_actions(), hidden_size(), w2.data(), hidden_size(), hidden.data(), q.data(), false);
  for (std::size_t a = 0; a < q.size(); ++a) q[a] += b2[a];
}

void MlpReadout::forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const {
  forward_columns(inputs, ws);
  transpose_into(ws.q_t, q_out);
}

void MlpReadout::forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const {
  if (inputs.cols() != input_size()) throw Error(Errc::dimension_mismatch, "batch input width");
  const std::size_t n = inputs.rows();
  transpose_into(inputs, ws.inputs_t);

  ws.hidden_t.reshape(hidden_size(), n);
  matmul(w1, ws.inputs_t, ws.hidden_t);
  for (std::size_t h = 0; h < hidden_size(); ++h) {
    const double bias = b1[h];
    for (double& v : ws.hidden_t.row(h)) v = std::max(0.0, v + bias);
  }

  ws.q_t.reshape(n_actions(), n);
  matmul(w2, ws.hidden_t, ws.q_t);
  for (std::size_t a = 0; a < n_actions(); ++a)
    for (double& v : ws.q_t.row(a)) v += b2[a];
}

double MlpReadout::backward_mse(const TrainingBatch& batch, GradientSet& grads,
                                ReadoutWorkspace& ws) const {
  check_batch(batch, input_size(), n_actions());
  const std::size_t n = batch.size();
  const std::size_t hidden = hidden_size();
  forward_columns(batch.inputs, ws);
  const double loss = selected_action_errors(batch, ws);

  grads.buffers.resize(4);
  grads.buffers[0].resize(w1.size());
  grads.buffers[1].resize(hidden);
  grads.buffers[2].resize(w2.size());
  grads.buffers[3].resize(n_actions());
  const auto& k = kernels::active();

  // Output layer: dW2 = delta_q * H^T, db2 = row sums of delta_q.
  for (std::size_t a = 0; a < n_actions(); ++a) {
    k.gemv(hidden, n, ws.hidden_t.data(), n, ws.delta_q.row(a).data(),
           grads.buffers[2].data() + a * hidden, false);
    double sum = 0.0;
    for (double v : ws.delta_q.row(a)) sum += v;
    grads.buffers[3][a] = sum;
  }

  // Back through W2 and the ReLU gate.
  ws.delta_h.reshape(hidden, n);
  k.gemm({hidden, n, n_actions(), w2.data(), 1, hidden, ws.delta_q.data(), n, ws.delta_h.data(),
          n, false});
  for (std::size_t h = 0; h < hidden; ++h) {
    double* d = ws.delta_h.row(h).data();
    const double* act = ws.hidden_t.row(h).data();
    double sum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (act[s] <= 0.0) d[s] = 0.0;
      sum += d[s];
    }
    grads.buffers[1][h] = sum;
  }

  // dW1 = delta_h * X
  k.gemm({hidden, input_size(), n, ws.delta_h.data(), n, 1, batch.inputs.data(), input_size(),
          grads.buffers[0].data(), input_size(), false});
  return loss;
}

std::vector<std::span<double>> MlpReadout::parameters() {
  return {w1.flat(), std::span<double>(b1), w2.flat(), std::span<double>(b2)};
}

std::vector<std::span<const double>> MlpReadout::parameters() const {
  return {w1.flat(), std::span<const double>(b1), w2.flat(), std::span<const double>(b2)};
}

// ---------------------------------------------------------------------------
// LinearReadout

LinearReadout::LinearReadout(std::size_t d_in, std::size_t n_actions) {
  require_dims(d_in, 1, n_actions);
  w = Matrix(n_actions, d_in);
  b.assign(n_actions, 0.0);
}

LinearReadout LinearReadout::glorot(std::size_t d_in, std::size_t n_actions, SeededRng& rng) {
  LinearReadout net(d_in, n_actions);
  net.w = glorot_matrix(n_actions, d_in, rng);
  return net;
}

void LinearReadout::forward(std::span<const double> input, std::span<double> q, Vector&) const {
  if (input.size() != input_size()) throw Error(Errc::dimension_mismatch, "readout input length");
  if (q.size() != n_actions()) throw Error(Errc::dimension_mismatch, "readout output length");
  kernels::active().gemv(n_actions(), input_size(), w.data(), input_size(), input.data(), q.data(),
                         false);
  for (std::size_t a = 0; a < q.size(); ++a) q[a] += b[a];
}

void LinearReadout::forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const {
  forward_columns(inputs, ws);
  transpose_into(ws.q_t, q_out);
}

void LinearReadout::forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const {
  if (inputs.cols() != input_size()) throw Error(Errc::dimension_mismatch, "batch input width");
  transpose_into(inputs, ws.inputs_t);
  ws.q_t.reshape(n_actions(), inputs.rows());
  matmul(w, ws.inputs_t, ws.q_t);
  for (std::size_t a = 0; a < n_actions(); ++a)
    for (double& v : ws.q_t.row(a)) v += b[a];
}

double LinearReadout::backward_mse(const TrainingBatch& batch, GradientSet& grads,
                                   ReadoutWorkspace& ws) const {
  check_batch(batch, input_size(), n_actions());
  const std::size_t n = batch.size();
  forward_columns(batch.inputs, ws);
  const double loss = selected_action_errors(batch, ws);

  grads.buffers.resize(2);
  grads.buffers[0].resize(w.size());
  grads.buffers[1].resize(n_actions());
  kernels::active().gemm({n_actions(), input_size(), n, ws.delta_q.data(), n, 1,
                          batch.inputs.data(), input_size(), grads.buffers[0].data(), input_size(),
                          false});
  for (std::size_t a = 0; a < n_actions(); ++a) {
    double sum = 0.0;
    for (double v : ws.delta_q.row(a)) sum += v;
    grads.buffers[1][a] = sum;
  }
  return loss;
}

std::vector<std::span<double>> LinearReadout::parameters() {
  return {w.flat(), std::span<double>(b)};
}

std::vector<std::span<const double>> LinearReadout::parameters() const {
  return {w.flat(), std::span<const double>(b)};
}

// ---------------------------------------------------------------------------
// Readout

Readout Readout::init(ReadoutKind kind, std::size_t d_in, std::size_t n_hidden,
                      std::size_t n_actions, SeededRng& rng) {
  if (kind == ReadoutKind::mlp) return Readout(MlpReadout::glorot(d_in, n_hidden, n_actions, rng));
  return Readout(LinearReadout::glorot(d_in, n_actions, rng));
}

ReadoutKind Readout::kind() const noexcept {
  return std::holds_alternative<MlpReadout>(impl_) ? ReadoutKind::mlp : ReadoutKind::linear;
}

std::size_t Readout::input_size() const noexcept {
  return std::visit([](const auto& n) { return n.input_size(); }, impl_);
}

std::size_t Readout::hidden_size() const noexcept {
  return std::visit([](const auto& n) { return n.hidden_size(); }, impl_);
}

std::size_t Readout::n_actions() const noexcept {
  return std::visit([](const auto& n) { return n.n_actions(); }, impl_);
}

bool Readout::same_architecture(const Readout& other) const noexcept {
  return kind() == other.kind() && input_size() == other.input_size() &&
         hidden_size() == other.hidden_size() && n_actions() == other.n_actions();
}

Vector Readout::forward(std::span<const double> input) const {
  Vector q(n_actions());
  Vector scratch;
  forward(input, q, scratch);
  return q;
}

void Readout::forward(std::span<const double> input, std::span<double> q, Vector& scratch) const {
  std::visit([&](const auto& n) { n.forward(input, q, scratch); }, impl_);
}

void Readout::forward_batch(const Matrix& inputs, Matrix& q_out, ReadoutWorkspace& ws) const {
  std::visit([&](const auto& n) { n.forward_batch(inputs, q_out, ws); }, impl_);
}

void Readout::forward_columns(const Matrix& inputs, ReadoutWorkspace& ws) const {
  std::visit([&](const auto& n) { n.forward_columns(inputs, ws); }, impl_);
}

double Readout::backward_mse(const TrainingBatch& batch, GradientSet& grads,
                             ReadoutWorkspace& ws) const {
  return std::visit([&](const auto& n) { return n.backward_mse(batch, grads, ws); }, impl_);
}

std::pair<double, GradientSet> Readout::backward_mse(const TrainingBatch& batch) const {
  GradientSet grads;
  ReadoutWorkspace ws;
  const double loss = backward_mse(batch, grads, ws);
  return {loss, std::move(grads)};
}

GradientSet Readout::zero_gradients() const {
  GradientSet g;
  for (auto p : parameters()) g.buffers.emplace_back(p.size(), 0.0);
  return g;
}

std::vector<std::span<double>> Readout::parameters() {
  return std::visit([](auto& n) { return n.parameters(); }, impl_);
}

std::vector<std::span<const double>> Readout::parameters() const {
  return std::visit([](const auto& n) { return n.parameters(); }, impl_);
}

std::size_t Readout::parameter_count() const {
  std::size_t total = 0;
  for (auto p : parameters()) total += p.size();
  return total;
}

bool Readout::parameters_finite() const {
  for (auto p : parameters())
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

void Readout::save(std::ostream& out) const {
  out << "desqn-readout 1 " << to_string(kind()) << ' ' << input_size() << ' ' << hidden_size()
      << ' ' << n_actions() << '\n';
  char buf[32];
  for (auto p : parameters()) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", p[i]);
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(Errc::io_error, "failed to write readout checkpoint");
}

Readout Readout::load(std::istream& in) {
  std::string magic, kind_name;
  int version = 0;
  std::size_t d_in = 0, n_hidden = 0, n_actions = 0;
  if (!(in >> magic >> version >> kind_name >> d_in >> n_hidden >> n_actions) ||
      magic != "desqn-readout" || version != 1)
    throw Error(Errc::io_error, "not a readout checkpoint");
  const ReadoutKind kind = parse_readout_kind(kind_name);
  Readout net = kind == ReadoutKind::mlp ? Readout(MlpReadout(d_in, n_hidden, n_actions))
                                         : Readout(LinearReadout(d_in, n_actions));
  for (auto p : net.parameters())
    for (double& v : p) {
      std::string token;
      if (!(in >> token)) throw Error(Errc::io_error, "truncated readout checkpoint");
      v = std::stod(token);
    }
  return net;
}

void copy_parameters(const Readout& src, Readout& dst) {
  if (!src.same_architecture(dst))
    throw Error(Errc::architecture_mismatch, "copy_parameters between different readouts");
  auto from = src.parameters();
  auto to = dst.parameters();
  for (std::size_t t = 0; t < from.size(); ++t)
    std::copy(from[t].begin(), from[t].end(), to[t].begin());
}

}  // namespace desqn
