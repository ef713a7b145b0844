#pragma once

// Dense float64 tensors with tape-based reverse-mode differentiation. Covers
// exactly the operations the context encoders need; no broadcasting beyond
// bias-add and scalar-add.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace attitude::tg {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::string shape_string(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  /// Uniform values in [-scale, scale].
  static Tensor uniform(Shape shape, double scale, Rng& rng);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double item() const;

  void fill(double v);
  bool all_finite() const;
  Tensor& operator+=(const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// A named trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  /// Optimizers and gradient checks skip frozen parameters.
  bool trainable = true;

  void zero_grad() { grad.fill(0.0); }
};

/// Owns parameters with stable addresses, in insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  /// Throws std::invalid_argument on a duplicate name.
  Parameter& add(std::string name, Tensor init);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  void zero_grad();
  /// Copies values from a set with identical names and shapes.
  void copy_values_from(const ParameterSet& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  /// Gradient after Tape::backward.
  const Tensor& grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in execution order; backward replays them in reverse.
/// Confined to one thread for the duration of a pass.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to `p`; backward accumulates into p.grad. Repeated calls with
  /// the same parameter return the same node.
  Var param(Parameter& p);
  /// Records an op result computed from `inputs`. `backward` runs only when
  /// some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Mutable gradient buffer of a node; only meaningful during/after backward.
  Tensor& grad(std::size_t id);

  /// Seeds d(root) with `seed` in every element and propagates to all inputs.
  void backward(Var root, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Tensor value;
    Parameter* param = nullptr;
    Backward backward;
    Tensor grad;
    bool needs_grad = false;
  };

  std::vector<Node> nodes_;
  std::map<const Parameter*, std::size_t> param_nodes_;
};

// ---- operations -------------------------------------------------------------

/// Matrix product. A rank-1 left operand acts as a row vector and a rank-1
/// right operand as a column vector; the result drops that axis.
Var matmul(Var a, Var b);
/// Elementwise sum; also rank-2 + rank-1 bias broadcast over rows.
Var add(Var a, Var b);
/// Adds a single-element tensor to every element of `a`.
Var add_scalar(Var a, Var s);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var tanh(Var a);
Var sigmoid(Var a);
/// Concatenates rank-1 tensors.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
/// Concatenates rank-2 tensors with equal row counts along columns.
Var concat_cols(std::span<const Var> parts);
/// Stacks equal-length rank-1 tensors as rows of a matrix.
Var stack_rows(std::span<const Var> rows);
Var slice(Var v, std::size_t begin, std::size_t length);
Var row(Var m, std::size_t i);
Var rows(Var m, std::size_t begin, std::size_t count);
Var gather_rows(Var m, std::span<const std::size_t> ids);
Var transpose(Var m);
Var mean_rows(Var m);
Var sum(Var a);
Var dot(Var a, Var b);
/// Numerically stable softmax of a rank-1 tensor.
Var softmax(Var v);
/// Column-wise maximum over rows; gradient goes to the first maximal row.
Var max_pool_over_time(Var m);
/// Same-length 1-D convolution: X[n×m], W[win×m×f], b[f] -> [n×f]. Zero
/// padding of win-1 rows, the larger half on the left.
Var conv1d(Var x, Var w, Var b);
/// Row gather from an embedding table with range checking.
Var embedding_lookup(Var table, std::span<const std::size_t> ids);
/// -log(max(probs[gold], 1e-12)) as a rank-0 tensor.
Var cross_entropy(Var probs, std::size_t gold);

// ---- checks -----------------------------------------------------------------

/// Maximum over all coordinates of |analytic - numeric| / max(floor, |analytic| + |numeric|),
/// with central differences of step `eps`. `f` builds a scalar on a fresh tape.
/// Below the floor the check is effectively absolute: central differences
/// carry roughly 1e-11 of rounding noise at eps = 1e-5.
double gradient_check(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& f,
                      double eps = 1e-5, double floor = 1e-6);

// ---- optimisation -----------------------------------------------------------

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the accumulated gradients.
  virtual void step(ParameterSet& params) = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double lr, double weight_decay = 0.0) : lr_(lr), weight_decay_(weight_decay) {}
  void step(ParameterSet& params) override;

 private:
  double lr_;
  double weight_decay_;
};

class Adam final : public Optimizer {
 public:
  explicit Adam(double lr = 1e-3, double weight_decay = 0.0, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParameterSet& params) override;

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  double lr_;
  double weight_decay_;
  double beta1_;
  double beta2_;
  double eps_;
  std::uint64_t t_ = 0;
  std::map<const Parameter*, Moments> state_;
};

// ---- checkpoints ------------------------------------------------------------

/// Blocks of `name<TAB>d0xd1...` followed by row-major values, 17 significant digits.
void save_checkpoint(const ParameterSet& params, std::ostream& out);
void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
/// Loads into existing parameters by name. Throws ShapeError on a shape
/// mismatch and DataError on missing or unknown names.
void load_checkpoint(ParameterSet& params, std::istream& in, const std::string& source = "<stream>");
void load_checkpoint(ParameterSet& params, const std::filesystem::path& path);

}  // namespace attitude::tg
