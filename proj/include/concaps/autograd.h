#ifndef CONCAPS_AUTOGRAD_H_
#define CONCAPS_AUTOGRAD_H_

// Minimal reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation applied to its variables. Calling
// Tape::backward on a 1x1 result walks the record in reverse and accumulates
// gradients into the leaves. Parameters live outside any tape so one set of
// weights can be shared by many tapes (one per training step, or a
// throw-away no-grad tape during decoding).

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace concaps {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

// Named parameters with stable addresses, kept in registration order.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Matrix init);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  size_t size() const { return params_.size(); }
  size_t scalar_count() const;

  void zero_grad();

 private:
  std::deque<Parameter> params_;
  std::map<std::string, size_t> index_;
};

// Xavier/Glorot uniform initialization.
Matrix xavier_uniform(int rows, int cols, Rng& rng);

class Tape;

// Handle to a value recorded on a tape. Cheap to copy.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  explicit Tape(bool requires_grad = true) : requires_grad_(requires_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var scalar(double value);
  // Each parameter enters a tape once; repeated calls return the same leaf.
  Var parameter(Parameter& param);

  // Accumulates d(root)/d(leaf) into every reachable parameter's grad.
  void backward(Var root);

  bool requires_grad() const { return requires_grad_; }
  size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;
  Var record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);
  bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
  void accumulate(Var v, const Matrix& grad);

  const Matrix& value_of(int id) const { return nodes_[id].value; }
  const Matrix& grad_of(int id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  bool requires_grad_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_ids_;
};

namespace ag {

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
// Adds a 1xC row to every row of a.
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
Var gelu(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var sum(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var gather_rows(Var table, std::span<const int> ids);
Var slice_rows(Var x, int begin, int count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

// Scaled dot-product attention with heads laid out as contiguous column
// blocks. With causal set, query row i only sees key rows 0..i.
Var attention(Var q, Var k, Var v, int n_heads, bool causal);

// Sum_k softmax(mix_logits)_k * layers[k]; mix_logits is 1xK.
Var mix_layers(std::span<const Var> layers, Var mix_logits);

// Sum over rows r with targets[r] >= 0 of -log softmax(logits_r)[targets[r]].
// Columns listed in excluded never receive probability mass.
Var cross_entropy(Var logits, std::span<const int> targets,
                  std::span<const int> excluded);

// Inverted dropout; identity when rate == 0.
Var dropout(Var x, double rate, Rng& rng);

}  // namespace ag

// Row-wise log-softmax on plain values, excluded columns set to -inf.
RowVector log_softmax(const RowVector& logits, std::span<const int> excluded);

// Numerically stable log(1 + exp(x)).
double softplus(double x);

}  // namespace concaps

#endif  // CONCAPS_AUTOGRAD_H_
