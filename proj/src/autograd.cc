#include "concaps/autograd.h"

#include <cmath>
#include <limits>

#include "concaps/errors.h"

namespace concaps {

Parameter& ParameterSet::add(const std::string& name, Matrix init) {
  if (index_.count(name) > 0) fail(ErrorKind::kContract, "duplicate parameter " + name);
  index_[name] = params_.size();
  Matrix grad = Matrix::Zero(init.rows(), init.cols());
  params_.push_back(Parameter{name, std::move(init), std::move(grad)});
  return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::kNotFound, "no parameter named " + name);
  return params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::kNotFound, "no parameter named " + name);
  return params_[it->second];
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

Matrix xavier_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

const Matrix& Var::value() const { return tape_->value_of(id_); }
const Matrix& Var::grad() const { return tape_->grad_of(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::scalar(double value) {
  Matrix m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var Tape::parameter(Parameter& param) {
  auto it = param_ids_.find(&param);
  if (it != param_ids_.end()) return Var(this, it->second);
  param_ids_[&param] = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{param.value, {}, {}, &param, requires_grad_});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, BackwardFn backward) {
  bool any = false;
  if (requires_grad_) {
    for (const Var& in : inputs) {
      if (in.tape() != this) fail(ErrorKind::kContract, "variable from a different tape");
      any = any || nodes_[in.id()].needs_grad;
    }
  }
  Node node{std::move(value), {}, {}, nullptr, any};
  if (any) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(Var v, const Matrix& grad) {
  Node& node = nodes_[v.id()];
  if (!node.needs_grad) return;
  if (node.grad.size() == 0) {
    node.grad = grad;
  } else {
    node.grad += grad;
  }
}

void Tape::backward(Var root) {
  if (!requires_grad_) fail(ErrorKind::kContract, "backward on a no-grad tape");
  if (root.value().rows() != 1 || root.value().cols() != 1)
    fail(ErrorKind::kContract, "backward root must be a scalar");
  if (!nodes_[root.id()].needs_grad) return;
  nodes_[root.id()].grad = Matrix::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0) continue;
    if (node.param != nullptr) {
      node.param->grad += node.grad;
    } else if (node.backward) {
      // The callback may append to other nodes' grads, never to this one.
      Matrix g = std::move(node.grad);
      node.backward(*this, g);
      node.grad = std::move(g);
    }
  }
}

namespace ag {
namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorKind::kContract, std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) fail(ErrorKind::kContract, "matmul: inner dims differ");
  Tape& t = *a.tape();
  return t.record(av * bv, {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g * b.value().transpose());
    if (tp.needs_grad(b)) tp.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) fail(ErrorKind::kContract, "matmul_nt: inner dims differ");
  Tape& t = *a.tape();
  return t.record(av * bv.transpose(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    if (tp.needs_grad(a)) tp.accumulate(a, g * b.value());
    if (tp.needs_grad(b)) tp.accumulate(b, g.transpose() * a.value());
  });
}

Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  Tape& t = *a.tape();
  return t.record(a.value() + b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tape& t = *a.tape();
  return t.record(a.value() - b.value(), {a, b}, [a, b](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.needs_grad(b)) tp.accumulate(b, -g);
  });
}

Var add_row(Var a, Var row) {
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    fail(ErrorKind::kContract, "add_row: row shape mismatch");
  Matrix out = av;
  out.rowwise() += rv.row(0);
  Tape& t = *a.tape();
  return t.record(std::move(out), {a, row}, [a, row](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g);
    if (tp.needs_grad(row)) tp.accumulate(row, g.colwise().sum());
  });
}

Var scale(Var a, double factor) {
  Tape& t = *a.tape();
  return t.record(a.value() * factor, {a}, [a, factor](Tape& tp, const Matrix& g) {
    tp.accumulate(a, g * factor);
  });
}

Var gelu(Var a) {
  static constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  static constexpr double kA = 0.044715;
  const Matrix& x = a.value();
  Matrix th = (kC * (x.array() + kA * x.array().cube())).tanh().matrix();
  Matrix out = (0.5 * x.array() * (1.0 + th.array())).matrix();
  Tape& t = *a.tape();
  return t.record(std::move(out), {a}, [a, th](Tape& tp, const Matrix& g) {
    const auto x = a.value().array();
    auto du = kC * (1.0 + 3.0 * kA * x.square());
    Matrix d = (0.5 * (1.0 + th.array()) + 0.5 * x * (1.0 - th.array().square()) * du).matrix();
    tp.accumulate(a, (g.array() * d.array()).matrix());
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  Tape& t = *a.tape();
  Matrix saved = out;
  return t.record(std::move(out), {a}, [a, saved](Tape& tp, const Matrix& g) {
    tp.accumulate(a, (g.array() * (1.0 - saved.array().square())).matrix());
  });
}

Var softplus(Var a) {
  const Matrix& x = a.value();
  Matrix out = x.unaryExpr([](double v) { return concaps::softplus(v); });
  Tape& t = *a.tape();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    Matrix sig = a.value().unaryExpr([](double v) {
      return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
    tp.accumulate(a, (g.array() * sig.array()).matrix());
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  Tape& t = *a.tape();
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g) {
    tp.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows();
  const Eigen::Index d = xv.cols();
  if (gamma.cols() != d || beta.cols() != d)
    fail(ErrorKind::kContract, "layer_norm: gain/bias width mismatch");
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  Tape& t = *x.tape();
  return t.record(std::move(out), {x, gamma, beta},
                  [x, gamma, beta, xhat, inv_std](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(beta)) tp.accumulate(beta, g.colwise().sum());
                    if (tp.needs_grad(gamma))
                      tp.accumulate(gamma, (g.array() * xhat.array()).colwise().sum().matrix());
                    if (tp.needs_grad(x)) {
                      Matrix dxhat = g;
                      dxhat.array().rowwise() *= gamma.value().row(0).array();
                      Matrix dx(dxhat.rows(), dxhat.cols());
                      for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                        const double m1 = dxhat.row(r).mean();
                        const double m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
                        dx.row(r) = inv_std(r) *
                                    (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
                      }
                      tp.accumulate(x, dx);
                    }
                  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) fail(ErrorKind::kIndex, "gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  Tape& t = *table.tape();
  return t.record(std::move(out), {table}, [table, idx](Tape& tp, const Matrix& g) {
    Matrix d = Matrix::Zero(table.rows(), table.cols());
    for (size_t i = 0; i < idx.size(); ++i) d.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    tp.accumulate(table, d);
  });
}

Var slice_rows(Var x, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > x.rows())
    fail(ErrorKind::kIndex, "slice_rows: range out of bounds");
  Matrix out = x.value().middleRows(begin, count);
  Tape& t = *x.tape();
  return t.record(std::move(out), {x}, [x, begin, count](Tape& tp, const Matrix& g) {
    Matrix d = Matrix::Zero(x.rows(), x.cols());
    d.middleRows(begin, count) = g;
    tp.accumulate(x, d);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kContract, "concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) fail(ErrorKind::kContract, "concat_rows: width mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  Tape& t = *parts[0].tape();
  return t.record(std::move(out), parts, [saved](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : saved) {
      if (tp.needs_grad(p)) tp.accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kContract, "concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) fail(ErrorKind::kContract, "concat_cols: height mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  Tape& t = *parts[0].tape();
  return t.record(std::move(out), parts, [saved](Tape& tp, const Matrix& g) {
    Eigen::Index off = 0;
    for (const Var& p : saved) {
      if (tp.needs_grad(p)) tp.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

Var attention(Var q, Var k, Var v, int n_heads, bool causal) {
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  const Eigen::Index tq = qv.rows();
  const Eigen::Index tk = kv.rows();
  const Eigen::Index d = qv.cols();
  if (kv.cols() != d || vv.cols() != d || vv.rows() != tk)
    fail(ErrorKind::kContract, "attention: shape mismatch");
  if (n_heads <= 0 || d % n_heads != 0)
    fail(ErrorKind::kContract, "attention: width not divisible by heads");
  if (causal && tq != tk) fail(ErrorKind::kContract, "attention: causal needs square scores");
  if (tk == 0) fail(ErrorKind::kContract, "attention: no keys");
  const Eigen::Index dk = d / n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  Matrix out(tq, d);
  std::vector<Matrix> probs(static_cast<size_t>(n_heads));
  for (int h = 0; h < n_heads; ++h) {
    Matrix s = qv.middleCols(h * dk, dk) * kv.middleCols(h * dk, dk).transpose() * inv_sqrt;
    for (Eigen::Index i = 0; i < tq; ++i) {
      const Eigen::Index visible = causal ? i + 1 : tk;
      const double mx = s.row(i).head(visible).maxCoeff();
      double z = 0.0;
      for (Eigen::Index j = 0; j < visible; ++j) {
        s(i, j) = std::exp(s(i, j) - mx);
        z += s(i, j);
      }
      for (Eigen::Index j = 0; j < visible; ++j) s(i, j) /= z;
      for (Eigen::Index j = visible; j < tk; ++j) s(i, j) = 0.0;
    }
    out.middleCols(h * dk, dk) = s * vv.middleCols(h * dk, dk);
    probs[static_cast<size_t>(h)] = std::move(s);
  }
  Tape& t = *q.tape();
  if (!t.requires_grad()) probs.clear();
  return t.record(std::move(out), {q, k, v},
                  [q, k, v, n_heads, dk, inv_sqrt, probs](Tape& tp, const Matrix& g) {
                    Matrix dq = Matrix::Zero(q.rows(), q.cols());
                    Matrix dkm = Matrix::Zero(k.rows(), k.cols());
                    Matrix dv = Matrix::Zero(v.rows(), v.cols());
                    for (int h = 0; h < n_heads; ++h) {
                      const Matrix& p = probs[static_cast<size_t>(h)];
                      const auto gh = g.middleCols(h * dk, dk);
                      dv.middleCols(h * dk, dk) = p.transpose() * gh;
                      Matrix dp = gh * v.value().middleCols(h * dk, dk).transpose();
                      Eigen::VectorXd rowdot = (dp.array() * p.array()).rowwise().sum();
                      Matrix ds = (p.array() * (dp.colwise() - rowdot).array()).matrix() * inv_sqrt;
                      dq.middleCols(h * dk, dk) = ds * k.value().middleCols(h * dk, dk);
                      dkm.middleCols(h * dk, dk) = ds.transpose() * q.value().middleCols(h * dk, dk);
                    }
                    if (tp.needs_grad(q)) tp.accumulate(q, dq);
                    if (tp.needs_grad(k)) tp.accumulate(k, dkm);
                    if (tp.needs_grad(v)) tp.accumulate(v, dv);
                  });
}

Var mix_layers(std::span<const Var> layers, Var mix_logits) {
  const Eigen::Index k = static_cast<Eigen::Index>(layers.size());
  if (k == 0 || mix_logits.rows() != 1 || mix_logits.cols() != k)
    fail(ErrorKind::kContract, "mix_layers: need one logit per layer");
  RowVector w = mix_logits.value().row(0);
  w = (w.array() - w.maxCoeff()).exp();
  w /= w.sum();
  Matrix out = Matrix::Zero(layers[0].rows(), layers[0].cols());
  for (Eigen::Index i = 0; i < k; ++i) {
    check_same_shape(layers[static_cast<size_t>(i)].value(), out, "mix_layers");
    out += w(i) * layers[static_cast<size_t>(i)].value();
  }
  std::vector<Var> inputs(layers.begin(), layers.end());
  inputs.push_back(mix_logits);
  std::vector<Var> saved(layers.begin(), layers.end());
  Tape& t = *mix_logits.tape();
  return t.record(std::move(out), inputs, [saved, mix_logits, w, k](Tape& tp, const Matrix& g) {
    RowVector dw(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Var& layer = saved[static_cast<size_t>(i)];
      dw(i) = (g.array() * layer.value().array()).sum();
      if (tp.needs_grad(layer)) tp.accumulate(layer, g * w(i));
    }
    if (tp.needs_grad(mix_logits)) {
      const double inner = (w.array() * dw.array()).sum();
      Matrix d = (w.array() * (dw.array() - inner)).matrix();
      tp.accumulate(mix_logits, d);
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> targets, std::span<const int> excluded) {
  const Matrix& lv = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != lv.rows())
    fail(ErrorKind::kContract, "cross_entropy: one target per row required");
  Matrix probs = Matrix::Zero(lv.rows(), lv.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < lv.rows(); ++r) {
    const int target = targets[static_cast<size_t>(r)];
    if (target < 0) continue;
    if (target >= lv.cols()) fail(ErrorKind::kVocab, "cross_entropy: target out of range");
    RowVector lp = log_softmax(lv.row(r), excluded);
    total -= lp(target);
    probs.row(r) = lp.array().exp().matrix();
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  std::vector<int> tg(targets.begin(), targets.end());
  Tape& t = *logits.tape();
  return t.record(std::move(out), {logits}, [logits, probs, tg](Tape& tp, const Matrix& g) {
    Matrix d = probs;
    for (size_t r = 0; r < tg.size(); ++r)
      if (tg[r] >= 0) d(static_cast<Eigen::Index>(r), tg[r]) -= 1.0;
    tp.accumulate(logits, d * g(0, 0));
  });
}

Var dropout(Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    mask.data()[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  Tape& t = *x.tape();
  return t.record((x.value().array() * mask.array()).matrix(), {x},
                  [x, mask](Tape& tp, const Matrix& g) {
                    tp.accumulate(x, (g.array() * mask.array()).matrix());
                  });
}

}  // namespace ag

RowVector log_softmax(const RowVector& logits, std::span<const int> excluded) {
  RowVector masked = logits;
  for (int c : excluded) masked(c) = -std::numeric_limits<double>::infinity();
  const double mx = masked.maxCoeff();
  double z = 0.0;
  for (Eigen::Index c = 0; c < masked.size(); ++c)
    if (std::isfinite(masked(c))) z += std::exp(masked(c) - mx);
  const double lse = mx + std::log(z);
  return (masked.array() - lse).matrix();
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace concaps
