#include "attitude/tensorgrad.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "attitude/errors.hpp"
#include "attitude/text.hpp"

namespace attitude::tg {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_rank(std::string_view op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

}  // namespace

std::string shape_string(const Shape& shape) {
  if (shape.empty()) return "scalar";
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape[i]);
  }
  return s;
}

// ---- Tensor -----------------------------------------------------------------

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != product(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(values));
}

Tensor Tensor::uniform(Shape shape, double scale, Rng& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (double& v : t.data_) v = dist(rng);
  return t;
}

double Tensor::item() const {
  if (data_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (other.data_.size() != data_.size()) shape_fail("+=", shape_, other.shape_);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

// ---- parameters -------------------------------------------------------------

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()) {}

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (!p) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
  return *p;
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  for (auto& p : params_) {
    const Parameter* src = other.find(p->name);
    if (!src) throw DataError("parameter '" + p->name + "' missing in source set");
    if (src->value.shape() != p->value.shape()) shape_fail(p->name, p->value.shape(), src->value.shape());
    p->value = src->value;
  }
}

// ---- tape -------------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.param = &p;
  node.needs_grad = true;
  nodes_.push_back(std::move(node));
  param_nodes_[&p] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) throw std::invalid_argument("operand recorded on a different tape");
    node.needs_grad = node.needs_grad || nodes_[v.id()].needs_grad;
  }
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backward));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.param ? n.param->value : n.value;
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad;
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var root, double seed) {
  if (root.tape() != this) throw std::invalid_argument("backward root recorded on a different tape");
  for (std::size_t i = 0; i <= root.id(); ++i) {
    Node& n = nodes_[i];
    if (!n.param && n.needs_grad) n.grad = Tensor(n.value.shape());
  }
  Tensor& g = grad(root.id());
  for (double& v : g.values()) v += seed;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.backward) n.backward(*this, i);
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

// ---- operations -------------------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() < 1 || A.rank() > 2 || B.rank() < 1 || B.rank() > 2 || (A.rank() == 1 && B.rank() == 1)) {
    shape_fail("matmul", A.shape(), B.shape());
  }
  const std::size_t p = A.rank() == 2 ? A.rows() : 1;
  const std::size_t q = A.rank() == 2 ? A.cols() : A.size();
  const std::size_t qb = B.rank() == 2 ? B.rows() : B.size();
  const std::size_t r = B.rank() == 2 ? B.cols() : 1;
  if (q != qb) shape_fail("matmul", A.shape(), B.shape());

  Shape out_shape;
  if (A.rank() == 1) {
    out_shape = {r};
  } else if (B.rank() == 1) {
    out_shape = {p};
  } else {
    out_shape = {p, r};
  }
  Tensor C(out_shape);
  const double* ad = A.data();
  const double* bd = B.data();
  double* cd = C.data();
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = ad[i * q + k];
      if (aik == 0.0) continue;
      const double* brow = bd + k * r;
      double* crow = cd + i * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(std::move(C), {a, b}, [ia, ib, p, q, r](Tape& t, std::size_t self) {
    const double* g = t.grad(self).data();
    const double* ad = t.value(ia).data();
    const double* bd = t.value(ib).data();
    if (t.needs_grad(ia)) {
      double* ga = t.grad(ia).data();
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < q; ++k) {
          const double* brow = bd + k * r;
          const double* grow = g + i * r;
          double acc = 0.0;
          for (std::size_t j = 0; j < r; ++j) acc += grow[j] * brow[j];
          ga[i * q + k] += acc;
        }
      }
    }
    if (t.needs_grad(ib)) {
      double* gb = t.grad(ib).data();
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < q; ++k) {
          const double aik = ad[i * q + k];
          if (aik == 0.0) continue;
          const double* grow = g + i * r;
          double* gbrow = gb + k * r;
          for (std::size_t j = 0; j < r; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  if (A.shape() == B.shape()) {
    Tensor C = A;
    C += B;
    return a.tape()->record(std::move(C), {a, b}, [ia, ib](Tape& t, std::size_t self) {
      const Tensor& g = t.grad(self);
      if (t.needs_grad(ia)) t.grad(ia) += g;
      if (t.needs_grad(ib)) t.grad(ib) += g;
    });
  }
  if (A.rank() == 2 && B.rank() == 1 && A.cols() == B.size()) {
    const std::size_t n = A.rows();
    const std::size_t f = A.cols();
    Tensor C = A;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < f; ++k) C.at(i, k) += B[k];
    }
    return a.tape()->record(std::move(C), {a, b}, [ia, ib, n, f](Tape& t, std::size_t self) {
      const Tensor& g = t.grad(self);
      if (t.needs_grad(ia)) t.grad(ia) += g;
      if (t.needs_grad(ib)) {
        Tensor& gb = t.grad(ib);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < f; ++k) gb[k] += g.at(i, k);
        }
      }
    });
  }
  shape_fail("add", A.shape(), B.shape());
}

Var add_scalar(Var a, Var s) {
  const Tensor& A = a.value();
  const Tensor& S = s.value();
  if (S.size() != 1) shape_fail("add_scalar", A.shape(), S.shape());
  Tensor C = A;
  for (double& v : C.values()) v += S[0];
  const std::size_t ia = a.id();
  const std::size_t is = s.id();
  return a.tape()->record(std::move(C), {a, s}, [ia, is](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) t.grad(ia) += g;
    if (t.needs_grad(is)) {
      double acc = 0.0;
      for (double v : g.values()) acc += v;
      t.grad(is)[0] += acc;
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) shape_fail("mul", A.shape(), B.shape());
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(std::move(C), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.needs_grad(ia)) {
      const Tensor& bv = t.value(ib);
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.needs_grad(ib)) {
      const Tensor& av = t.value(ia);
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor C = a.value();
  for (double& v : C.values()) v *= factor;
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(C), {a}, [ia, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var tanh(Var a) {
  Tensor C = a.value();
  for (double& v : C.values()) v = std::tanh(v);
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(C), {a}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Var a) {
  Tensor C = a.value();
  for (double& v : C.values()) v = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(C), {a}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_rank("concat", p.value(), 1);
    total += p.size();
  }
  Tensor C(Shape{total});
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), C.data() + off);
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.size();
  }
  return parts.front().tape()->record(
      std::move(C), parts, [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.needs_grad(ids[k])) continue;
          Tensor& gp = t.grad(ids[k]);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
        }
      });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t n = parts.front().value().rank() == 2 ? parts.front().value().rows() : 0;
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    require_rank("concat_cols", p.value(), 2);
    if (p.value().rows() != n) shape_fail("concat_cols", parts.front().shape(), p.shape());
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += p.value().cols();
  }
  Tensor C(Shape{n, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(v.data() + i * widths[k], v.data() + (i + 1) * widths[k], C.data() + i * total + off);
    }
    off += widths[k];
  }
  return parts.front().tape()->record(
      std::move(C), parts,
      [ids = std::move(ids), widths = std::move(widths), n, total](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (t.needs_grad(ids[k])) {
            Tensor& gp = t.grad(ids[k]);
            for (std::size_t i = 0; i < n; ++i) {
              for (std::size_t c = 0; c < widths[k]; ++c) gp[i * widths[k] + c] += g[i * total + off + c];
            }
          }
          off += widths[k];
        }
      });
}

Var stack_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("stack_rows: no operands");
  const std::size_t width = parts.front().size();
  std::vector<std::size_t> ids;
  Tensor C(Shape{parts.size(), width});
  for (std::size_t i = 0; i < parts.size(); ++i) {
    require_rank("stack_rows", parts[i].value(), 1);
    if (parts[i].size() != width) shape_fail("stack_rows", parts.front().shape(), parts[i].shape());
    std::copy(parts[i].value().data(), parts[i].value().data() + width, C.data() + i * width);
    ids.push_back(parts[i].id());
  }
  return parts.front().tape()->record(std::move(C), parts,
                                      [ids = std::move(ids), width](Tape& t, std::size_t self) {
                                        const Tensor& g = t.grad(self);
                                        for (std::size_t i = 0; i < ids.size(); ++i) {
                                          if (!t.needs_grad(ids[i])) continue;
                                          Tensor& gp = t.grad(ids[i]);
                                          for (std::size_t c = 0; c < width; ++c) gp[c] += g[i * width + c];
                                        }
                                      });
}

Var slice(Var v, std::size_t begin, std::size_t length) {
  const Tensor& V = v.value();
  require_rank("slice", V, 1);
  if (begin + length > V.size()) throw ShapeError("slice: range exceeds " + shape_string(V.shape()));
  Tensor C(Shape{length}, std::vector<double>(V.data() + begin, V.data() + begin + length));
  const std::size_t iv = v.id();
  return v.tape()->record(std::move(C), {v}, [iv, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gv = t.grad(iv);
    for (std::size_t i = 0; i < g.size(); ++i) gv[begin + i] += g[i];
  });
}

Var rows(Var m, std::size_t begin, std::size_t count) {
  const Tensor& M = m.value();
  require_rank("rows", M, 2);
  if (begin + count > M.rows()) throw ShapeError("rows: range exceeds " + shape_string(M.shape()));
  const std::size_t f = M.cols();
  Tensor C(Shape{count, f},
           std::vector<double>(M.data() + begin * f, M.data() + (begin + count) * f));
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m}, [im, begin, f](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    for (std::size_t i = 0; i < g.size(); ++i) gm[begin * f + i] += g[i];
  });
}

Var row(Var m, std::size_t i) {
  const Tensor& M = m.value();
  require_rank("row", M, 2);
  if (i >= M.rows()) throw ShapeError("row: index out of range for " + shape_string(M.shape()));
  const std::size_t f = M.cols();
  Tensor C(Shape{f}, std::vector<double>(M.data() + i * f, M.data() + (i + 1) * f));
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m}, [im, i, f](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    for (std::size_t c = 0; c < f; ++c) gm[i * f + c] += g[c];
  });
}

Var gather_rows(Var m, std::span<const std::size_t> ids) {
  const Tensor& M = m.value();
  require_rank("gather_rows", M, 2);
  const std::size_t f = M.cols();
  Tensor C(Shape{ids.size(), f});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= M.rows()) {
      throw std::out_of_range("row index " + std::to_string(ids[i]) + " out of range for " +
                              shape_string(M.shape()));
    }
    std::copy(M.data() + ids[i] * f, M.data() + (ids[i] + 1) * f, C.data() + i * f);
  }
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m},
                          [im, f, idx = std::vector<std::size_t>(ids.begin(), ids.end())](Tape& t,
                                                                                          std::size_t self) {
                            const Tensor& g = t.grad(self);
                            Tensor& gm = t.grad(im);
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              for (std::size_t c = 0; c < f; ++c) gm[idx[i] * f + c] += g[i * f + c];
                            }
                          });
}

Var embedding_lookup(Var table, std::span<const std::size_t> ids) { return gather_rows(table, ids); }

Var transpose(Var m) {
  const Tensor& M = m.value();
  require_rank("transpose", M, 2);
  const std::size_t r = M.rows();
  const std::size_t c = M.cols();
  Tensor C(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) C.at(j, i) = M.at(i, j);
  }
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m}, [im, r, c](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += g[j * r + i];
    }
  });
}

Var mean_rows(Var m) {
  const Tensor& M = m.value();
  require_rank("mean_rows", M, 2);
  const std::size_t n = M.rows();
  const std::size_t f = M.cols();
  if (n == 0) throw ShapeError("mean_rows: no rows");
  Tensor C(Shape{f});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < f; ++k) C[k] += M.at(i, k);
  }
  for (double& v : C.values()) v /= static_cast<double>(n);
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m}, [im, n, f](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < f; ++k) gm[i * f + k] += g[k] * inv;
    }
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  const std::size_t ia = a.id();
  return a.tape()->record(Tensor::scalar(acc), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ia).values()) v += g;
  });
}

Var dot(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 1 || A.shape() != B.shape()) shape_fail("dot", A.shape(), B.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) acc += A[i] * B[i];
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(Tensor::scalar(acc), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (t.needs_grad(ia)) {
      const Tensor& bv = t.value(ib);
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
    }
    if (t.needs_grad(ib)) {
      const Tensor& av = t.value(ia);
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
    }
  });
}

Var softmax(Var v) {
  const Tensor& V = v.value();
  require_rank("softmax", V, 1);
  if (V.size() == 0) throw ShapeError("softmax: empty input");
  const double mx = *std::max_element(V.values().begin(), V.values().end());
  Tensor C(V.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    C[i] = std::exp(V[i] - mx);
    total += C[i];
  }
  for (double& x : C.values()) x /= total;
  const std::size_t iv = v.id();
  return v.tape()->record(std::move(C), {v}, [iv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double inner = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) inner += g[i] * y[i];
    Tensor& gv = t.grad(iv);
    for (std::size_t i = 0; i < y.size(); ++i) gv[i] += y[i] * (g[i] - inner);
  });
}

Var max_pool_over_time(Var m) {
  const Tensor& M = m.value();
  require_rank("max_pool_over_time", M, 2);
  const std::size_t n = M.rows();
  const std::size_t f = M.cols();
  if (n == 0) throw ShapeError("max_pool_over_time: empty time axis");
  Tensor C(Shape{f});
  std::vector<std::size_t> arg(f, 0);
  for (std::size_t k = 0; k < f; ++k) {
    double best = M.at(0, k);
    for (std::size_t i = 1; i < n; ++i) {
      if (M.at(i, k) > best) {
        best = M.at(i, k);
        arg[k] = i;
      }
    }
    C[k] = best;
  }
  const std::size_t im = m.id();
  return m.tape()->record(std::move(C), {m}, [im, f, arg = std::move(arg)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gm = t.grad(im);
    for (std::size_t k = 0; k < f; ++k) gm[arg[k] * f + k] += g[k];
  });
}

Var conv1d(Var x, Var w, Var b) {
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  const Tensor& B = b.value();
  require_rank("conv1d input", X, 2);
  require_rank("conv1d filters", W, 3);
  require_rank("conv1d bias", B, 1);
  const std::size_t n = X.rows();
  const std::size_t m = X.cols();
  const std::size_t win = W.dim(0);
  const std::size_t f = W.dim(2);
  if (W.dim(1) != m) shape_fail("conv1d", X.shape(), W.shape());
  if (B.size() != f) shape_fail("conv1d", W.shape(), B.shape());
  if (win == 0) throw ShapeError("conv1d: zero window");
  const std::size_t pad_left = win / 2;

  Tensor C(Shape{n, f});
  for (std::size_t i = 0; i < n; ++i) {
    double* out = C.data() + i * f;
    for (std::size_t k = 0; k < f; ++k) out[k] = B[k];
    for (std::size_t o = 0; o < win; ++o) {
      if (i + o < pad_left || i + o - pad_left >= n) continue;
      const double* xr = X.data() + (i + o - pad_left) * m;
      const double* wo = W.data() + o * m * f;
      for (std::size_t c = 0; c < m; ++c) {
        const double xv = xr[c];
        if (xv == 0.0) continue;
        const double* wc = wo + c * f;
        for (std::size_t k = 0; k < f; ++k) out[k] += xv * wc[k];
      }
    }
  }
  const std::size_t ix = x.id();
  const std::size_t iw = w.id();
  const std::size_t ib = b.id();
  return x.tape()->record(std::move(C), {x, w, b}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& Xv = t.value(ix);
    const Tensor& Wv = t.value(iw);
    const bool gx = t.needs_grad(ix);
    const bool gw = t.needs_grad(iw);
    if (t.needs_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < f; ++k) gb[k] += g[i * f + k];
      }
    }
    if (!gx && !gw) return;
    double* dx = gx ? t.grad(ix).data() : nullptr;
    double* dw = gw ? t.grad(iw).data() : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const double* gi = g.data() + i * f;
      for (std::size_t o = 0; o < win; ++o) {
        if (i + o < pad_left || i + o - pad_left >= n) continue;
        const std::size_t src = i + o - pad_left;
        for (std::size_t c = 0; c < m; ++c) {
          const double* wc = Wv.data() + (o * m + c) * f;
          if (dx) {
            double acc = 0.0;
            for (std::size_t k = 0; k < f; ++k) acc += gi[k] * wc[k];
            dx[src * m + c] += acc;
          }
          if (dw) {
            const double xv = Xv[src * m + c];
            double* dwc = dw + (o * m + c) * f;
            for (std::size_t k = 0; k < f; ++k) dwc[k] += xv * gi[k];
          }
        }
      }
    }
  });
}

Var cross_entropy(Var probs, std::size_t gold) {
  const Tensor& P = probs.value();
  require_rank("cross_entropy", P, 1);
  if (gold >= P.size()) {
    throw std::out_of_range("gold class " + std::to_string(gold) + " out of range for " + std::to_string(P.size()) +
                            " classes");
  }
  constexpr double kFloor = 1e-12;
  const double p = P[gold];
  const double clamped = std::max(p, kFloor);
  const std::size_t ip = probs.id();
  return probs.tape()->record(Tensor::scalar(-std::log(clamped)), {probs},
                              [ip, gold, p, clamped](Tape& t, std::size_t self) {
                                if (p < kFloor) return;
                                t.grad(ip)[gold] += -t.grad(self)[0] / clamped;
                              });
}

// ---- checks -----------------------------------------------------------------

double gradient_check(const std::vector<Parameter*>& params, const std::function<Var(Tape&)>& f, double eps,
                      double floor) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var root = f(tape);
    tape.backward(root);
  }
  const auto evaluate = [&] {
    Tape tape;
    return f(tape).value().item();
  };
  double worst = 0.0;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = evaluate();
      p->value[i] = saved - eps;
      const double down = evaluate();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double err = std::abs(analytic - numeric) / std::max(floor, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// ---- optimisation -----------------------------------------------------------

void Sgd::step(ParameterSet& params) {
  for (Parameter* p : params.all()) {
    if (!p->trainable) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value[i] -= lr_ * (p->grad[i] + weight_decay_ * p->value[i]);
    }
  }
}

void Adam::step(ParameterSet& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Parameter* p : params.all()) {
    if (!p->trainable) continue;
    Moments& st = state_[p];
    if (st.m.size() != p->value.size()) {
      st.m.assign(p->value.size(), 0.0);
      st.v.assign(p->value.size(), 0.0);
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + weight_decay_ * p->value[i];
      st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g;
      st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g * g;
      p->value[i] -= lr_ * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps_);
    }
  }
}

// ---- checkpoints ------------------------------------------------------------

void save_checkpoint(const ParameterSet& params, std::ostream& out) {
  out << std::setprecision(17);
  for (const Parameter* p : params.all()) {
    out << p->name << '\t' << shape_string(p->value.shape()) << '\n';
    const std::size_t width = p->value.rank() == 0 ? 1 : p->value.shape().back();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      out << p->value[i];
      out << ((width == 0 || (i + 1) % width == 0) ? '\n' : ' ');
    }
  }
}

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  save_checkpoint(params, out);
}

void load_checkpoint(ParameterSet& params, std::istream& in, const std::string& source) {
  std::map<std::string, bool> seen;
  std::string header;
  std::size_t lineno = 0;
  while (std::getline(in, header)) {
    ++lineno;
    if (text::trim(header).empty()) continue;
    const auto fields = text::split(header, '\t');
    if (fields.size() != 2) throw ParseError(source, lineno, "expected name<TAB>shape header");
    Parameter* p = params.find(fields[0]);
    if (!p) throw ParseError(source, lineno, "unknown parameter '" + fields[0] + "'");
    if (seen[fields[0]]) throw ParseError(source, lineno, "duplicate parameter '" + fields[0] + "'");
    seen[fields[0]] = true;
    const std::string expected = shape_string(p->value.shape());
    if (text::trim(fields[1]) != expected) {
      throw ShapeError(source + ":" + std::to_string(lineno) + ": parameter '" + fields[0] + "' has shape " +
                       std::string(text::trim(fields[1])) + " in checkpoint but " + expected + " in model");
    }
    std::size_t read = 0;
    std::string line;
    while (read < p->value.size() && std::getline(in, line)) {
      ++lineno;
      for (const auto& tok : text::split_whitespace(line)) {
        if (read >= p->value.size()) throw ParseError(source, lineno, "too many values for '" + fields[0] + "'");
        try {
          std::size_t used = 0;
          p->value[read++] = std::stod(tok, &used);
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ParseError(source, lineno, "invalid number '" + tok + "'");
        }
      }
    }
    if (read != p->value.size()) throw ParseError(source, lineno, "truncated values for '" + fields[0] + "'");
  }
  for (const Parameter* p : params.all()) {
    if (!seen[p->name]) throw DataError(source + ": checkpoint lacks parameter '" + p->name + "'");
  }
}

void load_checkpoint(ParameterSet& params, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  load_checkpoint(params, in, path.string());
}

}  // namespace attitude::tg
