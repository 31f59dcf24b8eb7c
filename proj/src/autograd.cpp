#include "asa/autograd.hpp"

#include <cmath>
#include <string>

#include "asa/common.hpp"

namespace asa::ag {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Var Tape::push(Matrix value, std::vector<int> inputs, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  for (int i : inputs) n.needs_grad = n.needs_grad || needs(i);
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size() - 1)};
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const Parameter& p) {
  Node n;
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size() - 1)};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.param ? n.param->value : n.value;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

Var Tape::matmul(Var a, Var b) {
  require(cols(a) == rows(b), "matmul: inner dimensions differ");
  return push(value(a) * value(b), {a.id, b.id}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(a.id)) t.accumulate(a.id, g * t.value(b).transpose());
    if (t.needs(b.id)) t.accumulate(b.id, t.value(a).transpose() * g);
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  require(cols(a) == cols(b), "matmul_nt: column counts differ");
  return push(value(a) * value(b).transpose(), {a.id, b.id}, [a, b](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(a.id)) t.accumulate(a.id, g * t.value(b));
    if (t.needs(b.id)) t.accumulate(b.id, g.transpose() * t.value(a));
  });
}

Var Tape::add(Var a, Var b) {
  require(rows(a) == rows(b) && cols(a) == cols(b), "add: shapes differ");
  return push(value(a) + value(b), {a.id, b.id}, [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.grad_of(self));
    t.accumulate(b.id, t.grad_of(self));
  });
}

Var Tape::add_row(Var x, Var row) {
  require(rows(row) == 1 && cols(row) == cols(x), "add_row: row shape differs");
  Matrix v = value(x).rowwise() + value(row).row(0);
  return push(std::move(v), {x.id, row.id}, [x, row](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    t.accumulate(x.id, g);
    if (t.needs(row.id)) t.accumulate(row.id, g.colwise().sum());
  });
}

Var Tape::add_constant(Var x, const Matrix& c) {
  require(c.rows() == rows(x) && c.cols() == cols(x), "add_constant: shapes differ");
  return push(value(x) + c, {x.id}, [x](Tape& t, int self) { t.accumulate(x.id, t.grad_of(self)); });
}

Var Tape::scale(Var x, double s) {
  return push(value(x) * s, {x.id}, [x, s](Tape& t, int self) { t.accumulate(x.id, t.grad_of(self) * s); });
}

Var Tape::mul_constant(Var x, const Matrix& m) {
  require(m.rows() == rows(x) && m.cols() == cols(x), "mul_constant: shapes differ");
  return push(value(x).cwiseProduct(m), {x.id}, [x, m](Tape& t, int self) {
    t.accumulate(x.id, t.grad_of(self).cwiseProduct(m));
  });
}

Var Tape::relu(Var x) {
  return push(value(x).cwiseMax(0.0), {x.id}, [x](Tape& t, int self) {
    const Matrix mask = (t.value(x).array() > 0.0).cast<double>();
    t.accumulate(x.id, t.grad_of(self).cwiseProduct(mask));
  });
}

Var Tape::softmax_rows(Var x) {
  const Matrix& in = value(x);
  Matrix p(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    const double m = in.row(i).maxCoeff();
    p.row(i) = (in.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return push(std::move(p), {x.id}, [x](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    const Matrix& p = t.value(Var{self});
    const Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    t.accumulate(x.id, p.cwiseProduct(g - dot.replicate(1, g.cols())));
  });
}

Var Tape::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  require(rows(gamma) == 1 && cols(gamma) == cols(x) && rows(beta) == 1 && cols(beta) == cols(x),
          "layer_norm: gain/bias shape differs");
  const Matrix& in = value(x);
  const auto n = static_cast<double>(in.cols());
  Matrix xhat(in.rows(), in.cols());
  Eigen::VectorXd inv_std(in.rows());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    const double mu = in.row(i).mean();
    const double var = (in.row(i).array() - mu).square().sum() / n;
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (in.row(i).array() - mu) * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * value(gamma).row(0).array()).rowwise() + value(beta).row(0).array();
  return push(std::move(out), {x.id, gamma.id, beta.id}, [x, gamma, beta, xhat, inv_std, n](Tape& t, int self) {
    const Matrix& g = t.grad_of(self);
    if (t.needs(gamma.id)) t.accumulate(gamma.id, g.cwiseProduct(xhat).colwise().sum());
    if (t.needs(beta.id)) t.accumulate(beta.id, g.colwise().sum());
    if (!t.needs(x.id)) return;
    const Matrix dxhat = g.array().rowwise() * t.value(gamma).row(0).array();
    Matrix dx(g.rows(), g.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double m1 = dxhat.row(i).sum() / n;
      const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).sum() / n;
      dx.row(i) = (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2) * inv_std(i);
    }
    t.accumulate(x.id, dx);
  });
}

Var Tape::slice_cols(Var x, Eigen::Index begin, Eigen::Index count) {
  require(begin >= 0 && count >= 0 && begin + count <= cols(x), "slice_cols: range out of bounds");
  return push(value(x).middleCols(begin, count), {x.id}, [x, begin, count](Tape& t, int self) {
    if (!t.needs(x.id)) return;
    Matrix g = Matrix::Zero(t.rows(x), t.cols(x));
    g.middleCols(begin, count) = t.grad_of(self);
    t.accumulate(x.id, g);
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols: nothing to concatenate");
  Eigen::Index total = 0;
  std::vector<int> ids;
  for (Var p : parts) {
    require(rows(p) == rows(parts[0]), "concat_cols: row counts differ");
    total += cols(p);
    ids.push_back(p.id);
  }
  Matrix out(rows(parts[0]), total);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, cols(p)) = value(p);
    c += cols(p);
  }
  return push(std::move(out), ids, [parts](Tape& t, int self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      if (t.needs(p.id)) t.accumulate(p.id, t.grad_of(self).middleCols(c, t.cols(p)));
      c += t.cols(p);
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: nothing to concatenate");
  Eigen::Index total = 0;
  std::vector<int> ids;
  for (Var p : parts) {
    require(cols(p) == cols(parts[0]), "concat_rows: column counts differ");
    total += rows(p);
    ids.push_back(p.id);
  }
  Matrix out(total, cols(parts[0]));
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, rows(p)) = value(p);
    r += rows(p);
  }
  return push(std::move(out), ids, [parts](Tape& t, int self) {
    Eigen::Index r = 0;
    for (Var p : parts) {
      if (t.needs(p.id)) t.accumulate(p.id, t.grad_of(self).middleRows(r, t.rows(p)));
      r += t.rows(p);
    }
  });
}

Var Tape::weighted_row_sum(Var x, const Eigen::VectorXd& weights) {
  require(weights.size() == rows(x), "weighted_row_sum: weight count differs from rows");
  return push(weights.transpose() * value(x), {x.id}, [x, weights](Tape& t, int self) {
    t.accumulate(x.id, weights * t.grad_of(self));
  });
}

Var Tape::cross_entropy(Var logits, int target) {
  require(rows(logits) == 1 && target >= 0 && target < cols(logits), "cross_entropy: bad logits or target");
  const Eigen::RowVectorXd z = value(logits).row(0);
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  Matrix loss(1, 1);
  loss(0, 0) = lse - z(target);
  return push(std::move(loss), {logits.id}, [logits, target, lse](Tape& t, int self) {
    Matrix d = (t.value(logits).array() - lse).exp().matrix();
    d(0, target) -= 1.0;
    t.accumulate(logits.id, d * t.grad_of(self)(0, 0));
  });
}

Var Tape::squared_error(Var y, double target) {
  require(rows(y) == 1 && cols(y) == 1, "squared_error: expects a 1 x 1 value");
  const double diff = value(y)(0, 0) - target;
  Matrix loss(1, 1);
  loss(0, 0) = 0.5 * diff * diff;
  return push(std::move(loss), {y.id}, [y, diff](Tape& t, int self) {
    t.accumulate(y.id, Matrix::Constant(1, 1, diff * t.grad_of(self)(0, 0)));
  });
}

void Tape::backward(Var output, double weight) {
  require(rows(output) == 1 && cols(output) == 1, "backward: output must be scalar");
  if (!needs(output.id)) return;
  nodes_[static_cast<std::size_t>(output.id)].grad = Matrix::Constant(1, 1, weight);
  for (int id = output.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      auto* p = const_cast<Parameter*>(n.param);
      if (p->grad.size() == 0) p->zero_grad();
      p->grad += n.grad;
    } else if (n.back) {
      n.back(*this, id);
    }
  }
}

}  // namespace asa::ag
