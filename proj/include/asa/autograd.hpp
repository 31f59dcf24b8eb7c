#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace asa::ag {

using Matrix = Eigen::MatrixXd;

/// Trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode tape. Each forward pass records onto a fresh tape;
/// backward() walks it once in reverse and adds parameter gradients into
/// Parameter::grad.
class Tape {
 public:
  Var constant(Matrix value);
  Var param(const Parameter& p);

  const Matrix& value(Var v) const;
  Eigen::Index rows(Var v) const { return value(v).rows(); }
  Eigen::Index cols(Var v) const { return value(v).cols(); }

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var x, Var row);       // broadcast a 1 x n row over x
  Var add_constant(Var x, const Matrix& c);
  Var scale(Var x, double s);
  Var mul_constant(Var x, const Matrix& m);  // elementwise
  Var relu(Var x);
  Var softmax_rows(Var x);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
  Var slice_cols(Var x, Eigen::Index begin, Eigen::Index count);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  /// weights^T x for a T-vector of row weights; result is 1 x n.
  Var weighted_row_sum(Var x, const Eigen::VectorXd& weights);
  /// -log softmax(logits)[target] for a 1 x C row.
  Var cross_entropy(Var logits, int target);
  /// 0.5 (y - target)^2 for a 1 x 1 value.
  Var squared_error(Var y, double target);

  /// Seeds d(output)/d(output) = 1 and propagates. `output` must be 1 x 1.
  /// Parameter gradients are added, scaled by `weight`.
  void backward(Var output, double weight = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const Parameter* param = nullptr;
    bool needs_grad = false;
    std::vector<int> inputs;
    std::function<void(Tape&, int)> back;
  };

  Var push(Matrix value, std::vector<int> inputs, std::function<void(Tape&, int)> back);
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  void accumulate(int id, const Matrix& g);

  std::vector<Node> nodes_;
};

}  // namespace asa::ag
