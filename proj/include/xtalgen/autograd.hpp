// Minimal reverse-mode automatic differentiation on dense row-major
// matrices. Single threaded and allocation-order deterministic, which keeps
// training traces bit-identical for a fixed seed.

#ifndef XTALGEN_AUTOGRAD_HPP_
#define XTALGEN_AUTOGRAD_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "xtalgen/util.hpp"

namespace xtalgen {

struct Tensor {
  int rows = 0, cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(std::size_t(r) * c, 0.0) {}

  double& at(int r, int c) { return v[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[std::size_t(r) * cols + c]; }
  std::size_t size() const { return v.size(); }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

class Tape {
 public:
  struct Node {
    Tensor val;
    Tensor grad;
    std::function<void(Tape&, int)> backward;  // pulls grad into parents
  };

  int leaf(Tensor t) {
    nodes_.push_back(Node{std::move(t), {}, nullptr});
    return int(nodes_.size()) - 1;
  }

  const Tensor& val(int id) const { return nodes_[id].val; }
  Tensor& grad(int id) { return nodes_[id].grad; }

  int matmul(int a, int b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.cols != tb.rows)
      throw ConfigError("matmul shape mismatch");
    Tensor out(ta.rows, tb.cols);
    for (int i = 0; i < ta.rows; ++i)
      for (int k = 0; k < ta.cols; ++k) {
        double aik = ta.at(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < tb.cols; ++j)
          out.at(i, j) += aik * tb.at(k, j);
      }
    return push(std::move(out), [a, b](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      const Tensor& ta = t.val(a);
      const Tensor& tb = t.val(b);
      Tensor& ga = t.ensure_grad(a);
      Tensor& gb = t.ensure_grad(b);
      for (int i = 0; i < ta.rows; ++i)
        for (int j = 0; j < tb.cols; ++j) {
          double gij = g.at(i, j);
          if (gij == 0.0) continue;
          for (int k = 0; k < ta.cols; ++k) {
            ga.at(i, k) += gij * tb.at(k, j);
            gb.at(k, j) += gij * ta.at(i, k);
          }
        }
    });
  }

  int add(int a, int b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (!ta.same_shape(tb))
      throw ConfigError("add shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i)
      out.v[i] += tb.v[i];
    return push(std::move(out), [a, b](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      Tensor& gb = t.ensure_grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.v[i] += g.v[i];
        gb.v[i] += g.v[i];
      }
    });
  }

  // adds a 1 x cols row vector to every row
  int add_row(int a, int row) {
    const Tensor& ta = val(a);
    const Tensor& tr = val(row);
    if (tr.rows != 1 || tr.cols != ta.cols)
      throw ConfigError("add_row shape mismatch");
    Tensor out = ta;
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < ta.cols; ++j)
        out.at(i, j) += tr.at(0, j);
    return push(std::move(out), [a, row](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      Tensor& gr = t.ensure_grad(row);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          ga.at(i, j) += g.at(i, j);
          gr.at(0, j) += g.at(i, j);
        }
    });
  }

  int scale(int a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x *= c;
    return push(std::move(out), [a, c](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.v[i] += c * g.v[i];
    });
  }

  // elementwise product with a constant mask/matrix (no grad through m)
  int mul_const(int a, const Tensor& m) {
    const Tensor& ta = val(a);
    if (!ta.same_shape(m))
      throw ConfigError("mul_const shape mismatch");
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i)
      out.v[i] *= m.v[i];
    Tensor mc = m;
    return push(std::move(out), [a, mc](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i)
        ga.v[i] += mc.v[i] * g.v[i];
    });
  }

  int transpose(int a) {
    const Tensor& ta = val(a);
    Tensor out(ta.cols, ta.rows);
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < ta.cols; ++j)
        out.at(j, i) = ta.at(i, j);
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j)
          ga.at(j, i) += g.at(i, j);
    });
  }

  int concat_cols(const std::vector<int>& parts) {
    if (parts.empty())
      throw ConfigError("concat of nothing");
    int rows = val(parts[0]).rows;
    int cols = 0;
    for (int p : parts) {
      if (val(p).rows != rows)
        throw ConfigError("concat row mismatch");
      cols += val(p).cols;
    }
    Tensor out(rows, cols);
    int off = 0;
    for (int p : parts) {
      const Tensor& tp = val(p);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < tp.cols; ++j)
          out.at(i, off + j) = tp.at(i, j);
      off += tp.cols;
    }
    auto parts_copy = parts;
    return push(std::move(out), [parts_copy](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      int off = 0;
      for (int p : parts_copy) {
        Tensor& gp = t.ensure_grad(p);
        for (int i = 0; i < g.rows; ++i)
          for (int j = 0; j < gp.cols; ++j)
            gp.at(i, j) += g.at(i, off + j);
        off += gp.cols;
      }
    });
  }

  int slice_cols(int a, int from, int count) {
    const Tensor& ta = val(a);
    if (from < 0 || from + count > ta.cols)
      throw ConfigError("slice out of range");
    Tensor out(ta.rows, count);
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < count; ++j)
        out.at(i, j) = ta.at(i, from + j);
    return push(std::move(out), [a, from, count](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < count; ++j)
          ga.at(i, from + j) += g.at(i, j);
    });
  }

  int gather_rows(int a, std::vector<int> idx) {
    const Tensor& ta = val(a);
    Tensor out(int(idx.size()), ta.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int j = 0; j < ta.cols; ++j)
        out.at(int(i), j) = ta.at(idx[i], j);
    return push(std::move(out), [a, idx](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < g.cols; ++j)
          ga.at(idx[i], j) += g.at(int(i), j);
    });
  }

  // sums consecutive blocks of `block` rows: (n*block) x c -> n x c
  int block_row_sum(int a, int block) {
    const Tensor& ta = val(a);
    if (block <= 0 || ta.rows % block != 0)
      throw ConfigError("block_row_sum shape mismatch");
    Tensor out(ta.rows / block, ta.cols);
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < ta.cols; ++j)
        out.at(i / block, j) += ta.at(i, j);
    return push(std::move(out), [a, block](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (int i = 0; i < ga.rows; ++i)
        for (int j = 0; j < ga.cols; ++j)
          ga.at(i, j) += g.at(i / block, j);
    });
  }

  int mean_rows(int a) {
    const Tensor& ta = val(a);
    Tensor out(1, ta.cols);
    for (int i = 0; i < ta.rows; ++i)
      for (int j = 0; j < ta.cols; ++j)
        out.at(0, j) += ta.at(i, j) / ta.rows;
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      Tensor& ga = t.ensure_grad(a);
      for (int i = 0; i < ga.rows; ++i)
        for (int j = 0; j < ga.cols; ++j)
          ga.at(i, j) += g.at(0, j) / ga.rows;
    });
  }

  int silu(int a) {
    const Tensor& ta = val(a);
    Tensor out = ta;
    for (double& x : out.v) {
      double s = 1.0 / (1.0 + std::exp(-x));
      x = x * s;
    }
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      const Tensor& ta = t.val(a);
      Tensor& ga = t.ensure_grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double x = ta.v[i];
        double s = 1.0 / (1.0 + std::exp(-x));
        ga.v[i] += g.v[i] * (s + x * s * (1.0 - s));
      }
    });
  }

  int softmax_rows(int a) {
    const Tensor& ta = val(a);
    Tensor out = ta;
    for (int i = 0; i < ta.rows; ++i) {
      double mx = -1e300;
      for (int j = 0; j < ta.cols; ++j) mx = std::max(mx, ta.at(i, j));
      double sum = 0;
      for (int j = 0; j < ta.cols; ++j) {
        out.at(i, j) = std::exp(ta.at(i, j) - mx);
        sum += out.at(i, j);
      }
      for (int j = 0; j < ta.cols; ++j) out.at(i, j) /= sum;
    }
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.nodes_[self].grad;
      const Tensor& y = t.nodes_[self].val;
      Tensor& ga = t.ensure_grad(a);
      for (int i = 0; i < y.rows; ++i) {
        double dotgy = 0;
        for (int j = 0; j < y.cols; ++j) dotgy += g.at(i, j) * y.at(i, j);
        for (int j = 0; j < y.cols; ++j)
          ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dotgy);
      }
    });
  }

  // mean squared error over mask-active entries; returns a 1x1 node.
  // An all-zero mask contributes zero loss.
  int mse(int pred, const Tensor& target, const Tensor& mask) {
    const Tensor& tp = val(pred);
    if (!tp.same_shape(target) || !tp.same_shape(mask))
      throw ConfigError("mse shape mismatch");
    double active = 0;
    for (double m : mask.v) active += m;
    Tensor out(1, 1);
    if (active > 0) {
      for (std::size_t i = 0; i < tp.size(); ++i) {
        double d = (tp.v[i] - target.v[i]) * mask.v[i];
        out.v[0] += d * d;
      }
      out.v[0] /= active;
    }
    Tensor tc = target, mc = mask;
    return push(std::move(out), [pred, tc, mc, active](Tape& t, int self) {
      if (active <= 0) return;
      double g = t.nodes_[self].grad.v[0];
      const Tensor& tp = t.val(pred);
      Tensor& gp = t.ensure_grad(pred);
      for (std::size_t i = 0; i < tp.size(); ++i)
        gp.v[i] += g * 2.0 * (tp.v[i] - tc.v[i]) * mc.v[i] / active;
    });
  }

  void backward(int loss_id) {
    for (auto& n : nodes_)
      n.grad = Tensor();
    ensure_grad(loss_id);
    if (nodes_[loss_id].grad.size() != 1)
      throw ConfigError("backward expects a scalar loss");
    nodes_[loss_id].grad.v[0] = 1.0;
    for (int i = loss_id; i >= 0; --i)
      if (nodes_[i].backward && nodes_[i].grad.size() > 0)
        nodes_[i].backward(*this, i);
  }

  Tensor& ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0)
      n.grad = Tensor(n.val.rows, n.val.cols);
    return n.grad;
  }

 private:
  int push(Tensor out, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(out), {}, std::move(back)});
    return int(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace xtalgen

#endif  // XTALGEN_AUTOGRAD_HPP_
