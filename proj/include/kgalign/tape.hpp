#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/kg_core.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

/// The closed set of differentiable primitives.
enum class Op : std::uint8_t {
  Leaf,
  Spmm,
  Matmul,
  Add,
  Sub,
  Mul,
  Affine,
  AddRow,
  Relu,
  Sigmoid,
  ConcatCols,
  GroupMean,
  GroupSum,
  L1RowDist,
  MarginHinge,
  Sum,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Spmm: return "spmm";
    case Op::Matmul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Affine: return "affine";
    case Op::AddRow: return "add_row";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::ConcatCols: return "concat_cols";
    case Op::GroupMean: return "group_mean";
    case Op::GroupSum: return "group_sum";
    case Op::L1RowDist: return "l1_rowdist";
    case Op::MarginHinge: return "margin_hinge";
    case Op::Sum: return "sum";
  }
  return "?";
}

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so the node
/// list is already a topological order and backward is a reverse sweep.
///
/// Sparse operands of spmm are referenced, not copied; they must outlive
/// the tape. Everything else is owned.
template <typename T>
class Tape {
 public:
  Var variable(DenseMatrix<T> value, std::string label = {}) {
    return push(Op::Leaf, std::move(value), true, {}, std::move(label));
  }
  Var constant(DenseMatrix<T> value, std::string label = {}) {
    return push(Op::Leaf, std::move(value), false, {}, std::move(label));
  }

  const DenseMatrix<T>& value(Var v) const { return nodes_.at(v.id).value; }
  Op op(Var v) const { return nodes_.at(v.id).op; }
  std::size_t size() const { return nodes_.size(); }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Accumulated gradient; a zero matrix if nothing reached this node.
  DenseMatrix<T> grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.empty() && !n.value.empty()) return DenseMatrix<T>(n.value.rows(), n.value.cols());
    return n.grad;
  }
  bool grad_touched(Var v) const { return !nodes_.at(v.id).grad.empty(); }

  // ---- primitives ----------------------------------------------------------

  Var spmm(const SparseMatrix<T>& a, Var x) {
    auto out = kgalign::spmm(a, value(x));
    const SparseMatrix<T>* ap = &a;
    return push(Op::Spmm, std::move(out), needs(x), [ap, x](Tape& t, const DenseMatrix<T>& g) {
      t.accumulate(x, spmm_transposed(*ap, g));
    });
  }

  Var matmul(Var a, Var b) {
    auto out = kgalign::matmul(value(a), value(b));
    return push(Op::Matmul, std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, const DenseMatrix<T>& g) {
                  if (t.needs(a)) t.accumulate(a, matmul_nt(g, t.value(b)));
                  if (t.needs(b)) t.accumulate(b, matmul_tn(t.value(a), g));
                });
  }

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    auto out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += value(b).data()[i];
    return push(Op::Add, std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, const DenseMatrix<T>& g) {
                  t.accumulate(a, g);
                  t.accumulate(b, g);
                });
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    auto out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= value(b).data()[i];
    return push(Op::Sub, std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, const DenseMatrix<T>& g) {
                  t.accumulate(a, g);
                  if (t.needs(b)) {
                    auto neg = g;
                    for (auto& v : neg.data()) v = -v;
                    t.accumulate(b, neg);
                  }
                });
  }

  /// Elementwise (Hadamard) product.
  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    auto out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= value(b).data()[i];
    return push(Op::Mul, std::move(out), needs(a) || needs(b),
                [a, b](Tape& t, const DenseMatrix<T>& g) {
                  if (t.needs(a)) {
                    auto ga = g;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] *= t.value(b).data()[i];
                    t.accumulate(a, ga);
                  }
                  if (t.needs(b)) {
                    auto gb = g;
                    for (std::size_t i = 0; i < gb.size(); ++i) gb.data()[i] *= t.value(a).data()[i];
                    t.accumulate(b, gb);
                  }
                });
  }

  /// scale·x + shift, elementwise.
  Var affine(Var x, T scale, T shift) {
    auto out = value(x);
    for (auto& v : out.data()) v = scale * v + shift;
    return push(Op::Affine, std::move(out), needs(x), [x, scale](Tape& t, const DenseMatrix<T>& g) {
      auto gx = g;
      for (auto& v : gx.data()) v *= scale;
      t.accumulate(x, gx);
    });
  }

  /// x + 1·b, with b a single row broadcast over every row of x.
  Var add_row(Var x, Var b) {
    const auto& xv = value(x);
    const auto& bv = value(b);
    if (bv.rows() != 1 || bv.cols() != xv.cols())
      throw ShapeError("add_row: " + shape_string(xv) + " plus row " + shape_string(bv));
    auto out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
    }
    return push(Op::AddRow, std::move(out), needs(x) || needs(b),
                [x, b](Tape& t, const DenseMatrix<T>& g) {
                  t.accumulate(x, g);
                  if (t.needs(b)) {
                    DenseMatrix<T> gb(1, g.cols());
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                    t.accumulate(b, gb);
                  }
                });
  }

  /// max(0, x); the backward pass uses subgradient 0 at x == 0.
  Var relu(Var x) {
    auto out = value(x);
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
    return push(Op::Relu, std::move(out), needs(x), [x](Tape& t, const DenseMatrix<T>& g) {
      auto gx = g;
      const auto& xv = t.value(x).data();
      for (std::size_t i = 0; i < gx.size(); ++i)
        if (!(xv[i] > T{0})) gx.data()[i] = T{0};
      t.accumulate(x, gx);
    });
  }

  Var sigmoid(Var x) {
    auto out = value(x);
    for (auto& v : out.data()) v = T{1} / (T{1} + std::exp(-v));
    const std::size_t self = nodes_.size();
    return push(Op::Sigmoid, std::move(out), needs(x), [x, self](Tape& t, const DenseMatrix<T>& g) {
      auto gx = g;
      const auto& y = t.nodes_[self].value.data();
      for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] *= y[i] * (T{1} - y[i]);
      t.accumulate(x, gx);
    });
  }

  Var concat_cols(Var a, Var b) {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (av.rows() != bv.rows())
      throw ShapeError("concat_cols: " + shape_string(av) + " and " + shape_string(bv));
    DenseMatrix<T> out(av.rows(), av.cols() + bv.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto dst = out.row(r);
      std::copy(av.row(r).begin(), av.row(r).end(), dst.begin());
      std::copy(bv.row(r).begin(), bv.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(av.cols()));
    }
    const std::size_t left = av.cols();
    return push(Op::ConcatCols, std::move(out), needs(a) || needs(b),
                [a, b, left](Tape& t, const DenseMatrix<T>& g) {
                  DenseMatrix<T> ga(g.rows(), left), gb(g.rows(), g.cols() - left);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto src = g.row(r);
                    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(left), ga.row(r).begin());
                    std::copy(src.begin() + static_cast<std::ptrdiff_t>(left), src.end(), gb.row(r).begin());
                  }
                  t.accumulate(a, ga);
                  t.accumulate(b, gb);
                });
  }

  /// Output row g is the mean of x's rows listed in groups[g]; empty groups give zeros.
  Var group_mean(Var x, RowGroups groups) { return group_reduce(Op::GroupMean, x, std::move(groups)); }

  /// Output row g is the sum of x's rows listed in groups[g].
  Var group_sum(Var x, RowGroups groups) { return group_reduce(Op::GroupSum, x, std::move(groups)); }

  /// Column of ‖x[source] − x[target]‖₁, one entry per pair. Coordinates
  /// with a zero difference get subgradient 0.
  Var l1_rowdist(Var x, std::vector<EntityPair> pairs) {
    const auto& xv = value(x);
    DenseMatrix<T> out(pairs.size(), 1);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      check_row(xv, pairs[i].source, "l1_rowdist");
      check_row(xv, pairs[i].target, "l1_rowdist");
      out(i, 0) = l1_distance<T>(xv.row(pairs[i].source), xv.row(pairs[i].target));
    }
    return push(Op::L1RowDist, std::move(out), needs(x),
                [x, pairs = std::move(pairs)](Tape& t, const DenseMatrix<T>& g) {
                  const auto& xv = t.value(x);
                  DenseMatrix<T> gx(xv.rows(), xv.cols());
                  for (std::size_t i = 0; i < pairs.size(); ++i) {
                    const T gi = g(i, 0);
                    if (gi == T{0}) continue;
                    const auto a = xv.row(pairs[i].source);
                    const auto b = xv.row(pairs[i].target);
                    auto ga = gx.row(pairs[i].source);
                    auto gb = gx.row(pairs[i].target);
                    for (std::size_t c = 0; c < a.size(); ++c) {
                      const T diff = a[c] - b[c];
                      const T s = diff > T{0} ? gi : (diff < T{0} ? -gi : T{0});
                      ga[c] += s;
                      gb[c] -= s;
                    }
                  }
                  t.accumulate(x, gx);
                });
  }

  /// Σ_j max(0, pos[owner[j]] − neg[j] + margin) as a 1×1 value.
  /// A term sitting exactly at the hinge contributes no gradient.
  Var margin_hinge(Var pos, Var neg, std::vector<std::uint32_t> owner, T margin) {
    const auto& pv = value(pos);
    const auto& nv = value(neg);
    if (pv.cols() != 1 || nv.cols() != 1 || owner.size() != nv.rows())
      throw ShapeError("margin_hinge: expects column vectors and one owner per negative");
    T total{0};
    for (std::size_t j = 0; j < owner.size(); ++j) {
      if (owner[j] >= pv.rows()) throw ShapeError("margin_hinge: owner index out of range");
      const T term = pv(owner[j], 0) - nv(j, 0) + margin;
      if (term > T{0} || std::isnan(term)) total += term;  // NaN must reach the loss check
    }
    DenseMatrix<T> out(1, 1, total);
    return push(Op::MarginHinge, std::move(out), needs(pos) || needs(neg),
                [pos, neg, owner = std::move(owner), margin](Tape& t, const DenseMatrix<T>& g) {
                  const auto& pv = t.value(pos);
                  const auto& nv = t.value(neg);
                  DenseMatrix<T> gp(pv.rows(), 1), gn(nv.rows(), 1);
                  const T gs = g(0, 0);
                  for (std::size_t j = 0; j < owner.size(); ++j) {
                    if (pv(owner[j], 0) - nv(j, 0) + margin > T{0}) {
                      gp(owner[j], 0) += gs;
                      gn(j, 0) -= gs;
                    }
                  }
                  t.accumulate(pos, gp);
                  t.accumulate(neg, gn);
                });
  }

  Var sum(Var x) {
    T total{0};
    for (T v : value(x).data()) total += v;
    const std::size_t rows = value(x).rows(), cols = value(x).cols();
    return push(Op::Sum, DenseMatrix<T>(1, 1, total), needs(x),
                [x, rows, cols](Tape& t, const DenseMatrix<T>& g) {
                  t.accumulate(x, DenseMatrix<T>(rows, cols, g(0, 0)));
                });
  }

  // ---- backward ------------------------------------------------------------

  /// Seeds d(out)/d(out) = 1 and sweeps the tape in reverse.
  void backward(Var out) {
    const auto& ov = value(out);
    if (ov.rows() != 1 || ov.cols() != 1) throw ShapeError("backward expects a 1x1 output");
    for (auto& n : nodes_) n.grad = DenseMatrix<T>();
    nodes_[out.id].grad = DenseMatrix<T>(1, 1, T{1});
    for (std::size_t i = out.id + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
      n.backward(*this, n.grad);
    }
  }

  /// Throws NumericalError naming the first node holding a non-finite value.
  void check_finite() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!nodes_[i].value.all_finite()) {
        std::string where = std::string(op_name(nodes_[i].op)) + " node #" + std::to_string(i);
        if (!nodes_[i].label.empty()) where += " (" + nodes_[i].label + ")";
        throw NumericalError("non-finite value produced by " + where);
      }
    }
  }

 private:
  using Backward = std::function<void(Tape&, const DenseMatrix<T>&)>;

  struct Node {
    Op op;
    DenseMatrix<T> value;
    DenseMatrix<T> grad;
    bool requires_grad;
    Backward backward;
    std::string label;
  };

  Var push(Op op, DenseMatrix<T> value, bool requires_grad, Backward bw, std::string label = {}) {
    nodes_.push_back(Node{op, std::move(value), {}, requires_grad, std::move(bw), std::move(label)});
    return Var{nodes_.size() - 1};
  }

  bool needs(Var v) const { return nodes_.at(v.id).requires_grad; }

  void accumulate(Var v, const DenseMatrix<T>& g) {
    auto& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
      n.grad = g;
      return;
    }
    for (std::size_t i = 0; i < g.size(); ++i) n.grad.data()[i] += g.data()[i];
  }

  void same_shape(Var a, Var b, const char* what) const {
    const auto& av = value(a);
    const auto& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
      throw ShapeError(std::string(what) + ": " + shape_string(av) + " vs " + shape_string(bv));
  }

  static void check_row(const DenseMatrix<T>& m, std::size_t r, const char* what) {
    if (r >= m.rows())
      throw ShapeError(std::string(what) + ": row " + std::to_string(r) + " out of range for " +
                       shape_string(m));
  }

  Var group_reduce(Op op, Var x, RowGroups groups) {
    const auto& xv = value(x);
    DenseMatrix<T> out(groups.size(), xv.cols());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto dst = out.row(g);
      for (auto r : groups[g]) {
        check_row(xv, r, op_name(op).data());
        const auto src = xv.row(r);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
      }
      if (op == Op::GroupMean && !groups[g].empty()) {
        const T inv = T{1} / static_cast<T>(groups[g].size());
        for (auto& v : dst) v *= inv;
      }
    }
    return push(op, std::move(out), needs(x),
                [x, op, groups = std::move(groups)](Tape& t, const DenseMatrix<T>& g) {
                  const auto& xv = t.value(x);
                  DenseMatrix<T> gx(xv.rows(), xv.cols());
                  for (std::size_t k = 0; k < groups.size(); ++k) {
                    if (groups[k].empty()) continue;
                    const T w = op == Op::GroupMean ? T{1} / static_cast<T>(groups[k].size()) : T{1};
                    const auto src = g.row(k);
                    for (auto r : groups[k]) {
                      auto dst = gx.row(r);
                      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * src[c];
                    }
                  }
                  t.accumulate(x, gx);
                });
  }

  std::vector<Node> nodes_;
};

}  // namespace kgalign
