// SPDX-License-Identifier: Apache-2.0
#include "radarseg/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "radarseg/errors.hpp"

namespace radarseg::ad {

namespace {

void require_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(who) + ": rank-2 tensor required, got " + t.shape_str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(who) + ": shape mismatch " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

// C[m x n] += A[m x k] * B[k x n]
void mm_acc(Tensor& c, const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      if (av == 0.0) continue;
      const double* brow = pb + l * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// dA[m x k] += dC[m x n] * B^T  (B is [k x n])
void mm_acc_nt(Tensor& da, const Tensor& dc, const Tensor& b) {
  const std::size_t m = dc.rows(), n = dc.cols(), k = b.rows();
  const double* pdc = dc.data().data();
  const double* pb = b.data().data();
  double* pda = da.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* dcrow = pdc + i * n;
    double* darow = pda + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* brow = pb + j * n;
      double acc = 0.0;
      for (std::size_t l = 0; l < n; ++l) acc += dcrow[l] * brow[l];
      darow[j] += acc;
    }
  }
}

// dB[k x n] += A^T * dC  (A is [m x k], dC is [m x n])
void mm_acc_tn(Tensor& db, const Tensor& a, const Tensor& dc) {
  const std::size_t m = a.rows(), k = a.cols(), n = dc.cols();
  const double* pa = a.data().data();
  const double* pdc = dc.data().data();
  double* pdb = db.data().data();
  for (std::size_t l = 0; l < m; ++l) {
    const double* dcrow = pdc + l * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = pa[l * k + i];
      if (av == 0.0) continue;
      double* dbrow = pdb + i * n;
      for (std::size_t j = 0; j < n; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

Value elementwise_unary(const Value& x, double (*fwd)(double),
                        double (*dfun)(double /*x*/, double /*y*/)) {
  Tensor out = x.value();
  for (double& v : out.data()) v = fwd(v);
  Tensor saved = out;
  return make_op(std::move(out), {x}, [saved, dfun](Node& self) {
    Node& px = *self.parents[0];
    Tensor& gx = px.grad_storage();
    const auto g = self.grad.data();
    const auto xv = px.value.data();
    const auto yv = saved.data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * dfun(xv[i], yv[i]);
  });
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

namespace {
// Bumped by each backward(); grads written in older runs read as zero.
// Single-threaded per the graph's concurrency contract.
std::uint64_t g_backward_epoch = 0;
}  // namespace

Tensor& Node::grad_storage() {
  if (grad.size() != value.size()) grad = Tensor(value.shape());
  return grad;
}

Value::Value(Tensor t) : node_(std::make_shared<Node>()) {
  node_->value = std::move(t);
}

const Tensor& Value::grad() const {
  Node& n = *node_;
  if (n.grad_epoch != g_backward_epoch || n.grad.size() != n.value.size()) {
    n.grad = Tensor(n.value.shape());
    n.grad_epoch = g_backward_epoch;
  }
  return n.grad;
}

Value Value::scalar(double v) { return Value(Tensor::scalar(v)); }

Value make_op(Tensor value, std::vector<Value> parents,
              std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.node());
  n->backprop = std::move(backprop);
  return Value(std::move(n));
}

Value add(const Value& a, const Value& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "add");
  require_rank2(bv, "add");
  if (av.same_shape(bv)) {
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
      for (int p = 0; p < 2; ++p) {
        Tensor& g = self.parents[p]->grad_storage();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    });
  }
  // bias broadcast: [n x d] + [1 x d]
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Tensor out = av;
    const std::size_t n = av.rows(), d = av.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) out.at(i, j) += bv.at(0, j);
    return make_op(std::move(out), {a, b}, [n, d](Node& self) {
      Tensor& ga = self.parents[0]->grad_storage();
      Tensor& gb = self.parents[1]->grad_storage();
      for (std::size_t i = 0; i < n * d; ++i) ga[i] += self.grad[i];
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gb[j] += self.grad.at(i, j);
    });
  }
  throw ShapeError("add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
}

Value sub(const Value& a, const Value& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Tensor& ga = self.parents[0]->grad_storage();
    Tensor& gb = self.parents[1]->grad_storage();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] += self.grad[i];
      gb[i] -= self.grad[i];
    }
  });
}

Value mul(const Value& a, const Value& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    Tensor& ga = pa.grad_storage();
    Tensor& gb = pb.grad_storage();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] += self.grad[i] * pb.value[i];
      gb[i] += self.grad[i] * pa.value[i];
    }
  });
}

Value add_const(const Value& x, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v += c;
  return make_op(std::move(out), {x}, [](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Value mul_const(const Value& x, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= c;
  return make_op(std::move(out), {x}, [c](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * self.grad[i];
  });
}

Value matmul(const Value& a, const Value& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + av.shape_str() +
                     " vs " + bv.shape_str());
  }
  Tensor out = Tensor::zeros(av.rows(), bv.cols());
  mm_acc(out, av, bv);
  return make_op(std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    mm_acc_nt(pa.grad_storage(), self.grad, pb.value);
    mm_acc_tn(pb.grad_storage(), pa.value, self.grad);
  });
}

Value transpose(const Value& x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "transpose");
  const std::size_t m = xv.rows(), n = xv.cols();
  Tensor out = Tensor::zeros(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = xv.at(i, j);
  return make_op(std::move(out), {x}, [m, n](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) += self.grad.at(j, i);
  });
}

Value sigmoid(const Value& x) {
  return elementwise_unary(
      x, [](double v) { return sigmoid_scalar(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Value tanh(const Value& x) {
  return elementwise_unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Value abs(const Value& x) {
  return elementwise_unary(
      x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Value pow_const(double base, const Value& exponent) {
  if (!(base > 0.0)) {
    throw DataError("pow_const: base must be positive, got " + std::to_string(base));
  }
  const double log_base = std::log(base);
  Tensor out = exponent.value();
  for (double& v : out.data()) v = std::exp(v * log_base);
  Tensor saved = out;
  return make_op(std::move(out), {exponent}, [saved, log_base](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += self.grad[i] * saved[i] * log_base;
  });
}

Value concat(const Value& a, const Value& b, int axis) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "concat");
  require_rank2(bv, "concat");
  if (axis != 0 && axis != 1) {
    throw ShapeError("concat: axis out of range: " + std::to_string(axis));
  }
  if (axis == 0) {
    if (av.cols() != bv.cols()) {
      throw ShapeError("concat axis 0: column counts differ, " + av.shape_str() +
                       " vs " + bv.shape_str());
    }
    const std::size_t ma = av.rows(), mb = bv.rows(), n = av.cols();
    Tensor out = Tensor::zeros(ma + mb, n);
    std::copy(av.data().begin(), av.data().end(), out.data().begin());
    std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + ma * n);
    return make_op(std::move(out), {a, b}, [ma, mb, n](Node& self) {
      Tensor& ga = self.parents[0]->grad_storage();
      Tensor& gb = self.parents[1]->grad_storage();
      for (std::size_t i = 0; i < ma * n; ++i) ga[i] += self.grad[i];
      for (std::size_t i = 0; i < mb * n; ++i) gb[i] += self.grad[ma * n + i];
    });
  }
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat axis 1: row counts differ, " + av.shape_str() +
                     " vs " + bv.shape_str());
  }
  const std::size_t m = av.rows(), na = av.cols(), nb = bv.cols();
  Tensor out = Tensor::zeros(m, na + nb);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < na; ++j) out.at(i, j) = av.at(i, j);
    for (std::size_t j = 0; j < nb; ++j) out.at(i, na + j) = bv.at(i, j);
  }
  return make_op(std::move(out), {a, b}, [m, na, nb](Node& self) {
    Tensor& ga = self.parents[0]->grad_storage();
    Tensor& gb = self.parents[1]->grad_storage();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < na; ++j) ga.at(i, j) += self.grad.at(i, j);
      for (std::size_t j = 0; j < nb; ++j) gb.at(i, j) += self.grad.at(i, na + j);
    }
  });
}

Value tile_rows(const Value& x, std::size_t n) {
  const Tensor& xv = x.value();
  require_rank2(xv, "tile_rows");
  if (xv.rows() != 1) {
    throw ShapeError("tile_rows: expected a 1xD row, got " + xv.shape_str());
  }
  if (n == 0) throw ShapeError("tile_rows: n must be >= 1");
  const std::size_t d = xv.cols();
  Tensor out = Tensor::zeros(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out.at(i, j) = xv.at(0, j);
  return make_op(std::move(out), {x}, [n, d](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) g[j] += self.grad.at(i, j);
  });
}

Value max_over_rows(const Value& x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "max_over_rows");
  const std::size_t n = xv.rows(), d = xv.cols();
  if (n == 0 || d == 0) {
    throw ShapeError("max_over_rows: empty input " + xv.shape_str());
  }
  Tensor out = Tensor::zeros(1, d);
  std::vector<std::size_t> argmax(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    double best = xv.at(0, j);
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (xv.at(i, j) > best) {  // strict: ties keep the lowest row index
        best = xv.at(i, j);
        best_i = i;
      }
    }
    out.at(0, j) = best;
    argmax[j] = best_i;
  }
  return make_op(std::move(out), {x}, [argmax, d](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t j = 0; j < d; ++j) g.at(argmax[j], j) += self.grad.at(0, j);
  });
}

Value softmax_rows(const Value& x) {
  const Tensor& xv = x.value();
  require_rank2(xv, "softmax_rows");
  const std::size_t n = xv.rows(), k = xv.cols();
  Tensor out = Tensor::zeros(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    double m = xv.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, xv.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(xv.at(i, j) - m);
      out.at(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < k; ++j) out.at(i, j) /= z;
  }
  Tensor probs = out;
  return make_op(std::move(out), {x}, [probs, n, k](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += self.grad.at(i, j) * probs.at(i, j);
      for (std::size_t j = 0; j < k; ++j)
        g.at(i, j) += probs.at(i, j) * (self.grad.at(i, j) - dot);
    }
  });
}

Value softmax_cross_entropy(const Value& logits, const std::vector<int>& targets) {
  const Tensor& lv = logits.value();
  require_rank2(lv, "softmax_cross_entropy");
  const std::size_t n = lv.rows(), k = lv.cols();
  if (n == 0) throw ShapeError("softmax_cross_entropy: empty logits");
  if (targets.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw DataError("softmax_cross_entropy: target class " + std::to_string(t) +
                      " out of range [0, " + std::to_string(k) + ")");
    }
  }
  Tensor probs = Tensor::zeros(n, k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = lv.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) m = std::max(m, lv.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(lv.at(i, j) - m);
    const double log_z = m + std::log(z);
    loss += log_z - lv.at(i, static_cast<std::size_t>(targets[i]));
    for (std::size_t j = 0; j < k; ++j)
      probs.at(i, j) = std::exp(lv.at(i, j) - log_z);
  }
  loss /= static_cast<double>(n);
  return make_op(Tensor::scalar(loss), {logits},
                 [probs, targets, n, k](Node& self) {
                   Tensor& g = self.parents[0]->grad_storage();
                   const double scale = self.grad.item() / static_cast<double>(n);
                   for (std::size_t i = 0; i < n; ++i) {
                     for (std::size_t j = 0; j < k; ++j) {
                       const double indicator =
                           (static_cast<std::size_t>(targets[i]) == j) ? 1.0 : 0.0;
                       g.at(i, j) += scale * (probs.at(i, j) - indicator);
                     }
                   }
                 });
}

Value sum_all(const Value& x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return make_op(Tensor::scalar(s), {x}, [](Node& self) {
    Tensor& g = self.parents[0]->grad_storage();
    const double gv = self.grad.item();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += gv;
  });
}

void backward(const Value& loss) {
  if (!loss.defined()) throw Error("backward: undefined loss value");
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + loss.value().shape_str());
  }
  // Iterative post-order DFS; reverse post-order is a topological order with
  // every node ahead of all its parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct StackEntry {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<StackEntry> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    StackEntry& top = stack.back();
    if (top.next_parent < top.node->parents.size()) {
      Node* parent = top.node->parents[top.next_parent++].get();
      if (visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(top.node);
      stack.pop_back();
    }
  }
  ++g_backward_epoch;
  for (Node* n : order) {
    n->grad = Tensor(n->value.shape());
    n->grad_epoch = g_backward_epoch;
  }
  loss.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace radarseg::ad
