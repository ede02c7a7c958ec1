#include "mmvae/tape.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace mmvae {
namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

NodeId Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, NodeId)> backprop) {
  assert(value.all_finite());
  nodes_.push_back({std::move(value), requires_grad, std::move(backprop)});
  return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

void Tape::accumulate(NodeId id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  if (grads_[id].numel() == 0) grads_[id] = Tensor(nodes_[id].value.rows, nodes_[id].value.cols);
  add_in_place(grads_[id], g);
}

void Tape::backward(NodeId objective) {
  require(objective >= 0 && objective < size(), "backward: bad objective node");
  require(nodes_[objective].value.numel() == 1, "backward: objective must be scalar");
  grads_.assign(nodes_.size(), Tensor{});
  if (!nodes_[objective].requires_grad) return;  // constant objective: all-zero gradients
  grads_[objective] = Tensor(1, 1, 1.0);
  for (NodeId id = objective; id >= 0; --id) {
    if (!nodes_[id].requires_grad || !has_grad(id)) continue;
    if (nodes_[id].backprop) nodes_[id].backprop(*this, id);
  }
}

const Tensor& Tape::grad(NodeId id) {
  require(!grads_.empty(), "grad: backward() has not run");
  if (grads_[id].numel() == 0) grads_[id] = Tensor(nodes_[id].value.rows, nodes_[id].value.cols);
  return grads_[id];
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  Tensor out = mmvae::matmul(value(a), value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    if (t.requires_grad(a)) t.accumulate(a, mmvae::matmul(g, transpose(t.value(b))));
    if (t.requires_grad(b)) t.accumulate(b, mmvae::matmul(transpose(t.value(a)), g));
  });
}

NodeId Tape::add(NodeId a, NodeId b) {
  require(value(a).same_shape(value(b)), "add: shape mismatch");
  Tensor out = value(a);
  add_in_place(out, value(b));
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    t.accumulate(a, t.grads_[self]);
    t.accumulate(b, t.grads_[self]);
  });
}

NodeId Tape::add_bias(NodeId matrix, NodeId bias_row) {
  const Tensor& m = value(matrix);
  const Tensor& r = value(bias_row);
  require(r.rows == 1 && r.cols == m.cols, "add_bias: bias must be [1 x cols]");
  Tensor out = m;
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) out.at(i, j) += r.at(0, j);
  }
  const bool rg = requires_grad(matrix) || requires_grad(bias_row);
  return push(std::move(out), rg, [matrix, bias_row](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    t.accumulate(matrix, g);
    if (t.requires_grad(bias_row)) {
      Tensor colsum(1, g.cols);
      for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < g.cols; ++j) colsum.at(0, j) += g.at(i, j);
      }
      t.accumulate(bias_row, colsum);
    }
  });
}

NodeId Tape::sub(NodeId a, NodeId b) {
  require(value(a).same_shape(value(b)), "sub: shape mismatch");
  Tensor out = value(a);
  for (int i = 0; i < out.numel(); ++i) out.data[i] -= value(b).data[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    t.accumulate(a, t.grads_[self]);
    if (t.requires_grad(b)) {
      Tensor neg = t.grads_[self];
      scale_in_place(neg, -1.0);
      t.accumulate(b, neg);
    }
  });
}

NodeId Tape::mul(NodeId a, NodeId b) {
  require(value(a).same_shape(value(b)), "mul: shape mismatch");
  Tensor out = value(a);
  for (int i = 0; i < out.numel(); ++i) out.data[i] *= value(b).data[i];
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    if (t.requires_grad(a)) {
      Tensor ga = g;
      for (int i = 0; i < ga.numel(); ++i) ga.data[i] *= t.value(b).data[i];
      t.accumulate(a, ga);
    }
    if (t.requires_grad(b)) {
      Tensor gb = g;
      for (int i = 0; i < gb.numel(); ++i) gb.data[i] *= t.value(a).data[i];
      t.accumulate(b, gb);
    }
  });
}

NodeId Tape::scale(NodeId a, double factor) {
  Tensor out = value(a);
  scale_in_place(out, factor);
  return push(std::move(out), requires_grad(a), [a, factor](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    scale_in_place(g, factor);
    t.accumulate(a, g);
  });
}

NodeId Tape::tanh(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::tanh(v);
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    const Tensor& y = t.value(self);
    for (int i = 0; i < g.numel(); ++i) g.data[i] *= 1.0 - y.data[i] * y.data[i];
    t.accumulate(a, g);
  });
}

NodeId Tape::relu(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    const Tensor& x = t.value(a);
    for (int i = 0; i < g.numel(); ++i) {
      if (x.data[i] <= 0.0) g.data[i] = 0.0;
    }
    t.accumulate(a, g);
  });
}

NodeId Tape::sigmoid(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    const Tensor& y = t.value(self);
    for (int i = 0; i < g.numel(); ++i) g.data[i] *= y.data[i] * (1.0 - y.data[i]);
    t.accumulate(a, g);
  });
}

NodeId Tape::exp(NodeId a) {
  Tensor out = value(a);
  for (double& v : out.data) v = std::exp(v);
  return push(std::move(out), requires_grad(a), [a](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    const Tensor& y = t.value(self);
    for (int i = 0; i < g.numel(); ++i) g.data[i] *= y.data[i];
    t.accumulate(a, g);
  });
}

NodeId Tape::clamp(NodeId a, double lo, double hi) {
  Tensor out = value(a);
  for (double& v : out.data) v = v < lo ? lo : (v > hi ? hi : v);
  return push(std::move(out), requires_grad(a), [a, lo, hi](Tape& t, NodeId self) {
    Tensor g = t.grads_[self];
    const Tensor& x = t.value(a);
    for (int i = 0; i < g.numel(); ++i) {
      if (x.data[i] <= lo || x.data[i] >= hi) g.data[i] = 0.0;
    }
    t.accumulate(a, g);
  });
}

NodeId Tape::sum_all(NodeId a) {
  double total = 0.0;
  for (double v : value(a).data) total += v;
  return push(Tensor(1, 1, total), requires_grad(a), [a](Tape& t, NodeId self) {
    const double g = t.grads_[self].data[0];
    t.accumulate(a, Tensor(t.value(a).rows, t.value(a).cols, g));
  });
}

NodeId Tape::mean_all(NodeId a) {
  require(value(a).numel() > 0, "mean_all: empty tensor");
  double total = 0.0;
  for (double v : value(a).data) total += v;
  const int n = value(a).numel();
  return push(Tensor(1, 1, total / n), requires_grad(a), [a, n](Tape& t, NodeId self) {
    const double g = t.grads_[self].data[0] / n;
    t.accumulate(a, Tensor(t.value(a).rows, t.value(a).cols, g));
  });
}

NodeId Tape::reparam(NodeId mean, NodeId log_var, NodeId eps) {
  const Tensor& m = value(mean);
  require(m.same_shape(value(log_var)) && m.same_shape(value(eps)), "reparam: shape mismatch");
  Tensor out = m;
  for (int i = 0; i < out.numel(); ++i) {
    out.data[i] += std::exp(0.5 * value(log_var).data[i]) * value(eps).data[i];
  }
  const bool rg = requires_grad(mean) || requires_grad(log_var);
  return push(std::move(out), rg, [mean, log_var, eps](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    t.accumulate(mean, g);
    if (t.requires_grad(log_var)) {
      Tensor glv = g;
      for (int i = 0; i < glv.numel(); ++i) {
        glv.data[i] *= 0.5 * std::exp(0.5 * t.value(log_var).data[i]) * t.value(eps).data[i];
      }
      t.accumulate(log_var, glv);
    }
  });
}

NodeId Tape::kl_std_rows(NodeId mean, NodeId log_var) {
  const Tensor& m = value(mean);
  const Tensor& lv = value(log_var);
  require(m.same_shape(lv), "kl_std_rows: shape mismatch");
  Tensor out(m.rows, 1);
  for (int i = 0; i < m.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      acc += 0.5 * (std::exp(lv.at(i, j)) + m.at(i, j) * m.at(i, j) - 1.0 - lv.at(i, j));
    }
    out.at(i, 0) = acc;
  }
  const bool rg = requires_grad(mean) || requires_grad(log_var);
  return push(std::move(out), rg, [mean, log_var](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    const Tensor& m = t.value(mean);
    const Tensor& lv = t.value(log_var);
    if (t.requires_grad(mean)) {
      Tensor gm(m.rows, m.cols);
      for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) gm.at(i, j) = g.at(i, 0) * m.at(i, j);
      }
      t.accumulate(mean, gm);
    }
    if (t.requires_grad(log_var)) {
      Tensor glv(m.rows, m.cols);
      for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) {
          glv.at(i, j) = g.at(i, 0) * 0.5 * (std::exp(lv.at(i, j)) - 1.0);
        }
      }
      t.accumulate(log_var, glv);
    }
  });
}

NodeId Tape::kl_pair_rows(NodeId mean_q, NodeId lv_q, NodeId mean_p, NodeId lv_p) {
  const Tensor& mq = value(mean_q);
  require(mq.same_shape(value(lv_q)) && mq.same_shape(value(mean_p)) &&
              mq.same_shape(value(lv_p)),
          "kl_pair_rows: shape mismatch");
  const Tensor& lq = value(lv_q);
  const Tensor& mp = value(mean_p);
  const Tensor& lp = value(lv_p);
  Tensor out(mq.rows, 1);
  for (int i = 0; i < mq.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < mq.cols; ++j) {
      const double dm = mq.at(i, j) - mp.at(i, j);
      acc += 0.5 * (lp.at(i, j) - lq.at(i, j) + std::exp(lq.at(i, j) - lp.at(i, j)) +
                    dm * dm * std::exp(-lp.at(i, j)) - 1.0);
    }
    out.at(i, 0) = acc;
  }
  const bool rg = requires_grad(mean_q) || requires_grad(lv_q) || requires_grad(mean_p) ||
                  requires_grad(lv_p);
  return push(std::move(out), rg, [mean_q, lv_q, mean_p, lv_p](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    const Tensor& mq = t.value(mean_q);
    const Tensor& lq = t.value(lv_q);
    const Tensor& mp = t.value(mean_p);
    const Tensor& lp = t.value(lv_p);
    const int rows = mq.rows;
    const int cols = mq.cols;
    Tensor gmq(rows, cols), glq(rows, cols), gmp(rows, cols), glp(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const double gi = g.at(i, 0);
      for (int j = 0; j < cols; ++j) {
        const double dm = mq.at(i, j) - mp.at(i, j);
        const double e_lq_lp = std::exp(lq.at(i, j) - lp.at(i, j));
        const double e_neg_lp = std::exp(-lp.at(i, j));
        gmq.at(i, j) = gi * dm * e_neg_lp;
        gmp.at(i, j) = -gi * dm * e_neg_lp;
        glq.at(i, j) = gi * 0.5 * (e_lq_lp - 1.0);
        glp.at(i, j) = gi * 0.5 * (1.0 - e_lq_lp - dm * dm * e_neg_lp);
      }
    }
    t.accumulate(mean_q, gmq);
    t.accumulate(lv_q, glq);
    t.accumulate(mean_p, gmp);
    t.accumulate(lv_p, glp);
  });
}

NodeId Tape::gauss_logprob_rows(NodeId x, NodeId mean, NodeId log_var) {
  const Tensor& xv = value(x);
  require(xv.same_shape(value(mean)) && xv.same_shape(value(log_var)),
          "gauss_logprob_rows: shape mismatch");
  const Tensor& m = value(mean);
  const Tensor& lv = value(log_var);
  Tensor out(xv.rows, 1);
  for (int i = 0; i < xv.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < xv.cols; ++j) {
      const double dx = xv.at(i, j) - m.at(i, j);
      acc += -0.5 * kLn2Pi - 0.5 * lv.at(i, j) - 0.5 * dx * dx * std::exp(-lv.at(i, j));
    }
    out.at(i, 0) = acc;
  }
  const bool rg = requires_grad(x) || requires_grad(mean) || requires_grad(log_var);
  return push(std::move(out), rg, [x, mean, log_var](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    const Tensor& xv = t.value(x);
    const Tensor& m = t.value(mean);
    const Tensor& lv = t.value(log_var);
    const int rows = xv.rows;
    const int cols = xv.cols;
    Tensor gm(rows, cols), glv(rows, cols), gx(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const double gi = g.at(i, 0);
      for (int j = 0; j < cols; ++j) {
        const double inv_var = std::exp(-lv.at(i, j));
        const double dx = xv.at(i, j) - m.at(i, j);
        gm.at(i, j) = gi * dx * inv_var;
        gx.at(i, j) = -gi * dx * inv_var;
        glv.at(i, j) = gi * (-0.5 + 0.5 * dx * dx * inv_var);
      }
    }
    t.accumulate(mean, gm);
    t.accumulate(log_var, glv);
    t.accumulate(x, gx);
  });
}

NodeId Tape::bern_logprob_rows(NodeId x, NodeId logits) {
  const Tensor& xv = value(x);
  require(xv.same_shape(value(logits)), "bern_logprob_rows: shape mismatch");
  for (double v : xv.data) {
    require(v == 0.0 || v == 1.0, "bern_logprob_rows: observations must be 0 or 1");
  }
  const Tensor& l = value(logits);
  Tensor out(xv.rows, 1);
  for (int i = 0; i < xv.rows; ++i) {
    double acc = 0.0;
    for (int j = 0; j < xv.cols; ++j) {
      const double lij = l.at(i, j);
      const double softplus = std::max(lij, 0.0) + std::log1p(std::exp(-std::abs(lij)));
      acc += xv.at(i, j) * lij - softplus;
    }
    out.at(i, 0) = acc;
  }
  const bool rg = requires_grad(x) || requires_grad(logits);
  return push(std::move(out), rg, [x, logits](Tape& t, NodeId self) {
    const Tensor& g = t.grads_[self];
    const Tensor& xv = t.value(x);
    const Tensor& l = t.value(logits);
    if (t.requires_grad(logits)) {
      Tensor gl(xv.rows, xv.cols);
      for (int i = 0; i < xv.rows; ++i) {
        for (int j = 0; j < xv.cols; ++j) {
          const double sig = 1.0 / (1.0 + std::exp(-l.at(i, j)));
          gl.at(i, j) = g.at(i, 0) * (xv.at(i, j) - sig);
        }
      }
      t.accumulate(logits, gl);
    }
  });
}

}  // namespace mmvae
