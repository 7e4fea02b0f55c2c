#include "tango/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "tango/errors.hpp"

namespace tango::ad {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents,
                 Backward backward) {
  bool needs = false;
  for (auto p : parents) needs = needs || nodes_.at(p).requires_grad;
  nodes_.push_back(Node{std::move(value), std::move(parents),
                        needs ? std::move(backward) : Backward{}, needs});
  return Var(this, nodes_.size() - 1);
}

std::vector<Tensor> Tape::gradient(const Var& output,
                                   std::span<const Var> wrt) const {
  if (&output.tape() != this) throw ContractError("output from another tape");
  if (output.value().size() != 1) {
    throw ContractError("gradient needs a scalar output, got shape " +
                        shape_to_string(output.shape()));
  }
  GradBuffers grads(nodes_.size());
  grads[output.id()].assign(1, 1.0);
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (grads[id].empty() || !node.backward) continue;
    for (auto p : node.parents) {
      if (nodes_[p].requires_grad && grads[p].empty()) {
        grads[p].assign(nodes_[p].value.size(), 0.0);
      }
    }
    node.backward(grads[id], grads);
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const auto& v : wrt) {
    if (&v.tape() != this) throw ContractError("parameter from another tape");
    const auto& shape = nodes_[v.id()].value.shape();
    if (grads[v.id()].empty()) {
      out.push_back(Tensor::zeros(shape));
    } else {
      out.emplace_back(shape, grads[v.id()]);
    }
  }
  return out;
}

namespace {

void same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ContractError("vars on different tapes");
}

// Index maps from each output element to its source element in a and b.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> a_idx;
  std::vector<std::size_t> b_idx;
};

std::shared_ptr<const Broadcast> plan_broadcast(const Shape& a, const Shape& b) {
  auto plan = std::make_shared<Broadcast>();
  if (a == b) {
    plan->out = a;
    const auto n = shape_numel(a);
    plan->a_idx.resize(n);
    std::iota(plan->a_idx.begin(), plan->a_idx.end(), 0);
    plan->b_idx = plan->a_idx;
    return plan;
  }
  const std::size_t rank = std::max(a.size(), b.size());
  if (rank > 4) throw ContractError("broadcasting supports rank <= 4");
  Shape pa(rank - a.size(), 1), pb(rank - b.size(), 1);
  pa.insert(pa.end(), a.begin(), a.end());
  pb.insert(pb.end(), b.begin(), b.end());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ContractError("cannot broadcast " + shape_to_string(a) + " with " +
                          shape_to_string(b));
    }
    out[i] = std::max(pa[i], pb[i]);
  }
  auto strides = [&](const Shape& s) {
    std::vector<std::size_t> st(rank, 0);
    std::size_t acc = 1;
    for (std::size_t i = rank; i-- > 0;) {
      st[i] = s[i] == 1 ? 0 : acc;
      acc *= s[i];
    }
    return st;
  };
  const auto sa = strides(pa), sb = strides(pb);
  const std::size_t n = shape_numel(out);
  plan->a_idx.resize(n);
  plan->b_idx.resize(n);
  std::vector<std::size_t> counter(rank, 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t ia = 0, ib = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      ia += counter[d] * sa[d];
      ib += counter[d] * sb[d];
    }
    plan->a_idx[k] = ia;
    plan->b_idx[k] = ib;
    for (std::size_t d = rank; d-- > 0;) {
      if (++counter[d] < out[d]) break;
      counter[d] = 0;
    }
  }
  // Keep the caller's shape when one operand already has the output rank.
  plan->out = out;
  if (rank == a.size() && shape_numel(a) == n) plan->out = a;
  if (rank == b.size() && shape_numel(b) == n) plan->out = b;
  return plan;
}

template <typename Fwd>
Tensor elementwise(const Tensor& a, Fwd f) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i]);
  return Tensor(a.shape(), std::move(out));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  same_tape(a, b);
  auto plan = plan_broadcast(a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(plan->a_idx.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = av[plan->a_idx[k]] + bv[plan->b_idx[k]];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(
      Tensor(plan->out, std::move(out)), {ia, ib},
      [plan, ia, ib](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        auto& gb = grads[ib];
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (!ga.empty()) ga[plan->a_idx[k]] += g[k];
          if (!gb.empty()) gb[plan->b_idx[k]] += g[k];
        }
      });
}

Var sub(const Var& a, const Var& b) {
  same_tape(a, b);
  auto plan = plan_broadcast(a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(plan->a_idx.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = av[plan->a_idx[k]] - bv[plan->b_idx[k]];
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(
      Tensor(plan->out, std::move(out)), {ia, ib},
      [plan, ia, ib](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        auto& gb = grads[ib];
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (!ga.empty()) ga[plan->a_idx[k]] += g[k];
          if (!gb.empty()) gb[plan->b_idx[k]] -= g[k];
        }
      });
}

Var mul(const Var& a, const Var& b) {
  same_tape(a, b);
  auto plan = plan_broadcast(a.shape(), b.shape());
  const auto& av = a.value();
  const auto& bv = b.value();
  std::vector<double> out(plan->a_idx.size());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = av[plan->a_idx[k]] * bv[plan->b_idx[k]];
  const auto ia = a.id(), ib = b.id();
  Tape* tape = &a.tape();
  return tape->record(
      Tensor(plan->out, std::move(out)), {ia, ib},
      [plan, ia, ib, tape](std::span<const double> g,
                           Tape::GradBuffers& grads) {
        const auto& av = tape->value(ia);
        const auto& bv = tape->value(ib);
        auto& ga = grads[ia];
        auto& gb = grads[ib];
        for (std::size_t k = 0; k < g.size(); ++k) {
          if (!ga.empty()) ga[plan->a_idx[k]] += g[k] * bv[plan->b_idx[k]];
          if (!gb.empty()) gb[plan->b_idx[k]] += g[k] * av[plan->a_idx[k]];
        }
      });
}

Var scale(const Var& a, double s) {
  const auto ia = a.id();
  return a.tape().record(
      elementwise(a.value(), [s](double x) { return s * x; }), {ia},
      [ia, s](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += s * g[k];
      });
}

Var matmul(const Var& a, const Var& b) {
  same_tape(a, b);
  Tensor out = tango::matmul(a.value(), b.value());
  const auto ia = a.id(), ib = b.id();
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tape* tape = &a.tape();
  return tape->record(
      std::move(out), {ia, ib},
      [=](std::span<const double> g, Tape::GradBuffers& grads) {
        const auto av = tape->value(ia).data();
        const auto bv = tape->value(ib).data();
        auto& ga = grads[ia];
        auto& gb = grads[ib];
        if (!ga.empty()) {
          // dA = G * B^T
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j)
                acc += g[i * n + j] * bv[p * n + j];
              ga[i * k + p] += acc;
            }
        }
        if (!gb.empty()) {
          // dB = A^T * G
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = av[i * k + p];
              if (aip == 0.0) continue;
              for (std::size_t j = 0; j < n; ++j)
                gb[p * n + j] += aip * g[i * n + j];
            }
        }
      });
}

Var transpose(const Var& a) {
  Tensor out = tango::transpose(a.value());
  const auto ia = a.id();
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  return a.tape().record(
      std::move(out), {ia},
      [=](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
      });
}

Var sum(const Var& a) {
  const auto& av = a.value();
  const double s = std::accumulate(av.data().begin(), av.data().end(), 0.0);
  const auto ia = a.id();
  return a.tape().record(
      Tensor::scalar(s), {ia},
      [ia](std::span<const double> g, Tape::GradBuffers& grads) {
        for (auto& x : grads[ia]) x += g[0];
      });
}

Var mean(const Var& a) {
  const auto n = a.value().size();
  if (n == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var exp(const Var& a) {
  Tensor out = elementwise(a.value(), [](double x) { return std::exp(x); });
  auto y = std::make_shared<Tensor>(out);
  const auto ia = a.id();
  return a.tape().record(
      std::move(out), {ia},
      [ia, y](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (*y)[k];
      });
}

Var log(const Var& a) {
  for (double x : a.value().data()) {
    if (!(x > 0.0)) throw ContractError("log of non-positive value");
  }
  Tensor out = elementwise(a.value(), [](double x) { return std::log(x); });
  const auto ia = a.id();
  Tape* tape = &a.tape();
  return tape->record(
      std::move(out), {ia},
      [ia, tape](std::span<const double> g, Tape::GradBuffers& grads) {
        const auto& x = tape->value(ia);
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] / x[k];
      });
}

Var tanh(const Var& a) {
  Tensor out = elementwise(a.value(), [](double x) { return std::tanh(x); });
  const auto ia = a.id();
  Tape* tape = &a.tape();
  auto y = std::make_shared<Tensor>(out);
  return tape->record(
      std::move(out), {ia},
      [ia, y](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double t = (*y)[k];
          ga[k] += g[k] * (1.0 - t * t);
        }
      });
}

Var relu(const Var& a) {
  Tensor out =
      elementwise(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  const auto ia = a.id();
  Tape* tape = &a.tape();
  return tape->record(
      std::move(out), {ia},
      [ia, tape](std::span<const double> g, Tape::GradBuffers& grads) {
        const auto& x = tape->value(ia);
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k)
          if (x[k] > 0.0) ga[k] += g[k];
      });
}

Var softmax_rows(const Var& a) {
  if (a.value().rank() != 2) throw ContractError("softmax_rows needs a matrix");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  const auto x = a.value().data();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = x[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[i * n + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[i * n + j] = std::exp(x[i * n + j] - mx);
      z += y[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] /= z;
  }
  auto ys = std::make_shared<std::vector<double>>(y);
  const auto ia = a.id();
  return a.tape().record(
      Tensor({m, n}, std::move(y)), {ia},
      [=](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        const auto& yv = *ys;
        for (std::size_t i = 0; i < m; ++i) {
          double dotp = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            dotp += g[i * n + j] * yv[i * n + j];
          for (std::size_t j = 0; j < n; ++j)
            ga[i * n + j] += yv[i * n + j] * (g[i * n + j] - dotp);
        }
      });
}

Var squared_norm(const Var& a) {
  const auto ia = a.id();
  Tape* tape = &a.tape();
  return tape->record(
      Tensor::scalar(tango::squared_norm(a.value())), {ia},
      [ia, tape](std::span<const double> g, Tape::GradBuffers& grads) {
        const auto& x = tape->value(ia);
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += 2.0 * g[0] * x[k];
      });
}

Var reshape(const Var& a, Shape shape) {
  const auto ia = a.id();
  return a.tape().record(
      a.value().reshaped(std::move(shape)), {ia},
      [ia](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
      });
}

Var gather(const Var& a, std::vector<std::size_t> index, Shape shape) {
  if (shape_numel(shape) != index.size()) {
    throw ContractError("gather: index count does not match shape");
  }
  const auto& av = a.value();
  std::vector<double> out(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) out[k] = av.at(index[k]);
  auto idx = std::make_shared<const std::vector<std::size_t>>(std::move(index));
  const auto ia = a.id();
  return a.tape().record(
      Tensor(std::move(shape), std::move(out)), {ia},
      [ia, idx](std::span<const double> g, Tape::GradBuffers& grads) {
        auto& ga = grads[ia];
        for (std::size_t k = 0; k < g.size(); ++k) ga[(*idx)[k]] += g[k];
      });
}

double evaluate(const Objective& f, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.constant(p));
  return f(tape, vars).value().item();
}

std::vector<Tensor> grad(const Objective& f, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.variable(p));
  Var out = f(tape, vars);
  return tape.gradient(out, vars);
}

FiniteDiffReport finite_diff_check(const Objective& f,
                                   std::span<const Tensor> params,
                                   const FiniteDiffOptions& options) {
  if (!(options.step > 0.0)) throw ParameterError("finite-difference step must be > 0");
  const auto analytic = grad(f, params);

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p)
    for (std::size_t i = 0; i < params[p].size(); ++i) coords.emplace_back(p, i);
  if (options.max_coordinates > 0 && coords.size() > options.max_coordinates) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
  }

  FiniteDiffReport report;
  std::vector<Tensor> probe(params.begin(), params.end());
  for (auto [p, i] : coords) {
    const double x = params[p][i];
    probe[p] = params[p].with_value(i, x + options.step);
    const double up = evaluate(f, probe);
    probe[p] = params[p].with_value(i, x - options.step);
    const double down = evaluate(f, probe);
    probe[p] = params[p];
    const double numeric = (up - down) / (2.0 * options.step);
    const double exact = analytic[p][i];
    const double denom =
        std::max({std::abs(exact), std::abs(numeric), options.scale_floor});
    report.max_relative_error =
        std::max(report.max_relative_error, std::abs(exact - numeric) / denom);
    ++report.coordinates_checked;
  }
  return report;
}

}  // namespace tango::ad
