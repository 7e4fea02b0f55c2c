#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "tango/tensor.hpp"

namespace tango::ad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_;
  std::size_t id_;
};

// Reverse-mode recorder. Nodes are appended in evaluation order, so creation
// order is a topological order and backward walks it in reverse, touching
// each node once. Single-threaded: use one tape per worker.
class Tape {
 public:
  using GradBuffers = std::vector<std::vector<double>>;
  // Receives d(output)/d(this node) and accumulates into parent buffers.
  using Backward =
      std::function<void(std::span<const double> grad, GradBuffers& grads)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Tensor value);
  Var constant(Tensor value);

  // Appends an op result. `parents` are node ids; `backward` may be empty for
  // ops with no differentiable inputs.
  Var record(Tensor value, std::vector<std::size_t> parents, Backward backward);

  // Gradients of a scalar `output` with respect to each of `wrt`, shaped like
  // the corresponding inputs. Can be called more than once per tape.
  std::vector<Tensor> gradient(const Var& output, std::span<const Var> wrt) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> parents;
    Backward backward;
    bool requires_grad = false;
  };
  // deque keeps value references stable while the tape grows.
  std::deque<Node> nodes_;
};

// Primitives. None of them mutates its inputs. Binary elementwise ops
// broadcast numpy-style up to rank 4.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var tanh(const Var& a);
// Derivative at exactly 0 is taken as 0.
Var relu(const Var& a);
// Row-wise softmax over the last axis of a matrix.
Var softmax_rows(const Var& a);
Var squared_norm(const Var& a);
Var reshape(const Var& a, Shape shape);
// out[i] = a[index[i]] viewed with `shape`; backward scatter-adds.
Var gather(const Var& a, std::vector<std::size_t> index, Shape shape);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }

// A scalar objective rebuilt from scratch on a fresh tape for each
// evaluation. `params` holds one leaf per parameter tensor.
using Objective = std::function<Var(Tape& tape, std::span<const Var> params)>;

double evaluate(const Objective& f, std::span<const Tensor> params);

std::vector<Tensor> grad(const Objective& f, std::span<const Tensor> params);

struct FiniteDiffOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a seeded random subset.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
  // Denominator floor so near-zero gradients are compared absolutely.
  double scale_floor = 1e-6;
};

struct FiniteDiffReport {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

// Central differences on each checked coordinate against grad(). Relative
// error is |analytic - numeric| / max(|analytic|, |numeric|, scale_floor).
// Points exactly on a ReLU kink are outside the contract.
FiniteDiffReport finite_diff_check(const Objective& f,
                                   std::span<const Tensor> params,
                                   const FiniteDiffOptions& options = {});

}  // namespace tango::ad
