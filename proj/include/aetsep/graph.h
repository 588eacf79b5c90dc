// Copyright 2026 The aetsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef AETSEP_GRAPH_H_
#define AETSEP_GRAPH_H_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aetsep/tensor.h"

namespace aetsep {

// Closed operation set of the differentiation engine.
enum class OpKind {
  kInput,
  kConstant,
  kConv1d,           // signal [T], filters [F, K] -> [F, L], strided
  kConvTranspose1d,  // frames [F, L], filters [F, K] -> [(L-1)*stride + K]
  kRowConv,          // rows [R, L], kernel [K] -> [R, L], zero "same" padding
  kDense,            // W [O, I], x [I, L] or [I], b [O] -> W x + b
  kSoftplus,
  kAbs,
  kSqrt,
  kSquare,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMin,
  kClamp,
  kInner,
  kL2Norm,
  kMean,
  kConcat,
  kSlice,
  kLinearMap,  // fixed banded matrix applied to a vector
};

const char* OpKindName(OpKind kind);

struct NodeId {
  int32_t index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(NodeId a, NodeId b) { return a.index == b.index; }
};

struct OpAttrs {
  int64_t stride = 1;
  int axis = 0;
  int64_t begin = 0;
  int64_t end = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::shared_ptr<const BandedLinearMap> map;
};

struct Node {
  OpKind kind = OpKind::kConstant;
  std::vector<NodeId> inputs;
  Shape shape;
  OpAttrs attrs;
  std::string name;                        // kInput only
  std::shared_ptr<const Tensor> constant;  // kConstant only
};

// A computation recorded as topologically ordered nodes. Shapes are checked
// when nodes are added; values are supplied at evaluation time by name.
class Graph {
 public:
  NodeId Input(const std::string& name, Shape shape);
  NodeId Constant(Tensor value);
  NodeId Scalar(double value);

  // Generic builder; throws kUnsupportedOp for kinds outside the
  // differentiable set and kShapeError for incompatible operands.
  NodeId AddOp(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs = {});

  NodeId Conv1d(NodeId signal, NodeId filters, int64_t stride);
  NodeId ConvTranspose1d(NodeId frames, NodeId filters, int64_t stride);
  NodeId RowConv(NodeId rows, NodeId kernel);
  NodeId Dense(NodeId weight, NodeId x, NodeId bias);
  NodeId Softplus(NodeId a) { return AddOp(OpKind::kSoftplus, {a}); }
  NodeId Abs(NodeId a) { return AddOp(OpKind::kAbs, {a}); }
  NodeId Sqrt(NodeId a) { return AddOp(OpKind::kSqrt, {a}); }
  NodeId Square(NodeId a) { return AddOp(OpKind::kSquare, {a}); }
  NodeId Add(NodeId a, NodeId b) { return AddOp(OpKind::kAdd, {a, b}); }
  NodeId Sub(NodeId a, NodeId b) { return AddOp(OpKind::kSub, {a, b}); }
  NodeId Mul(NodeId a, NodeId b) { return AddOp(OpKind::kMul, {a, b}); }
  NodeId Div(NodeId a, NodeId b) { return AddOp(OpKind::kDiv, {a, b}); }
  NodeId Min(NodeId a, NodeId b) { return AddOp(OpKind::kMin, {a, b}); }
  NodeId Clamp(NodeId a, double lo, double hi);
  NodeId Inner(NodeId a, NodeId b) { return AddOp(OpKind::kInner, {a, b}); }
  NodeId L2Norm(NodeId a) { return AddOp(OpKind::kL2Norm, {a}); }
  NodeId Mean(NodeId a) { return AddOp(OpKind::kMean, {a}); }
  NodeId Concat(std::vector<NodeId> parts);
  NodeId Slice(NodeId a, int axis, int64_t begin, int64_t end);
  NodeId LinearMap(NodeId a, std::shared_ptr<const BandedLinearMap> map);

  // Convenience: a * constant, a + constant.
  NodeId Scale(NodeId a, double factor) { return Mul(a, Scalar(factor)); }
  NodeId AddScalar(NodeId a, double value) { return Add(a, Scalar(value)); }

  void SetOutput(NodeId id);
  NodeId output() const { return output_; }

  int32_t size() const { return static_cast<int32_t>(nodes_.size()); }
  const Node& node(NodeId id) const { return nodes_.at(id.index); }
  const Shape& shape(NodeId id) const { return node(id).shape; }
  std::optional<NodeId> FindInput(const std::string& name) const;
  const std::map<std::string, NodeId>& inputs() const { return inputs_; }

 private:
  NodeId Push(Node node);
  void Check(NodeId id) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> inputs_;
  NodeId output_;
};

// Name -> tensor bindings. Tensors are referenced, not copied; they must
// outlive every evaluation that uses them.
class Inputs {
 public:
  Inputs& Bind(const std::string& name, const Tensor& value);
  const Tensor* Find(const std::string& name) const;

 private:
  std::map<std::string, const Tensor*> bound_;
};

// Forward values for every node of a graph.
class Evaluation {
 public:
  Evaluation() = default;
  Evaluation(Evaluation&&) = default;
  Evaluation& operator=(Evaluation&&) = default;
  // Holds pointers into its own storage.
  Evaluation(const Evaluation&) = delete;
  Evaluation& operator=(const Evaluation&) = delete;

  const Tensor& operator[](NodeId id) const { return *values_.at(id.index); }

 private:
  friend class Evaluator;
  std::vector<Tensor> owned_;
  std::vector<const Tensor*> values_;
};

Evaluation Evaluate(const Graph& graph, const Inputs& inputs);

struct GradientResult {
  double value = 0.0;
  std::map<std::string, Tensor> gradients;
  Evaluation evaluation;
};

// Exact reverse-mode gradient of the scalar graph output with respect to the
// named inputs. Throws kNotScalar if the output has more than one element.
GradientResult EvaluateWithGradient(const Graph& graph, const Inputs& inputs,
                                    const std::set<std::string>& wrt);

// Central differences with step h_i = step * max(1, |x_i|).
Tensor FiniteDifferenceGradient(const Graph& graph, const Inputs& inputs,
                                const std::string& wrt, double step);

// Same oracle restricted to the listed flat coordinates.
std::vector<double> FiniteDifferenceAt(const Graph& graph, const Inputs& inputs,
                                       const std::string& wrt,
                                       std::span<const int64_t> coords,
                                       double step);

}  // namespace aetsep

#endif  // AETSEP_GRAPH_H_
