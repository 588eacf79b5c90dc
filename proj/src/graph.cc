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

#include "aetsep/graph.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "aetsep/error.h"

namespace aetsep {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;
using ConstRowMap = Eigen::Map<const RowMat>;
using RowMap = Eigen::Map<RowMat>;

[[noreturn]] void ShapeFail(const std::string& what) {
  throw Error(ErrorCode::kShapeError, what);
}

int64_t ConvFrames(int64_t length, int64_t taps, int64_t stride) {
  return (length - taps) / stride + 1;
}

void OverlapAdd(const ColMat& cols, int64_t stride, double* out) {
  const int64_t taps = cols.rows();
  for (int64_t l = 0; l < cols.cols(); ++l) {
    const double* c = cols.col(l).data();
    double* o = out + l * stride;
    for (int64_t k = 0; k < taps; ++k) o[k] += c[k];
  }
}

// Column l holds signal[l * stride, l * stride + taps).
ColMat GatherFrames(const double* signal, int64_t taps, int64_t frames, int64_t stride) {
  ColMat cols(taps, frames);
  for (int64_t l = 0; l < frames; ++l) {
    std::memcpy(cols.col(l).data(), signal + l * stride, taps * sizeof(double));
  }
  return cols;
}

double SoftplusValue(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

bool IsBroadcastScalar(const Shape& s) { return NumElements(s) == 1; }

Shape BinaryShape(const Shape& a, const Shape& b) {
  if (a == b) return a;
  if (IsBroadcastScalar(b)) return a;
  if (IsBroadcastScalar(a)) return b;
  if (NumElements(a) == NumElements(b)) return a;
  ShapeFail("elementwise operands " + ShapeToString(a) + " and " + ShapeToString(b));
}

}  // namespace

const char* OpKindName(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kConv1d: return "conv1d";
    case OpKind::kConvTranspose1d: return "conv_transpose1d";
    case OpKind::kRowConv: return "row_conv";
    case OpKind::kDense: return "dense";
    case OpKind::kSoftplus: return "softplus";
    case OpKind::kAbs: return "abs";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kSquare: return "square";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kMin: return "min";
    case OpKind::kClamp: return "clamp";
    case OpKind::kInner: return "inner";
    case OpKind::kL2Norm: return "l2norm";
    case OpKind::kMean: return "mean";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kLinearMap: return "linear_map";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Graph construction

NodeId Graph::Push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{static_cast<int32_t>(nodes_.size() - 1)};
}

void Graph::Check(NodeId id) const {
  if (id.index < 0 || id.index >= size()) {
    ShapeFail("node id " + std::to_string(id.index) + " is not in the graph");
  }
}

NodeId Graph::Input(const std::string& name, Shape shape) {
  if (inputs_.count(name) != 0) ShapeFail("duplicate input '" + name + "'");
  Node node;
  node.kind = OpKind::kInput;
  node.shape = std::move(shape);
  node.name = name;
  const NodeId id = Push(std::move(node));
  inputs_.emplace(name, id);
  return id;
}

NodeId Graph::Constant(Tensor value) {
  Node node;
  node.kind = OpKind::kConstant;
  node.shape = value.shape();
  node.constant = std::make_shared<const Tensor>(std::move(value));
  return Push(std::move(node));
}

NodeId Graph::Scalar(double value) { return Constant(Tensor::Scalar(value)); }

std::optional<NodeId> Graph::FindInput(const std::string& name) const {
  auto it = inputs_.find(name);
  if (it == inputs_.end()) return std::nullopt;
  return it->second;
}

void Graph::SetOutput(NodeId id) {
  Check(id);
  output_ = id;
}

NodeId Graph::Conv1d(NodeId signal, NodeId filters, int64_t stride) {
  OpAttrs attrs;
  attrs.stride = stride;
  return AddOp(OpKind::kConv1d, {signal, filters}, attrs);
}

NodeId Graph::ConvTranspose1d(NodeId frames, NodeId filters, int64_t stride) {
  OpAttrs attrs;
  attrs.stride = stride;
  return AddOp(OpKind::kConvTranspose1d, {frames, filters}, attrs);
}

NodeId Graph::RowConv(NodeId rows, NodeId kernel) {
  return AddOp(OpKind::kRowConv, {rows, kernel});
}

NodeId Graph::Dense(NodeId weight, NodeId x, NodeId bias) {
  return AddOp(OpKind::kDense, {weight, x, bias});
}

NodeId Graph::Clamp(NodeId a, double lo, double hi) {
  OpAttrs attrs;
  attrs.lo = lo;
  attrs.hi = hi;
  return AddOp(OpKind::kClamp, {a}, attrs);
}

NodeId Graph::Concat(std::vector<NodeId> parts) {
  return AddOp(OpKind::kConcat, std::move(parts));
}

NodeId Graph::Slice(NodeId a, int axis, int64_t begin, int64_t end) {
  OpAttrs attrs;
  attrs.axis = axis;
  attrs.begin = begin;
  attrs.end = end;
  return AddOp(OpKind::kSlice, {a}, attrs);
}

NodeId Graph::LinearMap(NodeId a, std::shared_ptr<const BandedLinearMap> map) {
  OpAttrs attrs;
  attrs.map = std::move(map);
  return AddOp(OpKind::kLinearMap, {a}, attrs);
}

NodeId Graph::AddOp(OpKind kind, std::vector<NodeId> inputs, OpAttrs attrs) {
  for (NodeId in : inputs) Check(in);
  auto arity = [&](size_t n) {
    if (inputs.size() != n) {
      ShapeFail(std::string(OpKindName(kind)) + " expects " + std::to_string(n) +
                " inputs");
    }
  };
  auto in_shape = [&](size_t i) -> const Shape& { return shape(inputs[i]); };

  Shape out;
  switch (kind) {
    case OpKind::kConv1d: {
      arity(2);
      const Shape& s = in_shape(0);
      const Shape& f = in_shape(1);
      if (s.size() != 1 || f.size() != 2) ShapeFail("conv1d expects signal [T] and filters [F, K]");
      if (attrs.stride <= 0) ShapeFail("conv1d stride must be positive");
      if (s[0] < f[1]) {
        throw Error(ErrorCode::kSignalTooShort,
                    "conv1d input of " + std::to_string(s[0]) + " samples is shorter than " +
                        std::to_string(f[1]) + " taps");
      }
      out = {f[0], ConvFrames(s[0], f[1], attrs.stride)};
      break;
    }
    case OpKind::kConvTranspose1d: {
      arity(2);
      const Shape& x = in_shape(0);
      const Shape& f = in_shape(1);
      if (x.size() != 2 || f.size() != 2 || x[0] != f[0]) {
        ShapeFail("conv_transpose1d expects frames [F, L] and filters [F, K]");
      }
      if (attrs.stride <= 0) ShapeFail("conv_transpose1d stride must be positive");
      out = {(x[1] - 1) * attrs.stride + f[1]};
      break;
    }
    case OpKind::kRowConv: {
      arity(2);
      const Shape& k = in_shape(1);
      if (in_shape(0).empty() || in_shape(0).size() > 2 || k.size() != 1 || k[0] % 2 == 0) {
        ShapeFail("row_conv expects rows [R, L] and an odd-length kernel");
      }
      out = in_shape(0);
      break;
    }
    case OpKind::kDense: {
      arity(3);
      const Shape& w = in_shape(0);
      const Shape& x = in_shape(1);
      const Shape& b = in_shape(2);
      if (w.size() != 2 || x.empty() || x.size() > 2 || x[0] != w[1] || b.size() != 1 ||
          b[0] != w[0]) {
        ShapeFail("dense weight " + ShapeToString(w) + ", input " + ShapeToString(x) +
                  ", bias " + ShapeToString(b));
      }
      out = x.size() == 2 ? Shape{w[0], x[1]} : Shape{w[0]};
      break;
    }
    case OpKind::kSoftplus:
    case OpKind::kAbs:
    case OpKind::kSqrt:
    case OpKind::kSquare:
    case OpKind::kClamp:
      arity(1);
      out = in_shape(0);
      break;
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul:
    case OpKind::kDiv:
    case OpKind::kMin:
      arity(2);
      out = BinaryShape(in_shape(0), in_shape(1));
      break;
    case OpKind::kInner:
      arity(2);
      if (NumElements(in_shape(0)) != NumElements(in_shape(1))) {
        ShapeFail("inner product of " + ShapeToString(in_shape(0)) + " and " +
                  ShapeToString(in_shape(1)));
      }
      out = {};
      break;
    case OpKind::kL2Norm:
    case OpKind::kMean:
      arity(1);
      out = {};
      break;
    case OpKind::kConcat: {
      if (inputs.empty()) ShapeFail("concat needs at least one input");
      int64_t total = 0;
      for (size_t i = 0; i < inputs.size(); ++i) total += NumElements(in_shape(i));
      out = {total};
      break;
    }
    case OpKind::kSlice: {
      arity(1);
      const Shape& s = in_shape(0);
      if (s.empty() || s.size() > 2 || attrs.axis < 0 ||
          attrs.axis >= static_cast<int>(s.size()) || attrs.begin < 0 ||
          attrs.end > s[attrs.axis] || attrs.begin >= attrs.end) {
        ShapeFail("slice [" + std::to_string(attrs.begin) + ", " + std::to_string(attrs.end) +
                  ") on axis " + std::to_string(attrs.axis) + " of " + ShapeToString(s));
      }
      out = s;
      out[attrs.axis] = attrs.end - attrs.begin;
      break;
    }
    case OpKind::kLinearMap:
      arity(1);
      if (!attrs.map || in_shape(0).size() != 1 || in_shape(0)[0] != attrs.map->in_size()) {
        ShapeFail("linear map input " + ShapeToString(in_shape(0)));
      }
      out = {attrs.map->out_size()};
      break;
    default:
      throw Error(ErrorCode::kUnsupportedOp,
                  "operation " + std::to_string(static_cast<int>(kind)) +
                      " is not a differentiable graph op");
  }

  Node node;
  node.kind = kind;
  node.inputs = std::move(inputs);
  node.shape = std::move(out);
  node.attrs = std::move(attrs);
  return Push(std::move(node));
}

Inputs& Inputs::Bind(const std::string& name, const Tensor& value) {
  bound_[name] = &value;
  return *this;
}

const Tensor* Inputs::Find(const std::string& name) const {
  auto it = bound_.find(name);
  return it == bound_.end() ? nullptr : it->second;
}

// ---------------------------------------------------------------------------
// Evaluation

class Evaluator {
 public:
  Evaluator(const Graph& graph, const Inputs& inputs) : graph_(graph), inputs_(inputs) {}

  Evaluation Forward() const {
    Evaluation ev;
    const int32_t n = graph_.size();
    ev.owned_.resize(n);
    ev.values_.assign(n, nullptr);
    for (int32_t i = 0; i < n; ++i) {
      const Node& node = graph_.node(NodeId{i});
      if (node.kind == OpKind::kInput) {
        const Tensor* t = inputs_.Find(node.name);
        if (t == nullptr) ShapeFail("input '" + node.name + "' is not bound");
        if (t->shape() != node.shape) {
          ShapeFail("input '" + node.name + "' has shape " + ShapeToString(t->shape()) +
                    ", expected " + ShapeToString(node.shape));
        }
        ev.values_[i] = t;
      } else if (node.kind == OpKind::kConstant) {
        ev.values_[i] = node.constant.get();
      } else {
        ev.owned_[i] = ForwardOp(node, ev);
        ev.values_[i] = &ev.owned_[i];
      }
    }
    return ev;
  }

  std::map<std::string, Tensor> Backward(const Evaluation& ev,
                                         const std::set<std::string>& wrt) const {
    const NodeId out = graph_.output();
    const int32_t n = graph_.size();
    std::vector<char> needs(n, 0);
    for (int32_t i = 0; i < n; ++i) {
      const Node& node = graph_.node(NodeId{i});
      if (node.kind == OpKind::kInput) {
        needs[i] = wrt.count(node.name) != 0;
      } else {
        for (NodeId in : node.inputs) needs[i] |= needs[in.index];
      }
    }
    std::vector<Tensor> grads(n);
    std::vector<char> has(n, 0);
    auto slot = [&](NodeId id) -> Tensor* {
      if (!needs[id.index]) return nullptr;
      if (!has[id.index]) {
        grads[id.index] = Tensor(graph_.shape(id));
        has[id.index] = 1;
      }
      return &grads[id.index];
    };
    if (Tensor* g = slot(out)) (*g)[0] = 1.0;
    for (int32_t i = out.index; i >= 0; --i) {
      if (!has[i]) continue;
      const Node& node = graph_.node(NodeId{i});
      if (node.kind == OpKind::kInput || node.kind == OpKind::kConstant) continue;
      BackwardOp(node, ev, ev[NodeId{i}], grads[i], slot);
    }
    std::map<std::string, Tensor> result;
    for (const std::string& name : wrt) {
      auto id = graph_.FindInput(name);
      if (!id) ShapeFail("gradient requested for unknown input '" + name + "'");
      if (has[id->index]) {
        result.emplace(name, std::move(grads[id->index]));
      } else {
        result.emplace(name, Tensor(graph_.shape(*id)));
      }
    }
    return result;
  }

 private:
  Tensor ForwardOp(const Node& node, const Evaluation& ev) const {
    auto in = [&](size_t i) -> const Tensor& { return ev[node.inputs[i]]; };
    Tensor out(node.shape);
    switch (node.kind) {
      case OpKind::kConv1d: {
        const Tensor& f = in(1);
        const int64_t taps = f.dim(1);
        const int64_t frames = node.shape[1];
        const ColMat cols = GatherFrames(in(0).data(), taps, frames, node.attrs.stride);
        RowMap(out.data(), f.dim(0), frames).noalias() =
            ConstRowMap(f.data(), f.dim(0), taps) * cols;
        break;
      }
      case OpKind::kConvTranspose1d: {
        const Tensor& x = in(0);
        const Tensor& f = in(1);
        const ColMat cols = ConstRowMap(f.data(), f.dim(0), f.dim(1)).transpose() *
                            ConstRowMap(x.data(), x.dim(0), x.dim(1));
        OverlapAdd(cols, node.attrs.stride, out.data());
        break;
      }
      case OpKind::kRowConv: {
        const Tensor& a = in(0);
        const Tensor& k = in(1);
        const int64_t rows = a.rows(), len = a.cols(), taps = k.size(), half = taps / 2;
        for (int64_t r = 0; r < rows; ++r) {
          const double* src = a.data() + r * len;
          double* dst = out.data() + r * len;
          for (int64_t l = 0; l < len; ++l) {
            double acc = 0.0;
            for (int64_t j = 0; j < taps; ++j) {
              const int64_t p = l + j - half;
              if (p >= 0 && p < len) acc += k[j] * src[p];
            }
            dst[l] = acc;
          }
        }
        break;
      }
      case OpKind::kDense: {
        const Tensor& w = in(0);
        const Tensor& x = in(1);
        const Tensor& b = in(2);
        const int64_t cols = x.rank() == 2 ? x.dim(1) : 1;
        RowMap y(out.data(), w.dim(0), cols);
        y.noalias() = ConstRowMap(w.data(), w.dim(0), w.dim(1)) *
                      ConstRowMap(x.data(), x.dim(0), cols);
        y.colwise() += Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
        break;
      }
      case OpKind::kSoftplus:
        Unary(in(0), out, SoftplusValue);
        break;
      case OpKind::kAbs:
        Unary(in(0), out, [](double v) { return std::abs(v); });
        break;
      case OpKind::kSqrt:
        Unary(in(0), out, [](double v) { return std::sqrt(v); });
        break;
      case OpKind::kSquare:
        Unary(in(0), out, [](double v) { return v * v; });
        break;
      case OpKind::kClamp: {
        const double lo = node.attrs.lo, hi = node.attrs.hi;
        Unary(in(0), out, [lo, hi](double v) { return std::min(std::max(v, lo), hi); });
        break;
      }
      case OpKind::kAdd:
        Binary(in(0), in(1), out, [](double a, double b) { return a + b; });
        break;
      case OpKind::kSub:
        Binary(in(0), in(1), out, [](double a, double b) { return a - b; });
        break;
      case OpKind::kMul:
        Binary(in(0), in(1), out, [](double a, double b) { return a * b; });
        break;
      case OpKind::kDiv:
        Binary(in(0), in(1), out, [](double a, double b) { return a / b; });
        break;
      case OpKind::kMin:
        Binary(in(0), in(1), out, [](double a, double b) { return a <= b ? a : b; });
        break;
      case OpKind::kInner: {
        double acc = 0.0;
        for (int64_t i = 0; i < in(0).size(); ++i) acc += in(0)[i] * in(1)[i];
        out[0] = acc;
        break;
      }
      case OpKind::kL2Norm: {
        double acc = 0.0;
        for (double v : in(0).values()) acc += v * v;
        out[0] = std::sqrt(acc);
        break;
      }
      case OpKind::kMean: {
        double acc = 0.0;
        for (double v : in(0).values()) acc += v;
        out[0] = acc / static_cast<double>(in(0).size());
        break;
      }
      case OpKind::kConcat: {
        int64_t pos = 0;
        for (size_t i = 0; i < node.inputs.size(); ++i) {
          std::copy(in(i).values().begin(), in(i).values().end(), out.data() + pos);
          pos += in(i).size();
        }
        break;
      }
      case OpKind::kSlice:
        SliceCopy(node, in(0), out);
        break;
      case OpKind::kLinearMap:
        node.attrs.map->Apply(in(0).values(), out.values());
        break;
      default:
        throw Error(ErrorCode::kUnsupportedOp, OpKindName(node.kind));
    }
    return out;
  }

  template <typename SlotFn>
  void BackwardOp(const Node& node, const Evaluation& ev, const Tensor& y, const Tensor& g,
                  SlotFn& slot) const {
    auto in = [&](size_t i) -> const Tensor& { return ev[node.inputs[i]]; };
    auto grad = [&](size_t i) -> Tensor* { return slot(node.inputs[i]); };
    switch (node.kind) {
      case OpKind::kConv1d: {
        const Tensor& s = in(0);
        const Tensor& f = in(1);
        const int64_t nf = f.dim(0), taps = f.dim(1), frames = node.shape[1];
        const int64_t stride = node.attrs.stride;
        const ConstRowMap gy(g.data(), nf, frames);
        if (Tensor* gf = grad(1)) {
          const ColMat cols = GatherFrames(s.data(), taps, frames, stride);
          RowMap(gf->data(), nf, taps).noalias() += gy * cols.transpose();
        }
        if (Tensor* gs = grad(0)) {
          const ColMat gcols = ConstRowMap(f.data(), nf, taps).transpose() * gy;
          OverlapAdd(gcols, stride, gs->data());
        }
        break;
      }
      case OpKind::kConvTranspose1d: {
        const Tensor& x = in(0);
        const Tensor& f = in(1);
        const int64_t nf = f.dim(0), taps = f.dim(1), frames = x.dim(1);
        const ColMat gcols = GatherFrames(g.data(), taps, frames, node.attrs.stride);
        if (Tensor* gx = grad(0)) {
          RowMap(gx->data(), nf, frames).noalias() +=
              ConstRowMap(f.data(), nf, taps) * gcols;
        }
        if (Tensor* gf = grad(1)) {
          RowMap(gf->data(), nf, taps).noalias() +=
              ConstRowMap(x.data(), nf, frames) * gcols.transpose();
        }
        break;
      }
      case OpKind::kRowConv: {
        const Tensor& a = in(0);
        const Tensor& k = in(1);
        const int64_t rows = a.rows(), len = a.cols(), taps = k.size(), half = taps / 2;
        Tensor* ga = grad(0);
        Tensor* gk = grad(1);
        for (int64_t r = 0; r < rows; ++r) {
          const double* src = a.data() + r * len;
          const double* gr = g.data() + r * len;
          for (int64_t l = 0; l < len; ++l) {
            for (int64_t j = 0; j < taps; ++j) {
              const int64_t p = l + j - half;
              if (p < 0 || p >= len) continue;
              if (ga) (*ga)[r * len + p] += k[j] * gr[l];
              if (gk) (*gk)[j] += src[p] * gr[l];
            }
          }
        }
        break;
      }
      case OpKind::kDense: {
        const Tensor& w = in(0);
        const Tensor& x = in(1);
        const int64_t cols = x.rank() == 2 ? x.dim(1) : 1;
        const ConstRowMap gy(g.data(), w.dim(0), cols);
        if (Tensor* gw = grad(0)) {
          RowMap(gw->data(), w.dim(0), w.dim(1)).noalias() +=
              gy * ConstRowMap(x.data(), x.dim(0), cols).transpose();
        }
        if (Tensor* gx = grad(1)) {
          RowMap(gx->data(), x.dim(0), cols).noalias() +=
              ConstRowMap(w.data(), w.dim(0), w.dim(1)).transpose() * gy;
        }
        if (Tensor* gb = grad(2)) {
          for (int64_t o = 0; o < w.dim(0); ++o) {
            double acc = 0.0;
            for (int64_t c = 0; c < cols; ++c) acc += g[o * cols + c];
            (*gb)[o] += acc;
          }
        }
        break;
      }
      case OpKind::kSoftplus:
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * Sigmoid(in(0)[i]);
        }
        break;
      case OpKind::kAbs:
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < g.size(); ++i) {
            const double v = in(0)[i];
            (*ga)[i] += v > 0.0 ? g[i] : (v < 0.0 ? -g[i] : 0.0);
          }
        }
        break;
      case OpKind::kSqrt:
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < g.size(); ++i) {
            if (y[i] > 0.0) (*ga)[i] += g[i] * 0.5 / y[i];
          }
        }
        break;
      case OpKind::kSquare:
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * 2.0 * in(0)[i];
        }
        break;
      case OpKind::kClamp:
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < g.size(); ++i) {
            const double v = in(0)[i];
            if (v >= node.attrs.lo && v <= node.attrs.hi) (*ga)[i] += g[i];
          }
        }
        break;
      case OpKind::kAdd:
        BinaryBackward(in(0), in(1), g, grad(0), grad(1),
                       [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
        break;
      case OpKind::kSub:
        BinaryBackward(in(0), in(1), g, grad(0), grad(1),
                       [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
        break;
      case OpKind::kMul:
        BinaryBackward(in(0), in(1), g, grad(0), grad(1),
                       [](double, double b) { return b; }, [](double a, double) { return a; });
        break;
      case OpKind::kDiv:
        BinaryBackward(in(0), in(1), g, grad(0), grad(1),
                       [](double, double b) { return 1.0 / b; },
                       [](double a, double b) { return -a / (b * b); });
        break;
      case OpKind::kMin:
        BinaryBackward(in(0), in(1), g, grad(0), grad(1),
                       [](double a, double b) { return a <= b ? 1.0 : 0.0; },
                       [](double a, double b) { return a <= b ? 0.0 : 1.0; });
        break;
      case OpKind::kInner: {
        const double gs = g[0];
        if (Tensor* ga = grad(0)) {
          for (int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += gs * in(1)[i];
        }
        if (Tensor* gb = grad(1)) {
          for (int64_t i = 0; i < gb->size(); ++i) (*gb)[i] += gs * in(0)[i];
        }
        break;
      }
      case OpKind::kL2Norm:
        if (Tensor* ga = grad(0)) {
          if (y[0] > 0.0) {
            const double scale = g[0] / y[0];
            for (int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += scale * in(0)[i];
          }
        }
        break;
      case OpKind::kMean:
        if (Tensor* ga = grad(0)) {
          const double share = g[0] / static_cast<double>(ga->size());
          for (int64_t i = 0; i < ga->size(); ++i) (*ga)[i] += share;
        }
        break;
      case OpKind::kConcat: {
        int64_t pos = 0;
        for (size_t i = 0; i < node.inputs.size(); ++i) {
          const int64_t n = NumElements(graph_.shape(node.inputs[i]));
          if (Tensor* gi = grad(i)) {
            for (int64_t j = 0; j < n; ++j) (*gi)[j] += g[pos + j];
          }
          pos += n;
        }
        break;
      }
      case OpKind::kSlice:
        if (Tensor* ga = grad(0)) SliceAccumulate(node, g, *ga);
        break;
      case OpKind::kLinearMap:
        if (Tensor* ga = grad(0)) node.attrs.map->AccumulateTranspose(g.values(), ga->values());
        break;
      default:
        throw Error(ErrorCode::kUnsupportedOp, OpKindName(node.kind));
    }
  }

  template <typename Fn>
  static void Unary(const Tensor& a, Tensor& out, Fn fn) {
    for (int64_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  }

  template <typename Fn>
  static void Binary(const Tensor& a, const Tensor& b, Tensor& out, Fn fn) {
    const bool sa = a.size() == 1 && out.size() != 1;
    const bool sb = b.size() == 1 && out.size() != 1;
    for (int64_t i = 0; i < out.size(); ++i) {
      out[i] = fn(sa ? a[0] : a[i], sb ? b[0] : b[i]);
    }
  }

  // Partial derivatives da(a, b), db(a, b); broadcast operands receive the
  // index-ordered sum of their contributions.
  template <typename Da, typename Db>
  static void BinaryBackward(const Tensor& a, const Tensor& b, const Tensor& g, Tensor* ga,
                             Tensor* gb, Da da, Db db) {
    const int64_t n = g.size();
    const bool sa = a.size() == 1 && n != 1;
    const bool sb = b.size() == 1 && n != 1;
    double acc_a = 0.0, acc_b = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      const double av = sa ? a[0] : a[i];
      const double bv = sb ? b[0] : b[i];
      if (ga) {
        const double d = g[i] * da(av, bv);
        if (sa) acc_a += d; else (*ga)[i] += d;
      }
      if (gb) {
        const double d = g[i] * db(av, bv);
        if (sb) acc_b += d; else (*gb)[i] += d;
      }
    }
    if (ga && sa) (*ga)[0] += acc_a;
    if (gb && sb) (*gb)[0] += acc_b;
  }

  static void SliceCopy(const Node& node, const Tensor& a, Tensor& out) {
    const int64_t rows = a.rows(), cols = a.cols();
    const int64_t b = node.attrs.begin, e = node.attrs.end;
    if (a.rank() == 1) {
      std::copy(a.data() + b, a.data() + e, out.data());
    } else if (node.attrs.axis == 0) {
      std::copy(a.data() + b * cols, a.data() + e * cols, out.data());
    } else {
      const int64_t w = e - b;
      for (int64_t r = 0; r < rows; ++r) {
        std::copy(a.data() + r * cols + b, a.data() + r * cols + e, out.data() + r * w);
      }
    }
  }

  static void SliceAccumulate(const Node& node, const Tensor& g, Tensor& ga) {
    const int64_t rows = ga.rows(), cols = ga.cols();
    const int64_t b = node.attrs.begin, e = node.attrs.end;
    if (ga.rank() == 1) {
      for (int64_t i = b; i < e; ++i) ga[i] += g[i - b];
    } else if (node.attrs.axis == 0) {
      for (int64_t i = b * cols; i < e * cols; ++i) ga[i] += g[i - b * cols];
    } else {
      const int64_t w = e - b;
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = b; c < e; ++c) ga[r * cols + c] += g[r * w + c - b];
      }
    }
  }

  const Graph& graph_;
  const Inputs& inputs_;
};

Evaluation Evaluate(const Graph& graph, const Inputs& inputs) {
  return Evaluator(graph, inputs).Forward();
}

GradientResult EvaluateWithGradient(const Graph& graph, const Inputs& inputs,
                                    const std::set<std::string>& wrt) {
  if (!graph.output().valid()) {
    throw Error(ErrorCode::kNotScalar, "graph has no output");
  }
  if (NumElements(graph.shape(graph.output())) != 1) {
    throw Error(ErrorCode::kNotScalar,
                "graph output has shape " + ShapeToString(graph.shape(graph.output())));
  }
  Evaluator evaluator(graph, inputs);
  GradientResult result;
  result.evaluation = evaluator.Forward();
  result.value = result.evaluation[graph.output()][0];
  result.gradients = evaluator.Backward(result.evaluation, wrt);
  return result;
}

namespace {

double OutputValue(const Graph& graph, const Inputs& inputs) {
  if (NumElements(graph.shape(graph.output())) != 1) {
    throw Error(ErrorCode::kNotScalar, "graph output is not a scalar");
  }
  return Evaluate(graph, inputs)[graph.output()][0];
}

}  // namespace

std::vector<double> FiniteDifferenceAt(const Graph& graph, const Inputs& inputs,
                                       const std::string& wrt,
                                       std::span<const int64_t> coords, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kShapeError, "finite-difference step must be > 0");
  const Tensor* original = inputs.Find(wrt);
  if (original == nullptr) ShapeFail("input '" + wrt + "' is not bound");
  Tensor probe = *original;
  Inputs perturbed = inputs;
  perturbed.Bind(wrt, probe);
  std::vector<double> out;
  out.reserve(coords.size());
  for (int64_t i : coords) {
    const double x = probe[i];
    const double h = step * std::max(1.0, std::abs(x));
    probe[i] = x + h;
    const double up = OutputValue(graph, perturbed);
    probe[i] = x - h;
    const double down = OutputValue(graph, perturbed);
    probe[i] = x;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

Tensor FiniteDifferenceGradient(const Graph& graph, const Inputs& inputs,
                                const std::string& wrt, double step) {
  const Tensor* original = inputs.Find(wrt);
  if (original == nullptr) ShapeFail("input '" + wrt + "' is not bound");
  std::vector<int64_t> coords(original->size());
  for (int64_t i = 0; i < original->size(); ++i) coords[i] = i;
  return Tensor(original->shape(), FiniteDifferenceAt(graph, inputs, wrt, coords, step));
}

}  // namespace aetsep
