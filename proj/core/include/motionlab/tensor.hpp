#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace motionlab {

// Reverse-mode autodiff over dense row-major double tensors. Ops build a
// dynamic graph whenever an input requires grad; backward() walks the traced
// graph once in reverse topological order. Gradients accumulate into leaf
// buffers until explicitly reset (zero_grad), matching conventional training
// loops. No broadcasting beyond scalar-times-tensor; shapes must conform
// exactly or the op throws DimensionError.

enum class Op {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kAddScalar,
    kMulScalar,
    kSMul,      // scalar tensor * tensor
    kSDiv,      // tensor / scalar tensor
    kMatMul,    // optional operand transposes
    kMatVec,
    kConcat,
    kSlice,
    kReshape,
    kGather,
    kSum,
    kMeanAxis,
    kMaxAxis,
    kL2Norm,
    kSquare,
    kSqrt,
    kExp,
    kRecip,
    kTanh,
    kSigmoid,
    kSoftmax,      // rank-1
    kSoftmaxRows,  // rank-2, along each row
    kAddRowVec,
    kScaleRows,
    kRowNorm,
    kRowDot,
    kRowCross,
    kRodriguesA,    // sin(sqrt(s))/sqrt(s), series-guarded near 0
    kRodriguesB,    // (1-cos(sqrt(s)))/s, series-guarded near 0
    kLogMapFactor,  // acos(c)/sqrt(1-c^2), series-guarded near c=1
};

const char* op_name(Op op);

struct Node {
    Op op = Op::kLeaf;
    std::vector<int> shape;
    std::vector<double> value;
    std::vector<double> grad;  // same shape as value once touched
    std::vector<std::shared_ptr<Node>> inputs;
    bool requires_grad = false;

    // op attributes
    int axis = 0;
    int start = 0;
    int len = 0;
    bool trans_a = false;
    bool trans_b = false;
    double scalar = 0.0;
    std::shared_ptr<const std::vector<int>> indices;

    std::uint64_t visit = 0;  // traversal mark, see Graph::trace

    int size() const { return static_cast<int>(value.size()); }
    void ensure_grad();
};

class Tensor {
  public:
    Tensor() = default;

    static Tensor leaf(std::vector<int> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int size() const { return node_->size(); }
    int rank() const { return static_cast<int>(node_->shape.size()); }
    int rows() const;
    int cols() const;

    const std::vector<double>& values() const { return node_->value; }
    // leaf-only mutation hook for optimizers; using it on an interior node
    // would silently desynchronize the graph, so it throws
    std::vector<double>& mutable_values();
    const std::vector<double>& grad() const;
    bool requires_grad() const { return node_->requires_grad; }

    double item() const;
    double at(int i) const;
    double at(int r, int c) const;

    void zero_grad();
    Tensor detach() const;  // copies values into a fresh non-grad leaf

    std::shared_ptr<Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  private:
    std::shared_ptr<Node> node_;
};

// Topologically ordered trace of every op reachable from an output. Inputs
// always precede consumers; a backward run visits each node exactly once.
class Graph {
  public:
    static Graph trace(const Tensor& output);
    // Seeds d(output)/d(output) = 1 and sweeps once. Leaf gradients
    // accumulate across runs; interior gradients are reset per run.
    void run_backward();
    const std::vector<std::shared_ptr<Node>>& nodes() const { return order_; }
    const Tensor& output() const { return output_; }

  private:
    std::vector<std::shared_ptr<Node>> order_;
    Tensor output_;
};

// trace + run; output must be scalar
void backward(const Tensor& output);

// ---- op constructors ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor smul(const Tensor& s, const Tensor& t);
Tensor sdiv(const Tensor& t, const Tensor& s);
Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
              bool trans_b = false);
Tensor matvec(const Tensor& a, const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& t, int axis, int start, int len);
Tensor reshape(const Tensor& t, std::vector<int> shape);
Tensor gather(const Tensor& t, std::shared_ptr<const std::vector<int>> indices,
              std::vector<int> out_shape);
Tensor sum(const Tensor& t);
Tensor mean_axis(const Tensor& t, int axis);
Tensor max_axis(const Tensor& t, int axis);
Tensor l2norm(const Tensor& t);
Tensor square(const Tensor& t);
Tensor sqrt(const Tensor& t);
Tensor exp(const Tensor& t);
Tensor recip(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor softmax(const Tensor& t);
Tensor softmax_rows(const Tensor& t);
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor scale_rows(const Tensor& m, const Tensor& w);
Tensor rownorm(const Tensor& m);
Tensor rowdot(const Tensor& a, const Tensor& b);
Tensor rowcross(const Tensor& a, const Tensor& b);
Tensor rodrigues_a(const Tensor& s);
Tensor rodrigues_b(const Tensor& s);
Tensor logmap_factor(const Tensor& c);

// Plain-double versions of the series-guarded scalar functions; the tensor
// ops call these, so both paths stay in sync.
namespace detail {
double rodrigues_a_fn(double s);
double rodrigues_a_dfn(double s);
double rodrigues_b_fn(double s);
double rodrigues_b_dfn(double s);
double logmap_factor_fn(double c);
double logmap_factor_dfn(double c);
}  // namespace detail

}  // namespace motionlab
