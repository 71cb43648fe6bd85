#include "motionlab/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "motionlab/errors.hpp"

namespace motionlab {

namespace {

std::atomic<std::uint64_t> g_visit_epoch{1};

int product(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

[[noreturn]] void dim_fail(Op op, const std::string& detail) {
    throw DimensionError(std::string(op_name(op)) + ": " + detail);
}

void require_rank2(Op op, const Tensor& t, const char* which) {
    if (t.rank() != 2)
        dim_fail(op, std::string(which) + " must be rank 2, got " + shape_str(t.shape()));
}

std::shared_ptr<Node> make_node(Op op, std::vector<int> shape,
                                std::vector<Tensor> inputs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->shape = std::move(shape);
    n->value.resize(static_cast<std::size_t>(product(n->shape)));
    bool rg = false;
    for (const auto& t : inputs) rg = rg || t.requires_grad();
    n->requires_grad = rg;
    // input linkage is only needed when a backward pass can reach this node
    if (rg) {
        n->inputs.reserve(inputs.size());
        for (auto& t : inputs) n->inputs.push_back(t.node());
    }
    return n;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kExpClamp = 709.0;  // log(DBL_MAX) minus slack

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::kLeaf: return "leaf";
        case Op::kAdd: return "add";
        case Op::kSub: return "sub";
        case Op::kMul: return "mul";
        case Op::kDiv: return "div";
        case Op::kAddScalar: return "add_scalar";
        case Op::kMulScalar: return "mul_scalar";
        case Op::kSMul: return "smul";
        case Op::kSDiv: return "sdiv";
        case Op::kMatMul: return "matmul";
        case Op::kMatVec: return "matvec";
        case Op::kConcat: return "concat";
        case Op::kSlice: return "slice";
        case Op::kReshape: return "reshape";
        case Op::kGather: return "gather";
        case Op::kSum: return "sum";
        case Op::kMeanAxis: return "mean_axis";
        case Op::kMaxAxis: return "max_axis";
        case Op::kL2Norm: return "l2norm";
        case Op::kSquare: return "square";
        case Op::kSqrt: return "sqrt";
        case Op::kExp: return "exp";
        case Op::kRecip: return "recip";
        case Op::kTanh: return "tanh";
        case Op::kSigmoid: return "sigmoid";
        case Op::kSoftmax: return "softmax";
        case Op::kSoftmaxRows: return "softmax_rows";
        case Op::kAddRowVec: return "add_rowvec";
        case Op::kScaleRows: return "scale_rows";
        case Op::kRowNorm: return "rownorm";
        case Op::kRowDot: return "rowdot";
        case Op::kRowCross: return "rowcross";
        case Op::kRodriguesA: return "rodrigues_a";
        case Op::kRodriguesB: return "rodrigues_b";
        case Op::kLogMapFactor: return "logmap_factor";
    }
    return "?";
}

void Node::ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
}

// ---- Tensor ----

Tensor Tensor::leaf(std::vector<int> shape, std::vector<double> data,
                    bool requires_grad) {
    const int n = product(shape);
    if (static_cast<std::size_t>(n) != data.size())
        throw DimensionError("leaf: shape " + shape_str(shape) + " wants " +
                             std::to_string(n) + " values, got " +
                             std::to_string(data.size()));
    auto node = std::make_shared<Node>();
    node->op = Op::kLeaf;
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return leaf({1}, {v}, requires_grad);
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    const int n = product(shape);
    return leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0),
                requires_grad);
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requires_grad) {
    const int n = product(shape);
    return leaf(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), v),
                requires_grad);
}

int Tensor::rows() const {
    if (rank() != 2) throw ContractError("rows(): tensor is not rank 2");
    return node_->shape[0];
}

int Tensor::cols() const {
    if (rank() != 2) throw ContractError("cols(): tensor is not rank 2");
    return node_->shape[1];
}

std::vector<double>& Tensor::mutable_values() {
    if (node_->op != Op::kLeaf)
        throw ContractError("mutable_values(): only leaf tensors may be mutated");
    return node_->value;
}

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item(): tensor has " +
                                         std::to_string(size()) + " elements");
    return node_->value[0];
}

double Tensor::at(int i) const { return node_->value.at(static_cast<std::size_t>(i)); }

double Tensor::at(int r, int c) const {
    return node_->value.at(static_cast<std::size_t>(r) * node_->shape[1] + c);
}

void Tensor::zero_grad() {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    return Tensor::leaf(node_->shape, node_->value, false);
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        dim_fail(Op::kAdd, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto n = make_node(Op::kAdd, a.shape(), {a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = av[i] + bv[i];
    return Tensor(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        dim_fail(Op::kSub, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto n = make_node(Op::kSub, a.shape(), {a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = av[i] - bv[i];
    return Tensor(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        dim_fail(Op::kMul, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto n = make_node(Op::kMul, a.shape(), {a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = av[i] * bv[i];
    return Tensor(n);
}

Tensor div(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        dim_fail(Op::kDiv, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto n = make_node(Op::kDiv, a.shape(), {a, b});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int i = 0; i < n->size(); ++i) {
        n->value[i] = av[i] / bv[i];
        if (!std::isfinite(n->value[i]))
            throw NumericError("div: non-finite quotient at index " + std::to_string(i));
    }
    return Tensor(n);
}

Tensor add_scalar(const Tensor& a, double c) {
    auto n = make_node(Op::kAddScalar, a.shape(), {a});
    n->scalar = c;
    const auto& av = a.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = av[i] + c;
    return Tensor(n);
}

Tensor mul_scalar(const Tensor& a, double c) {
    auto n = make_node(Op::kMulScalar, a.shape(), {a});
    n->scalar = c;
    const auto& av = a.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = av[i] * c;
    return Tensor(n);
}

Tensor smul(const Tensor& s, const Tensor& t) {
    if (s.size() != 1) dim_fail(Op::kSMul, "first operand must be a scalar, got " +
                                shape_str(s.shape()));
    auto n = make_node(Op::kSMul, t.shape(), {s, t});
    const double sv = s.values()[0];
    const auto& tv = t.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = sv * tv[i];
    return Tensor(n);
}

Tensor sdiv(const Tensor& t, const Tensor& s) {
    if (s.size() != 1) dim_fail(Op::kSDiv, "divisor must be a scalar, got " +
                                shape_str(s.shape()));
    const double sv = s.values()[0];
    if (sv == 0.0) throw NumericError("sdiv: division by zero scalar");
    auto n = make_node(Op::kSDiv, t.shape(), {t, s});
    const auto& tv = t.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = tv[i] / sv;
    return Tensor(n);
}

// ---- linear algebra ----

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
    require_rank2(Op::kMatMul, a, "lhs");
    require_rank2(Op::kMatMul, b, "rhs");
    const int m = trans_a ? a.cols() : a.rows();
    const int k = trans_a ? a.rows() : a.cols();
    const int kb = trans_b ? b.cols() : b.rows();
    const int p = trans_b ? b.rows() : b.cols();
    if (k != kb)
        dim_fail(Op::kMatMul, "inner dimensions " + shape_str(a.shape()) +
                 (trans_a ? "^T" : "") + " vs " + shape_str(b.shape()) +
                 (trans_b ? "^T" : ""));
    auto n = make_node(Op::kMatMul, {m, p}, {a, b});
    n->trans_a = trans_a;
    n->trans_b = trans_b;
    const double* av = a.values().data();
    const double* bv = b.values().data();
    const int lda = a.cols(), ldb = b.cols();
    double* out = n->value.data();
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < p; ++j) {
            double acc = 0.0;
            for (int q = 0; q < k; ++q) {
                const double x = trans_a ? av[q * lda + i] : av[i * lda + q];
                const double y = trans_b ? bv[j * ldb + q] : bv[q * ldb + j];
                acc += x * y;
            }
            out[i * p + j] = acc;
        }
    }
    return Tensor(n);
}

Tensor matvec(const Tensor& a, const Tensor& x) {
    require_rank2(Op::kMatVec, a, "matrix");
    if (x.rank() != 1 || x.size() != a.cols())
        dim_fail(Op::kMatVec, shape_str(a.shape()) + " vs " + shape_str(x.shape()));
    auto n = make_node(Op::kMatVec, {a.rows()}, {a, x});
    const double* av = a.values().data();
    const double* xv = x.values().data();
    const int rows = a.rows(), cols = a.cols();
    for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += av[i * cols + j] * xv[j];
        n->value[i] = acc;
    }
    return Tensor(n);
}

// ---- structure ----

Tensor concat(const std::vector<Tensor>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat: empty input list");
    const int rank = parts[0].rank();
    if (axis < 0 || axis >= rank) dim_fail(Op::kConcat, "axis out of range");
    std::vector<int> shape = parts[0].shape();
    int total = shape[axis];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& s = parts[i].shape();
        if (static_cast<int>(s.size()) != rank)
            dim_fail(Op::kConcat, "rank mismatch between parts");
        for (int d = 0; d < rank; ++d) {
            if (d == axis) continue;
            if (s[d] != shape[d])
                dim_fail(Op::kConcat, shape_str(shape) + " vs " + shape_str(s));
        }
        total += s[axis];
    }
    shape[axis] = total;
    auto n = make_node(Op::kConcat, shape, parts);
    n->axis = axis;
    if (rank == 1 || axis == 0) {
        double* out = n->value.data();
        for (const auto& p : parts) {
            const auto& v = p.values();
            std::copy(v.begin(), v.end(), out);
            out += v.size();
        }
    } else {  // rank 2, axis 1
        const int rows = shape[0];
        int col0 = 0;
        for (const auto& p : parts) {
            const int pc = p.cols();
            const auto& v = p.values();
            for (int r = 0; r < rows; ++r)
                std::copy(v.begin() + static_cast<std::ptrdiff_t>(r) * pc,
                          v.begin() + static_cast<std::ptrdiff_t>(r + 1) * pc,
                          n->value.begin() + static_cast<std::ptrdiff_t>(r) * total + col0);
            col0 += pc;
        }
    }
    // concat keeps per-part extents so backward can split the gradient
    auto extents = std::make_shared<std::vector<int>>();
    for (const auto& p : parts) extents->push_back(p.shape()[axis]);
    n->indices = extents;
    return Tensor(n);
}

Tensor slice(const Tensor& t, int axis, int start, int len) {
    const int rank = t.rank();
    if (axis < 0 || axis >= rank) dim_fail(Op::kSlice, "axis out of range");
    const int extent = t.shape()[axis];
    if (start < 0 || len <= 0 || start + len > extent)
        dim_fail(Op::kSlice, "range [" + std::to_string(start) + ", " +
                 std::to_string(start + len) + ") exceeds extent " +
                 std::to_string(extent));
    std::vector<int> shape = t.shape();
    shape[axis] = len;
    auto n = make_node(Op::kSlice, shape, {t});
    n->axis = axis;
    n->start = start;
    n->len = len;
    const auto& v = t.values();
    if (rank == 1 || axis == 0) {
        const int inner = t.size() / extent;
        std::copy(v.begin() + static_cast<std::ptrdiff_t>(start) * inner,
                  v.begin() + static_cast<std::ptrdiff_t>(start + len) * inner,
                  n->value.begin());
    } else {  // rank 2, axis 1
        const int rows = t.rows(), cols = t.cols();
        for (int r = 0; r < rows; ++r)
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(r) * cols + start,
                      v.begin() + static_cast<std::ptrdiff_t>(r) * cols + start + len,
                      n->value.begin() + static_cast<std::ptrdiff_t>(r) * len);
    }
    return Tensor(n);
}

Tensor reshape(const Tensor& t, std::vector<int> shape) {
    if (product(shape) != t.size())
        dim_fail(Op::kReshape, shape_str(t.shape()) + " -> " + shape_str(shape));
    auto n = make_node(Op::kReshape, std::move(shape), {t});
    n->value = t.values();
    return Tensor(n);
}

Tensor gather(const Tensor& t, std::shared_ptr<const std::vector<int>> indices,
              std::vector<int> out_shape) {
    if (product(out_shape) != static_cast<int>(indices->size()))
        dim_fail(Op::kGather, "index count " + std::to_string(indices->size()) +
                 " vs shape " + shape_str(out_shape));
    for (int idx : *indices)
        if (idx < 0 || idx >= t.size())
            dim_fail(Op::kGather, "index " + std::to_string(idx) + " out of range");
    auto n = make_node(Op::kGather, std::move(out_shape), {t});
    n->indices = std::move(indices);
    const auto& v = t.values();
    const auto& ix = *n->indices;
    for (std::size_t i = 0; i < ix.size(); ++i) n->value[i] = v[ix[i]];
    return Tensor(n);
}

// ---- reductions ----

Tensor sum(const Tensor& t) {
    auto n = make_node(Op::kSum, {1}, {t});
    double acc = 0.0;
    for (double v : t.values()) acc += v;
    n->value[0] = acc;
    return Tensor(n);
}

Tensor mean_axis(const Tensor& t, int axis) {
    require_rank2(Op::kMeanAxis, t, "input");
    if (axis != 0 && axis != 1) dim_fail(Op::kMeanAxis, "axis must be 0 or 1");
    const int rows = t.rows(), cols = t.cols();
    const int out = axis == 0 ? cols : rows;
    auto n = make_node(Op::kMeanAxis, {out}, {t});
    n->axis = axis;
    const auto& v = t.values();
    if (axis == 0) {
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int r = 0; r < rows; ++r) acc += v[static_cast<std::size_t>(r) * cols + c];
            n->value[c] = acc / rows;
        }
    } else {
        for (int r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (int c = 0; c < cols; ++c) acc += v[static_cast<std::size_t>(r) * cols + c];
            n->value[r] = acc / cols;
        }
    }
    return Tensor(n);
}

Tensor max_axis(const Tensor& t, int axis) {
    require_rank2(Op::kMaxAxis, t, "input");
    if (axis != 0 && axis != 1) dim_fail(Op::kMaxAxis, "axis must be 0 or 1");
    const int rows = t.rows(), cols = t.cols();
    const int out = axis == 0 ? cols : rows;
    auto n = make_node(Op::kMaxAxis, {out}, {t});
    n->axis = axis;
    const auto& v = t.values();
    if (axis == 0) {
        for (int c = 0; c < cols; ++c) {
            double best = v[c];
            for (int r = 1; r < rows; ++r)
                best = std::max(best, v[static_cast<std::size_t>(r) * cols + c]);
            n->value[c] = best;
        }
    } else {
        for (int r = 0; r < rows; ++r) {
            const double* row = v.data() + static_cast<std::size_t>(r) * cols;
            n->value[r] = *std::max_element(row, row + cols);
        }
    }
    return Tensor(n);
}

Tensor l2norm(const Tensor& t) {
    auto n = make_node(Op::kL2Norm, {1}, {t});
    double acc = 0.0;
    for (double v : t.values()) acc += v * v;
    n->value[0] = std::sqrt(acc);
    return Tensor(n);
}

// ---- elementwise unary ----

namespace {

template <typename F>
Tensor unary(Op op, const Tensor& t, F&& f) {
    auto n = make_node(op, t.shape(), {t});
    const auto& v = t.values();
    for (int i = 0; i < n->size(); ++i) n->value[i] = f(v[i]);
    return Tensor(n);
}

}  // namespace

Tensor square(const Tensor& t) {
    return unary(Op::kSquare, t, [](double x) { return x * x; });
}

Tensor sqrt(const Tensor& t) {
    const auto& v = t.values();
    for (int i = 0; i < t.size(); ++i)
        if (v[i] < 0.0) throw NumericError("sqrt: negative input at index " +
                                           std::to_string(i));
    return unary(Op::kSqrt, t, [](double x) { return std::sqrt(x); });
}

Tensor exp(const Tensor& t) {
    return unary(Op::kExp, t, [](double x) {
        return std::exp(std::min(x, kExpClamp));
    });
}

Tensor recip(const Tensor& t) {
    const auto& v = t.values();
    for (int i = 0; i < t.size(); ++i)
        if (v[i] == 0.0) throw NumericError("recip: zero input at index " +
                                            std::to_string(i));
    return unary(Op::kRecip, t, [](double x) { return 1.0 / x; });
}

Tensor tanh(const Tensor& t) {
    return unary(Op::kTanh, t, [](double x) { return std::tanh(x); });
}

Tensor sigmoid(const Tensor& t) {
    return unary(Op::kSigmoid, t, stable_sigmoid);
}

namespace {

void softmax_span(const double* in, double* out, int n) {
    double mx = in[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, in[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(in[i] - mx);
        z += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= z;
}

}  // namespace

Tensor softmax(const Tensor& t) {
    if (t.rank() != 1) dim_fail(Op::kSoftmax, "input must be rank 1, got " +
                                shape_str(t.shape()));
    auto n = make_node(Op::kSoftmax, t.shape(), {t});
    softmax_span(t.values().data(), n->value.data(), t.size());
    return Tensor(n);
}

Tensor softmax_rows(const Tensor& t) {
    require_rank2(Op::kSoftmaxRows, t, "input");
    auto n = make_node(Op::kSoftmaxRows, t.shape(), {t});
    const int rows = t.rows(), cols = t.cols();
    for (int r = 0; r < rows; ++r)
        softmax_span(t.values().data() + static_cast<std::size_t>(r) * cols,
                     n->value.data() + static_cast<std::size_t>(r) * cols, cols);
    return Tensor(n);
}

// ---- row-structured ops ----

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    require_rank2(Op::kAddRowVec, m, "matrix");
    if (v.rank() != 1 || v.size() != m.cols())
        dim_fail(Op::kAddRowVec, shape_str(m.shape()) + " vs " + shape_str(v.shape()));
    auto n = make_node(Op::kAddRowVec, m.shape(), {m, v});
    const int rows = m.rows(), cols = m.cols();
    const auto& mv = m.values();
    const auto& vv = v.values();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            n->value[static_cast<std::size_t>(r) * cols + c] =
                mv[static_cast<std::size_t>(r) * cols + c] + vv[c];
    return Tensor(n);
}

Tensor scale_rows(const Tensor& m, const Tensor& w) {
    require_rank2(Op::kScaleRows, m, "matrix");
    if (w.rank() != 1 || w.size() != m.rows())
        dim_fail(Op::kScaleRows, shape_str(m.shape()) + " vs " + shape_str(w.shape()));
    auto n = make_node(Op::kScaleRows, m.shape(), {m, w});
    const int rows = m.rows(), cols = m.cols();
    const auto& mv = m.values();
    const auto& wv = w.values();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            n->value[static_cast<std::size_t>(r) * cols + c] =
                mv[static_cast<std::size_t>(r) * cols + c] * wv[r];
    return Tensor(n);
}

Tensor rownorm(const Tensor& m) {
    require_rank2(Op::kRowNorm, m, "input");
    auto n = make_node(Op::kRowNorm, {m.rows()}, {m});
    const int rows = m.rows(), cols = m.cols();
    const auto& mv = m.values();
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double x = mv[static_cast<std::size_t>(r) * cols + c];
            acc += x * x;
        }
        n->value[r] = std::sqrt(acc);
    }
    return Tensor(n);
}

Tensor rowdot(const Tensor& a, const Tensor& b) {
    require_rank2(Op::kRowDot, a, "lhs");
    if (a.shape() != b.shape())
        dim_fail(Op::kRowDot, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto n = make_node(Op::kRowDot, {a.rows()}, {a, b});
    const int rows = a.rows(), cols = a.cols();
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c)
            acc += av[static_cast<std::size_t>(r) * cols + c] *
                   bv[static_cast<std::size_t>(r) * cols + c];
        n->value[r] = acc;
    }
    return Tensor(n);
}

Tensor rowcross(const Tensor& a, const Tensor& b) {
    require_rank2(Op::kRowCross, a, "lhs");
    if (a.shape() != b.shape() || a.cols() != 3)
        dim_fail(Op::kRowCross, shape_str(a.shape()) + " vs " + shape_str(b.shape()) +
                 " (rows of 3 expected)");
    auto n = make_node(Op::kRowCross, a.shape(), {a, b});
    const int rows = a.rows();
    const auto& av = a.values();
    const auto& bv = b.values();
    for (int r = 0; r < rows; ++r) {
        const double* x = av.data() + static_cast<std::size_t>(r) * 3;
        const double* y = bv.data() + static_cast<std::size_t>(r) * 3;
        double* o = n->value.data() + static_cast<std::size_t>(r) * 3;
        o[0] = x[1] * y[2] - x[2] * y[1];
        o[1] = x[2] * y[0] - x[0] * y[2];
        o[2] = x[0] * y[1] - x[1] * y[0];
    }
    return Tensor(n);
}

// ---- series-guarded scalar functions ----

namespace detail {

// sin(sqrt(s))/sqrt(s); smooth at s = 0
double rodrigues_a_fn(double s) {
    if (s < 1e-4)
        return 1.0 - s / 6.0 + s * s / 120.0 - s * s * s / 5040.0;
    const double th = std::sqrt(s);
    return std::sin(th) / th;
}

double rodrigues_a_dfn(double s) {
    if (s < 1e-4)
        return -1.0 / 6.0 + s / 60.0 - s * s / 1680.0;
    const double th = std::sqrt(s);
    return (th * std::cos(th) - std::sin(th)) / (2.0 * s * th);
}

// (1 - cos(sqrt(s)))/s; smooth at s = 0
double rodrigues_b_fn(double s) {
    if (s < 1e-4)
        return 0.5 - s / 24.0 + s * s / 720.0 - s * s * s / 40320.0;
    return (1.0 - std::cos(std::sqrt(s))) / s;
}

double rodrigues_b_dfn(double s) {
    if (s < 1e-4)
        return -1.0 / 24.0 + s / 360.0 - s * s / 13440.0;
    const double th = std::sqrt(s);
    return (0.5 * th * std::sin(th) - 1.0 + std::cos(th)) / (s * s);
}

// acos(c)/sqrt(1-c^2) = theta/sin(theta) with c = cos(theta);
// smooth at c = 1, singular at c = -1 (angle pi, excluded by callers)
double logmap_factor_fn(double c) {
    if (c <= -1.0 + 1e-9)
        throw NumericError("logmap_factor: rotation angle too close to pi");
    const double e = std::max(0.0, 1.0 - c);
    if (e < 1e-4)
        return 1.0 + e / 3.0 + 2.0 * e * e / 15.0 + 2.0 * e * e * e / 35.0;
    return std::acos(c) / std::sqrt(1.0 - c * c);
}

double logmap_factor_dfn(double c) {
    const double e = std::max(0.0, 1.0 - c);
    if (e < 1e-4)
        return -1.0 / 3.0 - 4.0 * e / 15.0 - 6.0 * e * e / 35.0;
    const double k = std::acos(c) / std::sqrt(1.0 - c * c);
    return (k * c - 1.0) / (1.0 - c * c);
}

}  // namespace detail

Tensor rodrigues_a(const Tensor& s) {
    const auto& v = s.values();
    for (int i = 0; i < s.size(); ++i)
        if (v[i] < 0.0) throw NumericError("rodrigues_a: negative squared angle");
    return unary(Op::kRodriguesA, s, detail::rodrigues_a_fn);
}

Tensor rodrigues_b(const Tensor& s) {
    const auto& v = s.values();
    for (int i = 0; i < s.size(); ++i)
        if (v[i] < 0.0) throw NumericError("rodrigues_b: negative squared angle");
    return unary(Op::kRodriguesB, s, detail::rodrigues_b_fn);
}

Tensor logmap_factor(const Tensor& c) {
    return unary(Op::kLogMapFactor, c, detail::logmap_factor_fn);
}

// ---- graph / backward ----

Graph Graph::trace(const Tensor& output) {
    Graph g;
    g.output_ = output;
    // iterative post-order DFS; recursion would overflow on long sequences
    const std::uint64_t epoch = g_visit_epoch.fetch_add(1, std::memory_order_relaxed);
    struct Frame {
        std::shared_ptr<Node> node;
        std::size_t next_input;
    };
    std::vector<Frame> stack;
    if (output.node()->visit != epoch) {
        output.node()->visit = epoch;
        stack.push_back({output.node(), 0});
    }
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_input < f.node->inputs.size()) {
            std::shared_ptr<Node> child = f.node->inputs[f.next_input++];
            if (child->visit != epoch && child->requires_grad) {
                child->visit = epoch;
                stack.push_back({std::move(child), 0});
            }
        } else {
            g.order_.push_back(f.node);
            stack.pop_back();
        }
    }
    return g;
}

namespace {

void backward_into(Node* n);

}  // namespace

void Graph::run_backward() {
    if (!output_.defined() || output_.size() != 1)
        throw ContractError("backward: output must be a scalar tensor");
    if (order_.empty()) return;
    // interior grads are per-run scratch; leaf grads accumulate
    for (auto& n : order_) {
        if (n->op != Op::kLeaf) n->grad.assign(n->value.size(), 0.0);
    }
    Node* out = output_.node().get();
    out->ensure_grad();
    out->grad[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* n = it->get();
        if (n->op == Op::kLeaf || !n->requires_grad) continue;
        backward_into(n);
    }
}

void backward(const Tensor& output) {
    Graph g = Graph::trace(output);
    g.run_backward();
}

namespace {

// Accumulates d(loss)/d(input) for each input of n, given n->grad.
void backward_into(Node* n) {
    const std::vector<double>& g = n->grad;
    auto in = [&](std::size_t i) -> Node* { return n->inputs[i].get(); };
    auto grad_of = [&](std::size_t i) -> std::vector<double>& {
        Node* x = in(i);
        x->ensure_grad();
        return x->grad;
    };
    auto wants = [&](std::size_t i) { return in(i)->requires_grad; };

    switch (n->op) {
        case Op::kLeaf:
            break;
        case Op::kAdd: {
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
            break;
        }
        case Op::kSub: {
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
            break;
        }
        case Op::kMul: {
            const auto& av = in(0)->value;
            const auto& bv = in(1)->value;
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
            }
            break;
        }
        case Op::kDiv: {
            const auto& av = in(0)->value;
            const auto& bv = in(1)->value;
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (std::size_t i = 0; i < g.size(); ++i)
                    gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
            }
            break;
        }
        case Op::kAddScalar: {
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            break;
        }
        case Op::kMulScalar: {
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n->scalar;
            }
            break;
        }
        case Op::kSMul: {
            const double sv = in(0)->value[0];
            const auto& tv = in(1)->value;
            if (wants(0)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * tv[i];
                grad_of(0)[0] += acc;
            }
            if (wants(1)) {
                auto& gt = grad_of(1);
                for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i] * sv;
            }
            break;
        }
        case Op::kSDiv: {
            const auto& tv = in(0)->value;
            const double sv = in(1)->value[0];
            if (wants(0)) {
                auto& gt = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i] / sv;
            }
            if (wants(1)) {
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) acc -= g[i] * tv[i] / (sv * sv);
                grad_of(1)[0] += acc;
            }
            break;
        }
        case Op::kMatMul: {
            // C = opA(A) opB(B); standard transpose algebra per flag
            Node* a = in(0);
            Node* b = in(1);
            const int m = n->shape[0], p = n->shape[1];
            const int k = n->trans_a ? a->shape[0] : a->shape[1];
            const int lda = a->shape[1], ldb = b->shape[1];
            const double* av = a->value.data();
            const double* bv = b->value.data();
            const double* gv = g.data();
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (int i = 0; i < m; ++i)
                    for (int q = 0; q < k; ++q) {
                        double acc = 0.0;
                        for (int j = 0; j < p; ++j) {
                            const double y =
                                n->trans_b ? bv[j * ldb + q] : bv[q * ldb + j];
                            acc += gv[i * p + j] * y;
                        }
                        if (n->trans_a)
                            ga[q * lda + i] += acc;
                        else
                            ga[i * lda + q] += acc;
                    }
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (int q = 0; q < k; ++q)
                    for (int j = 0; j < p; ++j) {
                        double acc = 0.0;
                        for (int i = 0; i < m; ++i) {
                            const double x =
                                n->trans_a ? av[q * lda + i] : av[i * lda + q];
                            acc += x * gv[i * p + j];
                        }
                        if (n->trans_b)
                            gb[j * ldb + q] += acc;
                        else
                            gb[q * ldb + j] += acc;
                    }
            }
            break;
        }
        case Op::kMatVec: {
            Node* a = in(0);
            Node* x = in(1);
            const int rows = a->shape[0], cols = a->shape[1];
            const double* av = a->value.data();
            const double* xv = x->value.data();
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < cols; ++j) ga[i * cols + j] += g[i] * xv[j];
            }
            if (wants(1)) {
                auto& gx = grad_of(1);
                for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < cols; ++j) gx[j] += g[i] * av[i * cols + j];
            }
            break;
        }
        case Op::kConcat: {
            const auto& extents = *n->indices;
            const int axis = n->axis;
            if (static_cast<int>(n->shape.size()) == 1 || axis == 0) {
                std::size_t off = 0;
                const int inner =
                    n->size() / n->shape[0];
                for (std::size_t pi = 0; pi < n->inputs.size(); ++pi) {
                    const std::size_t count =
                        static_cast<std::size_t>(extents[pi]) * inner;
                    if (wants(pi)) {
                        auto& gp = grad_of(pi);
                        for (std::size_t i = 0; i < count; ++i) gp[i] += g[off + i];
                    }
                    off += count;
                }
            } else {  // rank 2, axis 1
                const int rows = n->shape[0], total = n->shape[1];
                int col0 = 0;
                for (std::size_t pi = 0; pi < n->inputs.size(); ++pi) {
                    const int pc = extents[pi];
                    if (wants(pi)) {
                        auto& gp = grad_of(pi);
                        for (int r = 0; r < rows; ++r)
                            for (int c = 0; c < pc; ++c)
                                gp[static_cast<std::size_t>(r) * pc + c] +=
                                    g[static_cast<std::size_t>(r) * total + col0 + c];
                    }
                    col0 += pc;
                }
            }
            break;
        }
        case Op::kSlice: {
            if (!wants(0)) break;
            Node* t = in(0);
            auto& gt = grad_of(0);
            const int rank = static_cast<int>(t->shape.size());
            if (rank == 1 || n->axis == 0) {
                const int inner = t->size() / t->shape[0];
                const std::size_t off = static_cast<std::size_t>(n->start) * inner;
                for (std::size_t i = 0; i < g.size(); ++i) gt[off + i] += g[i];
            } else {
                const int cols = t->shape[1];
                const int len = n->len;
                const int rows = t->shape[0];
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < len; ++c)
                        gt[static_cast<std::size_t>(r) * cols + n->start + c] +=
                            g[static_cast<std::size_t>(r) * len + c];
            }
            break;
        }
        case Op::kReshape: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
            break;
        }
        case Op::kGather: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& ix = *n->indices;
            for (std::size_t i = 0; i < ix.size(); ++i) gt[ix[i]] += g[i];
            break;
        }
        case Op::kSum: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += g[0];
            break;
        }
        case Op::kMeanAxis: {
            if (!wants(0)) break;
            Node* t = in(0);
            auto& gt = grad_of(0);
            const int rows = t->shape[0], cols = t->shape[1];
            if (n->axis == 0) {
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gt[static_cast<std::size_t>(r) * cols + c] += g[c] / rows;
            } else {
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gt[static_cast<std::size_t>(r) * cols + c] += g[r] / cols;
            }
            break;
        }
        case Op::kMaxAxis: {
            // subgradient routed to the first attaining element
            if (!wants(0)) break;
            Node* t = in(0);
            auto& gt = grad_of(0);
            const int rows = t->shape[0], cols = t->shape[1];
            const auto& tv = t->value;
            if (n->axis == 0) {
                for (int c = 0; c < cols; ++c) {
                    int best = 0;
                    for (int r = 1; r < rows; ++r)
                        if (tv[static_cast<std::size_t>(r) * cols + c] >
                            tv[static_cast<std::size_t>(best) * cols + c])
                            best = r;
                    gt[static_cast<std::size_t>(best) * cols + c] += g[c];
                }
            } else {
                for (int r = 0; r < rows; ++r) {
                    const double* row = tv.data() + static_cast<std::size_t>(r) * cols;
                    const int best =
                        static_cast<int>(std::max_element(row, row + cols) - row);
                    gt[static_cast<std::size_t>(r) * cols + best] += g[r];
                }
            }
            break;
        }
        case Op::kL2Norm: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& tv = in(0)->value;
            const double norm = n->value[0];
            if (norm == 0.0) break;  // subgradient 0 at the origin
            for (std::size_t i = 0; i < gt.size(); ++i)
                gt[i] += g[0] * tv[i] / norm;
            break;
        }
        case Op::kSquare: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& tv = in(0)->value;
            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i] * 2.0 * tv[i];
            break;
        }
        case Op::kSqrt: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * 0.5 / n->value[i];
            break;
        }
        case Op::kExp: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i] * n->value[i];
            break;
        }
        case Op::kRecip: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] -= g[i] * n->value[i] * n->value[i];
            break;
        }
        case Op::kTanh: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * (1.0 - n->value[i] * n->value[i]);
            break;
        }
        case Op::kSigmoid: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * n->value[i] * (1.0 - n->value[i]);
            break;
        }
        case Op::kSoftmax: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& s = n->value;
            double dot = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * s[i];
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += s[i] * (g[i] - dot);
            break;
        }
        case Op::kSoftmaxRows: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& s = n->value;
            const int rows = n->shape[0], cols = n->shape[1];
            for (int r = 0; r < rows; ++r) {
                const std::size_t off = static_cast<std::size_t>(r) * cols;
                double dot = 0.0;
                for (int c = 0; c < cols; ++c) dot += g[off + c] * s[off + c];
                for (int c = 0; c < cols; ++c)
                    gt[off + c] += s[off + c] * (g[off + c] - dot);
            }
            break;
        }
        case Op::kAddRowVec: {
            const int rows = n->shape[0], cols = n->shape[1];
            if (wants(0)) {
                auto& gm = grad_of(0);
                for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
            }
            if (wants(1)) {
                auto& gv = grad_of(1);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gv[c] += g[static_cast<std::size_t>(r) * cols + c];
            }
            break;
        }
        case Op::kScaleRows: {
            const int rows = n->shape[0], cols = n->shape[1];
            const auto& mv = in(0)->value;
            const auto& wv = in(1)->value;
            if (wants(0)) {
                auto& gm = grad_of(0);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gm[static_cast<std::size_t>(r) * cols + c] +=
                            g[static_cast<std::size_t>(r) * cols + c] * wv[r];
            }
            if (wants(1)) {
                auto& gw = grad_of(1);
                for (int r = 0; r < rows; ++r) {
                    double acc = 0.0;
                    for (int c = 0; c < cols; ++c)
                        acc += g[static_cast<std::size_t>(r) * cols + c] *
                               mv[static_cast<std::size_t>(r) * cols + c];
                    gw[r] += acc;
                }
            }
            break;
        }
        case Op::kRowNorm: {
            if (!wants(0)) break;
            auto& gm = grad_of(0);
            const auto& mv = in(0)->value;
            const int rows = n->shape[0];
            const int cols = in(0)->shape[1];
            for (int r = 0; r < rows; ++r) {
                const double norm = n->value[r];
                if (norm == 0.0) continue;
                for (int c = 0; c < cols; ++c)
                    gm[static_cast<std::size_t>(r) * cols + c] +=
                        g[r] * mv[static_cast<std::size_t>(r) * cols + c] / norm;
            }
            break;
        }
        case Op::kRowDot: {
            const auto& av = in(0)->value;
            const auto& bv = in(1)->value;
            const int rows = n->shape[0];
            const int cols = in(0)->shape[1];
            if (wants(0)) {
                auto& ga = grad_of(0);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        ga[static_cast<std::size_t>(r) * cols + c] +=
                            g[r] * bv[static_cast<std::size_t>(r) * cols + c];
            }
            if (wants(1)) {
                auto& gb = grad_of(1);
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c)
                        gb[static_cast<std::size_t>(r) * cols + c] +=
                            g[r] * av[static_cast<std::size_t>(r) * cols + c];
            }
            break;
        }
        case Op::kRowCross: {
            // d(a x b): da += b x g, db += g x a  (row-wise)
            const auto& av = in(0)->value;
            const auto& bv = in(1)->value;
            const int rows = n->shape[0];
            for (int r = 0; r < rows; ++r) {
                const double* x = av.data() + static_cast<std::size_t>(r) * 3;
                const double* y = bv.data() + static_cast<std::size_t>(r) * 3;
                const double* gr = g.data() + static_cast<std::size_t>(r) * 3;
                if (wants(0)) {
                    auto& ga = grad_of(0);
                    double* o = ga.data() + static_cast<std::size_t>(r) * 3;
                    o[0] += y[1] * gr[2] - y[2] * gr[1];
                    o[1] += y[2] * gr[0] - y[0] * gr[2];
                    o[2] += y[0] * gr[1] - y[1] * gr[0];
                }
                if (wants(1)) {
                    auto& gb = grad_of(1);
                    double* o = gb.data() + static_cast<std::size_t>(r) * 3;
                    o[0] += gr[1] * x[2] - gr[2] * x[1];
                    o[1] += gr[2] * x[0] - gr[0] * x[2];
                    o[2] += gr[0] * x[1] - gr[1] * x[0];
                }
            }
            break;
        }
        case Op::kRodriguesA: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& tv = in(0)->value;
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * detail::rodrigues_a_dfn(tv[i]);
            break;
        }
        case Op::kRodriguesB: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& tv = in(0)->value;
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * detail::rodrigues_b_dfn(tv[i]);
            break;
        }
        case Op::kLogMapFactor: {
            if (!wants(0)) break;
            auto& gt = grad_of(0);
            const auto& tv = in(0)->value;
            for (std::size_t i = 0; i < g.size(); ++i)
                gt[i] += g[i] * detail::logmap_factor_dfn(tv[i]);
            break;
        }
    }
}

}  // namespace

}  // namespace motionlab
