#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "posegen/errors.hpp"
#include "posegen/tensor.hpp"

namespace posegen::ad {

/// Named parameter tensors with stable iteration order plus per-parameter
/// AdamW state. Owned exclusively by the training loop; read-only snapshots
/// may be shared across threads for inference.
template <typename T>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Tensor<T> value;
        Tensor<T> m;  // first moment
        Tensor<T> v;  // second moment
        std::int64_t step = 0;
        bool decay = false;  // weight matrices only
    };

    Tensor<T>& add(const std::string& name, Tensor<T> init, bool decay) {
        if (index_.count(name)) throw ConfigError("duplicate parameter " + name);
        Entry e;
        e.name = name;
        e.m = Tensor<T>(init.rows(), init.cols());
        e.v = Tensor<T>(init.rows(), init.cols());
        e.value = std::move(init);
        e.decay = decay;
        index_[name] = entries_.size();
        entries_.push_back(std::move(e));
        return entries_.back().value;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t index_of(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter " + name);
        return it->second;
    }

    Entry& entry(std::size_t i) { return entries_[i]; }
    const Entry& entry(std::size_t i) const { return entries_[i]; }
    Tensor<T>& value(const std::string& name) { return entries_[index_of(name)].value; }
    const Tensor<T>& value(const std::string& name) const {
        return entries_[index_of(name)].value;
    }

    std::size_t size() const { return entries_.size(); }

    std::int64_t total_coords() const {
        std::int64_t n = 0;
        for (const auto& e : entries_) n += e.value.size();
        return n;
    }

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Gradients aligned with a ParamStore, in store order.
template <typename T>
using GradMap = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
const Tensor<T>* find_grad(const GradMap<T>& grads, const std::string& name) {
    for (const auto& [n, g] : grads)
        if (n == name) return &g;
    return nullptr;
}

/// Handle to a node in a Graph.
struct Var {
    int idx = -1;
};

/// Reverse-mode tape over dense 2-D tensors. Forward values are computed
/// eagerly as ops are recorded; backward() fills gradients.
///
/// Supported op set: matrix multiply, add (incl. row-vector and constant
/// broadcast), subtract, elementwise multiply (incl. column-vector and
/// scalar broadcast), constant scale, ReLU, exp, log, square, sqrt, sum,
/// mean, row-wise sum, row-wise cross product, row-wise vector normalize,
/// clamp, column slice/concat, row repeat. L2/Frobenius norms are composed
/// from square, row-sum and sqrt.
template <typename T>
class Graph {
public:
    explicit Graph(ParamStore<T>* params = nullptr) : params_(params) {
        nodes_.reserve(96);
    }

    Var param(const std::string& name) {
        if (!params_) throw ConfigError("graph has no parameter store");
        const std::size_t pi = params_->index_of(name);
        auto it = param_vars_.find(pi);
        if (it != param_vars_.end()) return it->second;
        Node n;
        n.op = Op::Param;
        n.param_index = static_cast<int>(pi);
        n.value = params_->entry(pi).value;
        const Var v = push(std::move(n), "param " + name);
        param_vars_[pi] = v;
        return v;
    }

    Var input(Tensor<T> value) {
        Node n;
        n.op = Op::Input;
        n.value = std::move(value);
        return push(std::move(n), "input");
    }

    Var matmul(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.cols() != B.rows())
            throw ShapeMismatch("matmul: " + A.shape_str() + " * " + B.shape_str());
        Node n = binary(Op::MatMul, a, b, A.rows(), B.cols());
        detail::gemm_nn_acc(A.data(), B.data(), n.value.data(), A.rows(), A.cols(), B.cols());
        return push(std::move(n), "matmul");
    }

    Var add(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        require_same(A, B, "add");
        Node n = binary(Op::Add, a, b, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] + B[i];
        return push(std::move(n), "add");
    }

    /// A[i,j] + b[0,j]
    Var add_rowvec(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (B.rows() != 1 || B.cols() != A.cols())
            throw ShapeMismatch("add_rowvec: " + A.shape_str() + " + " + B.shape_str());
        Node n = binary(Op::AddRowVec, a, b, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.rows(); ++i)
            for (std::int64_t j = 0; j < A.cols(); ++j)
                n.value(i, j) = A(i, j) + B(0, j);
        return push(std::move(n), "add_rowvec");
    }

    Var add_const(Var a, T c) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::AddConst, a, A.rows(), A.cols());
        n.c0 = c;
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] + c;
        return push(std::move(n), "add_const");
    }

    Var sub(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        require_same(A, B, "sub");
        Node n = binary(Op::Sub, a, b, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] - B[i];
        return push(std::move(n), "sub");
    }

    Var mul(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        require_same(A, B, "mul");
        Node n = binary(Op::Mul, a, b, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] * B[i];
        return push(std::move(n), "mul");
    }

    /// A[i,j] * c[i,0]
    Var mul_colvec(Var a, Var c) {
        const Tensor<T>&A = val(a), &C = val(c);
        if (C.cols() != 1 || C.rows() != A.rows())
            throw ShapeMismatch("mul_colvec: " + A.shape_str() + " * " + C.shape_str());
        Node n = binary(Op::MulColVec, a, c, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.rows(); ++i)
            for (std::int64_t j = 0; j < A.cols(); ++j)
                n.value(i, j) = A(i, j) * C(i, 0);
        return push(std::move(n), "mul_colvec");
    }

    /// A * s with s a 1x1 tensor (learnable scalar broadcast).
    Var mul_scalar(Var a, Var s) {
        const Tensor<T>&A = val(a), &S = val(s);
        if (S.size() != 1) throw ShapeMismatch("mul_scalar: scalar operand is " + S.shape_str());
        Node n = binary(Op::MulScalar, a, s, A.rows(), A.cols());
        const T sv = S[0];
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] * sv;
        return push(std::move(n), "mul_scalar");
    }

    Var scale(Var a, T k) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Scale, a, A.rows(), A.cols());
        n.c0 = k;
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] * k;
        return push(std::move(n), "scale");
    }

    Var relu(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Relu, a, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] > T(0) ? A[i] : T(0);
        return push(std::move(n), "relu");
    }

    Var exp(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Exp, a, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = std::exp(A[i]);
        return push(std::move(n), "exp");
    }

    Var log(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Log, a, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = std::log(A[i]);
        return push(std::move(n), "log");
    }

    Var square(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Square, a, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = A[i] * A[i];
        return push(std::move(n), "square");
    }

    Var sqrt(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Sqrt, a, A.rows(), A.cols());
        for (std::int64_t i = 0; i < A.size(); ++i) n.value[i] = std::sqrt(A[i]);
        return push(std::move(n), "sqrt");
    }

    Var sum(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Sum, a, 1, 1);
        T acc = T(0);
        for (std::int64_t i = 0; i < A.size(); ++i) acc += A[i];
        n.value[0] = acc;
        return push(std::move(n), "sum");
    }

    Var mean(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Mean, a, 1, 1);
        T acc = T(0);
        for (std::int64_t i = 0; i < A.size(); ++i) acc += A[i];
        n.value[0] = acc / static_cast<T>(A.size());
        return push(std::move(n), "mean");
    }

    /// [m x n] -> [m x 1]
    Var row_sum(Var a) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::RowSum, a, A.rows(), 1);
        for (std::int64_t i = 0; i < A.rows(); ++i) {
            T acc = T(0);
            for (std::int64_t j = 0; j < A.cols(); ++j) acc += A(i, j);
            n.value(i, 0) = acc;
        }
        return push(std::move(n), "row_sum");
    }

    /// Row-wise cross product of two [m x 3] operands.
    Var cross_rows(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.cols() != 3 || B.cols() != 3 || A.rows() != B.rows())
            throw ShapeMismatch("cross_rows: " + A.shape_str() + " x " + B.shape_str());
        Node n = binary(Op::CrossRows, a, b, A.rows(), 3);
        for (std::int64_t i = 0; i < A.rows(); ++i) {
            const T* x = A.data() + i * 3;
            const T* y = B.data() + i * 3;
            T* o = n.value.data() + i * 3;
            o[0] = x[1] * y[2] - x[2] * y[1];
            o[1] = x[2] * y[0] - x[0] * y[2];
            o[2] = x[0] * y[1] - x[1] * y[0];
        }
        return push(std::move(n), "cross_rows");
    }

    /// Row-wise vector normalize. Throws DegenerateRotation6D when a row has
    /// norm <= eps; in this codebase a vanishing row always means a
    /// pathological 6D rotation output.
    Var normalize_rows(Var a, T eps = T(1e-8)) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::NormalizeRows, a, A.rows(), A.cols());
        n.aux = Tensor<T>(A.rows(), 1);
        for (std::int64_t i = 0; i < A.rows(); ++i) {
            T sq = T(0);
            for (std::int64_t j = 0; j < A.cols(); ++j) sq += A(i, j) * A(i, j);
            const T norm = std::sqrt(sq);
            if (!(norm > eps))
                throw DegenerateRotation6D("normalize_rows: row " + std::to_string(i) +
                                           " has norm " + std::to_string(static_cast<double>(norm)));
            n.aux(i, 0) = norm;
            for (std::int64_t j = 0; j < A.cols(); ++j) n.value(i, j) = A(i, j) / norm;
        }
        return push(std::move(n), "normalize_rows");
    }

    Var clamp(Var a, T lo, T hi) {
        const Tensor<T>& A = val(a);
        Node n = unary(Op::Clamp, a, A.rows(), A.cols());
        n.c0 = lo;
        n.c1 = hi;
        for (std::int64_t i = 0; i < A.size(); ++i)
            n.value[i] = A[i] < lo ? lo : (A[i] > hi ? hi : A[i]);
        return push(std::move(n), "clamp");
    }

    /// Columns [c0, c1).
    Var slice_cols(Var a, std::int64_t c0, std::int64_t c1) {
        const Tensor<T>& A = val(a);
        if (c0 < 0 || c1 > A.cols() || c0 >= c1)
            throw ShapeMismatch("slice_cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                                ") of " + A.shape_str());
        Node n = unary(Op::SliceCols, a, A.rows(), c1 - c0);
        n.i0 = c0;
        n.i1 = c1;
        for (std::int64_t i = 0; i < A.rows(); ++i)
            for (std::int64_t j = c0; j < c1; ++j) n.value(i, j - c0) = A(i, j);
        return push(std::move(n), "slice_cols");
    }

    Var concat_cols(Var a, Var b) {
        const Tensor<T>&A = val(a), &B = val(b);
        if (A.rows() != B.rows())
            throw ShapeMismatch("concat_cols: " + A.shape_str() + " | " + B.shape_str());
        Node n = binary(Op::ConcatCols, a, b, A.rows(), A.cols() + B.cols());
        for (std::int64_t i = 0; i < A.rows(); ++i) {
            for (std::int64_t j = 0; j < A.cols(); ++j) n.value(i, j) = A(i, j);
            for (std::int64_t j = 0; j < B.cols(); ++j) n.value(i, A.cols() + j) = B(i, j);
        }
        return push(std::move(n), "concat_cols");
    }

    /// Each row repeated `times` consecutive times: out[i*times + r, :] = A[i, :].
    Var repeat_rows(Var a, std::int64_t times) {
        const Tensor<T>& A = val(a);
        if (times < 1) throw ShapeMismatch("repeat_rows: times = " + std::to_string(times));
        Node n = unary(Op::RepeatRows, a, A.rows() * times, A.cols());
        n.i0 = times;
        for (std::int64_t i = 0; i < A.rows(); ++i)
            for (std::int64_t r = 0; r < times; ++r)
                for (std::int64_t j = 0; j < A.cols(); ++j)
                    n.value((i * times + r), j) = A(i, j);
        return push(std::move(n), "repeat_rows");
    }

    // --- composed helpers ---

    /// Row-wise L2 norm: [m x n] -> [m x 1].
    Var l2_norm_rows(Var a) { return sqrt(row_sum(square(a))); }

    /// Frobenius norm of the whole tensor, as 1x1.
    Var frobenius_norm(Var a) { return sqrt(sum(square(a))); }

    const Tensor<T>& value(Var v) const { return nodes_[v.idx].value; }
    const Tensor<T>& grad(Var v) const { return nodes_[v.idx].grad; }

    /// Backpropagate from a scalar loss; returns its value. Gradients of all
    /// reachable nodes are materialized; parameter gradients via param_grads().
    T backward(Var loss) {
        Node& ln = nodes_[loss.idx];
        if (ln.value.size() != 1)
            throw ShapeMismatch("backward from non-scalar " + ln.value.shape_str());
        for (Node& n : nodes_) {
            n.grad = Tensor<T>(n.value.rows(), n.value.cols());
        }
        ln.grad[0] = T(1);
        for (int i = loss.idx; i >= 0; --i) backprop_node(i);
        backward_run_ = true;
        return ln.value[0];
    }

    /// Parameter gradients in store order (zero tensors for untouched params).
    GradMap<T> param_grads() const {
        if (!params_) throw ConfigError("graph has no parameter store");
        GradMap<T> out;
        out.reserve(params_->size());
        for (std::size_t i = 0; i < params_->size(); ++i) {
            const auto& e = params_->entry(i);
            auto it = param_vars_.find(i);
            if (it != param_vars_.end() && backward_run_)
                out.emplace_back(e.name, nodes_[it->second.idx].grad);
            else
                out.emplace_back(e.name, Tensor<T>(e.value.rows(), e.value.cols()));
        }
        return out;
    }

private:
    enum class Op {
        Input, Param, MatMul, Add, AddRowVec, AddConst, Sub, Mul, MulColVec,
        MulScalar, Scale, Relu, Exp, Log, Square, Sqrt, Sum, Mean, RowSum,
        CrossRows, NormalizeRows, Clamp, SliceCols, ConcatCols, RepeatRows,
    };

    struct Node {
        Op op = Op::Input;
        Tensor<T> value;
        Tensor<T> grad;
        Tensor<T> aux;  // op-specific cache (row norms for normalize)
        int a = -1, b = -1;
        T c0 = T(0), c1 = T(0);
        std::int64_t i0 = 0, i1 = 0;
        int param_index = -1;
    };

    Node unary(Op op, Var a, std::int64_t rows, std::int64_t cols) {
        Node n;
        n.op = op;
        n.a = a.idx;
        n.value = Tensor<T>(rows, cols);
        return n;
    }

    Node binary(Op op, Var a, Var b, std::int64_t rows, std::int64_t cols) {
        Node n = unary(op, a, rows, cols);
        n.b = b.idx;
        return n;
    }

    Var push(Node n, const std::string& what) {
        if (!n.value.all_finite())
            throw NonFiniteValue(what + " produced NaN/Inf");
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size() - 1)};
    }

    const Tensor<T>& val(Var v) const {
        if (v.idx < 0 || v.idx >= static_cast<int>(nodes_.size()))
            throw ConfigError("dangling graph handle");
        return nodes_[v.idx].value;
    }

    static void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
        if (!a.same_shape(b))
            throw ShapeMismatch(std::string(what) + ": " + a.shape_str() + " vs " + b.shape_str());
    }

    void backprop_node(int idx) {
        Node& n = nodes_[idx];
        const Tensor<T>& g = n.grad;
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                return;
            case Op::MatMul: {
                const Tensor<T>&A = nodes_[n.a].value, &B = nodes_[n.b].value;
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                // dA += g * B^T ; dB += A^T * g
                detail::gemm_nt_acc(g.data(), B.data(), dA.data(), g.rows(), g.cols(), B.rows());
                detail::gemm_tn_acc(A.data(), g.data(), dB.data(), A.rows(), A.cols(), g.cols());
                return;
            }
            case Op::Add: {
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    dA[i] += g[i];
                    dB[i] += g[i];
                }
                return;
            }
            case Op::AddRowVec: {
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.rows(); ++i)
                    for (std::int64_t j = 0; j < g.cols(); ++j) {
                        dA(i, j) += g(i, j);
                        dB(0, j) += g(i, j);
                    }
                return;
            }
            case Op::AddConst: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) dA[i] += g[i];
                return;
            }
            case Op::Sub: {
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    dA[i] += g[i];
                    dB[i] -= g[i];
                }
                return;
            }
            case Op::Mul: {
                const Tensor<T>&A = nodes_[n.a].value, &B = nodes_[n.b].value;
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    dA[i] += g[i] * B[i];
                    dB[i] += g[i] * A[i];
                }
                return;
            }
            case Op::MulColVec: {
                const Tensor<T>&A = nodes_[n.a].value, &C = nodes_[n.b].value;
                Tensor<T>&dA = nodes_[n.a].grad, &dC = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.rows(); ++i) {
                    T acc = T(0);
                    for (std::int64_t j = 0; j < g.cols(); ++j) {
                        dA(i, j) += g(i, j) * C(i, 0);
                        acc += g(i, j) * A(i, j);
                    }
                    dC(i, 0) += acc;
                }
                return;
            }
            case Op::MulScalar: {
                const Tensor<T>&A = nodes_[n.a].value, &S = nodes_[n.b].value;
                Tensor<T>&dA = nodes_[n.a].grad, &dS = nodes_[n.b].grad;
                const T sv = S[0];
                T acc = T(0);
                for (std::int64_t i = 0; i < g.size(); ++i) {
                    dA[i] += g[i] * sv;
                    acc += g[i] * A[i];
                }
                dS[0] += acc;
                return;
            }
            case Op::Scale: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) dA[i] += g[i] * n.c0;
                return;
            }
            case Op::Relu: {
                const Tensor<T>& A = nodes_[n.a].value;
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i)
                    if (A[i] > T(0)) dA[i] += g[i];
                return;
            }
            case Op::Exp: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) dA[i] += g[i] * n.value[i];
                return;
            }
            case Op::Log: {
                const Tensor<T>& A = nodes_[n.a].value;
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) dA[i] += g[i] / A[i];
                return;
            }
            case Op::Square: {
                const Tensor<T>& A = nodes_[n.a].value;
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i) dA[i] += T(2) * g[i] * A[i];
                return;
            }
            case Op::Sqrt: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i)
                    dA[i] += g[i] * T(0.5) / n.value[i];
                return;
            }
            case Op::Sum: {
                Tensor<T>& dA = nodes_[n.a].grad;
                const T gv = g[0];
                for (std::int64_t i = 0; i < dA.size(); ++i) dA[i] += gv;
                return;
            }
            case Op::Mean: {
                Tensor<T>& dA = nodes_[n.a].grad;
                const T gv = g[0] / static_cast<T>(dA.size());
                for (std::int64_t i = 0; i < dA.size(); ++i) dA[i] += gv;
                return;
            }
            case Op::RowSum: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < dA.rows(); ++i) {
                    const T gv = g(i, 0);
                    for (std::int64_t j = 0; j < dA.cols(); ++j) dA(i, j) += gv;
                }
                return;
            }
            case Op::CrossRows: {
                const Tensor<T>&A = nodes_[n.a].value, &B = nodes_[n.b].value;
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                for (std::int64_t i = 0; i < g.rows(); ++i) {
                    const T* x = A.data() + i * 3;
                    const T* y = B.data() + i * 3;
                    const T* gv = g.data() + i * 3;
                    T* dx = dA.data() + i * 3;
                    T* dy = dB.data() + i * 3;
                    // d/da (a x b) applied to g is b x g; d/db is g x a
                    dx[0] += y[1] * gv[2] - y[2] * gv[1];
                    dx[1] += y[2] * gv[0] - y[0] * gv[2];
                    dx[2] += y[0] * gv[1] - y[1] * gv[0];
                    dy[0] += gv[1] * x[2] - gv[2] * x[1];
                    dy[1] += gv[2] * x[0] - gv[0] * x[2];
                    dy[2] += gv[0] * x[1] - gv[1] * x[0];
                }
                return;
            }
            case Op::NormalizeRows: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.rows(); ++i) {
                    const T norm = n.aux(i, 0);
                    T dot = T(0);
                    for (std::int64_t j = 0; j < g.cols(); ++j) dot += n.value(i, j) * g(i, j);
                    for (std::int64_t j = 0; j < g.cols(); ++j)
                        dA(i, j) += (g(i, j) - n.value(i, j) * dot) / norm;
                }
                return;
            }
            case Op::Clamp: {
                const Tensor<T>& A = nodes_[n.a].value;
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.size(); ++i)
                    if (A[i] >= n.c0 && A[i] <= n.c1) dA[i] += g[i];
                return;
            }
            case Op::SliceCols: {
                Tensor<T>& dA = nodes_[n.a].grad;
                for (std::int64_t i = 0; i < g.rows(); ++i)
                    for (std::int64_t j = 0; j < g.cols(); ++j) dA(i, n.i0 + j) += g(i, j);
                return;
            }
            case Op::ConcatCols: {
                Tensor<T>&dA = nodes_[n.a].grad, &dB = nodes_[n.b].grad;
                const std::int64_t ca = dA.cols();
                for (std::int64_t i = 0; i < g.rows(); ++i) {
                    for (std::int64_t j = 0; j < ca; ++j) dA(i, j) += g(i, j);
                    for (std::int64_t j = 0; j < dB.cols(); ++j) dB(i, j) += g(i, ca + j);
                }
                return;
            }
            case Op::RepeatRows: {
                Tensor<T>& dA = nodes_[n.a].grad;
                const std::int64_t times = n.i0;
                for (std::int64_t i = 0; i < dA.rows(); ++i)
                    for (std::int64_t r = 0; r < times; ++r)
                        for (std::int64_t j = 0; j < dA.cols(); ++j)
                            dA(i, j) += g(i * times + r, j);
                return;
            }
        }
    }

    std::vector<Node> nodes_;
    ParamStore<T>* params_;
    std::map<std::size_t, Var> param_vars_;
    bool backward_run_ = false;
};

template <typename T>
using LossBuilder = std::function<Var(Graph<T>&)>;

/// Evaluate a loss expression: forward only.
template <typename T>
T evaluate(ParamStore<T>& params, const LossBuilder<T>& build) {
    Graph<T> g(&params);
    const Var loss = build(g);
    const Tensor<T>& v = g.value(loss);
    if (v.size() != 1) throw ShapeMismatch("loss is not scalar: " + v.shape_str());
    return v[0];
}

/// Scalar loss value plus gradient for every parameter in the store.
template <typename T>
std::pair<T, GradMap<T>> value_and_grad(ParamStore<T>& params, const LossBuilder<T>& build) {
    Graph<T> g(&params);
    const Var loss = build(g);
    const T v = g.backward(loss);
    return {v, g.param_grads()};
}

}  // namespace posegen::ad
