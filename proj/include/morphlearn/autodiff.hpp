#pragma once

#include "morphlearn/tensor.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

// Reverse-mode automatic differentiation over a small fixed vocabulary of
// tensor operations. A Tape records every operation eagerly (values are
// computed as nodes are appended), so the forward pass is complete as soon as
// the output node exists.
namespace morphlearn::ad {

struct Var {
    std::size_t index = 0;
};

enum class Op {
    Leaf,
    Constant,
    Linear,
    Add,
    Sub,
    Mul,
    Scale,
    AddScalar,
    Tanh,
    Exp,
    Log,
    Square,
    Sum,
    Mean,
    RowSum,
    Minimum,
    Clamp,
    BroadcastRows,
    Reshape,
    ConcatCols,
};

std::string_view op_name(Op op) noexcept;

class Tape {
public:
    // Differentiable input; backward() reports one gradient per leaf, in the
    // order leaves were created.
    Var leaf(Tensor value);
    Var constant(Tensor value);

    // x: [in] or [batch x in]; weight: [out x in]; bias: [out].
    // Result: [out] or [batch x out].
    Var linear(Var x, Var weight, Var bias);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double factor);
    Var add_scalar(Var a, double offset);
    Var tanh(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var square(Var a);
    Var sum(Var a);
    Var mean(Var a);
    // [batch x n] -> [batch]
    Var row_sum(Var a);
    Var minimum(Var a, Var b);
    Var clamp(Var a, double lo, double hi);
    // [n] -> [rows x n]
    Var broadcast_rows(Var a, std::size_t rows);
    Var reshape(Var a, std::vector<std::size_t> shape);
    // [batch x p] , [batch x q] -> [batch x (p + q)]; vectors are treated as one row.
    Var concat_cols(Var a, Var b);

    const Tensor& value(Var v) const { return nodes_.at(v.index).value; }
    Op op(Var v) const { return nodes_.at(v.index).op; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<Var>& leaves() const noexcept { return leaves_; }

    // Gradient of a scalar output with respect to every leaf.
    std::vector<Tensor> backward(Var output) const;

private:
    struct Node {
        Op op;
        Tensor value;
        std::size_t lhs = 0;
        std::size_t rhs = 0;
        std::size_t third = 0;
        double p0 = 0.0;
        double p1 = 0.0;
    };

    Var push(Node node);
    const Node& node(Var v) const;
    void require_same_shape(Var a, Var b, std::string_view what) const;

    std::vector<Node> nodes_;
    std::vector<Var> leaves_;
};

} // namespace morphlearn::ad
