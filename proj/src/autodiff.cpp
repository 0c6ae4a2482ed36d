#include "morphlearn/autodiff.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace morphlearn::ad {

std::string_view op_name(Op op) noexcept
{
    switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Linear: return "linear";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::RowSum: return "row_sum";
    case Op::Minimum: return "minimum";
    case Op::Clamp: return "clamp";
    case Op::BroadcastRows: return "broadcast_rows";
    case Op::Reshape: return "reshape";
    case Op::ConcatCols: return "concat_cols";
    }
    return "unknown";
}

namespace {

template <class F>
Tensor map_unary(const Tensor& a, F f)
{
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = f(a[i]);
    return out;
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f)
{
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = f(a[i], b[i]);
    return out;
}

} // namespace

Var Tape::push(Node n)
{
    if (!n.value.all_finite())
        throw NumericError("non-finite value produced at tape node " + std::to_string(nodes_.size())
                           + " (" + std::string(op_name(n.op)) + ")");
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const
{
    if (v.index >= nodes_.size())
        throw DimensionError("variable does not belong to this tape");
    return nodes_[v.index];
}

void Tape::require_same_shape(Var a, Var b, std::string_view what) const
{
    const auto& x = node(a).value;
    const auto& y = node(b).value;
    if (!x.same_shape(y))
        throw DimensionError(std::string(what) + ": shape mismatch " + x.shape_string() + " vs "
                             + y.shape_string());
}

Var Tape::leaf(Tensor value)
{
    Var v = push(Node{Op::Leaf, std::move(value)});
    leaves_.push_back(v);
    return v;
}

Var Tape::constant(Tensor value) { return push(Node{Op::Constant, std::move(value)}); }

Var Tape::linear(Var x, Var weight, Var bias)
{
    const Tensor& xv = node(x).value;
    const Tensor& w = node(weight).value;
    const Tensor& b = node(bias).value;
    if (w.rank() != 2 || b.rank() != 1 || b.size() != w.rows())
        throw DimensionError("linear: weight " + w.shape_string() + " / bias " + b.shape_string());
    const std::size_t in = w.cols();
    const std::size_t out = w.rows();
    if (xv.cols() != in || xv.rank() == 0 || xv.rank() > 2)
        throw DimensionError("linear: input " + xv.shape_string() + " vs weight " + w.shape_string());

    const std::size_t batch = xv.rows();
    Tensor y = xv.rank() == 1 ? Tensor({out}) : Tensor({batch, out});
    for (std::size_t r = 0; r < batch; ++r) {
        const double* xr = xv.values().data() + r * in;
        double* yr = y.values().data() + r * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wo = w.values().data() + o * in;
            double acc = b[o];
            for (std::size_t i = 0; i < in; ++i)
                acc += wo[i] * xr[i];
            yr[o] = acc;
        }
    }
    Node n{Op::Linear, std::move(y)};
    n.lhs = x.index;
    n.rhs = weight.index;
    n.third = bias.index;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b)
{
    require_same_shape(a, b, "add");
    Node n{Op::Add, map_binary(node(a).value, node(b).value, [](double p, double q) { return p + q; })};
    n.lhs = a.index;
    n.rhs = b.index;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b)
{
    require_same_shape(a, b, "sub");
    Node n{Op::Sub, map_binary(node(a).value, node(b).value, [](double p, double q) { return p - q; })};
    n.lhs = a.index;
    n.rhs = b.index;
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b)
{
    require_same_shape(a, b, "mul");
    Node n{Op::Mul, map_binary(node(a).value, node(b).value, [](double p, double q) { return p * q; })};
    n.lhs = a.index;
    n.rhs = b.index;
    return push(std::move(n));
}

Var Tape::scale(Var a, double factor)
{
    Node n{Op::Scale, map_unary(node(a).value, [factor](double p) { return p * factor; })};
    n.lhs = a.index;
    n.p0 = factor;
    return push(std::move(n));
}

Var Tape::add_scalar(Var a, double offset)
{
    Node n{Op::AddScalar, map_unary(node(a).value, [offset](double p) { return p + offset; })};
    n.lhs = a.index;
    n.p0 = offset;
    return push(std::move(n));
}

Var Tape::tanh(Var a)
{
    Node n{Op::Tanh, map_unary(node(a).value, [](double p) { return std::tanh(p); })};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::exp(Var a)
{
    Node n{Op::Exp, map_unary(node(a).value, [](double p) { return std::exp(p); })};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::log(Var a)
{
    Node n{Op::Log, map_unary(node(a).value, [](double p) { return std::log(p); })};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::square(Var a)
{
    Node n{Op::Square, map_unary(node(a).value, [](double p) { return p * p; })};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::sum(Var a)
{
    double s = 0.0;
    for (double v : node(a).value.values())
        s += v;
    Node n{Op::Sum, Tensor::scalar(s)};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::mean(Var a)
{
    const Tensor& v = node(a).value;
    if (v.size() == 0)
        throw DimensionError("mean of an empty tensor");
    double s = 0.0;
    for (double x : v.values())
        s += x;
    Node n{Op::Mean, Tensor::scalar(s / static_cast<double>(v.size()))};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::row_sum(Var a)
{
    const Tensor& v = node(a).value;
    if (v.rank() != 2)
        throw DimensionError("row_sum expects a matrix, got " + v.shape_string());
    Tensor out({v.rows()});
    for (std::size_t r = 0; r < v.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < v.cols(); ++c)
            s += v.at(r, c);
        out[r] = s;
    }
    Node n{Op::RowSum, std::move(out)};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::minimum(Var a, Var b)
{
    require_same_shape(a, b, "minimum");
    Node n{Op::Minimum,
           map_binary(node(a).value, node(b).value, [](double p, double q) { return p <= q ? p : q; })};
    n.lhs = a.index;
    n.rhs = b.index;
    return push(std::move(n));
}

Var Tape::clamp(Var a, double lo, double hi)
{
    if (!(lo <= hi))
        throw DimensionError("clamp: lo > hi");
    Node n{Op::Clamp, map_unary(node(a).value, [lo, hi](double p) { return std::clamp(p, lo, hi); })};
    n.lhs = a.index;
    n.p0 = lo;
    n.p1 = hi;
    return push(std::move(n));
}

Var Tape::broadcast_rows(Var a, std::size_t rows)
{
    const Tensor& v = node(a).value;
    if (v.rank() != 1)
        throw DimensionError("broadcast_rows expects a vector, got " + v.shape_string());
    Tensor out({rows, v.size()});
    for (std::size_t r = 0; r < rows; ++r)
        std::copy(v.values().begin(), v.values().end(), out.values().begin() + r * v.size());
    Node n{Op::BroadcastRows, std::move(out)};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape)
{
    const Tensor& v = node(a).value;
    Node n{Op::Reshape, Tensor(std::move(shape), v.storage())};
    n.lhs = a.index;
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b)
{
    const Tensor& x = node(a).value;
    const Tensor& y = node(b).value;
    if (x.rank() == 0 || y.rank() == 0 || x.rank() != y.rank() || x.rows() != y.rows())
        throw DimensionError("concat_cols: " + x.shape_string() + " vs " + y.shape_string());
    const std::size_t rows = x.rows();
    const std::size_t p = x.cols();
    const std::size_t q = y.cols();
    Tensor out = x.rank() == 1 ? Tensor({p + q}) : Tensor({rows, p + q});
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(x.values().begin() + r * p, p, out.values().begin() + r * (p + q));
        std::copy_n(y.values().begin() + r * q, q, out.values().begin() + r * (p + q) + p);
    }
    Node n{Op::ConcatCols, std::move(out)};
    n.lhs = a.index;
    n.rhs = b.index;
    return push(std::move(n));
}

std::vector<Tensor> Tape::backward(Var output) const
{
    const Node& out = node(output);
    if (!out.value.is_scalar())
        throw DimensionError("backward requires a scalar output, got " + out.value.shape_string());

    std::vector<Tensor> grads(output.index + 1);
    auto grad_of = [&](std::size_t i) -> Tensor& {
        if (grads[i].size() != nodes_[i].value.size() || !grads[i].same_shape(nodes_[i].value))
            grads[i] = Tensor(nodes_[i].value.shape());
        return grads[i];
    };
    grad_of(output.index)[0] = 1.0;

    for (std::size_t idx = output.index + 1; idx-- > 0;) {
        if (grads[idx].size() == 0 && nodes_[idx].value.size() != 0)
            continue;
        const Node& n = nodes_[idx];
        const Tensor& g = grads[idx];
        switch (n.op) {
        case Op::Leaf:
        case Op::Constant:
            break;
        case Op::Linear: {
            const Tensor& x = nodes_[n.lhs].value;
            const Tensor& w = nodes_[n.rhs].value;
            const std::size_t in = w.cols();
            const std::size_t outd = w.rows();
            const std::size_t batch = x.rows();
            Tensor& gx = grad_of(n.lhs);
            Tensor& gw = grad_of(n.rhs);
            Tensor& gb = grad_of(n.third);
            for (std::size_t r = 0; r < batch; ++r) {
                const double* xr = x.values().data() + r * in;
                const double* gr = g.values().data() + r * outd;
                double* gxr = gx.values().data() + r * in;
                for (std::size_t o = 0; o < outd; ++o) {
                    const double go = gr[o];
                    if (go == 0.0)
                        continue;
                    gb[o] += go;
                    const double* wo = w.values().data() + o * in;
                    double* gwo = gw.values().data() + o * in;
                    for (std::size_t i = 0; i < in; ++i) {
                        gwo[i] += go * xr[i];
                        gxr[i] += go * wo[i];
                    }
                }
            }
            break;
        }
        case Op::Add: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i];
            Tensor& gb = grad_of(n.rhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] += g[i];
            break;
        }
        case Op::Sub: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i];
            Tensor& gb = grad_of(n.rhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] -= g[i];
            break;
        }
        case Op::Mul: {
            const Tensor& a = nodes_[n.lhs].value;
            const Tensor& b = nodes_[n.rhs].value;
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * b[i];
            Tensor& gb = grad_of(n.rhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                gb[i] += g[i] * a[i];
            break;
        }
        case Op::Scale: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * n.p0;
            break;
        }
        case Op::AddScalar:
        case Op::Reshape: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i];
            break;
        }
        case Op::Tanh: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
            break;
        }
        case Op::Exp: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] * n.value[i];
            break;
        }
        case Op::Log: {
            const Tensor& a = nodes_[n.lhs].value;
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += g[i] / a[i];
            break;
        }
        case Op::Square: {
            const Tensor& a = nodes_[n.lhs].value;
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i] += 2.0 * g[i] * a[i];
            break;
        }
        case Op::Sum: {
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] += g[0];
            break;
        }
        case Op::Mean: {
            Tensor& ga = grad_of(n.lhs);
            const double share = g[0] / static_cast<double>(ga.size());
            for (std::size_t i = 0; i < ga.size(); ++i)
                ga[i] += share;
            break;
        }
        case Op::RowSum: {
            Tensor& ga = grad_of(n.lhs);
            const std::size_t cols = ga.cols();
            for (std::size_t r = 0; r < g.size(); ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    ga[r * cols + c] += g[r];
            break;
        }
        case Op::Minimum: {
            const Tensor& a = nodes_[n.lhs].value;
            const Tensor& b = nodes_[n.rhs].value;
            Tensor& ga = grad_of(n.lhs);
            Tensor& gb = grad_of(n.rhs);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (a[i] <= b[i])
                    ga[i] += g[i];
                else
                    gb[i] += g[i];
            }
            break;
        }
        case Op::Clamp: {
            const Tensor& a = nodes_[n.lhs].value;
            Tensor& ga = grad_of(n.lhs);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (a[i] >= n.p0 && a[i] <= n.p1)
                    ga[i] += g[i];
            break;
        }
        case Op::ConcatCols: {
            Tensor& ga = grad_of(n.lhs);
            Tensor& gb = grad_of(n.rhs);
            const std::size_t p = ga.cols();
            const std::size_t q = gb.cols();
            for (std::size_t r = 0; r < ga.rows(); ++r) {
                for (std::size_t c = 0; c < p; ++c)
                    ga[r * p + c] += g[r * (p + q) + c];
                for (std::size_t c = 0; c < q; ++c)
                    gb[r * q + c] += g[r * (p + q) + p + c];
            }
            break;
        }
        case Op::BroadcastRows: {
            Tensor& ga = grad_of(n.lhs);
            const std::size_t cols = ga.size();
            for (std::size_t i = 0; i < g.size(); ++i)
                ga[i % cols] += g[i];
            break;
        }
        }
    }

    std::vector<Tensor> result;
    result.reserve(leaves_.size());
    for (Var l : leaves_) {
        if (l.index <= output.index && grads[l.index].size() == nodes_[l.index].value.size()
            && grads[l.index].same_shape(nodes_[l.index].value))
            result.push_back(grads[l.index]);
        else
            result.emplace_back(nodes_[l.index].value.shape());
    }
    return result;
}

} // namespace morphlearn::ad
