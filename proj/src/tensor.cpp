#include "morphlearn/tensor.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morphlearn {

std::size_t shape_volume(const std::vector<std::size_t>& shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill)
{
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data))
{
    if (data_.size() != shape_volume(shape_))
        throw DimensionError("tensor data length " + std::to_string(data_.size())
                             + " does not match shape " + shape_string());
}

Tensor Tensor::scalar(double value) { return Tensor({}, std::vector<double>{value}); }

Tensor Tensor::vector(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill)
{
    return Tensor({rows, cols}, fill);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
{
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const noexcept
{
    if (shape_.size() == 2)
        return shape_[0];
    return 1;
}

std::size_t Tensor::cols() const noexcept
{
    if (shape_.empty())
        return 1;
    return shape_.back();
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double value) noexcept { std::fill(data_.begin(), data_.end(), value); }

std::string Tensor::shape_string() const
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i)
            s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

} // namespace morphlearn
