#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cdp/error.hpp"

namespace cdp {

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

/// Symbol or pixel bits; 1 = black ink, 0 = white paper.
using BitMatrix = Matrix<std::uint8_t>;
/// Intensities in [0,1]; 0 = black, 1 = white.
using ImageMatrix = Matrix<double>;

/// Nearest-neighbour upsampling by an integer factor.
template <typename T>
Matrix<T> upsample_nearest(const Matrix<T>& m, std::size_t k) {
    if (k == 0) throw ParameterError("upsample factor must be >= 1");
    Matrix<T> out(m.rows() * k, m.cols() * k);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = m(r / k, c / k);
    return out;
}

}  // namespace cdp
