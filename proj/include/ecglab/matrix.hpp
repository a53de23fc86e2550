#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ecglab {

// Dense row-major matrix of doubles. Shapes here stay small — batches of a
// few hundred rows by ~100 classes — so a flat vector is all that is needed.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), v(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// N × C label matrix over the alphabet {-1, 0, 1}:
// -1 not tested, 0 tested normal, 1 tested abnormal.
struct LabelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int8_t> v;

    LabelMatrix() = default;
    LabelMatrix(std::size_t r, std::size_t c, std::int8_t fill = -1)
        : rows(r), cols(c), v(r * c, fill) {}

    std::int8_t& at(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    std::int8_t at(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

} // namespace ecglab
