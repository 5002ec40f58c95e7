#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "embsig/error.hpp"

namespace embsig {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.  Everything in the project is f64;
// matrices stay small (a few hundred rows/columns), so no fancy storage.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::initializer_list<double> values)
        : rows(r), cols(c), data(values) {
        if (data.size() != r * c) {
            throw data_error("matrix literal: " + std::to_string(values.size()) +
                             " values for a " + std::to_string(r) + "x" + std::to_string(c) +
                             " matrix");
        }
    }

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
};

std::string shape_string(const Matrix& m);

// Throws numeric_error if any entry is non-finite; `where` names the caller.
void require_finite(const Matrix& m, const std::string& where);
void require_finite(const Vector& v, const std::string& where);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
// Cosine similarity of two vectors; throws on zero norm.
double cosine(const Vector& a, const Vector& b);

// Numerically stable softmax (max subtraction).  Output sums to 1 within 1e-12.
Vector softmax(const Vector& v);

// Pairwise cosine similarity of the *columns* of m.  Exactly symmetric
// (each entry computed once and mirrored) with unit diagonal.  Throws on a
// zero-norm column, naming its index.
Matrix cosine_matrix(const Matrix& m);

// Pearson correlation of two equal-length samples; throws on zero variance.
double pearson(const Vector& x, const Vector& y);

// Fractional percentile ranks (rank - 0.5) / n with average ranks for ties.
// The matrix overload ranks all entries jointly and preserves the shape.
Vector percentile_rank(const Vector& v);
Matrix percentile_rank(const Matrix& m);

struct EigenResult {
    Vector values;  // descending
    Matrix vectors; // orthonormal columns, vectors.col(j) pairs with values[j]
};

// Top-k eigenpairs of a symmetric matrix via the cyclic Jacobi iteration.
// Input must be symmetric within 1e-9; k <= rows.
EigenResult symmetric_topk_eigen(const Matrix& m, std::size_t k);

struct PcaResult {
    Matrix scores;      // k x n: coordinates of each input point (column)
    Vector eigenvalues; // of the centered Gram matrix, descending
    Matrix components;  // d x k: orthonormal directions (zero column if degenerate)
};

// PCA of the columns of `points` (d x n, n >= 2 points), centered, top-k.
PcaResult pca_project(const Matrix& points, std::size_t k);

} // namespace embsig
