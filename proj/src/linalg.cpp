#include "embsig/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace embsig {

std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_finite(const Matrix& m, const std::string& where) {
    for (double x : m.data) {
        if (!std::isfinite(x)) {
            throw numeric_error(where + ": non-finite entry in " + shape_string(m) + " result");
        }
    }
}

void require_finite(const Vector& v, const std::string& where) {
    for (double x : v) {
        if (!std::isfinite(x)) throw numeric_error(where + ": non-finite entry in result");
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw data_error("matmul: dimension mismatch " + shape_string(a) + " * " + shape_string(b));
    }
    Matrix c(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[k * b.cols];
            double* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    require_finite(c, "matmul");
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
    return t;
}

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw data_error("dot: length mismatch " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double cosine(const Vector& a, const Vector& b) {
    const double na = norm2(a), nb = norm2(b);
    if (na == 0.0 || nb == 0.0) throw numeric_error("cosine: zero-norm vector");
    return dot(a, b) / (na * nb);
}

Vector softmax(const Vector& v) {
    if (v.empty()) throw data_error("softmax: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) throw numeric_error("softmax: non-finite input");
    Vector out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

Matrix cosine_matrix(const Matrix& m) {
    const std::size_t n = m.cols;
    if (n == 0) throw data_error("cosine_matrix: no columns");
    std::vector<double> norms(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) s += m(i, j) * m(i, j);
        norms[j] = std::sqrt(s);
        if (norms[j] == 0.0) {
            throw numeric_error("cosine_matrix: zero-norm column " + std::to_string(j));
        }
    }
    Matrix c(n, n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        c(a, a) = 1.0;
        for (std::size_t b = a + 1; b < n; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < m.rows; ++i) s += m(i, a) * m(i, b);
            const double v = s / (norms[a] * norms[b]);
            c(a, b) = v;
            c(b, a) = v;
        }
    }
    require_finite(c, "cosine_matrix");
    return c;
}

double pearson(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) {
        throw data_error("pearson: length mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
    }
    if (x.size() < 2) throw data_error("pearson: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0, msqx = 0.0, msqy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
        msqx += x[i] * x[i];
        msqy += y[i] * y[i];
    }
    // Guard against inputs that are constant up to floating-point roundoff:
    // subtracting the mean of identical values can leave ~ulp-sized residue.
    constexpr double kEps = 2.220446049250313e-16;
    const double floor_x = 1024.0 * kEps * kEps * msqx;
    const double floor_y = 1024.0 * kEps * kEps * msqy;
    if (sxx <= floor_x || syy <= floor_y) throw numeric_error("pearson: zero variance input");
    const double r = sxy / std::sqrt(sxx * syy);
    if (!std::isfinite(r)) throw numeric_error("pearson: non-finite result");
    return r;
}

Vector percentile_rank(const Vector& v) {
    const std::size_t n = v.size();
    if (n == 0) throw data_error("percentile_rank: empty input");
    for (double x : v) {
        if (!std::isfinite(x)) throw numeric_error("percentile_rank: non-finite input");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    Vector out(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // 1-based ranks i+1 .. j+1 share the average rank.
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        const double p = (avg_rank - 0.5) / static_cast<double>(n);
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = p;
        i = j + 1;
    }
    return out;
}

Matrix percentile_rank(const Matrix& m) {
    Matrix out(m.rows, m.cols);
    out.data = percentile_rank(m.data);
    return out;
}

EigenResult symmetric_topk_eigen(const Matrix& m, std::size_t k) {
    const std::size_t n = m.rows;
    if (n == 0 || m.cols != n) {
        throw data_error("symmetric_topk_eigen: matrix must be square, got " + shape_string(m));
    }
    if (k > n) {
        throw data_error("symmetric_topk_eigen: k=" + std::to_string(k) + " exceeds order " +
                         std::to_string(n));
    }
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > 1e-9) {
                throw data_error("symmetric_topk_eigen: input not symmetric at (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
        for (std::size_t j = 0; j < n; ++j) max_abs = std::max(max_abs, std::abs(m(i, j)));
    }

    Matrix a = m;
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    // Cyclic Jacobi: rotate away each off-diagonal entry in turn until the
    // whole off-diagonal mass is negligible relative to the input scale.
    const double stop = (max_abs == 0.0) ? 0.0 : 1e-14 * max_abs;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
        if (off <= stop) break;
        if (sweep == 63) throw numeric_error("symmetric_topk_eigen: Jacobi failed to converge");
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= stop) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenResult res;
    res.values.resize(k);
    res.vectors = Matrix(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        res.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = v(i, order[j]);
    }
    require_finite(res.vectors, "symmetric_topk_eigen");
    return res;
}

PcaResult pca_project(const Matrix& points, std::size_t k) {
    const std::size_t d = points.rows, n = points.cols;
    if (n < 2) throw data_error("pca_project: need at least 2 points, got " + std::to_string(n));
    if (k == 0 || k > n) {
        throw data_error("pca_project: k=" + std::to_string(k) + " out of range for " +
                         std::to_string(n) + " points");
    }

    Matrix centered = points;
    for (std::size_t i = 0; i < d; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += centered(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) centered(i, j) -= mean;
    }

    // Dual formulation: eigen-decompose the n x n Gram matrix, then lift the
    // directions back to d dimensions.  Cheap because n (#points) is small.
    Matrix gram(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += centered(i, a) * centered(i, b);
            gram(a, b) = s;
            gram(b, a) = s;
        }
    }
    EigenResult eig = symmetric_topk_eigen(gram, k);

    PcaResult res;
    res.eigenvalues.resize(k);
    res.scores = Matrix(k, n, 0.0);
    res.components = Matrix(d, k, 0.0);
    const double total = [&] {
        double t = 0.0;
        for (std::size_t i = 0; i < n; ++i) t += gram(i, i);
        return t;
    }();
    for (std::size_t j = 0; j < k; ++j) {
        const double lam = std::max(eig.values[j], 0.0);
        res.eigenvalues[j] = lam;
        // Directions with (numerically) zero spread stay zero.
        if (lam <= 1e-12 * std::max(total, 1.0)) continue;
        const double scale = std::sqrt(lam);
        for (std::size_t c = 0; c < n; ++c) res.scores(j, c) = scale * eig.vectors(c, j);
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += centered(i, c) * eig.vectors(c, j);
            res.components(i, j) = s / scale;
        }
    }
    require_finite(res.scores, "pca_project");
    return res;
}

} // namespace embsig
