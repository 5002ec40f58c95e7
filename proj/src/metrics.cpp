#include "embsig/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "embsig/error.hpp"

namespace embsig {

Matrix columns_subset(const Matrix& m, const std::vector<std::size_t>& cols) {
    if (cols.empty()) throw data_error("columns_subset: empty column selection");
    Matrix out(m.rows, cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= m.cols) {
            throw data_error("columns_subset: column " + std::to_string(cols[j]) +
                             " outside matrix " + shape_string(m));
        }
        for (std::size_t r = 0; r < m.rows; ++r) out(r, j) = m(r, cols[j]);
    }
    return out;
}

namespace {

double order_score_impl(const Matrix& vectors, bool circular) {
    const std::size_t n = vectors.cols;
    if (n < 3) throw data_error("order score needs at least 3 columns");
    const Matrix sim = cosine_matrix(vectors);
    Vector cos_vals, dist_vals;
    cos_vals.reserve(n * (n - 1) / 2);
    dist_vals.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t lin = j - i;
            const std::size_t dist = circular ? std::min(lin, n - lin) : lin;
            cos_vals.push_back(sim(i, j));
            dist_vals.push_back(static_cast<double>(dist));
        }
    }
    return pearson(cos_vals, dist_vals);
}

} // namespace

double r_order(const Matrix& vectors) { return order_score_impl(vectors, false); }

double r_order_circular(const Matrix& vectors) { return order_score_impl(vectors, true); }

namespace {

void check_sim_pair(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows != a.cols || b.rows != b.cols || a.rows != b.rows) {
        throw data_error(std::string(who) + ": similarity matrices must be square and equal, got " +
                         shape_string(a) + " and " + shape_string(b));
    }
    if (a.rows < 2) throw data_error(std::string(who) + ": need at least 2 items");
}

} // namespace

double r_cos(const Matrix& sim_a, const Matrix& sim_b) {
    check_sim_pair(sim_a, sim_b, "r_cos");
    Vector xs, ys;
    const std::size_t n = sim_a.rows;
    xs.reserve(n * (n - 1) / 2);
    ys.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            xs.push_back(sim_a(i, j));
            ys.push_back(sim_b(i, j));
        }
    }
    return pearson(xs, ys);
}

double mean_offdiagonal(const Matrix& sim) {
    if (sim.rows != sim.cols || sim.rows < 2) {
        throw data_error("mean_offdiagonal: need a square matrix with at least 2 rows, got " +
                         shape_string(sim));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < sim.rows; ++i) {
        for (std::size_t j = 0; j < sim.cols; ++j) {
            if (i != j) sum += sim(i, j);
        }
    }
    return sum / static_cast<double>(sim.rows * (sim.rows - 1));
}

PerTokenAlignment per_token_alignment(const Matrix& sim_a, const Matrix& sim_b) {
    check_sim_pair(sim_a, sim_b, "per_token_alignment");
    const std::size_t n = sim_a.rows;
    if (n < 3) throw data_error("per_token_alignment: need at least 3 items");
    PerTokenAlignment out;
    out.r_d.resize(n);
    out.mean_cos.resize(n);
    Vector xs(n - 1), ys(n - 1);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t k = 0;
        double mean = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (t == s) continue;
            xs[k] = sim_a(s, t);
            ys[k] = sim_b(s, t);
            mean += sim_a(s, t);
            ++k;
        }
        out.mean_cos[s] = mean / static_cast<double>(n - 1);
        try {
            out.r_d[s] = pearson(xs, ys);
        } catch (const Error&) {
            out.r_d[s] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return out;
}

Vector alignment_decile_curve(const Matrix& sim_probe, const Matrix& sim_ref) {
    check_sim_pair(sim_probe, sim_ref, "alignment_decile_curve");
    const std::size_t n = sim_ref.rows;
    struct Pair {
        double ref, probe;
    };
    std::vector<Pair> pairs;
    pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({sim_ref(i, j), sim_probe(i, j)});
    }
    if (pairs.size() < 10) {
        throw data_error("alignment_decile_curve: need at least 10 pairs, got " +
                         std::to_string(pairs.size()));
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.ref < b.ref;
    });
    Vector curve(10, 0.0);
    const std::size_t m = pairs.size();
    for (std::size_t dec = 0; dec < 10; ++dec) {
        const std::size_t lo = dec * m / 10;
        const std::size_t hi = (dec + 1) * m / 10;
        double sum = 0.0;
        for (std::size_t k = lo; k < hi; ++k) sum += pairs[k].probe;
        curve[dec] = sum / static_cast<double>(hi - lo);
    }
    return curve;
}

std::size_t longest_monotone_subsequence(const Vector& values) {
    const std::size_t n = values.size();
    if (n == 0) return 0;
    std::vector<std::size_t> inc(n, 1), dec(n, 1);
    std::size_t best = 1;
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (values[j] <= values[i]) inc[i] = std::max(inc[i], inc[j] + 1);
            if (values[j] >= values[i]) dec[i] = std::max(dec[i], dec[j] + 1);
        }
        best = std::max({best, inc[i], dec[i]});
    }
    return best;
}

std::vector<StructurePoint> structure_timeline(const std::vector<Snapshot>& snapshots,
                                               const std::vector<std::size_t>& token_ids) {
    if (token_ids.size() < 3) throw data_error("structure_timeline: need at least 3 tokens");
    std::vector<StructurePoint> points;
    points.reserve(snapshots.size());
    for (const Snapshot& snap : snapshots) {
        const Matrix cols = columns_subset(snap.w_e, token_ids);
        StructurePoint p;
        p.epoch = snap.epoch;
        p.step = snap.step;
        p.mean_cos = mean_offdiagonal(cosine_matrix(cols));
        try {
            p.order_score = r_order(cols);
        } catch (const Error&) {
            p.order_score = std::numeric_limits<double>::quiet_NaN();
        }
        points.push_back(p);
    }
    return points;
}

} // namespace embsig
