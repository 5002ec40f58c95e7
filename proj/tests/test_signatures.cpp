#include <cmath>

#include "doctest.h"
#include "embsig/error.hpp"
#include "embsig/signatures.hpp"
#include "embsig/taskgen.hpp"

using namespace embsig;

namespace {

double l1(const Vector& a, const Vector& b) {
    REQUIRE(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

} // namespace

TEST_CASE("pinned exact values of the default addition task") {
    const TaskSpec add = make_task(TaskKind::Add);
    const Vocabulary vocab = task_vocabulary(add);

    // Rarest label given anchor 11: needs a2=12 or the (11,z) order variant.
    // P(y=123 | 11 in X) = 2/(19*40) * ... enumerated = 1/760.
    const Vector phi_y = analytic_phi_y(add, 11);
    CHECK(phi_y[vocab.to_id(123)] == doctest::Approx(1.0 / 760.0).epsilon(1e-12));
    double total = 0.0;
    for (double v : phi_y) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    // Co-occurrence: the self entry is 1, another anchor appears with
    // probability 2/19 (ordered pairs), and each key with 1/40.
    const Vector phi_x = analytic_phi_X(add, 11);
    CHECK(phi_x[vocab.to_id(11)] == doctest::Approx(1.0));
    CHECK(phi_x[vocab.to_id(12)] == doctest::Approx(2.0 / 19.0).epsilon(1e-12));
    CHECK(phi_x[vocab.to_id(101)] == doctest::Approx(1.0 / 40.0).epsilon(1e-12));
    CHECK(phi_x[vocab.to_id(150)] == 0.0); // pure label token never co-occurs
}

TEST_CASE("bayes consistency between anchor and label views") {
    for (TaskKind kind : {TaskKind::Add, TaskKind::AddSameDomain, TaskKind::ModAdd}) {
        const TaskSpec spec = make_task(kind);
        const Vocabulary vocab = task_vocabulary(spec);
        const Vector member_rate = analytic_membership_rate(spec);
        const Vector label_rate = analytic_label_rate(spec);
        for (int a : {spec.anchors.front(), spec.anchors.back()}) {
            const Vector phi_y = analytic_phi_y(spec, a);
            for (int nu : spec.labels) {
                const Vector varphi = analytic_varphi_X(spec, nu);
                const double lhs = member_rate[vocab.to_id(a)] * phi_y[vocab.to_id(nu)];
                const double rhs = label_rate[vocab.to_id(nu)] * varphi[vocab.to_id(a)];
                CHECK(std::abs(lhs - rhs) <= 1e-14);
            }
        }
    }
}

TEST_CASE("label law of a key token matches the anchor-sum convolution") {
    const TaskSpec add = make_task(TaskKind::Add);
    const Vocabulary vocab = task_vocabulary(add);
    const ConvolutionTable conv = convolution_table(add);
    const Vector phi_y = analytic_phi_y(add, 101); // key token: y = 101 + a1 + a2
    for (const auto& [sum, prob] : conv.sum_aa) {
        CHECK(std::abs(phi_y[vocab.to_id(101 + sum)] - prob) <= 1e-14);
    }
}

TEST_CASE("held-fixed signatures are identical across anchors") {
    // Shared-range addition and modular addition: the label view is uniform
    // for every anchor.
    for (TaskKind kind : {TaskKind::AddSameDomain, TaskKind::ModAdd}) {
        const TaskSpec spec = make_task(kind);
        const double uniform = 1.0 / static_cast<double>(spec.labels.size());
        for (int a : spec.anchors) {
            const Vector phi_y = analytic_phi_y(spec, a);
            for (std::size_t i = 0; i < phi_y.size(); ++i) {
                if (phi_y[i] != 0.0) CHECK(phi_y[i] == doctest::Approx(uniform).epsilon(1e-12));
            }
        }
    }
    // Plain addition: the key block of the co-occurrence view is uniform.
    const TaskSpec add = make_task(TaskKind::Add);
    const Vocabulary vocab = task_vocabulary(add);
    for (int a : add.anchors) {
        const Vector phi_x = analytic_phi_X(add, a);
        for (int z : add.keys) {
            CHECK(phi_x[vocab.to_id(z)] == doctest::Approx(1.0 / 40.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("label-conditioned co-occurrence rows are distributions plus self entry") {
    const TaskSpec mod = make_task(TaskKind::ModAdd);
    const Vocabulary vocab = task_vocabulary(mod);
    const Matrix rows = analytic_phi_X_given_y(mod, 11);
    REQUIRE(rows.rows == vocab.size());
    REQUIRE(rows.cols == vocab.size());
    for (int nu : mod.labels) {
        const std::size_t r = vocab.to_id(nu);
        CHECK(rows(r, vocab.to_id(11)) == doctest::Approx(1.0)); // self entry
        // Key block sums to one: exactly one key per sample.
        double key_mass = 0.0;
        for (int z : mod.keys) key_mass += rows(r, vocab.to_id(z));
        CHECK(key_mass == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("empirical estimators converge to the exact laws") {
    const TaskSpec add = make_task(TaskKind::Add);
    const Dataset small = generate_dataset(add, 2000, 4);
    const Dataset large = generate_dataset(add, 20000, 4);
    const Vector exact = analytic_phi_y(add, 15);
    const double gap_small = l1(empirical_phi_y(small, 15), exact);
    const double gap_large = l1(empirical_phi_y(large, 15), exact);
    CHECK(gap_large < gap_small);
    CHECK(gap_large < 0.15);

    const double cooc_gap = l1(empirical_phi_X(large, 15), analytic_phi_X(add, 15));
    CHECK(cooc_gap < 0.3);
}

TEST_CASE("empirical and analytic signatures reject unsupported tokens") {
    const TaskSpec add = make_task(TaskKind::Add);
    const Dataset ds = generate_dataset(add, 100, 1);
    CHECK_THROWS_AS(empirical_phi_y(ds, 150), Error);     // label-only token
    CHECK_THROWS_AS(empirical_varphi_X(ds, 11), Error);   // anchor is never a label
    CHECK_THROWS_AS(analytic_phi_y(add, 99999), Error);   // unknown token
    CHECK_THROWS_AS(analytic_varphi_X(add, 11), Error);
}

TEST_CASE("corpus signatures normalize bigram counts") {
    BigramCounts counts;
    counts.add(0, 1, 3);
    counts.add(0, 2, 1);
    counts.add(2, 0, 2);
    const Vector phi = corpus_phi_next(counts, 0, 3);
    CHECK(phi[1] == doctest::Approx(0.75));
    CHECK(phi[2] == doctest::Approx(0.25));
    const Vector pre = corpus_varphi_pre(counts, 0, 3);
    CHECK(pre[2] == doctest::Approx(1.0));
    const Vector tilde = tilde_phi(counts, 0, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(tilde[i] == doctest::Approx(phi[i] + pre[i]));

    CHECK_THROWS_AS(corpus_phi_next(counts, 1, 3), Error); // token 1 has no successor
}
