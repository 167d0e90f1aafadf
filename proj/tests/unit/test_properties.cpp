#include <doctest.h>

#include <random>

#include "../support.hpp"
#include "fpps/combine.hpp"
#include "fpps/pivotal.hpp"

using namespace fpps;

// Randomised invariants. Each case walks a fixed sequence of random shapes
// from a plain mt19937 so failures reproduce by case index.

namespace {

struct Shape {
    Index m, p, n;
    int releases;
    double alpha;
};

Shape random_shape(std::mt19937& gen) {
    std::uniform_int_distribution<int> m_d(1, 3), extra_d(0, 3), n_d(0, 20), rel_d(1, 5);
    Shape s{};
    s.m = m_d(gen);
    // Pivots on B are defined for p >= m only.
    s.p = s.m + extra_d(gen);
    // Keep the posterior proper: n + alpha - p > 2m and n - p >= m.
    s.n = s.p + 2 * s.m + 1 + n_d(gen);
    s.releases = rel_d(gen);
    s.alpha = std::uniform_real_distribution<double>(0.5, 6.0)(gen);
    return s;
}

MatrixXd random_matrix(Index r, Index c, RngStream& rng) {
    MatrixXd a(r, c);
    rng.fill_normal(a);
    return a;
}

SyntheticRelease random_release(const Shape& s, std::uint64_t seed, DesignPtr design = nullptr) {
    RngStream rng(seed, 7);
    if (!design) design = make_design((random_matrix(s.p, s.n, rng).array() + 1.0).matrix());
    const MatrixXd b = random_matrix(s.p, s.m, rng);
    const SpdMatrix sigma(testing::random_spd(s.m, rng));
    const FitResult f = fit(simulate_original(b, sigma, design, rng));
    SynthesisConfig cfg;
    cfg.m_releases = s.releases;
    cfg.alpha = s.alpha;
    cfg.rng = RngStream(seed, 8);
    return generate(f, design, cfg);
}

SyntheticRelease transform_responses(const SyntheticRelease& rel, const MatrixXd& c) {
    std::vector<MatrixXd> w;
    for (const MatrixXd& wj : rel.w()) w.push_back(c * wj);
    return SyntheticRelease(std::move(w), rel.design_ptr(), rel.method(), rel.alpha(),
                            rel.posterior_draws_used(), rel.seed(), rel.stream_id());
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST_CASE("pivot is invariant under invertible response transforms") {
    std::mt19937 gen(11);
    for (int i = 0; i < 60; ++i) {
        CAPTURE(i);
        const Shape s = random_shape(gen);
        const SyntheticRelease rel = random_release(s, 100 + i);
        RngStream rng(500 + i, 0);
        MatrixXd c = random_matrix(s.m, s.m, rng) + 2.0 * MatrixXd::Identity(s.m, s.m);
        const SyntheticRelease moved = transform_responses(rel, c);
        const MatrixXd hyp = random_matrix(s.p, s.m, rng);
        for (Procedure proc : {Procedure::Proc1, Procedure::Proc2}) {
            PivotSpec spec;
            spec.procedure = proc;
            const double before = pivot_value(combine(rel, proc), hyp, spec);
            const double after = pivot_value(combine(moved, proc), hyp * c.transpose(), spec);
            CHECK(rel_gap(after, before) < 1e-8);

            const ClassicalCriteria a = classical_criteria(combine(rel, proc), hyp);
            const ClassicalCriteria b =
                classical_criteria(combine(moved, proc), hyp * c.transpose());
            CHECK(rel_gap(b.wilks, a.wilks) < 1e-8);
            CHECK(rel_gap(b.pillai, a.pillai) < 1e-8);
            CHECK(rel_gap(b.hotelling_lawley, a.hotelling_lawley) < 1e-8);
            CHECK(rel_gap(b.roy, a.roy) < 1e-8);
        }
    }
}

TEST_CASE("pivot is invariant under reparameterising the regressors") {
    std::mt19937 gen(12);
    for (int i = 0; i < 40; ++i) {
        CAPTURE(i);
        const Shape s = random_shape(gen);
        RngStream rng(600 + i, 0);
        const MatrixXd x = (random_matrix(s.p, s.n, rng).array() + 1.0).matrix();
        const MatrixXd g = random_matrix(s.p, s.p, rng) + 3.0 * MatrixXd::Identity(s.p, s.p);
        const SyntheticRelease rel = random_release(s, 200 + i, make_design(x));
        const SyntheticRelease rel_g(rel.w(), make_design(g * x), rel.method(), rel.alpha(),
                                     rel.posterior_draws_used(), rel.seed(), rel.stream_id());
        // B'X = (G^{-T} B)' G X, so the hypothesis moves to G^{-T} B.
        const MatrixXd hyp = random_matrix(s.p, s.m, rng);
        const MatrixXd hyp_g = g.transpose().fullPivLu().solve(hyp);
        for (Procedure proc : {Procedure::Proc1, Procedure::Proc2}) {
            PivotSpec spec;
            spec.procedure = proc;
            CHECK(rel_gap(pivot_value(combine(rel_g, proc), hyp_g, spec),
                          pivot_value(combine(rel, proc), hyp, spec)) < 1e-7);
        }
    }
}

TEST_CASE("pivot is nonnegative and vanishes only at the estimate") {
    std::mt19937 gen(13);
    for (int i = 0; i < 40; ++i) {
        CAPTURE(i);
        const Shape s = random_shape(gen);
        const SyntheticRelease rel = random_release(s, 300 + i);
        for (Procedure proc : {Procedure::Proc1, Procedure::Proc2}) {
            const CombinedEstimates est = combine(rel, proc);
            PivotSpec spec;
            spec.procedure = proc;
            CHECK(pivot_value(est, est.b_bar, spec) == 0.0);
            RngStream rng(700 + i, 0);
            const MatrixXd hyp = est.b_bar + random_matrix(s.p, s.m, rng);
            const double t = pivot_value(est, hyp, spec);
            CHECK(t > 0.0);
            spec.scaled = true;
            CHECK(rel_gap(pivot_value(est, hyp, spec),
                          t * std::pow(static_cast<double>(est.denom_dof), s.m)) < 1e-10);
        }
    }
}

TEST_CASE("single release makes both procedures agree") {
    std::mt19937 gen(14);
    for (int i = 0; i < 40; ++i) {
        CAPTURE(i);
        Shape s = random_shape(gen);
        s.releases = 1;
        const SyntheticRelease rel = random_release(s, 400 + i);
        const CombinedEstimates a = combine_proc1(rel);
        const CombinedEstimates b = combine_proc2(rel);
        CHECK(testing::rel_diff(a.b_bar, b.b_bar) < 1e-10);
        CHECK(testing::rel_diff(a.s_scale, b.s_scale) < 1e-10);
        CHECK(a.denom_dof == b.denom_dof);
    }
}

TEST_CASE("empirical quantiles and p-values are monotone") {
    std::mt19937 gen(15);
    for (int i = 0; i < 12; ++i) {
        CAPTURE(i);
        const Shape s = random_shape(gen);
        PivotParams params;
        params.releases = s.releases;
        params.n = s.n;
        params.m = s.m;
        params.p = s.p;
        params.k = params.p;
        params.alpha = s.alpha;
        params.procedure = (i % 2 == 0) ? Procedure::Proc1 : Procedure::Proc2;
        const EmpiricalDistribution dist = sample_pivot_null(params, 2000, RngStream(800 + i, 0));
        REQUIRE(dist.n_draws() == 2000);
        CHECK(dist.draws().front() > 0.0);
        double prev_q = 0.0, prev_p = 1.0;
        for (double q = 0.05; q < 1.0; q += 0.05) {
            const double v = dist.quantile(q);
            CHECK(v >= prev_q);
            prev_q = v;
            const double pv = dist.p_value(v);
            CHECK(pv >= 0.0);
            CHECK(pv <= prev_p);
            CHECK(pv >= 1.0 - q - 1e-12);
            prev_p = pv;
        }
    }
}
