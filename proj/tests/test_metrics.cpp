#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fptab/attacks.hpp"
#include "fptab/fingerprint.hpp"
#include "fptab/metrics.hpp"
#include "support/synthetic.hpp"

using namespace fptab;

TEST_CASE("identical datasets score zero everywhere") {
    Dataset d = testing::make_synthetic(300, 1);
    for (const auto& a : d.feature_names()) {
        CHECK(hellinger(d, d, a) == Catch::Approx(0.0).margin(1e-6));
        CHECK(kl_divergence(d, d, a) == Catch::Approx(0.0).margin(1e-6));
    }
    CHECK(data_accuracy(d, d) == 1.0);
    for (double c : correlation_change(d, d)) CHECK(c == 0.0);
    auto rep = fidelity_report(d, d);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.hellinger_mean == Catch::Approx(0.0).margin(1e-6));
    CHECK(rep.max_correlation_change == 0.0);
}

TEST_CASE("disjoint categorical supports give hellinger one") {
    Dataset a = testing::make_synthetic(50, 2);
    Dataset b = a;
    for (auto& r : b.rows) r[2] = Cell::category("zzz" + r[2].cat);
    CHECK(hellinger(a, b, "cat_a") == Catch::Approx(1.0));
    // and a large KL driven only by the smoothing floor
    CHECK(kl_divergence(a, b, "cat_a") > 5.0);
}

TEST_CASE("numeric hellinger hand example with two bins occupied") {
    // reference: half the mass in the lowest bin, half in the highest;
    // other: all mass in the lowest bin. BC = sqrt(0.5), H = sqrt(1-sqrt(0.5))
    Dataset a, b;
    a.pk_column = 0;
    a.columns = {{"id", AttrKind::categorical, AttrRole::primary_key, false},
                 {"x", AttrKind::numeric, AttrRole::feature, false}};
    for (int i = 0; i < 10; ++i) {
        a.pk.push_back("p" + std::to_string(i));
        a.rows.push_back({Cell::number(i < 5 ? 0.0 : 100.0)});
    }
    b = a;
    for (auto& r : b.rows) r[0] = Cell::number(0.0);
    double expect = std::sqrt(1.0 - std::sqrt(0.5));
    CHECK(hellinger(a, b, "x") == Catch::Approx(expect));
}

TEST_CASE("kl divergence is non-negative and asymmetric in general") {
    Dataset d = testing::make_synthetic(400, 3);
    Dataset f = flip(d, 0.2, 9);
    for (const auto& a : d.feature_names()) {
        CHECK(kl_divergence(d, f, a) >= 0.0);
        CHECK(hellinger(d, f, a) >= 0.0);
        CHECK(hellinger(d, f, a) <= 1.0);
    }
}

TEST_CASE("data accuracy arithmetic") {
    Dataset d = testing::make_synthetic(100, 4);
    Dataset e = d;
    e.rows[0][0] = Cell::number(-1.0);
    e.rows[5][3] = Cell::category("zz");
    CHECK(data_accuracy(d, e) == Catch::Approx(1.0 - 2.0 / 800.0));
}

TEST_CASE("accuracy respects the marking bound on random configs") {
    Dataset d = testing::make_synthetic(1500, 5);
    std::mt19937_64 rng(6);
    for (int t = 0; t < 4; ++t) {
        EmbeddingConfig cfg;
        cfg.gamma = 2.0 + double(rng() % 6);
        cfg.L = 16;
        cfg.k = 15;
        cfg.phi = 0.75;
        cfg.groups = build_groups(compute_correlation_matrix(d), 0.4);
        Bits f(cfg.L);
        for (auto& bit : f) bit = rng() & 1;
        Dataset fp = embed(d, "acc-key-" + std::to_string(t), f, cfg);
        double nu = double(d.feature_count());
        // at most one cell per selected record can change
        CHECK(data_accuracy(d, fp) >= 1.0 - 1.0 / cfg.gamma);
        CHECK(data_accuracy(d, fp) >= 1.0 - 1.0 / (nu * cfg.gamma) - 0.01);
    }
}

TEST_CASE("correlation change floor avoids division blow-ups") {
    Dataset d = testing::make_synthetic(500, 7);
    Dataset f = flip(d, 0.05, 3);
    auto change = correlation_change(d, f);
    for (double c : change) {
        CHECK(c >= 0.0);
        CHECK(std::isfinite(c));
    }
    // diagonal stays exactly zero: both matrices have unit diagonal
    std::size_t v = d.feature_count();
    for (std::size_t i = 0; i < v; ++i) CHECK(change[i * v + i] == 0.0);
}

TEST_CASE("fidelity report aggregates per-attribute values") {
    Dataset d = testing::make_synthetic(300, 8);
    Dataset f = flip(d, 0.1, 4);
    auto rep = fidelity_report(d, f);
    REQUIRE(rep.attributes.size() == 8);
    double hm = 0, km = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(rep.hellinger_per_attr[i] == Catch::Approx(hellinger(d, f, rep.attributes[i])));
        hm += rep.hellinger_per_attr[i];
        km += rep.kl_per_attr[i];
    }
    CHECK(rep.hellinger_mean == Catch::Approx(hm / 8.0));
    CHECK(rep.kl_mean == Catch::Approx(km / 8.0));
    CHECK(rep.accuracy == Catch::Approx(data_accuracy(d, f)));
    auto j = rep.to_json();
    CHECK(j.at("accuracy").get<double>() == rep.accuracy);
    CHECK(j.at("attributes").size() == 8);
}

TEST_CASE("collusion outcome arithmetic") {
    AccusationReport rep;
    rep.accused = {1, 2, 3, 4};
    auto o = collusion_outcome(rep, {2, 4, 9});
    CHECK(o.has_accusation);
    CHECK(o.precision == Catch::Approx(0.5));
    CHECK(o.far == Catch::Approx(0.5));
    CHECK(o.recall == Catch::Approx(2.0 / 3.0));

    AccusationReport empty;
    auto e = collusion_outcome(empty, {2});
    CHECK_FALSE(e.has_accusation);
    CHECK(std::isnan(e.precision));
    CHECK(std::isnan(e.far));
    CHECK(e.recall == 0.0);

    AccusationReport perfect;
    perfect.accused = {7, 8};
    auto p = collusion_outcome(perfect, {7, 8});
    CHECK(p.precision == 1.0);
    CHECK(p.far == 0.0);
    CHECK(p.recall == 1.0);
}

TEST_CASE("missing attribute raises a schema error") {
    Dataset d = testing::make_synthetic(50, 9);
    Dataset cut = vertical_subset(d, 0.3, 2);
    std::string removed;
    for (const auto& a : d.feature_names())
        if (!cut.feature_index(a)) removed = a;
    REQUIRE_FALSE(removed.empty());
    CHECK_THROWS_AS(hellinger(d, cut, removed), SchemaMismatch);
    CHECK_THROWS_AS(kl_divergence(d, cut, removed), SchemaMismatch);
}
