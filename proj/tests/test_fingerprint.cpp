#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "fptab/attacks.hpp"
#include "fptab/fingerprint.hpp"
#include "support/synthetic.hpp"

using namespace fptab;

namespace {

EmbeddingConfig config_for(const Dataset& d, double gamma, std::size_t L, std::size_t k,
                           double phi = 0.75) {
    EmbeddingConfig cfg;
    cfg.gamma = gamma;
    cfg.L = L;
    cfg.k = k;
    cfg.phi = phi;
    cfg.groups = build_groups(compute_correlation_matrix(d), 0.4);
    return cfg;
}

Bits random_bits(std::size_t L, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Bits f(L);
    for (auto& b : f) b = rng() & 1;
    return f;
}

}  // namespace

TEST_CASE("embedding is deterministic") {
    Dataset d = testing::make_synthetic(400, 42);
    auto cfg = config_for(d, 4, 32, 15);
    Bits f = random_bits(32, 1);
    Dataset a = embed(d, "key", f, cfg);
    Dataset b = embed(d, "key", f, cfg);
    CHECK(diff_cells(a, b) == 0);
}

TEST_CASE("huge gamma leaves the data untouched") {
    Dataset d = testing::make_synthetic(300, 7);
    auto cfg = config_for(d, 1e9, 16, 10);
    Dataset fp = embed(d, "key", random_bits(16, 2), cfg);
    CHECK(diff_cells(d, fp) == 0);
    // and detection of the clean copy yields an all-undecided template
    auto res = detect(d, "key", cfg);
    for (auto t : res.tmpl) CHECK(t == kUndecided);
    CHECK(res.mean_redundancy == 0.0);
}

TEST_CASE("selected record count obeys the binomial bound") {
    Dataset d = testing::make_synthetic(4000, 99);
    auto cfg = config_for(d, 8, 32, 15);
    std::size_t selected = 0;
    detail::for_each_mark(d, "count-key", cfg, [&](const detail::MarkSite&) { ++selected; });
    // Binomial(4000, 1/8): mean 500, sd ~ 20.9; allow 5 sigma
    CHECK(double(selected) == Catch::Approx(500.0).margin(105.0));
}

TEST_CASE("mark sites agree between embed and detect passes") {
    Dataset d = testing::make_synthetic(500, 12);
    auto cfg = config_for(d, 4, 32, 15);
    std::vector<detail::MarkSite> a, b;
    detail::for_each_mark(d, "same-key", cfg, [&](const detail::MarkSite& s) { a.push_back(s); });
    Dataset fp = embed(d, "same-key", random_bits(32, 3), cfg);
    // the attacked/suspect pass re-derives the identical sites from the PKs
    detail::for_each_mark(fp, "same-key", cfg, [&](const detail::MarkSite& s) { b.push_back(s); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].row == b[i].row);
        CHECK(a[i].attr_slot == b[i].attr_slot);
        CHECK(a[i].bit_index == b[i].bit_index);
        CHECK(a[i].mask == b[i].mask);
        CHECK(a[i].rng_seed == b[i].rng_seed);
    }
}

TEST_CASE("changed values come from the record's neighbourhood") {
    Dataset d = testing::make_synthetic(600, 21);
    auto cfg = config_for(d, 4, 16, 20);
    Dataset fp = embed(d, "nb-key", random_bits(16, 4), cfg);
    detail::IndexCache cache(d, cfg.groups);
    std::size_t changed = 0;
    for (std::size_t r = 0; r < d.n(); ++r)
        for (std::size_t i = 0; i < d.feature_count(); ++i) {
            if (d.rows[r][i] == fp.rows[r][i]) continue;
            ++changed;
            auto members = detail::neighbourhood_rows(d, cache.get(i), r, cfg.k);
            bool found = false;
            for (std::size_t nb : members)
                if (d.rows[nb][i] == fp.rows[r][i]) found = true;
            CHECK(found);
        }
    CHECK(changed > 0);
}

TEST_CASE("detection recovers the embedded fingerprint") {
    Dataset d = testing::make_synthetic(1200, 33);
    auto cfg = config_for(d, 2, 16, 25);  // mean redundancy ~ 37
    Bits f = random_bits(16, 5);
    Dataset fp = embed(d, "detect-key", f, cfg);
    auto res = detect(fp, "detect-key", cfg);
    REQUIRE(res.tmpl.size() == 16);
    for (std::size_t l = 0; l < 16; ++l) CHECK(res.tmpl[l] == std::int8_t(f[l]));
    CHECK(res.min_redundancy > 0);
}

TEST_CASE("mean redundancy tracks n over L gamma") {
    Dataset d = testing::make_synthetic(3000, 54);
    auto cfg = config_for(d, 4, 32, 15);
    Dataset fp = embed(d, "red-key", random_bits(32, 6), cfg);
    auto res = detect(fp, "red-key", cfg);
    double expect = 3000.0 / (32.0 * 4.0);  // 23.4
    CHECK(res.mean_redundancy == Catch::Approx(expect).epsilon(0.15));
    CHECK(res.mean_redundancy >= double(res.min_redundancy));
}

TEST_CASE("wrong key yields a near-random template") {
    Dataset d = testing::make_synthetic(1200, 3);
    auto cfg = config_for(d, 2, 16, 25);
    Bits f = random_bits(16, 7);
    Dataset fp = embed(d, "right-key", f, cfg);
    auto res = detect(fp, "wrong-key", cfg);
    std::size_t matches = 0, decided = 0;
    for (std::size_t l = 0; l < 16; ++l) {
        if (res.tmpl[l] == kUndecided) continue;
        ++decided;
        if (res.tmpl[l] == std::int8_t(f[l])) ++matches;
    }
    if (decided > 0) CHECK(double(matches) / double(decided) < 0.95);
}

TEST_CASE("vote error rate is low on an unattacked copy") {
    Dataset d = testing::make_synthetic(1000, 64);
    auto cfg = config_for(d, 2, 16, 60, 0.5);
    Bits f = random_bits(16, 8);
    Dataset fp = embed(d, "ver-key", f, cfg);
    double ver = vote_error_rate(fp, "ver-key", f, cfg);
    CHECK(ver >= 0.0);
    CHECK(ver < 0.10);
}

TEST_CASE("majority voting matches a brute-force recount") {
    Dataset d = testing::make_synthetic(800, 17);
    auto cfg = config_for(d, 3, 8, 15);
    Bits f = random_bits(8, 9);
    Dataset fp = embed(d, "vote-key", f, cfg);
    auto res = detect(fp, "vote-key", cfg);
    for (std::size_t l = 0; l < 8; ++l) {
        std::size_t c0 = res.votes.counts[l][0], c1 = res.votes.counts[l][1];
        if (c0 > c1) CHECK(res.tmpl[l] == 0);
        else if (c1 > c0) CHECK(res.tmpl[l] == 1);
        else CHECK(res.tmpl[l] == kUndecided);
    }
    CHECK(res.votes.total() ==
          std::size_t(res.mean_redundancy * double(cfg.L) + 0.5));
}

TEST_CASE("config validation and mismatches") {
    Dataset d = testing::make_synthetic(100, 2);
    auto cfg = config_for(d, 4, 16, 10);
    CHECK_THROWS_AS(embed(d, "k", random_bits(8, 1), cfg), ConfigMismatch);

    auto bad = cfg;
    bad.gamma = 0.5;
    CHECK_THROWS_AS(embed(d, "k", random_bits(16, 1), bad), InvalidParameter);

    auto reordered = cfg;
    std::swap(reordered.groups.attribute_order[0], reordered.groups.attribute_order[1]);
    CHECK_THROWS_AS(embed(d, "k", random_bits(16, 1), reordered), ConfigMismatch);
}

TEST_CASE("config json round trip and stable hash") {
    Dataset d = testing::make_synthetic(50, 1);
    auto cfg = config_for(d, 8, 64, 30, 0.7);
    auto back = EmbeddingConfig::from_json(cfg.to_json());
    CHECK(back.gamma == cfg.gamma);
    CHECK(back.L == cfg.L);
    CHECK(back.k == cfg.k);
    CHECK(back.phi == cfg.phi);
    CHECK(back.groups.groups == cfg.groups.groups);
    CHECK(back.hash() == cfg.hash());
    auto other = cfg;
    other.gamma = 16;
    CHECK(other.hash() != cfg.hash());
}

TEST_CASE("detection survives removed columns without voting on them") {
    Dataset d = testing::make_synthetic(900, 88);
    auto cfg = config_for(d, 2, 16, 20);
    Bits f = random_bits(16, 10);
    Dataset fp = embed(d, "col-key", f, cfg);
    Dataset cut = vertical_subset(fp, 0.3, 5);  // drops 2 of 8 features
    auto res = detect(cut, "col-key", cfg);
    std::size_t correct = 0, decided = 0;
    for (std::size_t l = 0; l < 16; ++l) {
        if (res.tmpl[l] == kUndecided) continue;
        ++decided;
        if (res.tmpl[l] == std::int8_t(f[l])) ++correct;
    }
    REQUIRE(decided > 0);
    CHECK(double(correct) / double(decided) > 0.9);
}

TEST_CASE("influence counts cover selected neighbourhoods") {
    Dataset d = testing::make_synthetic(400, 6);
    auto cfg = config_for(d, 4, 16, 10);
    auto counts = influence_counts(d, "inf-key", cfg);
    REQUIRE(counts.size() == d.n());
    std::size_t total = 0, marks = 0;
    for (std::size_t c : counts) total += c;
    detail::for_each_mark(d, "inf-key", cfg, [&](const detail::MarkSite&) { ++marks; });
    // every mark site contributes at least k member increments
    CHECK(total >= marks * cfg.k);
}
