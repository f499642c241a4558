#pragma once

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "fptab/codes.hpp"
#include "fptab/correlation.hpp"
#include "fptab/dataset.hpp"
#include "fptab/density.hpp"
#include "fptab/errors.hpp"
#include "fptab/keyed_stream.hpp"
#include "fptab/neighbourhood.hpp"
#include "json.hpp"

namespace fptab {

struct EmbeddingConfig {
    double gamma = 32.0;  // embedding ratio is 1/gamma
    std::size_t L = 128;
    std::size_t k = 30;   // minimum neighbourhood size
    double phi = 0.75;
    CorrelatedGroups groups;

    void validate() const {
        if (gamma < 1.0) throw InvalidParameter("gamma must be >= 1");
        if (L < 1) throw InvalidParameter("L must be >= 1");
        if (k < 1) throw InvalidParameter("k must be >= 1");
        if (phi <= 0.0 || phi >= 1.0) throw InvalidParameter("phi must be in (0,1)");
        if (groups.attribute_order.empty())
            throw ConfigMismatch("config carries no attribute order");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"gamma", gamma}, {"L", L}, {"k", k}, {"phi", phi},
                              {"groups", groups.to_json()}};
    }

    static EmbeddingConfig from_json(const nlohmann::json& j) {
        EmbeddingConfig c;
        c.gamma = j.at("gamma").get<double>();
        c.L = j.at("L").get<std::size_t>();
        c.k = j.at("k").get<std::size_t>();
        c.phi = j.at("phi").get<double>();
        c.groups = CorrelatedGroups::from_json(j.at("groups"));
        return c;
    }

    /// Stable digest of the full config; manifests record it so detection can
    /// refuse mismatched parameters early.
    std::string hash() const {
        Digest d = sha256(to_json().dump());
        static const char* hex = "0123456789abcdef";
        std::string out;
        for (int i = 0; i < 16; ++i) {
            out.push_back(hex[d[i] >> 4]);
            out.push_back(hex[d[i] & 0xF]);
        }
        return out;
    }
};

struct VoteTable {
    std::vector<std::array<std::size_t, 2>> counts;

    explicit VoteTable(std::size_t L = 0) : counts(L, {0, 0}) {}

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& c : counts) t += c[0] + c[1];
        return t;
    }
};

struct DetectionResult {
    Template tmpl;
    VoteTable votes;
    double mean_redundancy = 0.0;
    std::size_t min_redundancy = 0;

    nlohmann::json to_json() const {
        std::vector<std::array<std::size_t, 2>> v(votes.counts.begin(), votes.counts.end());
        return nlohmann::json{{"template", template_to_string(tmpl)},
                              {"votes", v},
                              {"mean_redundancy", mean_redundancy},
                              {"min_redundancy", min_redundancy}};
    }
};

namespace detail {

/// Query attributes for a target: its correlated group minus itself,
/// restricted to attributes present in `d`. Singleton groups (or groups whose
/// mates were all removed) fall back to all other features.
inline std::vector<std::size_t> query_attrs_for(const Dataset& d,
                                                const CorrelatedGroups& g,
                                                const std::string& target) {
    std::vector<std::size_t> out;
    for (const auto& a : g.group_of(target)) {
        if (a == target) continue;
        if (auto i = d.feature_index(a)) out.push_back(*i);
    }
    if (out.empty()) {
        for (std::size_t i = 0; i < d.feature_count(); ++i)
            if (d.feature(i).name != target) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// One lazily built index per target attribute. A null entry means no query
/// attributes exist; the neighbourhood then degenerates to the whole table.
class IndexCache {
public:
    IndexCache(const Dataset& d, const CorrelatedGroups& g) : d_(d), g_(g) {}

    const NeighbourIndex* get(std::size_t target_feature) {
        auto it = cache_.find(target_feature);
        if (it != cache_.end()) return it->second.get();
        const std::string& name = d_.feature(target_feature).name;
        auto attrs = query_attrs_for(d_, g_, name);
        std::unique_ptr<NeighbourIndex> idx;
        if (!attrs.empty()) {
            try {
                idx = std::make_unique<NeighbourIndex>(d_, std::move(attrs));
            } catch (const EmptyIndex&) {
                idx = nullptr;
            }
        }
        auto* raw = idx.get();
        cache_.emplace(target_feature, std::move(idx));
        return raw;
    }

private:
    const Dataset& d_;
    const CorrelatedGroups& g_;
    std::unordered_map<std::size_t, std::unique_ptr<NeighbourIndex>> cache_;
};

struct MarkSite {
    std::size_t row;
    std::size_t attr_slot;   // index into cfg.groups.attribute_order
    std::size_t bit_index;
    int mask;
    std::uint64_t rng_seed;  // s4, seeds the sampling rng
};

/// Drives the per-record keyed stream and yields every selected mark site.
template <class F>
void for_each_mark(const Dataset& d, std::string_view key, const EmbeddingConfig& cfg,
                   F&& f) {
    std::size_t v = cfg.groups.attribute_order.size();
    for (std::size_t r = 0; r < d.n(); ++r) {
        RecordStream s = derive_stream(key, d.pk[r]);
        if (!is_selected(s.output(0), cfg.gamma)) continue;
        MarkSite site;
        site.row = r;
        site.attr_slot = s.output(1) % v;
        site.bit_index = s.output(2) % cfg.L;
        site.mask = mask_bit(s.output(3));
        site.rng_seed = s.output(4);
        f(site);
    }
}

inline std::vector<std::size_t> neighbourhood_rows(const Dataset& d,
                                                   const NeighbourIndex* idx,
                                                   std::size_t row, std::size_t k) {
    if (idx) return idx->select_neighbours(d.rows[row], k).members;
    std::vector<std::size_t> all(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) all[i] = i;
    return all;
}

}  // namespace detail

/// Embeds the fingerprint into a copy of `data`. Neighbourhoods, density
/// partitions, and scaling statistics are all computed on the original data.
inline Dataset embed(const Dataset& data, std::string_view key, const Bits& fingerprint,
                     const EmbeddingConfig& cfg) {
    cfg.validate();
    if (fingerprint.size() != cfg.L) throw ConfigMismatch("fingerprint length != L");
    if (cfg.groups.attribute_order != data.feature_names())
        throw ConfigMismatch("config attribute order does not match dataset");

    Dataset out = data;
    detail::IndexCache cache(data, cfg.groups);

    detail::for_each_mark(data, key, cfg, [&](const detail::MarkSite& site) {
        std::size_t i = site.attr_slot;  // attribute order == dataset feature order here
        const Cell& cell = data.rows[site.row][i];
        if (cell.missing()) return;  // missing numeric cells are never markable

        int m = site.mask ^ static_cast<int>(fingerprint[site.bit_index]);
        auto members = detail::neighbourhood_rows(data, cache.get(i), site.row, cfg.k);
        std::mt19937_64 rng(site.rng_seed);

        if (data.feature(i).kind == AttrKind::numeric) {
            std::vector<double> tv;
            for (std::size_t nb : members) {
                const Cell& c = data.rows[nb][i];
                if (!c.missing()) tv.push_back(c.num);
            }
            auto part = partition_continuous(tv, cfg.phi);
            if (!part) return;  // uniform neighbourhood: skip
            out.rows[site.row][i] = Cell::number(sample_from(*part, m, rng));
        } else {
            std::vector<std::string> tv;
            for (std::size_t nb : members) tv.push_back(data.rows[nb][i].cat);
            auto part = partition_categorical(tv, cfg.phi);
            if (!part) return;
            out.rows[site.row][i] = Cell::category(sample_from(*part, m, rng));
        }
    });
    return out;
}

/// Blind detection: rebuilds partitions from the suspect copy, classifies the
/// observed values, and resolves the template by majority voting. Zero-vote
/// and tied positions stay undecided.
inline DetectionResult detect(const Dataset& suspect, std::string_view key,
                              const EmbeddingConfig& cfg) {
    cfg.validate();
    DetectionResult res;
    res.votes = VoteTable(cfg.L);
    detail::IndexCache cache(suspect, cfg.groups);

    // survived attribute slots: the attacked copy may lack columns
    std::vector<std::optional<std::size_t>> slot_to_col(cfg.groups.attribute_order.size());
    for (std::size_t s = 0; s < cfg.groups.attribute_order.size(); ++s)
        slot_to_col[s] = suspect.feature_index(cfg.groups.attribute_order[s]);

    detail::for_each_mark(suspect, key, cfg, [&](const detail::MarkSite& site) {
        auto col = slot_to_col[site.attr_slot];
        if (!col) return;  // attribute removed: no vote
        std::size_t i = *col;
        const Cell& cell = suspect.rows[site.row][i];
        if (cell.missing()) return;

        auto members = detail::neighbourhood_rows(suspect, cache.get(i), site.row, cfg.k);
        int m;
        if (suspect.feature(i).kind == AttrKind::numeric) {
            std::vector<double> tv;
            for (std::size_t nb : members) {
                const Cell& c = suspect.rows[nb][i];
                if (!c.missing()) tv.push_back(c.num);
            }
            auto part = partition_continuous(tv, cfg.phi);
            if (!part) return;  // appears uniform: no vote
            m = part->classify(cell.num);
        } else {
            std::vector<std::string> tv;
            for (std::size_t nb : members) tv.push_back(suspect.rows[nb][i].cat);
            auto part = partition_categorical(tv, cfg.phi);
            if (!part) return;
            m = part->classify(cell.cat);
        }
        int f = m ^ site.mask;
        ++res.votes.counts[site.bit_index][static_cast<std::size_t>(f)];
    });

    res.tmpl.assign(cfg.L, kUndecided);
    std::size_t total = 0, min_w = SIZE_MAX;
    for (std::size_t l = 0; l < cfg.L; ++l) {
        std::size_t c0 = res.votes.counts[l][0], c1 = res.votes.counts[l][1];
        if (c0 > c1) res.tmpl[l] = 0;
        else if (c1 > c0) res.tmpl[l] = 1;
        total += c0 + c1;
        min_w = std::min(min_w, c0 + c1);
    }
    res.mean_redundancy = static_cast<double>(total) / static_cast<double>(cfg.L);
    res.min_redundancy = cfg.L ? (min_w == SIZE_MAX ? 0 : min_w) : 0;
    return res;
}

/// Fraction of individual detection votes that disagree with the embedded
/// fingerprint bit at their position.
inline double vote_error_rate(const Dataset& fingerprinted, std::string_view key,
                              const Bits& fingerprint, const EmbeddingConfig& cfg) {
    if (fingerprint.size() != cfg.L) throw ConfigMismatch("fingerprint length != L");
    DetectionResult res = detect(fingerprinted, key, cfg);
    std::size_t wrong = 0, total = 0;
    for (std::size_t l = 0; l < cfg.L; ++l) {
        wrong += res.votes.counts[l][fingerprint[l] ? 0 : 1];
        total += res.votes.counts[l][0] + res.votes.counts[l][1];
    }
    return total ? static_cast<double>(wrong) / static_cast<double>(total) : 0.0;
}

/// How often each record appears across the neighbourhoods of all mark sites;
/// the cluster-flipping attack ranks records by these counts.
inline std::vector<std::size_t> influence_counts(const Dataset& data, std::string_view key,
                                                 const EmbeddingConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> counts(data.n(), 0);
    detail::IndexCache cache(data, cfg.groups);
    std::vector<std::optional<std::size_t>> slot_to_col(cfg.groups.attribute_order.size());
    for (std::size_t s = 0; s < cfg.groups.attribute_order.size(); ++s)
        slot_to_col[s] = data.feature_index(cfg.groups.attribute_order[s]);

    detail::for_each_mark(data, key, cfg, [&](const detail::MarkSite& site) {
        auto col = slot_to_col[site.attr_slot];
        if (!col) return;
        const Cell& cell = data.rows[site.row][*col];
        if (cell.missing()) return;
        for (std::size_t nb : detail::neighbourhood_rows(data, cache.get(*col), site.row, cfg.k))
            ++counts[nb];
    });
    return counts;
}

}  // namespace fptab
