#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fptab/dataset.hpp"
#include "fptab/errors.hpp"
#include "fptab/fingerprint.hpp"

namespace fptab {

enum class CollusionStrategy { average, substitute, substitute_flip };

namespace detail {

/// Observed non-missing domain of a feature column, deterministic order.
inline std::vector<Cell> attribute_domain(const Dataset& d, std::size_t feature) {
    if (d.feature(feature).kind == AttrKind::numeric) {
        std::set<double> vals;
        for (const auto& r : d.rows)
            if (!r[feature].missing()) vals.insert(r[feature].num);
        std::vector<Cell> out;
        for (double v : vals) out.push_back(Cell::number(v));
        return out;
    }
    std::set<std::string> vals;
    for (const auto& r : d.rows) vals.insert(r[feature].cat);
    std::vector<Cell> out;
    for (const auto& v : vals) out.push_back(Cell::category(v));
    return out;
}

/// Flip one cell to a uniformly chosen different domain value. Returns false
/// if the cell is missing or the attribute has fewer than two domain values.
inline bool flip_cell(Dataset& d, std::size_t row, std::size_t feature,
                      const std::vector<Cell>& domain, std::mt19937_64& rng) {
    Cell& cell = d.rows[row][feature];
    if (cell.missing() || domain.size() < 2) return false;
    std::uniform_int_distribution<std::size_t> pick(0, domain.size() - 2);
    std::size_t j = pick(rng);
    // skip the current value
    std::size_t cur = domain.size();
    for (std::size_t i = 0; i < domain.size(); ++i)
        if (domain[i] == cell) { cur = i; break; }
    if (cur != domain.size() && j >= cur) ++j;
    cell = domain[j];
    return true;
}

}  // namespace detail

/// Removes floor(strength*n) uniformly chosen records; survivor order kept.
inline Dataset horizontal_subset(const Dataset& d, double strength, std::uint64_t seed) {
    if (strength < 0.0 || strength > 1.0) throw InvalidParameter("strength must be in [0,1]");
    std::size_t remove = static_cast<std::size_t>(strength * static_cast<double>(d.n()));
    if (remove >= d.n() && d.n() > 0) throw EmptyResult("attack would remove every record");
    std::vector<std::size_t> idx(d.n());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<bool> removed(d.n(), false);
    for (std::size_t i = 0; i < remove; ++i) removed[idx[i]] = true;
    Dataset out;
    out.columns = d.columns;
    out.pk_column = d.pk_column;
    for (std::size_t r = 0; r < d.n(); ++r) {
        if (removed[r]) continue;
        out.pk.push_back(d.pk[r]);
        out.rows.push_back(d.rows[r]);
    }
    return out;
}

/// Drops floor(strength*v) uniformly chosen feature columns; the primary key
/// always survives.
inline Dataset vertical_subset(const Dataset& d, double strength, std::uint64_t seed) {
    if (strength < 0.0 || strength > 1.0) throw InvalidParameter("strength must be in [0,1]");
    std::size_t v = d.feature_count();
    std::size_t remove = static_cast<std::size_t>(strength * static_cast<double>(v));
    if (remove >= v && v > 0) throw EmptyResult("attack would remove every feature column");
    std::vector<std::size_t> idx(v);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<bool> removed(v, false);
    for (std::size_t i = 0; i < remove; ++i) removed[idx[i]] = true;

    Dataset out;
    out.pk.assign(d.pk.begin(), d.pk.end());
    std::size_t f = 0;
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < d.columns.size(); ++j) {
        if (j == d.pk_column) {
            out.pk_column = out.columns.size();
            out.columns.push_back(d.columns[j]);
            continue;
        }
        if (!removed[f]) {
            out.columns.push_back(d.columns[j]);
            kept.push_back(f);
        }
        ++f;
    }
    out.rows.reserve(d.n());
    for (const auto& r : d.rows) {
        std::vector<Cell> row;
        row.reserve(kept.size());
        for (std::size_t i : kept) row.push_back(r[i]);
        out.rows.push_back(std::move(row));
    }
    return out;
}

/// Replaces floor(strength*n*v) uniformly chosen feature cells by a different
/// value from the attribute's observed domain. Missing and single-valued
/// cells are skipped and the flip is re-drawn elsewhere.
inline Dataset flip(const Dataset& d, double strength, std::uint64_t seed) {
    if (strength < 0.0 || strength > 1.0) throw InvalidParameter("strength must be in [0,1]");
    std::size_t v = d.feature_count();
    std::size_t budget = static_cast<std::size_t>(
        strength * static_cast<double>(d.n()) * static_cast<double>(v));
    Dataset out = d;
    std::vector<std::vector<Cell>> domains(v);
    for (std::size_t i = 0; i < v; ++i) domains[i] = detail::attribute_domain(d, i);

    std::vector<std::size_t> cells(d.n() * v);
    std::iota(cells.begin(), cells.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(cells.begin(), cells.end(), rng);
    std::size_t flipped = 0;
    for (std::size_t c : cells) {
        if (flipped >= budget) break;
        std::size_t row = c / v, col = c % v;
        if (detail::flip_cell(out, row, col, domains[col], rng)) ++flipped;
    }
    return out;
}

/// White-box attack: ranks records by how often they appear in the attacker's
/// proxy-embedding neighbourhoods, then flips only within the top
/// influence_fraction records. The flip budget matches the plain flip attack.
inline Dataset cluster_flip(const Dataset& d, std::string_view attacker_key,
                            const EmbeddingConfig& guess_cfg, double influence_fraction,
                            double flip_strength, std::uint64_t seed) {
    if (influence_fraction <= 0.0 || influence_fraction > 1.0)
        throw InvalidParameter("influence_fraction must be in (0,1]");
    auto counts = influence_counts(d, attacker_key, guess_cfg);
    std::vector<std::size_t> order(d.n());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
    std::size_t top = std::max<std::size_t>(
        1, static_cast<std::size_t>(influence_fraction * static_cast<double>(d.n())));
    order.resize(std::min(top, order.size()));

    std::size_t v = d.feature_count();
    std::size_t budget = static_cast<std::size_t>(
        flip_strength * static_cast<double>(d.n()) * static_cast<double>(v));
    Dataset out = d;
    std::vector<std::vector<Cell>> domains(v);
    for (std::size_t i = 0; i < v; ++i) domains[i] = detail::attribute_domain(d, i);

    std::vector<std::size_t> cells;
    cells.reserve(order.size() * v);
    for (std::size_t r : order)
        for (std::size_t i = 0; i < v; ++i) cells.push_back(r * v + i);
    std::mt19937_64 rng(seed);
    std::shuffle(cells.begin(), cells.end(), rng);
    std::size_t flipped = 0;
    for (std::size_t c : cells) {
        if (flipped >= budget) break;
        if (detail::flip_cell(out, c / v, c % v, domains[c % v], rng)) ++flipped;
    }
    return out;
}

/// Merges c >= 2 aligned fingerprinted copies. average: numeric mean,
/// categorical majority with seeded tie-break. substitute: agreeing cells
/// kept; disagreeing cells replaced by a domain value no colluder holds when
/// one exists, else a random colluder's value. substitute_flip additionally
/// flips flip_fraction of the agreeing cells.
inline Dataset collude(const std::vector<Dataset>& copies, CollusionStrategy strategy,
                       double flip_fraction, std::uint64_t seed) {
    if (copies.size() < 2) throw InvalidParameter("collusion needs at least 2 copies");
    const Dataset& first = copies.front();
    std::vector<std::unordered_map<std::string, std::size_t>> maps;
    for (std::size_t c = 1; c < copies.size(); ++c) {
        if (copies[c].columns != first.columns || copies[c].n() != first.n())
            throw SchemaMismatch("colluding copies are not aligned");
        maps.push_back(copies[c].pk_to_row());
    }
    std::size_t v = first.feature_count();
    std::mt19937_64 rng(seed);
    Dataset out = first;
    std::vector<std::vector<Cell>> domains(v);
    for (std::size_t i = 0; i < v; ++i) domains[i] = detail::attribute_domain(first, i);

    std::vector<std::pair<std::size_t, std::size_t>> agreeing;
    for (std::size_t r = 0; r < first.n(); ++r) {
        std::vector<std::size_t> rowidx{r};
        for (auto& m : maps) {
            auto it = m.find(first.pk[r]);
            if (it == m.end()) throw SchemaMismatch("PK sets differ: " + first.pk[r]);
            rowidx.push_back(it->second);
        }
        for (std::size_t i = 0; i < v; ++i) {
            std::vector<const Cell*> vals;
            vals.reserve(copies.size());
            for (std::size_t c = 0; c < copies.size(); ++c)
                vals.push_back(&copies[c].rows[rowidx[c]][i]);
            bool agree = true;
            for (std::size_t c = 1; c < vals.size(); ++c)
                if (!(*vals[c] == *vals[0])) agree = false;

            if (agree) {
                out.rows[r][i] = *vals[0];
                agreeing.emplace_back(r, i);
                continue;
            }

            if (strategy == CollusionStrategy::average) {
                if (first.feature(i).kind == AttrKind::numeric) {
                    double s = 0.0;
                    std::size_t m = 0;
                    for (const Cell* c : vals)
                        if (!c->missing()) { s += c->num; ++m; }
                    out.rows[r][i] = m ? Cell::number(s / static_cast<double>(m))
                                       : Cell::make_missing();
                } else {
                    std::map<std::string, std::size_t> votes;
                    for (const Cell* c : vals) ++votes[c->cat];
                    std::size_t best = 0;
                    for (const auto& [tok, n] : votes) best = std::max(best, n);
                    std::vector<std::string> top;
                    for (const auto& [tok, n] : votes)
                        if (n == best) top.push_back(tok);
                    std::uniform_int_distribution<std::size_t> pick(0, top.size() - 1);
                    out.rows[r][i] = Cell::category(top[pick(rng)]);
                }
            } else {
                // substitution: prefer a domain value held by no colluder
                std::vector<Cell> candidates;
                for (const Cell& dv : domains[i]) {
                    bool held = false;
                    for (const Cell* c : vals)
                        if (*c == dv) { held = true; break; }
                    if (!held) candidates.push_back(dv);
                }
                if (!candidates.empty()) {
                    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
                    out.rows[r][i] = candidates[pick(rng)];
                } else {
                    std::uniform_int_distribution<std::size_t> pick(0, vals.size() - 1);
                    out.rows[r][i] = *vals[pick(rng)];
                }
            }
        }
    }

    if (strategy == CollusionStrategy::substitute_flip && flip_fraction > 0.0) {
        std::shuffle(agreeing.begin(), agreeing.end(), rng);
        std::size_t budget = static_cast<std::size_t>(
            flip_fraction * static_cast<double>(agreeing.size()));
        std::size_t flipped = 0;
        for (const auto& [r, i] : agreeing) {
            if (flipped >= budget) break;
            if (detail::flip_cell(out, r, i, domains[i], rng)) ++flipped;
        }
    }
    return out;
}

}  // namespace fptab
