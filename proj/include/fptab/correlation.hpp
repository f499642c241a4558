#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "fptab/dataset.hpp"
#include "fptab/errors.hpp"
#include "json.hpp"

namespace fptab {

enum class AssocMetric { pearson, cramers_v, eta_squared };

/// Sample Pearson r over aligned pairs.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("pearson: unequal lengths");
    std::size_t n = x.size();
    if (n < 2) throw DegenerateColumn("pearson: fewer than 2 pairs");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateColumn("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

/// Cramer's V from the contingency table (no bias correction).
inline double cramers_v(const std::vector<std::string>& x,
                        const std::vector<std::string>& y) {
    if (x.size() != y.size()) throw LengthMismatch("cramers_v: unequal lengths");
    std::size_t n = x.size();
    if (n == 0) throw EmptyColumn("cramers_v: empty columns");
    std::map<std::string, std::size_t> xi, yi;
    for (const auto& v : x) xi.emplace(v, xi.size());
    for (const auto& v : y) yi.emplace(v, yi.size());
    std::size_t R = xi.size(), C = yi.size();
    if (R < 2 || C < 2) return 0.0;  // no variation => no association
    std::vector<double> table(R * C, 0.0), rsum(R, 0.0), csum(C, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = xi[x[i]], c = yi[y[i]];
        table[r * C + c] += 1.0;
        rsum[r] += 1.0;
        csum[c] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            double e = rsum[r] * csum[c] / static_cast<double>(n);
            if (e > 0) {
                double d = table[r * C + c] - e;
                chi2 += d * d / e;
            }
        }
    double denom = static_cast<double>(n) * static_cast<double>(std::min(R, C) - 1);
    return std::sqrt(chi2 / denom);
}

/// Eta-squared: between-group sum of squares over total sum of squares.
inline double eta_squared(const std::vector<std::string>& cat,
                          const std::vector<double>& num) {
    if (cat.size() != num.size()) throw LengthMismatch("eta_squared: unequal lengths");
    std::size_t n = cat.size();
    if (n == 0) throw EmptyColumn("eta_squared: empty columns");
    double mean = std::accumulate(num.begin(), num.end(), 0.0) / static_cast<double>(n);
    double sst = 0.0;
    for (double v : num) sst += (v - mean) * (v - mean);
    if (sst == 0.0) throw DegenerateColumn("eta_squared: constant numeric column");
    std::unordered_map<std::string, std::pair<double, std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) {
        auto& g = groups[cat[i]];
        g.first += num[i];
        g.second += 1;
    }
    double ssb = 0.0;
    for (const auto& [tok, g] : groups) {
        double gm = g.first / static_cast<double>(g.second);
        ssb += static_cast<double>(g.second) * (gm - mean) * (gm - mean);
    }
    return ssb / sst;
}

struct CorrelationMatrix {
    std::vector<std::string> attributes;  // feature attributes, dataset order
    std::vector<double> coeff;            // v x v, row-major, diagonal 1
    std::vector<AssocMetric> metric;

    double at(std::size_t i, std::size_t j) const { return coeff[i * attributes.size() + j]; }
};

/// Pairwise association matrix with type-appropriate metrics. Missing pairs
/// are dropped listwise; zero-variation columns score 0 against everything.
inline CorrelationMatrix compute_correlation_matrix(const Dataset& d) {
    std::size_t v = d.feature_count();
    CorrelationMatrix m;
    m.attributes = d.feature_names();
    m.coeff.assign(v * v, 0.0);
    m.metric.assign(v * v, AssocMetric::pearson);
    for (std::size_t i = 0; i < v; ++i) m.coeff[i * v + i] = 1.0;

    for (std::size_t i = 0; i < v; ++i) {
        for (std::size_t j = i + 1; j < v; ++j) {
            bool ni = d.feature(i).kind == AttrKind::numeric;
            bool nj = d.feature(j).kind == AttrKind::numeric;
            double c = 0.0;
            AssocMetric tag;
            try {
                if (ni && nj) {
                    tag = AssocMetric::pearson;
                    std::vector<double> x, y;
                    for (std::size_t r = 0; r < d.n(); ++r) {
                        const Cell &a = d.rows[r][i], &b = d.rows[r][j];
                        if (a.missing() || b.missing()) continue;
                        x.push_back(a.num);
                        y.push_back(b.num);
                    }
                    c = pearson(x, y);
                } else if (!ni && !nj) {
                    tag = AssocMetric::cramers_v;
                    std::vector<std::string> x, y;
                    for (std::size_t r = 0; r < d.n(); ++r) {
                        x.push_back(d.rows[r][i].cat);
                        y.push_back(d.rows[r][j].cat);
                    }
                    c = cramers_v(x, y);
                } else {
                    tag = AssocMetric::eta_squared;
                    std::size_t ci = ni ? j : i, vi = ni ? i : j;
                    std::vector<std::string> cat;
                    std::vector<double> num;
                    for (std::size_t r = 0; r < d.n(); ++r) {
                        const Cell& nc = d.rows[r][vi];
                        if (nc.missing()) continue;
                        cat.push_back(d.rows[r][ci].cat);
                        num.push_back(nc.num);
                    }
                    c = eta_squared(cat, num);
                }
            } catch (const DegenerateColumn&) {
                c = 0.0;
                tag = ni && nj ? AssocMetric::pearson
                               : (!ni && !nj ? AssocMetric::cramers_v : AssocMetric::eta_squared);
            }
            m.coeff[i * v + j] = m.coeff[j * v + i] = c;
            m.metric[i * v + j] = m.metric[j * v + i] = tag;
        }
    }
    return m;
}

/// Partition of the feature attributes into transitively correlated groups:
/// connected components of the graph with edges |corr| > tau_c.
struct CorrelatedGroups {
    double tau_c = 0.4;
    std::vector<std::string> attribute_order;        // all features, dataset order
    std::vector<std::vector<std::string>> groups;    // disjoint, union = all

    std::vector<std::string> group_of(const std::string& attr) const {
        for (const auto& g : groups)
            for (const auto& a : g)
                if (a == attr) return g;
        return {attr};
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"tau_c", tau_c}, {"attributes", attribute_order}, {"groups", groups}};
    }

    static CorrelatedGroups from_json(const nlohmann::json& j) {
        CorrelatedGroups g;
        g.tau_c = j.at("tau_c").get<double>();
        g.groups = j.at("groups").get<std::vector<std::vector<std::string>>>();
        if (j.contains("attributes")) {
            g.attribute_order = j.at("attributes").get<std::vector<std::string>>();
        } else {
            for (const auto& grp : g.groups)
                g.attribute_order.insert(g.attribute_order.end(), grp.begin(), grp.end());
        }
        return g;
    }
};

inline CorrelatedGroups build_groups(const CorrelationMatrix& m, double tau_c) {
    std::size_t v = m.attributes.size();
    std::vector<std::size_t> parent(v);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t i = 0; i < v; ++i)
        for (std::size_t j = i + 1; j < v; ++j)
            if (std::abs(m.at(i, j)) > tau_c) parent[find(i)] = find(j);

    std::map<std::size_t, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < v; ++i) comps[find(i)].push_back(m.attributes[i]);

    CorrelatedGroups g;
    g.tau_c = tau_c;
    g.attribute_order = m.attributes;
    for (auto& [root, members] : comps) g.groups.push_back(std::move(members));
    return g;
}

}  // namespace fptab
