#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fptab/codes.hpp"
#include "fptab/correlation.hpp"
#include "fptab/dataset.hpp"
#include "fptab/errors.hpp"
#include "json.hpp"

namespace fptab {

inline constexpr int kNumericBins = 20;
inline constexpr double kKlSmoothing = 1e-9;
inline constexpr double kCorrChangeFloor = 1e-3;

namespace detail {

/// Normalised histogram over kNumericBins equal-width bins spanning the
/// reference range; out-of-range values clamp to the edge bins.
inline std::vector<double> numeric_histogram(const std::vector<double>& col, double lo,
                                             double hi) {
    if (col.empty()) throw EmptyColumn("empty numeric column");
    std::vector<double> h(kNumericBins, 0.0);
    double width = hi > lo ? (hi - lo) / kNumericBins : 1.0;
    for (double v : col) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, kNumericBins - 1);
        h[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(col.size());
    return h;
}

inline std::vector<double> categorical_histogram(const std::vector<std::string>& col,
                                                 const std::vector<std::string>& support) {
    if (col.empty()) throw EmptyColumn("empty categorical column");
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < support.size(); ++i) idx[support[i]] = i;
    std::vector<double> h(support.size(), 0.0);
    for (const auto& v : col) {
        auto it = idx.find(v);
        if (it != idx.end()) h[it->second] += 1.0;
    }
    for (double& v : h) v /= static_cast<double>(col.size());
    return h;
}

inline double hellinger_hist(const std::vector<double>& p, const std::vector<double>& q) {
    double bc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
    return std::sqrt(std::max(0.0, 1.0 - bc));
}

inline double kl_hist(const std::vector<double>& p, const std::vector<double>& q) {
    // p is the fingerprinted distribution, q the original reference
    std::vector<double> ps(p), qs(q);
    double pt = 0, qt = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        ps[i] += kKlSmoothing;
        qs[i] += kKlSmoothing;
        pt += ps[i];
        qt += qs[i];
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i)
        kl += (ps[i] / pt) * std::log((ps[i] / pt) / (qs[i] / qt));
    return kl;
}

inline std::vector<double> numeric_column(const Dataset& d, std::size_t i) {
    std::vector<double> out;
    for (const auto& r : d.rows)
        if (!r[i].missing()) out.push_back(r[i].num);
    return out;
}

inline std::vector<std::string> categorical_column(const Dataset& d, std::size_t i) {
    std::vector<std::string> out;
    for (const auto& r : d.rows) out.push_back(r[i].cat);
    return out;
}

}  // namespace detail

/// Hellinger distance between one attribute's distributions in two datasets.
/// Numeric columns are binned identically over the reference's range.
inline double hellinger(const Dataset& reference, const Dataset& other,
                        const std::string& attr) {
    auto ia = reference.feature_index(attr);
    auto ib = other.feature_index(attr);
    if (!ia || !ib) throw SchemaMismatch("attribute not present in both: " + attr);
    if (reference.feature(*ia).kind != other.feature(*ib).kind)
        throw SchemaMismatch("attribute kind differs: " + attr);
    if (reference.feature(*ia).kind == AttrKind::numeric) {
        auto a = detail::numeric_column(reference, *ia);
        auto b = detail::numeric_column(other, *ib);
        if (a.empty() || b.empty()) throw EmptyColumn("empty column: " + attr);
        double lo = *std::min_element(a.begin(), a.end());
        double hi = *std::max_element(a.begin(), a.end());
        return detail::hellinger_hist(detail::numeric_histogram(a, lo, hi),
                                      detail::numeric_histogram(b, lo, hi));
    }
    auto a = detail::categorical_column(reference, *ia);
    auto b = detail::categorical_column(other, *ib);
    std::set<std::string> sup(a.begin(), a.end());
    sup.insert(b.begin(), b.end());
    std::vector<std::string> support(sup.begin(), sup.end());
    return detail::hellinger_hist(detail::categorical_histogram(a, support),
                                  detail::categorical_histogram(b, support));
}

/// KL divergence of the fingerprinted attribute from the original reference,
/// with additive smoothing on zero bins.
inline double kl_divergence(const Dataset& original, const Dataset& fingerprinted,
                            const std::string& attr) {
    auto ia = original.feature_index(attr);
    auto ib = fingerprinted.feature_index(attr);
    if (!ia || !ib) throw SchemaMismatch("attribute not present in both: " + attr);
    if (original.feature(*ia).kind == AttrKind::numeric) {
        auto a = detail::numeric_column(original, *ia);
        auto b = detail::numeric_column(fingerprinted, *ib);
        if (a.empty() || b.empty()) throw EmptyColumn("empty column: " + attr);
        double lo = *std::min_element(a.begin(), a.end());
        double hi = *std::max_element(a.begin(), a.end());
        return detail::kl_hist(detail::numeric_histogram(b, lo, hi),
                               detail::numeric_histogram(a, lo, hi));
    }
    auto a = detail::categorical_column(original, *ia);
    auto b = detail::categorical_column(fingerprinted, *ib);
    std::set<std::string> sup(a.begin(), a.end());
    sup.insert(b.begin(), b.end());
    std::vector<std::string> support(sup.begin(), sup.end());
    return detail::kl_hist(detail::categorical_histogram(b, support),
                           detail::categorical_histogram(a, support));
}

/// Relative data accuracy 1 - diff_cells/(n*v).
inline double data_accuracy(const Dataset& orig, const Dataset& fp) {
    std::size_t cells = orig.n() * orig.feature_count();
    if (cells == 0) return 1.0;
    return 1.0 - static_cast<double>(diff_cells(orig, fp)) / static_cast<double>(cells);
}

/// Entrywise relative change |corr_fp - corr_orig| / max(|corr_orig|, floor).
inline std::vector<double> correlation_change(const Dataset& orig, const Dataset& fp) {
    if (orig.feature_names() != fp.feature_names())
        throw SchemaMismatch("datasets are not aligned");
    auto a = compute_correlation_matrix(orig);
    auto b = compute_correlation_matrix(fp);
    std::vector<double> out(a.coeff.size(), 0.0);
    for (std::size_t i = 0; i < a.coeff.size(); ++i) {
        double denom = std::max(std::abs(a.coeff[i]), kCorrChangeFloor);
        double delta = std::abs(b.coeff[i] - a.coeff[i]);
        out[i] = delta == 0.0 ? 0.0 : delta / denom;
    }
    return out;
}

struct FidelityReport {
    std::vector<std::string> attributes;
    std::vector<double> hellinger_per_attr;
    std::vector<double> kl_per_attr;
    double hellinger_mean = 0.0;
    double kl_mean = 0.0;
    double accuracy = 1.0;
    std::vector<double> correlation_change_matrix;  // v x v row-major
    double max_correlation_change = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json per = nlohmann::json::object();
        for (std::size_t i = 0; i < attributes.size(); ++i)
            per[attributes[i]] = {{"hellinger", hellinger_per_attr[i]},
                                  {"kl", kl_per_attr[i]}};
        return nlohmann::json{{"attributes", per},
                              {"hellinger_mean", hellinger_mean},
                              {"kl_mean", kl_mean},
                              {"accuracy", accuracy},
                              {"max_correlation_change", max_correlation_change},
                              {"correlation_change", correlation_change_matrix}};
    }
};

inline FidelityReport fidelity_report(const Dataset& orig, const Dataset& other,
                                      bool with_correlation = true) {
    FidelityReport rep;
    rep.attributes = orig.feature_names();
    for (const auto& a : rep.attributes) {
        rep.hellinger_per_attr.push_back(hellinger(orig, other, a));
        rep.kl_per_attr.push_back(kl_divergence(orig, other, a));
    }
    for (double v : rep.hellinger_per_attr) rep.hellinger_mean += v;
    for (double v : rep.kl_per_attr) rep.kl_mean += v;
    std::size_t v = rep.attributes.size();
    if (v) {
        rep.hellinger_mean /= static_cast<double>(v);
        rep.kl_mean /= static_cast<double>(v);
    }
    if (orig.columns == other.columns && orig.n() == other.n())
        rep.accuracy = data_accuracy(orig, other);
    if (with_correlation) {
        rep.correlation_change_matrix = correlation_change(orig, other);
        for (double c : rep.correlation_change_matrix)
            rep.max_correlation_change = std::max(rep.max_correlation_change, c);
    }
    return rep;
}

struct CollusionOutcome {
    std::vector<std::size_t> accused;
    std::vector<std::size_t> colluders;
    double precision = 0.0;   // absent (NaN) when no accusation was made
    double far = 0.0;
    double recall = 0.0;
    bool has_accusation = false;
};

inline CollusionOutcome collusion_outcome(const AccusationReport& report,
                                          const std::vector<std::size_t>& true_colluders) {
    CollusionOutcome o;
    o.accused = report.accused;
    o.colluders = true_colluders;
    std::set<std::size_t> guilty(true_colluders.begin(), true_colluders.end());
    std::size_t correct = 0;
    for (std::size_t a : report.accused)
        if (guilty.count(a)) ++correct;
    o.has_accusation = !report.accused.empty();
    if (o.has_accusation) {
        o.precision = static_cast<double>(correct) / static_cast<double>(report.accused.size());
        o.far = 1.0 - o.precision;
    } else {
        o.precision = std::numeric_limits<double>::quiet_NaN();
        o.far = std::numeric_limits<double>::quiet_NaN();
    }
    o.recall = guilty.empty() ? 0.0
                              : static_cast<double>(correct) / static_cast<double>(guilty.size());
    return o;
}

}  // namespace fptab
