#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fptab/errors.hpp"

namespace fptab {

/// Gaussian kernel density estimate over a value multiset, Scott bandwidth
/// h = sigma * m^(-1/5).
struct Kde {
    std::vector<double> sample;
    double bandwidth = 0.0;

    double operator()(double x) const {
        double m = static_cast<double>(sample.size());
        double s = 0.0;
        for (double xi : sample) {
            double z = (x - xi) / bandwidth;
            s += std::exp(-0.5 * z * z);
        }
        return s / (m * bandwidth * std::sqrt(2.0 * M_PI));
    }
};

/// phi-quantile with linear interpolation over sorted ascending values.
inline double interpolated_quantile(std::vector<double> v, double phi) {
    std::sort(v.begin(), v.end());
    double pos = phi * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

/// Low/high-density split of a numeric multiset. LD holds values whose
/// estimated density is at or below the phi-quantile of the densities at the
/// observed values; both sides are kept non-empty.
struct ContinuousPartition {
    Kde kde;
    double tau_phi = 0.0;
    std::vector<double> ld, hd;  // multisets
    // threshold override: true means the max-density value was forced into HD
    bool forced_hd = false;

    int classify(double observed) const {
        if (forced_hd) {
            // HD was forced from equal-density values; membership decides
            for (double v : hd)
                if (v == observed) return 1;
            return 0;
        }
        return kde(observed) > tau_phi ? 1 : 0;
    }
};

inline std::optional<ContinuousPartition> partition_continuous(
    const std::vector<double>& target_values, double phi) {
    if (phi <= 0.0 || phi >= 1.0) throw InvalidParameter("phi must be in (0,1)");
    if (target_values.size() < 2) return std::nullopt;
    double m = static_cast<double>(target_values.size());
    double mean = std::accumulate(target_values.begin(), target_values.end(), 0.0) / m;
    double ss = 0.0;
    for (double v : target_values) ss += (v - mean) * (v - mean);
    double sigma = std::sqrt(ss / (m - 1.0));
    if (sigma == 0.0) return std::nullopt;  // uniform neighbourhood

    ContinuousPartition p;
    p.kde.sample = target_values;
    p.kde.bandwidth = sigma * std::pow(m, -0.2);

    std::vector<double> dens(target_values.size());
    for (std::size_t i = 0; i < target_values.size(); ++i) dens[i] = p.kde(target_values[i]);
    p.tau_phi = interpolated_quantile(dens, phi);

    for (std::size_t i = 0; i < target_values.size(); ++i) {
        if (dens[i] <= p.tau_phi) p.ld.push_back(target_values[i]);
        else p.hd.push_back(target_values[i]);
    }

    // both sides must be non-empty: move all copies of the extreme value
    if (p.hd.empty()) {
        double best_d = -1.0, best_v = 0.0;
        for (std::size_t i = 0; i < target_values.size(); ++i) {
            if (dens[i] > best_d || (dens[i] == best_d && target_values[i] > best_v)) {
                best_d = dens[i];
                best_v = target_values[i];
            }
        }
        p.hd.clear();
        p.ld.clear();
        for (double v : target_values)
            (v == best_v ? p.hd : p.ld).push_back(v);
        p.forced_hd = true;
        if (p.ld.empty()) return std::nullopt;
    }
    if (p.ld.empty()) {
        double best_d = std::numeric_limits<double>::infinity(), best_v = 0.0;
        bool first = true;
        for (std::size_t i = 0; i < target_values.size(); ++i) {
            if (first || dens[i] < best_d || (dens[i] == best_d && target_values[i] < best_v)) {
                best_d = dens[i];
                best_v = target_values[i];
                first = false;
            }
        }
        p.hd.clear();
        p.ld.clear();
        for (double v : target_values)
            (v == best_v ? p.ld : p.hd).push_back(v);
        p.tau_phi = best_d;  // classify: density <= tau means LD
    }
    return p;
}

/// Low/high-frequency split of a category multiset: greedy accumulation from
/// the lowest frequency upward while the cumulative budget phi*total holds.
/// Frequency ties are ordered by ascending token.
struct CategoricalPartition {
    std::vector<std::pair<std::string, std::size_t>> ld, hd;  // (token, frequency)
    std::size_t ld_total = 0, hd_total = 0;

    int classify(const std::string& observed) const {
        for (const auto& [tok, f] : hd)
            if (tok == observed) return 1;
        return 0;  // LD member or unseen category
    }
};

inline std::optional<CategoricalPartition> partition_categorical(
    const std::vector<std::string>& target_values, double phi) {
    if (phi <= 0.0 || phi >= 1.0) throw InvalidParameter("phi must be in (0,1)");
    std::map<std::string, std::size_t> freq;
    for (const auto& v : target_values) ++freq[v];
    if (freq.size() < 2) return std::nullopt;

    std::vector<std::pair<std::string, std::size_t>> sorted(freq.begin(), freq.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) {
                         return a.second != b.second ? a.second < b.second : a.first < b.first;
                     });

    double budget = phi * static_cast<double>(target_values.size());
    CategoricalPartition p;
    std::size_t cum = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        bool take = p.ld.empty() ||
                    (static_cast<double>(cum + sorted[i].second) <= budget &&
                     i + 1 < sorted.size());
        if (take && i + 1 == sorted.size()) take = false;  // keep HD non-empty
        if (take) {
            cum += sorted[i].second;
            p.ld.push_back(sorted[i]);
        } else {
            p.hd.insert(p.hd.end(), sorted.begin() + static_cast<std::ptrdiff_t>(i), sorted.end());
            break;
        }
    }
    for (const auto& [t, f] : p.ld) p.ld_total += f;
    for (const auto& [t, f] : p.hd) p.hd_total += f;
    return p;
}

/// Uniform draw over the member multiset of the chosen side.
inline double sample_from(const ContinuousPartition& p, int mark_bit, std::mt19937_64& rng) {
    const auto& side = mark_bit ? p.hd : p.ld;
    std::uniform_int_distribution<std::size_t> pick(0, side.size() - 1);
    return side[pick(rng)];
}

inline std::string sample_from(const CategoricalPartition& p, int mark_bit,
                               std::mt19937_64& rng) {
    const auto& side = mark_bit ? p.hd : p.ld;
    std::size_t total = mark_bit ? p.hd_total : p.ld_total;
    std::uniform_int_distribution<std::size_t> pick(0, total - 1);
    std::size_t t = pick(rng);
    for (const auto& [tok, f] : side) {
        if (t < f) return tok;
        t -= f;
    }
    return side.back().first;
}

}  // namespace fptab
