#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fptab/errors.hpp"
#include "fptab/keyed_stream.hpp"
#include "json.hpp"

namespace fptab {

using Bits = std::vector<std::uint8_t>;

/// Detected fingerprint template symbol: 0, 1, or undecided.
constexpr std::int8_t kUndecided = -1;
using Template = std::vector<std::int8_t>;

enum class CodeKind { hash, tardos };

struct Codebook {
    CodeKind kind = CodeKind::hash;
    std::size_t L = 0;
    std::size_t N = 0;
    std::vector<Bits> codes;
    std::vector<double> p;  // tardos bias vector, empty for hash codes
    int collusion_size = 0;
    double eps = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind == CodeKind::hash ? "hash" : "tardos";
        j["L"] = L;
        j["N"] = N;
        std::vector<std::string> cs;
        cs.reserve(codes.size());
        for (const auto& c : codes) {
            std::string s(c.size(), '0');
            for (std::size_t i = 0; i < c.size(); ++i)
                if (c[i]) s[i] = '1';
            cs.push_back(std::move(s));
        }
        j["codes"] = cs;
        j["p"] = p;
        j["params"] = nlohmann::json::object();
        if (kind == CodeKind::tardos) {
            j["params"]["c"] = collusion_size;
            j["params"]["eps"] = eps;
        }
        return j;
    }

    static Codebook from_json(const nlohmann::json& j) {
        Codebook b;
        b.kind = j.at("kind").get<std::string>() == "tardos" ? CodeKind::tardos : CodeKind::hash;
        b.L = j.at("L").get<std::size_t>();
        b.N = j.at("N").get<std::size_t>();
        for (const auto& s : j.at("codes").get<std::vector<std::string>>()) {
            Bits c(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) c[i] = s[i] == '1';
            b.codes.push_back(std::move(c));
        }
        b.p = j.at("p").get<std::vector<double>>();
        if (j.contains("params") && j["params"].contains("c")) {
            b.collusion_size = j["params"]["c"].get<int>();
            b.eps = j["params"]["eps"].get<double>();
        }
        return b;
    }
};

namespace detail {

inline double stream_unit(const RecordStream& s, std::uint64_t i) {
    return static_cast<double>(s.output(i)) / 18446744073709551616.0;  // 2^64
}

}  // namespace detail

/// Recipient code: L bits drawn from the keyed stream seeded with
/// (key, "fp" || recipient_id).
inline Bits generate_hash_code(std::string_view key, std::uint64_t recipient_id,
                               std::size_t L) {
    if (L < 1) throw InvalidParameter("L must be >= 1");
    RecordStream s = derive_stream(key, "fp" + std::to_string(recipient_id));
    Bits code(L);
    for (std::size_t i = 0; i < L; ++i) {
        std::uint64_t w = s.output(i / 64);
        code[i] = (w >> (63 - (i % 64))) & 1u;
    }
    return code;
}

inline Codebook generate_hash_codebook(std::string_view key, std::size_t N, std::size_t L) {
    Codebook b;
    b.kind = CodeKind::hash;
    b.L = L;
    b.N = N;
    for (std::size_t s = 0; s < N; ++s) b.codes.push_back(generate_hash_code(key, s, L));
    return b;
}

/// Length bound L = ceil(100 c^2 ln(N/eps)).
inline std::size_t tardos_code_length(int c, std::size_t N, double eps) {
    return static_cast<std::size_t>(
        std::ceil(100.0 * c * c * std::log(static_cast<double>(N) / eps)));
}

/// Probabilistic collusion-resistant codebook: biases p_l = sin^2(r_l) with
/// r_l uniform in [t', pi/2 - t'], sin^2(t') = t = 1/(300c); code bit (s,l)
/// is 1 with probability p_l. All randomness comes from the keyed stream.
inline Codebook tardos_generate(std::string_view key, std::size_t N, std::size_t L,
                                int c, double eps) {
    if (N < 2 || L < 1 || c < 2 || eps <= 0.0 || eps >= 1.0)
        throw InvalidParameter("invalid tardos parameters");
    Codebook b;
    b.kind = CodeKind::tardos;
    b.L = L;
    b.N = N;
    b.collusion_size = c;
    b.eps = eps;

    double t = 1.0 / (300.0 * c);
    double tprime = std::asin(std::sqrt(t));
    RecordStream ps = derive_stream(key, "tardos-p");
    b.p.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        double r = tprime + detail::stream_unit(ps, l) * (M_PI / 2.0 - 2.0 * tprime);
        double sp = std::sin(r);
        b.p[l] = sp * sp;
    }
    for (std::size_t s = 0; s < N; ++s) {
        RecordStream cs = derive_stream(key, "tardos-code-" + std::to_string(s));
        Bits code(L);
        for (std::size_t l = 0; l < L; ++l)
            code[l] = detail::stream_unit(cs, l) < b.p[l];
        b.codes.push_back(std::move(code));
    }
    return b;
}

struct AccusationReport {
    std::vector<double> scores;
    double threshold = 0.0;
    double x = 1.0;
    std::vector<std::size_t> accused;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"scores", scores}, {"threshold", threshold}, {"x", x}, {"accused", accused}};
    }
};

/// Accusation with threshold Z_x = mean + x*stddev of all scores. Only
/// positions detected as 1 are scored; 0 and undecided contribute nothing.
inline AccusationReport tardos_accuse(const Template& detected, const Codebook& book,
                                      double x = 1.0) {
    if (detected.size() != book.L) throw LengthMismatch("detected length != L");
    if (book.kind != CodeKind::tardos || book.p.size() != book.L)
        throw InvalidParameter("codebook is not a tardos codebook");
    AccusationReport rep;
    rep.x = x;
    rep.scores.resize(book.N, 0.0);
    for (std::size_t s = 0; s < book.N; ++s) {
        double score = 0.0;
        for (std::size_t l = 0; l < book.L; ++l) {
            if (detected[l] != 1) continue;
            double pl = book.p[l];
            score += book.codes[s][l] ? std::sqrt((1.0 - pl) / pl)
                                      : -std::sqrt(pl / (1.0 - pl));
        }
        rep.scores[s] = score;
    }
    double mu = 0.0;
    for (double v : rep.scores) mu += v;
    mu /= static_cast<double>(book.N);
    double var = 0.0;
    for (double v : rep.scores) var += (v - mu) * (v - mu);
    double sd = std::sqrt(var / static_cast<double>(book.N));
    rep.threshold = mu + x * sd;
    for (std::size_t s = 0; s < book.N; ++s)
        if (rep.scores[s] > rep.threshold) rep.accused.push_back(s);
    return rep;
}

/// Bit-wise match rate between a detected template and a code; undecided
/// positions never match.
inline double detection_confidence(const Template& detected, const Bits& code) {
    if (detected.size() != code.size()) throw LengthMismatch("detected length != code length");
    if (code.empty()) throw LengthMismatch("empty code");
    std::size_t match = 0;
    for (std::size_t l = 0; l < code.size(); ++l)
        if (detected[l] == static_cast<std::int8_t>(code[l])) ++match;
    return static_cast<double>(match) / static_cast<double>(code.size());
}

inline std::string template_to_string(const Template& t) {
    std::string s(t.size(), '?');
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] == 0) s[i] = '0';
        else if (t[i] == 1) s[i] = '1';
    return s;
}

inline Template template_from_string(std::string_view s) {
    Template t(s.size(), kUndecided);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] == '0') t[i] = 0;
        else if (s[i] == '1') t[i] = 1;
    return t;
}

}  // namespace fptab
