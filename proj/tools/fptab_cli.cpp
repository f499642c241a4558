// Command-line driver for the tabular fingerprinting pipeline:
// corrmap, codegen, embed, detect, accuse, attack, evaluate.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fptab/fptab.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fptab::IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

// The secret key never appears in argv: env var or key file only.
std::string load_key(const std::string& key_file) {
    if (!key_file.empty()) return trim(read_file(key_file));
    if (const char* env = std::getenv("FP_SECRET_KEY")) return env;
    throw fptab::InvalidKey("no secret key: set FP_SECRET_KEY or pass --key-file");
}

std::map<std::string, fptab::AttrKind> parse_hints(const std::vector<std::string>& numeric,
                                                   const std::vector<std::string>& categorical) {
    std::map<std::string, fptab::AttrKind> hints;
    for (const auto& c : numeric) hints[c] = fptab::AttrKind::numeric;
    for (const auto& c : categorical) hints[c] = fptab::AttrKind::categorical;
    return hints;
}

json read_json(const std::string& path) { return json::parse(read_file(path)); }

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fptab::IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

struct CommonData {
    std::string data, pk;
    std::vector<std::string> numeric_cols, categorical_cols;

    void attach(CLI::App* cmd, bool required = true) {
        auto* d = cmd->add_option("--data", data, "input CSV");
        auto* p = cmd->add_option("--pk", pk, "primary key column");
        if (required) {
            d->required();
            p->required();
        }
        cmd->add_option("--numeric-cols", numeric_cols, "force columns numeric")->delimiter(',');
        cmd->add_option("--categorical-cols", categorical_cols, "force columns categorical")
            ->delimiter(',');
    }

    fptab::Dataset load() const {
        return fptab::load_csv(data, pk, parse_hints(numeric_cols, categorical_cols));
    }
};

struct ConfigOpts {
    double gamma = 32.0, phi = 0.75;
    std::size_t length = 128, k = 30;
    std::string groups_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("--gamma", gamma, "embedding parameter gamma (ratio 1/gamma)");
        cmd->add_option("--length", length, "fingerprint length L");
        cmd->add_option("--k", k, "minimum neighbourhood size");
        cmd->add_option("--phi", phi, "density percentile phi");
        cmd->add_option("--groups", groups_path, "correlated groups JSON")->required();
    }

    fptab::EmbeddingConfig build() const {
        fptab::EmbeddingConfig cfg;
        cfg.gamma = gamma;
        cfg.L = length;
        cfg.k = k;
        cfg.phi = phi;
        cfg.groups = fptab::CorrelatedGroups::from_json(read_json(groups_path));
        return cfg;
    }
};

fptab::AccusationReport accuse_with(const fptab::Template& detected,
                                    const fptab::Codebook& book, double x) {
    if (book.kind == fptab::CodeKind::tardos) return fptab::tardos_accuse(detected, book, x);
    // hash codebooks: score by bit-match rate, same Z_x thresholding
    fptab::AccusationReport rep;
    rep.x = x;
    for (const auto& code : book.codes)
        rep.scores.push_back(fptab::detection_confidence(detected, code));
    double mu = 0;
    for (double v : rep.scores) mu += v;
    mu /= static_cast<double>(rep.scores.size());
    double var = 0;
    for (double v : rep.scores) var += (v - mu) * (v - mu);
    rep.threshold = mu + x * std::sqrt(var / static_cast<double>(rep.scores.size()));
    for (std::size_t s = 0; s < rep.scores.size(); ++s)
        if (rep.scores[s] > rep.threshold) rep.accused.push_back(s);
    return rep;
}

int run(int argc, char** argv) {
    CLI::App app{"blind fingerprinting toolkit for mixed-type tabular data"};
    app.require_subcommand(1);

    // ---- corrmap ----
    auto* corrmap = app.add_subcommand("corrmap", "compute correlated attribute groups");
    CommonData cm_data;
    cm_data.attach(corrmap);
    double tau_c = 0.4;
    std::string cm_out = "groups.json";
    corrmap->add_option("--tau-c", tau_c, "correlation threshold");
    corrmap->add_option("--out", cm_out, "output groups JSON");
    corrmap->callback([&] {
        auto d = cm_data.load();
        auto groups = fptab::build_groups(fptab::compute_correlation_matrix(d), tau_c);
        write_json(groups.to_json(), cm_out);
        std::cout << "wrote " << cm_out << " (" << groups.groups.size() << " groups)\n";
    });

    // ---- codegen ----
    auto* codegen = app.add_subcommand("codegen", "generate a recipient codebook");
    std::string cg_kind = "hash", cg_out = "codebook.json", cg_keyfile;
    std::size_t cg_n = 20, cg_len = 128;
    int cg_c = 2;
    double cg_eps = 0.01;
    codegen->add_option("--kind", cg_kind, "hash or tardos")
        ->check(CLI::IsMember({"hash", "tardos"}));
    codegen->add_option("--recipients", cg_n, "number of recipients N");
    codegen->add_option("--length", cg_len, "code length L (0: derive from c, N, eps)");
    codegen->add_option("--collusion", cg_c, "tardos collusion size c");
    codegen->add_option("--eps", cg_eps, "tardos error probability");
    codegen->add_option("--key-file", cg_keyfile, "secret key file");
    codegen->add_option("--out", cg_out, "output codebook JSON");
    codegen->callback([&] {
        std::string key = load_key(cg_keyfile);
        fptab::Codebook book;
        if (cg_kind == "tardos") {
            std::size_t L = cg_len ? cg_len : fptab::tardos_code_length(cg_c, cg_n, cg_eps);
            book = fptab::tardos_generate(key, cg_n, L, cg_c, cg_eps);
        } else {
            book = fptab::generate_hash_codebook(key, cg_n, cg_len);
        }
        write_json(book.to_json(), cg_out);
        std::cout << "wrote " << cg_out << " (N=" << book.N << ", L=" << book.L << ")\n";
    });

    // ---- embed ----
    auto* embed = app.add_subcommand("embed", "embed a recipient's fingerprint");
    CommonData em_data;
    em_data.attach(embed);
    ConfigOpts em_cfg;
    em_cfg.attach(embed);
    std::string em_codebook, em_out = ".", em_keyfile;
    std::size_t em_recipient = 0;
    embed->add_option("--codebook", em_codebook, "codebook JSON")->required();
    embed->add_option("--recipient", em_recipient, "recipient id")->required();
    embed->add_option("--key-file", em_keyfile, "secret key file");
    embed->add_option("--out", em_out, "output directory");
    embed->callback([&] {
        std::string key = load_key(em_keyfile);
        auto d = em_data.load();
        auto book = fptab::Codebook::from_json(read_json(em_codebook));
        auto cfg = em_cfg.build();
        cfg.L = book.L;
        if (em_recipient >= book.N) throw fptab::InvalidParameter("recipient id out of range");
        auto fp = fptab::embed(d, key, book.codes[em_recipient], cfg);

        fs::create_directories(em_out);
        std::string csv_path = em_out + "/recipient_" + std::to_string(em_recipient) + ".csv";
        fptab::write_csv(fp, csv_path);

        double mean_omega = static_cast<double>(d.n()) / (static_cast<double>(cfg.L) * cfg.gamma);
        if (mean_omega < 16.0)
            std::cerr << "warning: mean redundancy " << mean_omega
                      << " is below the recommended minimum of 16\n";
        json manifest{{"recipient", em_recipient},
                      {"config_hash", cfg.hash()},
                      {"config", cfg.to_json()},
                      {"mean_redundancy", mean_omega},
                      {"changed_cells", fptab::diff_cells(d, fp)},
                      {"output", csv_path}};
        write_json(manifest, em_out + "/recipient_" + std::to_string(em_recipient) +
                                  ".manifest.json");
        std::cout << "wrote " << csv_path << "\n";
    });

    // ---- detect ----
    auto* detect = app.add_subcommand("detect", "blind fingerprint detection");
    CommonData dt_data;
    dt_data.attach(detect);
    ConfigOpts dt_cfg;
    dt_cfg.attach(detect);
    std::string dt_out = "detection.json", dt_keyfile, dt_manifest, dt_codebook, dt_sweep;
    long long dt_recipient = -1;
    detect->add_option("--key-file", dt_keyfile, "secret key file");
    detect->add_option("--manifest", dt_manifest, "embedding manifest to cross-check");
    detect->add_option("--codebook", dt_codebook, "codebook JSON (adds DC per recipient)");
    detect->add_option("--recipient", dt_recipient, "expected recipient (adds its DC)");
    detect->add_option("--sweep-index", dt_sweep,
                       "CSV of strength,path rows; writes a (strength, DC) grid");
    detect->add_option("--out", dt_out, "output JSON (or grid CSV in sweep mode)");
    detect->callback([&] {
        std::string key = load_key(dt_keyfile);
        auto cfg = dt_cfg.build();
        if (!dt_manifest.empty()) {
            auto m = read_json(dt_manifest);
            if (m.at("config_hash").get<std::string>() != cfg.hash())
                throw fptab::ConfigMismatch("config hash differs from embedding manifest");
        }
        std::optional<fptab::Codebook> book;
        if (!dt_codebook.empty()) book = fptab::Codebook::from_json(read_json(dt_codebook));

        if (!dt_sweep.empty()) {
            if (!book || dt_recipient < 0)
                throw fptab::InvalidParameter("sweep mode needs --codebook and --recipient");
            std::ifstream in(dt_sweep);
            if (!in) throw fptab::IoError("cannot open " + dt_sweep);
            std::ofstream grid(dt_out);
            grid << "strength,dc\n";
            std::string line;
            while (std::getline(in, line)) {
                auto comma = line.find(',');
                if (comma == std::string::npos || line.substr(0, comma) == "strength") continue;
                double strength = std::stod(line.substr(0, comma));
                auto suspect = fptab::load_csv(line.substr(comma + 1), dt_data.pk);
                auto res = fptab::detect(suspect, key, cfg);
                grid << strength << ','
                     << fptab::detection_confidence(
                            res.tmpl, book->codes[static_cast<std::size_t>(dt_recipient)])
                     << '\n';
            }
            std::cout << "wrote " << dt_out << "\n";
            return;
        }

        auto d = dt_data.load();
        auto res = fptab::detect(d, key, cfg);
        json j = res.to_json();
        if (book) {
            json dc = json::object();
            for (std::size_t s = 0; s < book->N; ++s)
                dc[std::to_string(s)] = fptab::detection_confidence(res.tmpl, book->codes[s]);
            j["dc"] = dc;
            if (dt_recipient >= 0)
                j["dc_expected"] = fptab::detection_confidence(
                    res.tmpl, book->codes[static_cast<std::size_t>(dt_recipient)]);
        }
        write_json(j, dt_out);
        std::cout << "wrote " << dt_out << "\n";
    });

    // ---- accuse ----
    auto* accuse = app.add_subcommand("accuse", "score recipients against a detected template");
    std::string ac_detection, ac_codebook, ac_out = "accusation.json";
    double ac_x = 1.0;
    accuse->add_option("--detection", ac_detection, "detection JSON")->required();
    accuse->add_option("--codebook", ac_codebook, "codebook JSON")->required();
    accuse->add_option("--x", ac_x, "threshold multiplier in Z_x");
    accuse->add_option("--out", ac_out, "output JSON");
    accuse->callback([&] {
        auto det = read_json(ac_detection);
        auto book = fptab::Codebook::from_json(read_json(ac_codebook));
        auto tmpl = fptab::template_from_string(det.at("template").get<std::string>());
        auto rep = accuse_with(tmpl, book, ac_x);
        write_json(rep.to_json(), ac_out);
        std::cout << "wrote " << ac_out << " (accused:";
        for (auto s : rep.accused) std::cout << ' ' << s;
        std::cout << ")\n";
    });

    // ---- attack ----
    auto* attack = app.add_subcommand("attack", "apply a robustness attack");
    CommonData at_data;
    at_data.attach(attack);
    std::string at_kind, at_out = "attacked.csv", at_keyfile, at_groups;
    std::vector<double> at_strengths;
    double at_strength = 0.0, at_influence = 0.2;
    std::uint64_t at_seed = 0;
    std::vector<std::string> at_inputs;
    ConfigOpts at_cfg;  // cluster_flip guess config
    attack->add_option("--kind", at_kind, "attack kind")
        ->required()
        ->check(CLI::IsMember({"horizontal", "vertical", "flip", "cluster_flip",
                               "collude_average", "collude_substitute",
                               "collude_substitute_flip"}));
    attack->add_option("--strength", at_strength, "attack strength in [0,1]");
    attack->add_option("--strengths", at_strengths, "sweep strengths (one file each)")
        ->delimiter(',');
    attack->add_option("--seed", at_seed, "attack seed");
    attack->add_option("--inputs", at_inputs, "colluding copies (collude_* kinds)")
        ->delimiter(',');
    attack->add_option("--influence", at_influence, "cluster_flip influence fraction");
    attack->add_option("--key-file", at_keyfile, "attacker key file (cluster_flip)");
    attack->add_option("--gamma", at_cfg.gamma, "cluster_flip guessed gamma");
    attack->add_option("--length", at_cfg.length, "cluster_flip guessed L");
    attack->add_option("--k", at_cfg.k, "cluster_flip guessed k");
    attack->add_option("--phi", at_cfg.phi, "cluster_flip guessed phi");
    attack->add_option("--groups", at_groups, "cluster_flip guessed groups JSON");
    attack->add_option("--out", at_out, "output CSV (sweep: suffixed per strength)");
    attack->callback([&] {
        auto apply = [&](double strength) -> fptab::Dataset {
            if (at_kind == "horizontal")
                return fptab::horizontal_subset(at_data.load(), strength, at_seed);
            if (at_kind == "vertical")
                return fptab::vertical_subset(at_data.load(), strength, at_seed);
            if (at_kind == "flip") return fptab::flip(at_data.load(), strength, at_seed);
            if (at_kind == "cluster_flip") {
                if (at_groups.empty())
                    throw fptab::InvalidParameter("cluster_flip needs --groups");
                at_cfg.groups_path = at_groups;
                auto cfg = at_cfg.build();
                return fptab::cluster_flip(at_data.load(), load_key(at_keyfile), cfg,
                                           at_influence, strength, at_seed);
            }
            // collusion kinds
            std::vector<fptab::Dataset> copies;
            for (const auto& p : at_inputs) copies.push_back(fptab::load_csv(p, at_data.pk));
            fptab::CollusionStrategy s = at_kind == "collude_average"
                                             ? fptab::CollusionStrategy::average
                                             : (at_kind == "collude_substitute"
                                                    ? fptab::CollusionStrategy::substitute
                                                    : fptab::CollusionStrategy::substitute_flip);
            return fptab::collude(copies, s, strength, at_seed);
        };

        if (at_strengths.empty()) {
            fptab::write_csv(apply(at_strength), at_out);
            std::cout << "wrote " << at_out << "\n";
            return;
        }
        std::string stem = at_out, ext;
        if (auto dot = at_out.rfind('.'); dot != std::string::npos) {
            stem = at_out.substr(0, dot);
            ext = at_out.substr(dot);
        }
        std::ofstream index(stem + ".index.csv");
        index << "strength,path\n";
        for (double s : at_strengths) {
            std::ostringstream name;
            name << stem << "_s" << s << ext;
            fptab::write_csv(apply(s), name.str());
            index << s << ',' << name.str() << '\n';
            std::cout << "wrote " << name.str() << "\n";
        }
    });

    // ---- evaluate ----
    auto* evaluate = app.add_subcommand("evaluate", "fidelity report between two datasets");
    std::string ev_orig, ev_fp, ev_pk, ev_out = "fidelity";
    bool ev_no_corr = false;
    evaluate->add_option("--orig", ev_orig, "original CSV")->required();
    evaluate->add_option("--fp", ev_fp, "fingerprinted/attacked CSV")->required();
    evaluate->add_option("--pk", ev_pk, "primary key column")->required();
    evaluate->add_flag("--no-correlation", ev_no_corr, "skip the correlation-change matrix");
    evaluate->add_option("--out", ev_out, "output prefix (.json and .csv)");
    evaluate->callback([&] {
        auto orig = fptab::load_csv(ev_orig, ev_pk);
        auto fp = fptab::load_csv(ev_fp, ev_pk);
        auto rep = fptab::fidelity_report(orig, fp, !ev_no_corr);
        write_json(rep.to_json(), ev_out + ".json");
        std::ofstream csv(ev_out + ".csv");
        csv << "attribute,hellinger,kl\n";
        for (std::size_t i = 0; i < rep.attributes.size(); ++i)
            csv << rep.attributes[i] << ',' << rep.hellinger_per_attr[i] << ','
                << rep.kl_per_attr[i] << '\n';
        csv << "aggregate_mean," << rep.hellinger_mean << ',' << rep.kl_mean << '\n';
        std::cout << "wrote " << ev_out << ".json and " << ev_out << ".csv\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const fptab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
