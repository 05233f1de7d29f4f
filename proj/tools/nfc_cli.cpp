// nfc - command-line front end. Each subcommand maps to one RunConfig mode.
//
//   nfc <mode> [--config FILE] [--out DIR] [--set key=value]... [--threads N]
//   nfc scenario <id> [...]
//
// On failure a JSON error record goes to stderr (and to <out>/error.json when
// the directory is writable) and the exit code identifies the error kind.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nfc/nfc.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    std::vector<std::string> sets;
    int threads = 0;
    std::string scenario;
};

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json::object();
    std::ifstream in(path);
    if (!in) throw nfc::ConfigError("--config", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw nfc::ConfigError("--config", std::string("malformed JSON in ") + path + ": " + e.what());
    }
}

int run(nfc::Mode mode, const Args& a) {
    std::string out_dir = a.out;
    try {
        auto j = load_config(a.config);
        if (!j.is_object()) throw nfc::ConfigError("--config", "top level must be a JSON object");
        for (const auto& s : a.sets) nfc::apply_override(j, s);
        if (!a.scenario.empty()) j["scenario"] = a.scenario;
        if (!a.out.empty()) j["out"] = a.out;
        if (a.threads > 0) j["threads"] = a.threads;
        const auto cfg = nfc::parse_config(j, mode);
        out_dir = cfg.out;
        nfc::execute(cfg, std::cout);
        return 0;
    } catch (const nfc::Error& e) {
        const auto rec = nfc::error_record(e);
        std::cerr << rec.dump() << "\n";
        if (!out_dir.empty()) {
            try {
                nfc::write_file_atomic(std::filesystem::path(out_dir) / "error.json", nfc::dump(rec));
            } catch (const nfc::Error&) {
            }
        }
        return e.exit_code();
    } catch (const std::exception& e) {
        nlohmann::ordered_json rec{{"error", "internal"}, {"exit_code", 1}, {"message", e.what()}};
        std::cerr << rec.dump() << "\n";
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gamma-ray echo simulator for nuclear frequency combs"};
    app.require_subcommand(1);
    Args args;
    nfc::Mode chosen = nfc::Mode::Analytic;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "JSON config file");
        sub->add_option("--out", args.out, "output directory (overrides config)");
        sub->add_option("--set", args.sets, "override a config key, key=value (repeatable)");
        sub->add_option("--threads", args.threads, "worker threads for scans")->check(CLI::PositiveNumber);
    };

    struct Sub {
        nfc::Mode mode;
        const char* help;
    };
    const Sub subs[] = {
        {nfc::Mode::Analytic, "Fourier-series output of a static single-line comb"},
        {nfc::Mode::Simulate, "numerical propagation through a target chain"},
        {nfc::Mode::ScanKXi, "E and F over (k, total xi) for shaped combs"},
        {nfc::Mode::ScanM, "maximum E over xi_bar for each comb size M"},
        {nfc::Mode::ScanDyn, "E and F versus xi_bar with and without the outward pair"},
        {nfc::Mode::Scenario, "named dynamical or reference scenario"},
        {nfc::Mode::Convergence, "grid refinement study of E"},
    };
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(std::string(nfc::to_string(s.mode)), s.help);
        add_common(sub);
        if (s.mode == nfc::Mode::Scenario) {
            std::string ids;
            for (const auto& [k, v] : nfc::scenario_names()) ids += (ids.empty() ? "" : ", ") + std::string(v);
            sub->add_option("id", args.scenario, "scenario id: " + ids)->required();
        }
        sub->callback([&chosen, m = s.mode] { chosen = m; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 64; // usage error
    }
    return run(chosen, args);
}
