// io.hpp - CSV and JSON writers. Files are written to a temporary sibling
// and renamed into place, so readers never observe a partial file.
// Floats are printed with 17 significant digits.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nfc/errors.hpp"
#include "nfc/field_trace.hpp"
#include "nfc/metrics.hpp"
#include "nfc/scan.hpp"
#include "nfc/solver.hpp"

namespace nfc {

namespace fs = std::filesystem;

inline std::string fmt17(double v) { return detail::g17(v); }

inline void write_file_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

inline std::string trace_csv(const FieldTrace& tr) {
    std::ostringstream os;
    os << "t_ns,re,im,abs2\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& z = tr.samples[i];
        os << fmt17(tr.time(i)) << ',' << fmt17(z.real()) << ',' << fmt17(z.imag()) << ',' << fmt17(std::norm(z))
           << '\n';
    }
    return os.str();
}

/// Header row of xi values after a leading "k"; one row per k.
inline std::string efficiency_map_csv(const std::vector<double>& k_grid, const std::vector<double>& xi_grid,
                                      const std::vector<std::vector<double>>& e) {
    std::ostringstream os;
    os << "k";
    for (double x : xi_grid) os << ',' << fmt17(x);
    os << '\n';
    for (std::size_t a = 0; a < k_grid.size(); ++a) {
        os << fmt17(k_grid[a]);
        for (double v : e[a]) os << ',' << fmt17(v);
        os << '\n';
    }
    return os.str();
}

/// Matrix form of a two-axis ScanResult's efficiencies.
inline std::string efficiency_map_csv(const ScanResult& r) {
    if (r.axes.size() != 2) throw InvalidArgument("efficiency map needs a two-axis scan");
    const auto& ks = r.axes[0].values;
    const auto& xs = r.axes[1].values;
    std::vector<std::vector<double>> e(ks.size(), std::vector<double>(xs.size()));
    for (std::size_t a = 0; a < ks.size(); ++a)
        for (std::size_t b = 0; b < xs.size(); ++b) e[a][b] = r.efficiency[a * xs.size() + b];
    return efficiency_map_csv(ks, xs, e);
}

/// Long format: one row per cell, axis columns, E, F, then extra columns.
inline std::string scan_csv(const ScanResult& r) {
    std::ostringstream os;
    for (const auto& a : r.axes) os << a.name << ',';
    os << "E,F";
    for (const auto& [k, v] : r.extra) os << ',' << k;
    os << '\n';
    for (std::size_t i = 0; i < r.cells(); ++i) {
        for (double c : r.coords(i)) os << fmt17(c) << ',';
        os << fmt17(r.efficiency[i]) << ',' << fmt17(r.fidelity[i]);
        for (const auto& [k, v] : r.extra) os << ',' << fmt17(v[i]);
        os << '\n';
    }
    return os.str();
}

inline const char* report_csv_header() {
    return "efficiency,fidelity,t1,t2,echo_peak,input_energy,echo_energy,shift_used\n";
}

inline std::string report_csv_row(const EchoReport& r) {
    return fmt17(r.efficiency) + ',' + fmt17(r.fidelity) + ',' + fmt17(r.window.t1) + ',' + fmt17(r.window.t2) +
           ',' + fmt17(r.echo_peak) + ',' + fmt17(r.input_energy) + ',' + fmt17(r.echo_energy) + ',' +
           fmt17(r.shift_used) + '\n';
}

inline nlohmann::ordered_json to_json(const EchoReport& r) {
    return {{"efficiency", r.efficiency},   {"fidelity", r.fidelity},       {"t1", r.window.t1},
            {"t2", r.window.t2},            {"echo_peak", r.echo_peak},     {"input_energy", r.input_energy},
            {"echo_energy", r.echo_energy}, {"shift_used", r.shift_used}};
}

inline EchoReport report_from_json(const nlohmann::json& j) {
    EchoReport r;
    r.efficiency = j.at("efficiency").get<double>();
    r.fidelity = j.at("fidelity").get<double>();
    r.window = {j.at("t1").get<double>(), j.at("t2").get<double>()};
    r.echo_peak = j.at("echo_peak").get<double>();
    r.input_energy = j.at("input_energy").get<double>();
    r.echo_energy = j.at("echo_energy").get<double>();
    r.shift_used = j.at("shift_used").get<double>();
    return r;
}

inline std::string convergence_csv(const ConvergenceReport& c) {
    std::ostringstream os;
    os << "level,dt,nz,E,F,echo\n";
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        const auto& l = c.levels[i];
        os << i << ',' << fmt17(l.grid.dt) << ',' << l.grid.nz << ',' << fmt17(l.efficiency) << ','
           << fmt17(l.fidelity) << ',' << (l.echo ? 1 : 0) << '\n';
    }
    return os.str();
}

/// JSON text with a trailing newline; doubles keep 17 significant digits.
inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

} // namespace nfc
