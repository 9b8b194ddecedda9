#include "dmft_sgd/observables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

namespace {

void mean_se(const std::vector<double>& v, double& mean, double& se) {
    const double n = static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / n;
    if (v.size() < 2) {
        se = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

ObservableTable ObservableTrace::summarize() const {
    ObservableTable out;
    if (trials.empty()) return out;
    const std::size_t n = trials.size();
    const std::size_t T = times.size();
    std::vector<double> vals(n);
    auto emit = [&](const std::string& name, int r, int c, auto getter) {
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t i = 0; i < n; ++i) vals[i] = getter(trials[i], t);
            ObservableRow row{times[t], name, r, c, 0.0, 0.0, n};
            mean_se(vals, row.mean, row.std_error);
            out.push_back(std::move(row));
        }
    };
    const auto& first = trials.front();
    if (!first.overlap.empty()) {
        const auto rows = first.overlap.front().rows(), cols = first.overlap.front().cols();
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                emit("overlap", static_cast<int>(r), static_cast<int>(c),
                     [&](const TrialObservables& tr, std::size_t t) { return tr.overlap[t](r, c); });
    }
    if (!first.self_overlap.empty()) {
        const auto rows = first.self_overlap.front().rows();
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < rows; ++c)
                emit("self_overlap", static_cast<int>(r), static_cast<int>(c),
                     [&](const TrialObservables& tr, std::size_t t) { return tr.self_overlap[t](r, c); });
    }
    if (!first.train_loss.empty())
        emit("train_loss", 0, 0, [&](const TrialObservables& tr, std::size_t t) { return tr.train_loss[t]; });
    if (!first.xi_cdf.empty())
        for (std::size_t j = 0; j < thresholds.size(); ++j)
            emit("xi_cdf", static_cast<int>(j), 0,
                 [&](const TrialObservables& tr, std::size_t t) { return tr.xi_cdf[t][j]; });
    return out;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_table_csv(std::ostream& os, const ObservableTable& table, std::uint64_t seed,
                     const std::vector<std::string>& comments) {
    os << "# seed=" << seed << '\n';
    for (const auto& c : comments) os << "# " << c << '\n';
    os << kTraceHeader << '\n';
    for (const auto& r : table)
        os << format_double(r.time) << ',' << r.name << ',' << r.row << ',' << r.col << ',' << format_double(r.mean)
           << ',' << format_double(r.std_error) << ',' << r.n_trials << '\n';
}

void write_table_csv(const std::string& path, const ObservableTable& table, std::uint64_t seed,
                     const std::vector<std::string>& comments) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    write_table_csv(os, table, seed, comments);
    if (!os) throw InvalidInput("failed writing '" + path + "'");
}

ObservableTable read_table_csv(std::istream& is, const std::string& source) {
    ObservableTable out;
    std::string line;
    bool header = false;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw InvalidInput(source + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto to_double = [&](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            // from_chars rejects "inf"/"nan" spelled by to_chars on some libraries
            if (s == "inf") return HUGE_VAL;
            if (s == "-inf") return -HUGE_VAL;
            if (s == "nan" || s == "-nan") return std::nan("");
            fail("bad number '" + s + "'");
        }
        return v;
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kTraceHeader) fail("unexpected header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) fail("expected 7 fields");
        ObservableRow r;
        r.time = to_double(f[0]);
        r.name = f[1];
        r.row = static_cast<int>(to_double(f[2]));
        r.col = static_cast<int>(to_double(f[3]));
        r.mean = to_double(f[4]);
        r.std_error = to_double(f[5]);
        r.n_trials = static_cast<std::size_t>(to_double(f[6]));
        out.push_back(std::move(r));
    }
    if (!header) fail("missing header");
    return out;
}

ObservableTable read_table_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    return read_table_csv(is, path);
}

ObservableTable select(const ObservableTable& table, const std::string& name, int row, int col) {
    ObservableTable out;
    for (const auto& r : table)
        if (r.name == name && r.row == row && r.col == col) out.push_back(r);
    return out;
}

}  // namespace dmft_sgd
