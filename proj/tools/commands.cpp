#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <tuple>

#include "config.hpp"
#include "dmft_sgd/kernel_io.hpp"
#include "dmft_sgd/one_pass_ode.hpp"

namespace dmft_sgd::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    Experiment exp;
    std::vector<Variant> variants;
    fs::path out_root;
    bool quiet = false;
};

Context load(const std::string& config_path, const CommandOptions& o) {
    Context c;
    c.exp = parse_experiment_file(config_path);
    if (o.output_dir) c.exp.run.output_dir = *o.output_dir;
    if (o.scale) {
        if (*o.scale != "desk" && *o.scale != "paper") throw ConfigError("--scale must be 'desk' or 'paper'");
        c.exp.run.scale = *o.scale;
    }
    if (o.threads) c.exp.run.threads = *o.threads;
    c.variants = resolve(c.exp);
    c.out_root = c.exp.run.output_dir;
    c.quiet = o.quiet;
    return c;
}

fs::path variant_dir(const Context& c, const Variant& v) {
    fs::path p = v.label.empty() ? c.out_root : c.out_root / v.label;
    fs::create_directories(p);
    return p;
}

std::string write_echo(const Context& c) {
    fs::create_directories(c.out_root);
    const fs::path p = c.out_root / "resolved_config.yaml";
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    os << to_yaml(c.exp);
    return p.string();
}

std::vector<std::string> describe(const Variant& v, const std::string& engine, const std::string& axis) {
    std::vector<std::string> out{"engine=" + engine, "time_axis=" + axis};
    out.push_back("gamma=" + format_double(v.spec.gamma) + " eta0=" + format_double(v.spec.eta(0.0)) +
                  " lambda=" + format_double(v.spec.regularizer.lambda) + " kappa_bar=" +
                  format_double(v.spec.kappa_bar));
    if (v.sim)
        out.push_back("n=" + std::to_string(v.sim->n) + " d=" + std::to_string(v.sim->d) +
                      " trials=" + std::to_string(v.sim->trials));
    if (!v.label.empty()) out.push_back("variant=" + v.label);
    return out;
}

void write_trials(const fs::path& p, const ObservableTrace& trace, std::uint64_t seed) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + p.string() + "'");
    os << "# seed=" << seed << "\ntrial,time,observable_name,component_row,component_col,value\n";
    for (std::size_t m = 0; m < trace.trials.size(); ++m) {
        const auto& tr = trace.trials[m];
        auto row = [&](std::size_t t, const char* name, Eigen::Index r, Eigen::Index c, double v) {
            os << m << ',' << format_double(trace.times[t]) << ',' << name << ',' << r << ',' << c << ','
               << format_double(v) << '\n';
        };
        for (std::size_t t = 0; t < tr.overlap.size(); ++t)
            for (Eigen::Index r = 0; r < tr.overlap[t].rows(); ++r)
                for (Eigen::Index c = 0; c < tr.overlap[t].cols(); ++c) row(t, "overlap", r, c, tr.overlap[t](r, c));
        for (std::size_t t = 0; t < tr.self_overlap.size(); ++t)
            for (Eigen::Index r = 0; r < tr.self_overlap[t].rows(); ++r)
                for (Eigen::Index c = 0; c < tr.self_overlap[t].cols(); ++c)
                    row(t, "self_overlap", r, c, tr.self_overlap[t](r, c));
        for (std::size_t t = 0; t < tr.train_loss.size(); ++t) row(t, "train_loss", 0, 0, tr.train_loss[t]);
        for (std::size_t t = 0; t < tr.xi_cdf.size(); ++t)
            for (std::size_t j = 0; j < tr.xi_cdf[t].size(); ++j)
                row(t, "xi_cdf", static_cast<Eigen::Index>(j), 0, tr.xi_cdf[t][j]);
    }
}

void note(const Context& c, const std::string& msg) {
    if (!c.quiet) std::cerr << msg << '\n';
}

// Rescaled-time grid tau = scale * t aligned point-for-point with the main grid.
TimeGrid scaled_grid(const TimeGrid& g, double scale) {
    if (!(scale > 0.0)) return g;
    return TimeGrid::make(scale * g.T, scale * g.delta);
}

std::vector<std::string> run_dmft_once(const Context& c, const Variant& v, const fs::path& dir,
                                       const std::string& suffix) {
    const auto& ds = *c.exp.dmft;
    SolveOptions so;
    so.mode = ds.mode;
    so.max_iters = ds.max_iters;
    so.tol = ds.tol;
    so.damping = ds.damping;
    so.auto_damping = ds.auto_damping;
    so.mc_samples = ds.mc_samples;
    so.seed = ds.seed;
    so.threads = c.exp.run.threads;
    so.shrinkage = RfShrinkage{ds.shrinkage, ds.shrinkage_window, ds.shrinkage_factor};
    const SolveResult res = solve(v.spec, v.grid, so);
    if (!res.report.converged)
        note(c, "warning: DMFT iteration stopped after " + std::to_string(res.report.iterations()) +
                    " iterations without reaching tol " + format_double(res.report.tol));

    PredictOptions po;
    po.n_samples = ds.predict_samples;
    po.seed = ds.seed;
    po.threads = c.exp.run.threads;
    if (c.exp.sim) po.thresholds = c.exp.sim->thresholds;
    const ObservableTable table = predict_observables(res.state, v.spec, po);

    auto comments = describe(v, "dmft", "t");
    comments.push_back("mode=" + to_string(ds.mode) + " driver=" + to_string(v.spec.driver) +
                       " iterations=" + std::to_string(res.report.iterations()) +
                       " converged=" + (res.report.converged ? "true" : "false"));
    const fs::path trace = dir / ("dmft" + suffix + ".csv");
    const fs::path state = dir / ("dmft" + suffix + "_state.bin");
    const fs::path conv = dir / ("dmft" + suffix + "_convergence.csv");
    write_table_csv(trace.string(), table, ds.seed, comments);
    save_state(state.string(), res.state);
    res.report.write_csv(conv.string());
    return {trace.string(), state.string(), conv.string()};
}

std::vector<std::string> run_dmft(const Context& c, const Variant& v, const fs::path& dir) {
    const auto& drivers = c.exp.dmft->drivers;
    if (drivers.empty()) return run_dmft_once(c, v, dir, "");
    std::vector<std::string> files;
    for (Driver d : drivers) {
        Variant vd = v;
        vd.spec.driver = d;
        const auto f = run_dmft_once(c, vd, dir, "_" + to_string(d));
        files.insert(files.end(), f.begin(), f.end());
    }
    return files;
}

std::vector<std::string> run_engine(const Context& c, const Variant& v, const std::string& engine,
                                    const fs::path& dir) {
    if (engine == "dmft") return run_dmft(c, v, dir);
    const SimConfig& base = *v.sim;
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const ObservableTrace& trace, const std::string& axis) {
        const fs::path p = dir / (name + ".csv");
        write_table_csv(p.string(), trace.summarize(), base.seed, describe(v, name, axis));
        files.push_back(p.string());
        if (c.exp.run.plot_data) {
            const fs::path q = dir / (name + "_trials.csv");
            write_trials(q, trace, base.seed);
            files.push_back(q.string());
        }
    };
    if (engine == "sgd" || engine == "sme") {
        const Engine e = engine_from_string(engine);
        emit(engine, simulate(e, base, v.spec), base.gf_continuation > 0 ? "t (gradient flow tau after T)" : "t");
    } else if (engine == "gf") {
        SimConfig gf = base;
        const double eta0 = v.spec.eta(0.0);
        gf.grid = scaled_grid(base.grid, eta0);
        if (gf.gf_step > 0.0 && eta0 > 0.0) gf.gf_step *= eta0;
        emit("gf", simulate(Engine::GradientFlow, gf, v.spec), "tau = eta t");
    } else if (engine == "onepass") {
        // gamma -> infinity partner of the configured problem: g~ = g / gamma, tau = gamma t
        ModelSpec one = v.spec;
        one.regularizer.lambda = v.spec.regularizer.lambda / v.spec.gamma;
        SimConfig op = base;
        op.grid = scaled_grid(base.grid, v.spec.gamma);
        emit("onepass", simulate(Engine::OnePass, op, one), "tau = gamma t");

        std::vector<double> taus;
        for (std::size_t i = 0; i < op.grid.points(); ++i) taus.push_back(op.grid.time(i));
        const OnePassOverlaps ode = one_pass_overlap_ode(one, taus);
        ObservableTable table;
        for (int r = 0; r < one.k; ++r)
            for (int s = 0; s < one.k_star; ++s)
                for (std::size_t t = 0; t < taus.size(); ++t)
                    table.push_back({taus[t], "overlap", r, s, ode.cross[t](r, s), 0.0, 0});
        for (int r = 0; r < one.k; ++r)
            for (int s = 0; s < one.k; ++s)
                for (std::size_t t = 0; t < taus.size(); ++t)
                    table.push_back({taus[t], "self_overlap", r, s, ode.self[t](r, s), 0.0, 0});
        const fs::path p = dir / "onepass_ode.csv";
        auto comments = describe(v, "onepass_ode", "tau = gamma t");
        if (ode.used_monte_carlo) comments.push_back("coefficients=monte_carlo");
        write_table_csv(p.string(), table, base.seed, comments);
        files.push_back(p.string());
    }
    return files;
}

}  // namespace

std::vector<std::string> cmd_simulate(const std::string& config_path, const CommandOptions& options) {
    const Context c = load(config_path, options);
    std::vector<std::string> files{write_echo(c)};
    for (const auto& v : c.variants) {
        const fs::path dir = variant_dir(c, v);
        for (const auto& engine : c.exp.run.engines) {
            note(c, "running " + engine + (v.label.empty() ? "" : " [" + v.label + "]"));
            const auto f = run_engine(c, v, engine, dir);
            files.insert(files.end(), f.begin(), f.end());
        }
    }
    return files;
}

std::vector<std::string> cmd_dmft(const std::string& config_path, const CommandOptions& options) {
    const Context c = load(config_path, options);
    std::vector<std::string> files{write_echo(c)};
    for (const auto& v : c.variants) {
        const fs::path dir = variant_dir(c, v);
        note(c, "solving DMFT" + (v.label.empty() ? "" : " [" + v.label + "]"));
        const auto f = run_dmft(c, v, dir);
        files.insert(files.end(), f.begin(), f.end());
    }
    return files;
}

double cmd_compare(const std::vector<std::string>& paths, std::ostream& out) {
    if (paths.size() < 2) throw ConfigError("compare needs at least two trace files (the first is the reference)");
    using Key = std::tuple<std::string, int, int>;
    auto index = [](const ObservableTable& t) {
        std::map<Key, std::vector<const ObservableRow*>> m;
        for (const auto& r : t) m[{r.name, r.row, r.col}].push_back(&r);
        return m;
    };
    const ObservableTable ref_table = read_table_csv(paths[0]);
    const auto ref = index(ref_table);
    out << "# reference=" << paths[0] << '\n' << kCompareHeader << '\n';

    double overall = 0.0;
    for (std::size_t f = 1; f < paths.size(); ++f) {
        const ObservableTable other_table = read_table_csv(paths[f]);
        const auto other = index(other_table);
        bool resampled = false;
        std::vector<std::string> lines, summary;
        for (const auto& [key, rows] : ref) {
            const auto it = other.find(key);
            if (it == other.end()) continue;
            const auto& cand = it->second;
            double max_diff = 0.0, max_z = 0.0;
            for (const ObservableRow* a : rows) {
                // nearest time point in the other trace
                const ObservableRow* b = cand.front();
                for (const ObservableRow* x : cand)
                    if (std::abs(x->time - a->time) < std::abs(b->time - a->time)) b = x;
                if (std::abs(b->time - a->time) > 1e-9 * std::max(1.0, std::abs(a->time))) resampled = true;
                const double diff = b->mean - a->mean;
                const double se = std::sqrt(a->std_error * a->std_error + b->std_error * b->std_error);
                const double z = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(HUGE_VAL, diff));
                max_diff = std::max(max_diff, std::abs(diff));
                max_z = std::max(max_z, std::abs(z));
                lines.push_back(paths[f] + ',' + std::get<0>(key) + ',' + std::to_string(std::get<1>(key)) + ',' +
                                std::to_string(std::get<2>(key)) + ',' + format_double(a->time) + ',' +
                                format_double(a->mean) + ',' + format_double(b->mean) + ',' + format_double(diff) +
                                ',' + format_double(z));
            }
            summary.push_back(paths[f] + ',' + std::get<0>(key) + ',' + std::to_string(std::get<1>(key)) + ',' +
                              std::to_string(std::get<2>(key)) + ",max,,," + format_double(max_diff) + ',' +
                              format_double(max_z));
            overall = std::max(overall, max_z);
        }
        if (resampled) {
            out << "# warning: " << paths[f] << " is on a different time grid; values taken at the nearest grid point\n";
            std::cerr << "warning: " << paths[f] << " resampled to the reference time grid\n";
        }
        for (const auto& l : lines) out << l << '\n';
        for (const auto& l : summary) out << l << '\n';
    }
    return overall;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const StructuralError*>(&e)) return 2;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
    return 1;
}

}  // namespace dmft_sgd::cli
