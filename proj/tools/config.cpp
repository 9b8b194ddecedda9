#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace dmft_sgd::cli {

bool ModelSection::operator==(const ModelSection& o) const {
    const bool cov_eq = init_covariance.has_value() == o.init_covariance.has_value() &&
                        (!init_covariance || (init_covariance->rows() == o.init_covariance->rows() &&
                                              init_covariance->cols() == o.init_covariance->cols() &&
                                              *init_covariance == *o.init_covariance));
    return k == o.k && k_star == o.k_star && gamma == o.gamma && kappa_bar == o.kappa_bar && eta == o.eta &&
           driver == o.driver && loss == o.loss && activation == o.activation && teacher == o.teacher &&
           lambda == o.lambda && lambda_onepass == o.lambda_onepass && cov_eq && noise_variance == o.noise_variance;
}

bool Experiment::same_experiment(const Experiment& o) const {
    return model == o.model && sim == o.sim && dmft == o.dmft && run == o.run && desk_scale == o.desk_scale;
}

namespace {

class Parser {
public:
    explicit Parser(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        std::ostringstream os;
        os << source_;
        if (at.IsDefined() && !at.Mark().is_null()) os << ':' << at.Mark().line + 1 << ':' << at.Mark().column + 1;
        os << ": " << msg;
        throw ConfigError(os.str());
    }

    void check_keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& allowed) const {
        if (!map.IsMap()) fail(map, "section '" + section + "' must be a mapping");
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in section '" + section + "'");
        }
    }

    template <typename T>
    T scalar(const YAML::Node& n, const std::string& what) const {
        if (!n.IsScalar()) fail(n, what + " must be a scalar");
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "cannot read " + what + " from '" + n.Scalar() + "'");
        }
    }

    double real(const YAML::Node& n, const std::string& what) const {
        const double v = scalar<double>(n, what);
        if (!std::isfinite(v)) fail(n, what + " must be finite");
        return v;
    }

    double nonneg(const YAML::Node& n, const std::string& what) const {
        const double v = real(n, what);
        if (v < 0.0) fail(n, what + " must be >= 0");
        return v;
    }

    double positive(const YAML::Node& n, const std::string& what) const {
        const double v = real(n, what);
        if (!(v > 0.0)) fail(n, what + " must be > 0");
        return v;
    }

    std::size_t count(const YAML::Node& n, const std::string& what, std::size_t min) const {
        const auto v = scalar<long long>(n, what);
        if (v < static_cast<long long>(min)) fail(n, what + " must be >= " + std::to_string(min));
        return static_cast<std::size_t>(v);
    }

    std::vector<double> reals(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, what + " must be a list");
        std::vector<double> out;
        for (const auto& x : n) out.push_back(real(x, what + " entry"));
        return out;
    }

    template <typename Fn>
    auto parse_enum(const YAML::Node& n, const std::string& what, Fn fn) const {
        const auto s = scalar<std::string>(n, what);
        try {
            return fn(s);
        } catch (const InvalidInput& e) {
            fail(n, e.what());
        }
    }

    ModelSection model(const YAML::Node& m) const {
        check_keys(m, "model",
                   {"k", "k_star", "gamma", "kappa_bar", "eta", "driver", "loss", "huber_threshold", "activation",
                    "teacher", "lambda", "lambda_onepass", "init_covariance", "noise_variance"});
        ModelSection s;
        if (m["k"]) s.k = static_cast<int>(count(m["k"], "k", 1));
        if (m["k_star"]) s.k_star = static_cast<int>(count(m["k_star"], "k_star", 1));
        if (m["gamma"]) s.gamma = positive(m["gamma"], "gamma");
        if (m["kappa_bar"]) s.kappa_bar = positive(m["kappa_bar"], "kappa_bar");
        if (const auto e = m["eta"]) {
            if (e.IsScalar()) {
                s.eta = EtaSchedule::constant(nonneg(e, "eta"));
            } else {
                check_keys(e, "model.eta", {"times", "values"});
                if (!e["times"] || !e["values"]) fail(e, "eta schedule needs 'times' and 'values'");
                s.eta.times = reals(e["times"], "eta times");
                s.eta.values = reals(e["values"], "eta values");
                if (s.eta.times.empty() || s.eta.times.size() != s.eta.values.size())
                    fail(e, "eta schedule needs equally many (>= 1) times and values");
                for (std::size_t i = 1; i < s.eta.times.size(); ++i)
                    if (!(s.eta.times[i] > s.eta.times[i - 1])) fail(e["times"], "eta times must increase");
                for (double v : s.eta.values)
                    if (v < 0.0) fail(e["values"], "eta values must be >= 0");
            }
        }
        if (m["driver"]) s.driver = parse_enum(m["driver"], "driver", driver_from_string);
        if (m["loss"]) s.loss.kind = parse_enum(m["loss"], "loss", loss_from_string);
        if (m["huber_threshold"]) s.loss.threshold = positive(m["huber_threshold"], "huber_threshold");
        if (m["activation"]) s.activation = parse_enum(m["activation"], "activation", activation_from_string);
        if (m["teacher"]) {
            s.teacher = parse_enum(m["teacher"], "teacher", teacher_from_string);
            if (s.teacher == TeacherKind::Custom) fail(m["teacher"], "custom teachers are only available from the library API");
        }
        if (m["lambda"]) s.lambda = nonneg(m["lambda"], "lambda");
        if (m["lambda_onepass"]) s.lambda_onepass = nonneg(m["lambda_onepass"], "lambda_onepass");
        if (s.lambda && s.lambda_onepass) fail(m["lambda_onepass"], "give either lambda or lambda_onepass, not both");
        if (const auto c = m["init_covariance"]) {
            const int dim = s.k + s.k_star;
            if (!c.IsSequence() || static_cast<int>(c.size()) != dim)
                fail(c, "init_covariance must be a " + std::to_string(dim) + " x " + std::to_string(dim) + " list of rows");
            Eigen::MatrixXd cov(dim, dim);
            for (int i = 0; i < dim; ++i) {
                const auto row = reals(c[i], "init_covariance row");
                if (static_cast<int>(row.size()) != dim) fail(c[i], "init_covariance row has the wrong length");
                for (int j = 0; j < dim; ++j) cov(i, j) = row[static_cast<std::size_t>(j)];
            }
            s.init_covariance = cov;
        }
        if (m["noise_variance"]) s.noise_variance = nonneg(m["noise_variance"], "noise_variance");
        return s;
    }

    SimSection sim(const YAML::Node& m) const {
        check_keys(m, "sim",
                   {"n", "d", "alpha", "kappa", "trials", "seed", "data_dist", "thresholds", "gf_step",
                    "gf_continuation", "share_dataset"});
        SimSection s;
        if (m["n"]) s.n = count(m["n"], "n", 1);
        if (m["d"]) s.d = count(m["d"], "d", 1);
        if (m["alpha"]) {
            s.alpha = nonneg(m["alpha"], "alpha");
            if (s.alpha >= 1.0) fail(m["alpha"], "alpha must lie in [0, 1)");
        }
        if (m["kappa"]) s.kappa = count(m["kappa"], "kappa", 0);
        if (m["trials"]) s.trials = count(m["trials"], "trials", 1);
        if (m["seed"]) s.seed = scalar<std::uint64_t>(m["seed"], "seed");
        if (m["data_dist"]) s.data_dist = parse_enum(m["data_dist"], "data_dist", data_dist_from_string);
        if (m["thresholds"]) {
            s.thresholds = reals(m["thresholds"], "thresholds");
            if (s.thresholds.empty()) fail(m["thresholds"], "thresholds must not be empty");
        }
        if (m["gf_step"]) s.gf_step = nonneg(m["gf_step"], "gf_step");
        if (m["gf_continuation"]) s.gf_continuation = nonneg(m["gf_continuation"], "gf_continuation");
        if (m["share_dataset"]) s.share_dataset = scalar<bool>(m["share_dataset"], "share_dataset");
        return s;
    }

    DmftSection dmft(const YAML::Node& m) const {
        check_keys(m, "dmft",
                   {"T", "delta", "mode", "max_iters", "tol", "damping", "auto_damping", "mc_samples",
                    "predict_samples", "seed", "shrinkage", "shrinkage_window", "shrinkage_factor", "drivers"});
        DmftSection s;
        if (m["T"]) s.T = positive(m["T"], "T");
        if (m["delta"]) s.delta = positive(m["delta"], "delta");
        try {
            (void)TimeGrid::make(s.T, s.delta);
        } catch (const InvalidInput& e) {
            fail(m["delta"] ? m["delta"] : m, e.what());
        }
        if (m["mode"]) s.mode = parse_enum(m["mode"], "mode", solve_mode_from_string);
        if (m["max_iters"]) s.max_iters = static_cast<int>(count(m["max_iters"], "max_iters", 1));
        if (m["tol"]) s.tol = nonneg(m["tol"], "tol");
        if (m["damping"]) {
            s.damping = positive(m["damping"], "damping");
            if (s.damping > 1.0) fail(m["damping"], "damping must lie in (0, 1]");
        }
        if (m["auto_damping"]) s.auto_damping = scalar<bool>(m["auto_damping"], "auto_damping");
        if (m["mc_samples"]) s.mc_samples = count(m["mc_samples"], "mc_samples", 2);
        if (m["predict_samples"]) s.predict_samples = count(m["predict_samples"], "predict_samples", 0);
        if (m["seed"]) s.seed = scalar<std::uint64_t>(m["seed"], "seed");
        if (m["shrinkage"]) s.shrinkage = scalar<bool>(m["shrinkage"], "shrinkage");
        if (m["shrinkage_window"]) s.shrinkage_window = nonneg(m["shrinkage_window"], "shrinkage_window");
        if (m["shrinkage_factor"]) {
            s.shrinkage_factor = nonneg(m["shrinkage_factor"], "shrinkage_factor");
            if (s.shrinkage_factor > 1.0) fail(m["shrinkage_factor"], "shrinkage_factor must lie in [0, 1]");
        }
        if (const auto dr = m["drivers"]) {
            if (!dr.IsSequence() || dr.size() == 0) fail(dr, "drivers must be a non-empty list");
            for (const auto& x : dr) {
                const Driver d = parse_enum(x, "driver", driver_from_string);
                if (std::find(s.drivers.begin(), s.drivers.end(), d) != s.drivers.end())
                    fail(x, "driver listed twice");
                s.drivers.push_back(d);
            }
        }
        return s;
    }

    RunSection run(const YAML::Node& m) const {
        check_keys(m, "run", {"engines", "output_dir", "plot_data", "threads", "scale", "sweep"});
        RunSection s;
        if (const auto e = m["engines"]) {
            if (!e.IsSequence() || e.size() == 0) fail(e, "engines must be a non-empty list");
            s.engines.clear();
            static const std::set<std::string> known{"sgd", "sme", "gf", "onepass", "dmft"};
            for (const auto& x : e) {
                const auto name = scalar<std::string>(x, "engine");
                if (!known.count(name)) fail(x, "unknown engine '" + name + "' (expected sgd|sme|gf|onepass|dmft)");
                for (const auto& seen : s.engines)
                    if (seen == name) fail(x, "engine '" + name + "' listed twice");
                s.engines.push_back(name);
            }
        }
        if (m["output_dir"]) s.output_dir = scalar<std::string>(m["output_dir"], "output_dir");
        if (m["plot_data"]) s.plot_data = scalar<bool>(m["plot_data"], "plot_data");
        if (m["threads"]) s.threads = static_cast<int>(count(m["threads"], "threads", 0));
        if (m["scale"]) {
            s.scale = scalar<std::string>(m["scale"], "scale");
            if (s.scale != "desk" && s.scale != "paper") fail(m["scale"], "scale must be 'desk' or 'paper'");
        }
        if (const auto w = m["sweep"]) {
            check_keys(w, "run.sweep", {"parameter", "values"});
            if (!w["parameter"] || !w["values"]) fail(w, "sweep needs 'parameter' and 'values'");
            Sweep sw;
            sw.parameter = scalar<std::string>(w["parameter"], "sweep parameter");
            if (sw.parameter != "eta" && sw.parameter != "gamma")
                fail(w["parameter"], "sweep parameter must be 'eta' or 'gamma'");
            sw.values = reals(w["values"], "sweep values");
            if (sw.values.empty()) fail(w["values"], "sweep values must not be empty");
            for (double v : sw.values)
                if (sw.parameter == "gamma" ? !(v > 0.0) : v < 0.0) fail(w["values"], "sweep value out of range");
            s.sweep = sw;
        }
        return s;
    }

    DeskScale desk(const YAML::Node& m) const {
        check_keys(m, "desk_scale", {"n", "d", "trials"});
        DeskScale s;
        if (m["n"]) s.n = count(m["n"], "desk_scale n", 1);
        if (m["d"]) s.d = count(m["d"], "desk_scale d", 1);
        if (m["trials"]) s.trials = count(m["trials"], "desk_scale trials", 1);
        return s;
    }

    Experiment experiment(const YAML::Node& root) const {
        if (!root.IsMap()) fail(root, "experiment file must be a mapping");
        check_keys(root, "<top level>", {"version", "model", "sim", "dmft", "run", "desk_scale"});
        if (!root["version"]) fail(root, "missing 'version' (expected version: 1)");
        if (scalar<int>(root["version"], "version") != kConfigVersion)
            fail(root["version"], "unsupported config version (expected 1)");
        Experiment e;
        e.source = source_;
        if (!root["model"]) fail(root, "missing 'model' section");
        e.model = model(root["model"]);
        if (root["sim"]) e.sim = sim(root["sim"]);
        if (root["dmft"]) e.dmft = dmft(root["dmft"]);
        if (!root["dmft"]) fail(root, "missing 'dmft' section (it carries the time grid T, delta)");
        if (root["run"]) e.run = run(root["run"]);
        if (root["desk_scale"]) e.desk_scale = desk(root["desk_scale"]);
        const bool needs_sim = std::any_of(e.run.engines.begin(), e.run.engines.end(),
                                           [](const std::string& s) { return s != "dmft"; });
        if (needs_sim && !e.sim) fail(root, "engines other than dmft need a 'sim' section");
        return e;
    }

private:
    std::string source_;
};

void emit_double(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << v; }

template <typename T>
void emit(YAML::Emitter& out, const char* key, const T& v) {
    out << YAML::Key << key << YAML::Value << v;
}

void emit_list(YAML::Emitter& out, const char* key, const std::vector<double>& v) {
    out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (double x : v) out << x;
    out << YAML::EndSeq;
}

}  // namespace

Experiment parse_experiment(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                          ": " + e.msg);
    }
    return Parser(source).experiment(root);
}

Experiment parse_experiment_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_experiment(ss.str(), path);
}

std::string to_yaml(const Experiment& e) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    emit(out, "version", kConfigVersion);

    const auto& m = e.model;
    out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    emit(out, "k", m.k);
    emit(out, "k_star", m.k_star);
    if (m.gamma) emit_double(out, "gamma", *m.gamma);
    emit_double(out, "kappa_bar", m.kappa_bar);
    if (m.eta.times.size() == 1) {
        emit_double(out, "eta", m.eta.values.front());
    } else {
        out << YAML::Key << "eta" << YAML::Value << YAML::BeginMap;
        emit_list(out, "times", m.eta.times);
        emit_list(out, "values", m.eta.values);
        out << YAML::EndMap;
    }
    emit(out, "driver", to_string(m.driver));
    emit(out, "loss", to_string(m.loss.kind));
    emit_double(out, "huber_threshold", m.loss.threshold);
    emit(out, "activation", to_string(m.activation));
    emit(out, "teacher", to_string(m.teacher));
    if (m.lambda) emit_double(out, "lambda", *m.lambda);
    if (m.lambda_onepass) emit_double(out, "lambda_onepass", *m.lambda_onepass);
    if (m.init_covariance) {
        out << YAML::Key << "init_covariance" << YAML::Value << YAML::BeginSeq;
        for (Eigen::Index i = 0; i < m.init_covariance->rows(); ++i) {
            out << YAML::Flow << YAML::BeginSeq;
            for (Eigen::Index j = 0; j < m.init_covariance->cols(); ++j) out << (*m.init_covariance)(i, j);
            out << YAML::EndSeq;
        }
        out << YAML::EndSeq;
    }
    emit_double(out, "noise_variance", m.noise_variance);
    out << YAML::EndMap;

    if (e.sim) {
        const auto& s = *e.sim;
        out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
        emit(out, "n", s.n);
        emit(out, "d", s.d);
        emit_double(out, "alpha", s.alpha);
        emit(out, "kappa", s.kappa);
        emit(out, "trials", s.trials);
        emit(out, "seed", s.seed);
        emit(out, "data_dist", to_string(s.data_dist));
        emit_list(out, "thresholds", s.thresholds);
        emit_double(out, "gf_step", s.gf_step);
        emit_double(out, "gf_continuation", s.gf_continuation);
        emit(out, "share_dataset", s.share_dataset);
        out << YAML::EndMap;
    }
    if (e.dmft) {
        const auto& s = *e.dmft;
        out << YAML::Key << "dmft" << YAML::Value << YAML::BeginMap;
        emit_double(out, "T", s.T);
        emit_double(out, "delta", s.delta);
        emit(out, "mode", to_string(s.mode));
        emit(out, "max_iters", s.max_iters);
        emit_double(out, "tol", s.tol);
        emit_double(out, "damping", s.damping);
        emit(out, "auto_damping", s.auto_damping);
        emit(out, "mc_samples", s.mc_samples);
        emit(out, "predict_samples", s.predict_samples);
        emit(out, "seed", s.seed);
        emit(out, "shrinkage", s.shrinkage);
        emit_double(out, "shrinkage_window", s.shrinkage_window);
        emit_double(out, "shrinkage_factor", s.shrinkage_factor);
        if (!s.drivers.empty()) {
            out << YAML::Key << "drivers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (Driver d : s.drivers) out << to_string(d);
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }
    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "engines" << YAML::Value << YAML::Flow << e.run.engines;
    emit(out, "output_dir", e.run.output_dir);
    emit(out, "plot_data", e.run.plot_data);
    emit(out, "threads", e.run.threads);
    emit(out, "scale", e.run.scale);
    if (e.run.sweep) {
        out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
        emit(out, "parameter", e.run.sweep->parameter);
        emit_list(out, "values", e.run.sweep->values);
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    if (e.desk_scale) {
        out << YAML::Key << "desk_scale" << YAML::Value << YAML::BeginMap;
        emit(out, "n", e.desk_scale->n);
        emit(out, "d", e.desk_scale->d);
        if (e.desk_scale->trials) emit(out, "trials", *e.desk_scale->trials);
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

std::vector<Variant> resolve(const Experiment& e) {
    auto fail = [&](const std::string& msg) -> void { throw ConfigError(e.source + ": " + msg); };
    const bool desk = e.run.scale == "desk" && e.desk_scale.has_value();
    const auto& m = e.model;
    const TimeGrid grid = TimeGrid::make(e.dmft->T, e.dmft->delta);

    std::vector<double> values{0.0};
    std::string param;
    if (e.run.sweep) {
        values = e.run.sweep->values;
        param = e.run.sweep->parameter;
    }
    if (param == "gamma" && !e.sim) fail("a gamma sweep needs a 'sim' section (it sets n = gamma d)");
    if (param == "gamma" && m.gamma) fail("model.gamma conflicts with a gamma sweep");

    std::vector<Variant> out;
    for (double v : values) {
        Variant var;
        var.grid = grid;
        std::optional<SimConfig> sc;
        if (e.sim) {
            SimConfig c;
            c.n = desk ? e.desk_scale->n : e.sim->n;
            c.d = desk ? e.desk_scale->d : e.sim->d;
            c.trials = desk && e.desk_scale->trials ? *e.desk_scale->trials : e.sim->trials;
            c.alpha = e.sim->alpha;
            c.kappa = e.sim->kappa;
            c.seed = e.sim->seed;
            c.data_dist = e.sim->data_dist;
            c.thresholds = e.sim->thresholds;
            c.gf_step = e.sim->gf_step;
            c.gf_continuation = e.sim->gf_continuation;
            c.share_dataset = e.sim->share_dataset;
            c.threads = e.run.threads;
            c.grid = grid;
            if (param == "gamma") c.n = static_cast<std::size_t>(std::max(1.0, std::round(v * static_cast<double>(c.d))));
            sc = c;
        }
        double gamma = 0.0;
        if (param == "gamma") {
            gamma = v;
        } else if (sc) {
            gamma = static_cast<double>(sc->n) / static_cast<double>(sc->d);
            if (m.gamma && std::abs(*m.gamma - gamma) > 1e-9 * gamma)
                fail("model.gamma = " + format_double(*m.gamma) + " disagrees with n/d = " + format_double(gamma));
        } else {
            if (!m.gamma) fail("model.gamma is required without a 'sim' section");
            gamma = *m.gamma;
        }

        ModelSpec spec;
        spec.k = m.k;
        spec.k_star = m.k_star;
        spec.gamma = gamma;
        spec.kappa_bar = m.kappa_bar;
        spec.eta = param == "eta" ? EtaSchedule::constant(v) : m.eta;
        spec.driver = m.driver;
        spec.loss = m.loss;
        spec.activation = m.activation;
        spec.teacher.kind = m.teacher;
        spec.regularizer.lambda = m.lambda_onepass ? gamma * *m.lambda_onepass : m.lambda.value_or(0.0);
        spec.init.covariance = m.init_covariance ? *m.init_covariance : Eigen::MatrixXd::Identity(m.k + m.k_star, m.k + m.k_star);
        spec.noise.variance = m.noise_variance;
        try {
            spec.validate();
            if (sc) sc->validate(spec);
        } catch (const InvalidInput& ex) {
            fail(ex.what());
        }
        var.spec = spec;
        var.sim = sc;
        if (!param.empty()) var.label = param + "=" + format_double(v);
        out.push_back(std::move(var));
    }
    return out;
}

}  // namespace dmft_sgd::cli
