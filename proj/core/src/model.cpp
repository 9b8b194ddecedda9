#include "dmft_sgd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dmft_sgd/errors.hpp"

namespace dmft_sgd {

namespace {

// phi, phi', phi'' for the student activation
inline void activation_derivs(Activation a, double x, double& v, double& d1, double& d2) {
    switch (a) {
        case Activation::Linear:
            v = x;
            d1 = 1.0;
            d2 = 0.0;
            return;
        case Activation::Tanh: {
            const double th = std::tanh(x);
            v = th;
            d1 = 1.0 - th * th;
            d2 = -2.0 * th * d1;
            return;
        }
        case Activation::Sin:
            v = std::sin(x);
            d1 = std::cos(x);
            d2 = -v;
            return;
    }
    v = d1 = d2 = 0.0;
}

// L'(r) and L''(r) in the residual r = yhat - y
inline void loss_derivs(const Loss& loss, double r, double& d1, double& d2) {
    if (loss.kind == LossKind::Squared) {
        d1 = r;
        d2 = 1.0;
        return;
    }
    const double c = loss.threshold;
    if (std::abs(r) < c) {
        d1 = r;
        d2 = 1.0;
    } else {
        d1 = r > 0 ? c : -c;
        d2 = 0.0;
    }
}

double teacher_value_raw(const ModelSpec& spec, const double* w, double eps) {
    const int ks = spec.k_star;
    double y = 0.0;
    switch (spec.teacher.kind) {
        case TeacherKind::Identity:
            for (int j = 0; j < ks; ++j) y += w[j];
            return y;
        case TeacherKind::LinearNoisy:
            for (int j = 0; j < ks; ++j) y += w[j] + eps;
            return y;
        case TeacherKind::TanhNoisy:
            for (int j = 0; j < ks; ++j) y += std::tanh(w[j] + eps);
            return y;
        case TeacherKind::SinNoisy:
            for (int j = 0; j < ks; ++j) y += std::sin(w[j]) + eps;
            return y;
        case TeacherKind::Custom: {
            Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w, ks);
            return spec.teacher.custom.value(wv, eps);
        }
    }
    return y;
}

void teacher_gradient_raw(const ModelSpec& spec, const double* w, double eps, double* grad) {
    const int ks = spec.k_star;
    switch (spec.teacher.kind) {
        case TeacherKind::Identity:
        case TeacherKind::LinearNoisy:
            for (int j = 0; j < ks; ++j) grad[j] = 1.0;
            return;
        case TeacherKind::TanhNoisy:
            for (int j = 0; j < ks; ++j) {
                const double th = std::tanh(w[j] + eps);
                grad[j] = 1.0 - th * th;
            }
            return;
        case TeacherKind::SinNoisy:
            for (int j = 0; j < ks; ++j) grad[j] = std::cos(w[j]);
            return;
        case TeacherKind::Custom: {
            Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w, ks);
            if (spec.teacher.custom.gradient) {
                const Eigen::VectorXd g = spec.teacher.custom.gradient(wv, eps);
                for (int j = 0; j < ks; ++j) grad[j] = g(j);
                return;
            }
            constexpr double h = 1e-5;
            for (int j = 0; j < ks; ++j) {
                Eigen::VectorXd p = wv, m = wv;
                p(j) += h;
                m(j) -= h;
                grad[j] = (spec.teacher.custom.value(p, eps) - spec.teacher.custom.value(m, eps)) / (2 * h);
            }
            return;
        }
    }
}

void require_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
    if (!v.allFinite()) throw InvalidInput(std::string("non-finite ") + what);
}

void check_dims(const ModelSpec& spec, Eigen::Index xi, Eigen::Index ws) {
    if (xi != spec.k || ws != spec.k_star) throw InvalidInput("input dimensions do not match (k, k*)");
}

}  // namespace

double EtaSchedule::operator()(double t) const {
    if (values.size() == 1 || t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin());
    const double t0 = times[i - 1], t1 = times[i];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * values[i - 1] + w * values[i];
}

bool EtaSchedule::is_constant() const {
    return std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
}

void ModelSpec::validate() const {
    if (k < 1 || k_star < 1) throw InvalidInput("k and k_star must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInput("gamma must be positive");
    if (!(kappa_bar > 0.0) || !std::isfinite(kappa_bar)) throw InvalidInput("kappa_bar must be positive");
    if (eta.times.empty() || eta.times.size() != eta.values.size())
        throw InvalidInput("eta schedule needs matching, non-empty times and values");
    for (std::size_t i = 0; i < eta.values.size(); ++i) {
        if (!(eta.values[i] >= 0.0) || !std::isfinite(eta.values[i]))
            throw InvalidInput("eta schedule values must be finite and >= 0");
        if (i > 0 && !(eta.times[i] > eta.times[i - 1])) throw InvalidInput("eta schedule times must increase");
    }
    if (loss.kind == LossKind::Huber && !(loss.threshold > 0.0)) throw InvalidInput("Huber threshold must be > 0");
    if (!(regularizer.lambda >= 0.0) || !std::isfinite(regularizer.lambda))
        throw InvalidInput("ridge lambda must be >= 0");
    if (!(noise.variance >= 0.0) || !std::isfinite(noise.variance))
        throw InvalidInput("noise variance must be >= 0");
    if (teacher.kind == TeacherKind::Custom && !teacher.custom.value)
        throw InvalidInput("custom teacher needs a value function");
    const int m = k + k_star;
    const auto& S = init.covariance;
    if (S.rows() != m || S.cols() != m) throw InvalidInput("init covariance must be (k+k*) x (k+k*)");
    if (!S.allFinite()) throw InvalidInput("init covariance has non-finite entries");
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()))
        throw InvalidInput("init covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff()))
        throw InvalidInput("init covariance must be PSD");
}

double ModelSpec::dxi_f_bound() const {
    const double kk = static_cast<double>(k);
    if (activation == Activation::Linear) {
        // L' diag(phi'') vanishes; L'' <= 1 for both losses
        return kk;
    }
    if (loss.kind == LossKind::Squared) return std::numeric_limits<double>::infinity();
    // |tanh''| <= 4/(3 sqrt 3), |sin''| <= 1
    const double max_d2 = activation == Activation::Tanh ? 4.0 / (3.0 * std::sqrt(3.0)) : 1.0;
    return kk + loss.threshold * max_d2;
}

ModelSpec single_index_spec(Activation activation, Loss loss, TeacherKind teacher, double gamma, double eta,
                            double lambda, double noise_variance) {
    ModelSpec s;
    s.k = 1;
    s.k_star = 1;
    s.gamma = gamma;
    s.kappa_bar = 1.0;
    s.eta = EtaSchedule::constant(eta);
    s.loss = loss;
    s.activation = activation;
    s.teacher.kind = teacher;
    s.regularizer.lambda = lambda;
    s.init.covariance = Eigen::MatrixXd::Identity(2, 2);
    s.noise.variance = noise_variance;
    return s;
}

void eval_f_raw(const ModelSpec& spec, const double* xi, const double* w_star, double eps, double* f, double* d_xi,
                double* d_wstar) {
    const int k = spec.k;
    double sigma = 0.0;
    double d1[16], d2[16];
    double* p1 = d1;
    double* p2 = d2;
    std::vector<double> heap;
    if (k > 16) {
        heap.resize(2 * static_cast<std::size_t>(k));
        p1 = heap.data();
        p2 = heap.data() + k;
    }
    for (int j = 0; j < k; ++j) {
        double v;
        activation_derivs(spec.activation, xi[j], v, p1[j], p2[j]);
        sigma += v;
    }
    const double y = teacher_value_raw(spec, w_star, eps);
    double l1, l2;
    loss_derivs(spec.loss, sigma - y, l1, l2);
    if (f)
        for (int j = 0; j < k; ++j) f[j] = l1 * p1[j];
    if (d_xi) {
        for (int c = 0; c < k; ++c)
            for (int r = 0; r < k; ++r) d_xi[r + c * k] = l2 * p1[r] * p1[c] + (r == c ? l1 * p2[r] : 0.0);
    }
    if (d_wstar) {
        const int ks = spec.k_star;
        double gbuf[16];
        std::vector<double> gheap;
        double* g = gbuf;
        if (ks > 16) {
            gheap.resize(static_cast<std::size_t>(ks));
            g = gheap.data();
        }
        teacher_gradient_raw(spec, w_star, eps, g);
        for (int c = 0; c < ks; ++c)
            for (int r = 0; r < k; ++r) d_wstar[r + c * k] = -l2 * p1[r] * g[c];
    }
}

double activation_value(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < xi.size(); ++j) {
        double v, d1, d2;
        activation_derivs(spec.activation, xi(j), v, d1, d2);
        s += v;
    }
    return s;
}

double label_value(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps) {
    if (w_star.size() != spec.k_star) throw InvalidInput("w* dimension does not match k*");
    Eigen::VectorXd w = w_star;
    return teacher_value_raw(spec, w.data(), eps);
}

Eigen::VectorXd label_gradient(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps) {
    if (w_star.size() != spec.k_star) throw InvalidInput("w* dimension does not match k*");
    Eigen::VectorXd w = w_star;
    Eigen::VectorXd g(spec.k_star);
    teacher_gradient_raw(spec, w.data(), eps, g.data());
    return g;
}

double loss_value(const ModelSpec& spec, double yhat, double y) {
    const double r = yhat - y;
    if (spec.loss.kind == LossKind::Squared) return 0.5 * r * r;
    const double c = spec.loss.threshold;
    const double a = std::abs(r);
    return a < c ? 0.5 * r * r : c * (a - 0.5 * c);
}

Eigen::VectorXd eval_f(const Eigen::Ref<const Eigen::VectorXd>& xi, const Eigen::Ref<const Eigen::VectorXd>& w_star,
                       double eps, const ModelSpec& spec) {
    check_dims(spec, xi.size(), w_star.size());
    require_finite(xi, "xi");
    require_finite(w_star, "w*");
    if (!std::isfinite(eps)) throw InvalidInput("non-finite eps");
    Eigen::VectorXd x = xi, w = w_star, f(spec.k);
    eval_f_raw(spec, x.data(), w.data(), eps, f.data(), nullptr, nullptr);
    return f;
}

FJacobians eval_f_jacobians(const Eigen::Ref<const Eigen::VectorXd>& xi,
                            const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps, const ModelSpec& spec) {
    check_dims(spec, xi.size(), w_star.size());
    require_finite(xi, "xi");
    require_finite(w_star, "w*");
    if (!std::isfinite(eps)) throw InvalidInput("non-finite eps");
    Eigen::VectorXd x = xi, w = w_star;
    FJacobians J{Eigen::MatrixXd(spec.k, spec.k), Eigen::MatrixXd(spec.k, spec.k_star)};
    eval_f_raw(spec, x.data(), w.data(), eps, nullptr, J.d_xi.data(), J.d_wstar.data());
    return J;
}

FJacobians finite_difference_jacobians(const Eigen::Ref<const Eigen::VectorXd>& xi,
                                       const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps,
                                       const ModelSpec& spec, double step) {
    FJacobians J{Eigen::MatrixXd(spec.k, spec.k), Eigen::MatrixXd(spec.k, spec.k_star)};
    for (int j = 0; j < spec.k; ++j) {
        Eigen::VectorXd p = xi, m = xi;
        p(j) += step;
        m(j) -= step;
        J.d_xi.col(j) = (eval_f(p, w_star, eps, spec) - eval_f(m, w_star, eps, spec)) / (2 * step);
    }
    for (int j = 0; j < spec.k_star; ++j) {
        Eigen::VectorXd p = w_star, m = w_star;
        p(j) += step;
        m(j) -= step;
        J.d_wstar.col(j) = (eval_f(xi, p, eps, spec) - eval_f(xi, m, eps, spec)) / (2 * step);
    }
    return J;
}

Eigen::VectorXd eval_g(const Eigen::Ref<const Eigen::VectorXd>& theta, const ModelSpec& spec) {
    return spec.regularizer.lambda * theta;
}

Eigen::MatrixXd eval_Dg(const Eigen::Ref<const Eigen::VectorXd>& theta, const ModelSpec& spec) {
    return spec.regularizer.lambda * Eigen::MatrixXd::Identity(theta.size(), theta.size());
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

void sample_init_row(const Eigen::MatrixXd& init_factor, Rng& rng, Eigen::Ref<Eigen::VectorXd> theta0,
                     Eigen::Ref<Eigen::VectorXd> theta_star) {
    std::normal_distribution<double> normal;
    const Eigen::Index m = init_factor.rows();
    Eigen::VectorXd g(m);
    for (Eigen::Index i = 0; i < m; ++i) g(i) = normal(rng);
    const Eigen::VectorXd v = init_factor * g;
    theta0 = v.head(theta0.size());
    theta_star = v.tail(theta_star.size());
}

double sample_noise(const ModelSpec& spec, Rng& rng) {
    if (spec.noise.variance == 0.0) return 0.0;
    std::normal_distribution<double> normal(0.0, std::sqrt(spec.noise.variance));
    return normal(rng);
}

std::string to_string(Driver d) { return d == Driver::Poisson ? "poisson" : "gaussian"; }
std::string to_string(LossKind l) { return l == LossKind::Squared ? "squared" : "huber"; }

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Sin: return "sin";
    }
    return "?";
}

std::string to_string(TeacherKind t) {
    switch (t) {
        case TeacherKind::Identity: return "identity";
        case TeacherKind::LinearNoisy: return "linear_noisy";
        case TeacherKind::TanhNoisy: return "tanh_noisy";
        case TeacherKind::SinNoisy: return "sin_noisy";
        case TeacherKind::Custom: return "custom";
    }
    return "?";
}

Driver driver_from_string(const std::string& s) {
    if (s == "poisson") return Driver::Poisson;
    if (s == "gaussian") return Driver::Gaussian;
    throw InvalidInput("unknown driver '" + s + "' (expected poisson|gaussian)");
}

LossKind loss_from_string(const std::string& s) {
    if (s == "squared") return LossKind::Squared;
    if (s == "huber") return LossKind::Huber;
    throw InvalidInput("unknown loss '" + s + "' (expected squared|huber)");
}

Activation activation_from_string(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sin") return Activation::Sin;
    throw InvalidInput("unknown activation '" + s + "' (expected linear|tanh|sin)");
}

TeacherKind teacher_from_string(const std::string& s) {
    if (s == "identity") return TeacherKind::Identity;
    if (s == "linear_noisy") return TeacherKind::LinearNoisy;
    if (s == "tanh_noisy") return TeacherKind::TanhNoisy;
    if (s == "sin_noisy") return TeacherKind::SinNoisy;
    if (s == "custom") return TeacherKind::Custom;
    throw InvalidInput("unknown teacher '" + s + "'");
}

}  // namespace dmft_sgd
