#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dmft_sgd/random.hpp"

namespace dmft_sgd {

/// Law of the scalar process driving the effective xi-dynamics: Poisson
/// increments model SGD batch sampling, Gaussian increments the SME diffusion.
enum class Driver { Poisson, Gaussian };

enum class LossKind { Squared, Huber };

/// L(yhat, y) as a function of the residual r = yhat - y.
/// Squared: r^2 / 2. Huber(c): r^2 / 2 for |r| < c, c (|r| - c/2) otherwise.
/// L'' at the Huber kink |r| = c is taken to be 0.
struct Loss {
    LossKind kind = LossKind::Squared;
    double threshold = 1.0;

    bool operator==(const Loss&) const = default;
};

/// Student activation. For k > 1 the prediction is sigma(xi) = sum_j phi(xi_j)
/// (a committee of k units with unit read-out); k = 1 is the single-index case.
enum class Activation { Linear, Tanh, Sin };

/// Teacher label maps y = sigma*(w*, eps), written for k* = 1 and summed over
/// the k* teacher directions otherwise:
///   Identity     sum_j w*_j
///   LinearNoisy  sum_j w*_j + eps
///   TanhNoisy    sum_j tanh(w*_j + eps)
///   SinNoisy     sum_j sin(w*_j) + eps
///   Custom       caller-supplied value and gradient in w*
enum class TeacherKind { Identity, LinearNoisy, TanhNoisy, SinNoisy, Custom };

struct CustomTeacher {
    std::function<double(const Eigen::VectorXd& w_star, double eps)> value;
    /// Gradient in w*. If empty, central finite differences (step 1e-5) are used.
    std::function<Eigen::VectorXd(const Eigen::VectorXd& w_star, double eps)> gradient;
};

struct Teacher {
    TeacherKind kind = TeacherKind::Identity;
    CustomTeacher custom;
};

/// G(theta) = lambda/2 |theta|^2, so g(theta) = lambda theta.
struct Ridge {
    double lambda = 0.0;
    bool operator==(const Ridge&) const = default;
};

/// Piecewise-linear learning-rate schedule t -> eta_bar(t), held constant
/// outside [times.front(), times.back()]. A single knot is a constant rate.
struct EtaSchedule {
    std::vector<double> times{0.0};
    std::vector<double> values{0.0};

    static EtaSchedule constant(double eta) { return EtaSchedule{{0.0}, {eta}}; }

    double operator()(double t) const;
    bool is_constant() const;
    bool operator==(const EtaSchedule&) const = default;
};

/// Mean-zero Gaussian law of (theta0, theta*) in R^{k + k*}; theta0 first.
struct InitLaw {
    Eigen::MatrixXd covariance;
};

/// eps ~ N(0, variance); variance 0 is the point mass at 0.
struct NoiseLaw {
    double variance = 0.0;
    bool operator==(const NoiseLaw&) const = default;
};

struct ModelSpec {
    int k = 1;
    int k_star = 1;
    double gamma = 1.0;
    double kappa_bar = 1.0;
    EtaSchedule eta = EtaSchedule::constant(1.0);
    Driver driver = Driver::Poisson;
    Loss loss;
    Activation activation = Activation::Linear;
    Teacher teacher;
    Ridge regularizer;
    InitLaw init;
    NoiseLaw noise;

    /// Throws InvalidInput when an invariant fails (dimensions, positivity,
    /// eta >= 0 at the knots, symmetric PSD init covariance of the right size).
    void validate() const;

    Eigen::MatrixXd cov_theta0() const { return init.covariance.topLeftCorner(k, k); }
    Eigen::MatrixXd cov_cross() const { return init.covariance.topRightCorner(k, k_star); }
    Eigen::MatrixXd cov_star() const { return init.covariance.bottomRightCorner(k_star, k_star); }

    /// Squared loss with linear activation: the family with closed-form maps.
    bool is_linear_squared() const {
        return loss.kind == LossKind::Squared && activation == Activation::Linear;
    }
    /// Teacher derivative in w* is constant (identity-type labels).
    bool has_linear_teacher() const {
        return teacher.kind == TeacherKind::Identity || teacher.kind == TeacherKind::LinearNoisy;
    }

    /// Upper bound on |D_xi f|_op over all inputs; +inf when unbounded.
    double dxi_f_bound() const;
};

/// Convenience constructor for the default single-index problem with
/// independent standard Gaussian theta0 and theta*.
ModelSpec single_index_spec(Activation activation, Loss loss, TeacherKind teacher, double gamma, double eta,
                            double lambda, double noise_variance = 0.0);

double activation_value(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& xi);
double label_value(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps);
Eigen::VectorXd label_gradient(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps);
double loss_value(const ModelSpec& spec, double yhat, double y);

/// f(xi, w*, eps) = L'(sigma(xi), sigma*(w*, eps)) grad sigma(xi).
Eigen::VectorXd eval_f(const Eigen::Ref<const Eigen::VectorXd>& xi, const Eigen::Ref<const Eigen::VectorXd>& w_star,
                       double eps, const ModelSpec& spec);

struct FJacobians {
    Eigen::MatrixXd d_xi;     // k x k
    Eigen::MatrixXd d_wstar;  // k x k*
};

FJacobians eval_f_jacobians(const Eigen::Ref<const Eigen::VectorXd>& xi,
                            const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps, const ModelSpec& spec);

/// Central-difference Jacobians of eval_f; the fallback for user-supplied models.
FJacobians finite_difference_jacobians(const Eigen::Ref<const Eigen::VectorXd>& xi,
                                       const Eigen::Ref<const Eigen::VectorXd>& w_star, double eps,
                                       const ModelSpec& spec, double step = 1e-5);

Eigen::VectorXd eval_g(const Eigen::Ref<const Eigen::VectorXd>& theta, const ModelSpec& spec);
Eigen::MatrixXd eval_Dg(const Eigen::Ref<const Eigen::VectorXd>& theta, const ModelSpec& spec);

/// Allocation-free evaluation for inner loops. Pointers address k-, k*- and
/// column-major k x k / k x k* buffers; any output may be null. Inputs are
/// assumed finite (the checked wrappers above validate).
void eval_f_raw(const ModelSpec& spec, const double* xi, const double* w_star, double eps, double* f,
                double* d_xi, double* d_wstar);

/// Symmetric square root (V diag(sqrt(max(l, 0))) V^T) for sampling from
/// possibly singular PSD covariances.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& cov);

/// Draws one (theta0, theta*) row from the init law given its psd_sqrt factor.
void sample_init_row(const Eigen::MatrixXd& init_factor, Rng& rng, Eigen::Ref<Eigen::VectorXd> theta0,
                     Eigen::Ref<Eigen::VectorXd> theta_star);

double sample_noise(const ModelSpec& spec, Rng& rng);

std::string to_string(Driver d);
std::string to_string(LossKind l);
std::string to_string(Activation a);
std::string to_string(TeacherKind t);
Driver driver_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
TeacherKind teacher_from_string(const std::string& s);

}  // namespace dmft_sgd
