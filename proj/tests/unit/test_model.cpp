#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/model.hpp"
#include "dmft_sgd/random.hpp"

using namespace dmft_sgd;

namespace {

struct Combo {
    Activation act;
    LossKind loss;
    TeacherKind teacher;
};

ModelSpec make(const Combo& c, int k = 1, int ks = 1) {
    ModelSpec s = single_index_spec(c.act, Loss{c.loss, 0.7}, c.teacher, 0.8, 1.0, 0.1, 0.1);
    s.k = k;
    s.k_star = ks;
    s.init.covariance = Eigen::MatrixXd::Identity(k + ks, k + ks);
    return s;
}

const Combo kCombos[] = {
    {Activation::Linear, LossKind::Squared, TeacherKind::Identity},
    {Activation::Linear, LossKind::Huber, TeacherKind::LinearNoisy},
    {Activation::Tanh, LossKind::Huber, TeacherKind::TanhNoisy},
    {Activation::Tanh, LossKind::Squared, TeacherKind::SinNoisy},
    {Activation::Sin, LossKind::Huber, TeacherKind::SinNoisy},
    {Activation::Sin, LossKind::Squared, TeacherKind::TanhNoisy},
};

}  // namespace

TEST(Model, JacobiansMatchFiniteDifferences) {
    Rng rng(1);
    std::normal_distribution<double> nd;
    for (const auto& c : kCombos)
        for (int k : {1, 3}) {
            const ModelSpec s = make(c, k, 2);
            for (int rep = 0; rep < 50; ++rep) {
                Eigen::VectorXd xi(k), ws(2);
                for (int i = 0; i < k; ++i) xi(i) = 1.5 * nd(rng);
                ws << nd(rng), nd(rng);
                const double eps = 0.3 * nd(rng);
                const FJacobians a = eval_f_jacobians(xi, ws, eps, s);
                const FJacobians fd = finite_difference_jacobians(xi, ws, eps, s, 1e-6);
                // Huber kinks make the finite difference meaningless within the step
                const double r = activation_value(s, xi) - label_value(s, ws, eps);
                if (c.loss == LossKind::Huber && std::abs(std::abs(r) - 0.7) < 1e-3) continue;
                EXPECT_LT((a.d_xi - fd.d_xi).cwiseAbs().maxCoeff(), 1e-6);
                EXPECT_LT((a.d_wstar - fd.d_wstar).cwiseAbs().maxCoeff(), 1e-6);
            }
        }
}

TEST(Model, RawEvaluationAgreesWithCheckedWrappers) {
    const ModelSpec s = make(kCombos[2], 2, 1);
    Eigen::VectorXd xi(2), ws(1);
    xi << 0.4, -1.1;
    ws << 0.9;
    double f[2], dx[4], dw[2];
    eval_f_raw(s, xi.data(), ws.data(), 0.05, f, dx, dw);
    const Eigen::VectorXd fe = eval_f(xi, ws, 0.05, s);
    const FJacobians j = eval_f_jacobians(xi, ws, 0.05, s);
    EXPECT_DOUBLE_EQ(f[0], fe(0));
    EXPECT_DOUBLE_EQ(f[1], fe(1));
    EXPECT_DOUBLE_EQ(dx[0], j.d_xi(0, 0));
    EXPECT_DOUBLE_EQ(dx[3], j.d_xi(1, 1));
    EXPECT_DOUBLE_EQ(dw[1], j.d_wstar(1, 0));
}

TEST(Model, SquaredLinearGradientIsResidual) {
    const ModelSpec s = make(kCombos[0]);
    Eigen::VectorXd xi(1), ws(1);
    xi << 1.25;
    ws << -0.5;
    EXPECT_DOUBLE_EQ(eval_f(xi, ws, 0.0, s)(0), 1.75);
    EXPECT_DOUBLE_EQ(loss_value(s, 1.25, -0.5), 0.5 * 1.75 * 1.75);
}

TEST(Model, HuberLossAndGradientAreClipped) {
    ModelSpec s = make(kCombos[1]);
    EXPECT_DOUBLE_EQ(loss_value(s, 0.5, 0.0), 0.125);
    EXPECT_DOUBLE_EQ(loss_value(s, 3.0, 0.0), 0.7 * (3.0 - 0.35));
    Eigen::VectorXd xi(1), ws(1);
    xi << 10.0;
    ws << 0.0;
    EXPECT_DOUBLE_EQ(eval_f(xi, ws, 0.0, s)(0), 0.7);
    xi << -10.0;
    EXPECT_DOUBLE_EQ(eval_f(xi, ws, 0.0, s)(0), -0.7);
}

TEST(Model, TeacherLabels) {
    Eigen::VectorXd w(1);
    w << 0.3;
    ModelSpec s = make(kCombos[0]);
    EXPECT_DOUBLE_EQ(label_value(s, w, 0.2), 0.3);
    s.teacher.kind = TeacherKind::LinearNoisy;
    EXPECT_DOUBLE_EQ(label_value(s, w, 0.2), 0.5);
    s.teacher.kind = TeacherKind::TanhNoisy;
    EXPECT_DOUBLE_EQ(label_value(s, w, 0.2), std::tanh(0.5));
    s.teacher.kind = TeacherKind::SinNoisy;
    EXPECT_DOUBLE_EQ(label_value(s, w, 0.2), std::sin(0.3) + 0.2);
    s.teacher.kind = TeacherKind::Custom;
    s.teacher.custom.value = [](const Eigen::VectorXd& v, double e) { return v(0) * v(0) + e; };
    EXPECT_DOUBLE_EQ(label_value(s, w, 0.2), 0.09 + 0.2);
    EXPECT_NEAR(label_gradient(s, w, 0.2)(0), 0.6, 1e-8);
}

TEST(Model, CommitteeSumsUnits) {
    ModelSpec s = make(kCombos[2], 3, 2);
    Eigen::VectorXd xi(3), ws(2);
    xi << 0.1, 0.2, -0.3;
    ws << 0.5, -0.4;
    EXPECT_DOUBLE_EQ(activation_value(s, xi), std::tanh(0.1) + std::tanh(0.2) + std::tanh(-0.3));
    EXPECT_DOUBLE_EQ(label_value(s, ws, 0.0), std::tanh(0.5) + std::tanh(-0.4));
}

TEST(Model, DxiBoundHoldsOnSamples) {
    Rng rng(2);
    std::normal_distribution<double> nd;
    for (const auto& c : kCombos) {
        const ModelSpec s = make(c);
        const double bound = s.dxi_f_bound();
        if (!std::isfinite(bound)) continue;
        for (int rep = 0; rep < 2000; ++rep) {
            Eigen::VectorXd xi(1), ws(1);
            xi << 3 * nd(rng);
            ws << nd(rng);
            const FJacobians j = eval_f_jacobians(xi, ws, 0.0, s);
            EXPECT_LE(j.d_xi.norm(), bound + 1e-12);
        }
    }
    EXPECT_TRUE(std::isinf(make(kCombos[3]).dxi_f_bound()));
}

TEST(Model, RidgeRegularizer) {
    ModelSpec s = make(kCombos[0], 2, 1);
    Eigen::VectorXd th(2);
    th << 1.0, -2.0;
    EXPECT_TRUE(eval_g(th, s).isApprox(0.1 * th));
    EXPECT_TRUE(eval_Dg(th, s).isApprox(0.1 * Eigen::MatrixXd::Identity(2, 2)));
}

TEST(Model, EtaScheduleInterpolates) {
    EtaSchedule e{{0.0, 1.0, 3.0}, {1.0, 2.0, 0.0}};
    EXPECT_DOUBLE_EQ(e(-1.0), 1.0);
    EXPECT_DOUBLE_EQ(e(0.5), 1.5);
    EXPECT_DOUBLE_EQ(e(2.0), 1.0);
    EXPECT_DOUBLE_EQ(e(10.0), 0.0);
    EXPECT_FALSE(e.is_constant());
    EXPECT_TRUE(EtaSchedule::constant(0.3).is_constant());
}

TEST(Model, ValidateRejectsBadSpecs) {
    const ModelSpec good = make(kCombos[2]);
    EXPECT_NO_THROW(good.validate());
    ModelSpec s = good;
    s.gamma = 0;
    EXPECT_THROW(s.validate(), InvalidInput);
    s = good;
    s.eta = EtaSchedule::constant(-1.0);
    EXPECT_THROW(s.validate(), InvalidInput);
    s = good;
    s.init.covariance = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(s.validate(), InvalidInput);
    s = good;
    s.init.covariance << 1, 2, 2, 1;  // indefinite
    EXPECT_THROW(s.validate(), InvalidInput);
    s = good;
    s.loss.threshold = 0;
    EXPECT_THROW(s.validate(), InvalidInput);
    s = good;
    s.eta = EtaSchedule{{0.0, 0.0}, {1.0, 1.0}};
    EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(Model, NonFiniteInputsThrow) {
    const ModelSpec s = make(kCombos[2]);
    Eigen::VectorXd xi(1), ws(1);
    xi << std::numeric_limits<double>::quiet_NaN();
    ws << 0.0;
    EXPECT_THROW(eval_f(xi, ws, 0.0, s), InvalidInput);
}

TEST(Model, EnumStringsRoundTrip) {
    for (auto d : {Driver::Poisson, Driver::Gaussian}) EXPECT_EQ(driver_from_string(to_string(d)), d);
    for (auto a : {Activation::Linear, Activation::Tanh, Activation::Sin})
        EXPECT_EQ(activation_from_string(to_string(a)), a);
    for (auto l : {LossKind::Squared, LossKind::Huber}) EXPECT_EQ(loss_from_string(to_string(l)), l);
    for (auto t : {TeacherKind::Identity, TeacherKind::LinearNoisy, TeacherKind::TanhNoisy, TeacherKind::SinNoisy})
        EXPECT_EQ(teacher_from_string(to_string(t)), t);
    EXPECT_THROW(driver_from_string("levy"), InvalidInput);
}

TEST(Model, PsdSqrtReproducesCovariance) {
    Eigen::MatrixXd c(3, 3);
    c << 2, 1, 0, 1, 2, 1, 0, 1, 2;
    const Eigen::MatrixXd r = psd_sqrt(c);
    EXPECT_LT((r * r.transpose() - c).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::MatrixXd singular = Eigen::MatrixXd::Ones(2, 2);
    const Eigen::MatrixXd rs = psd_sqrt(singular);
    EXPECT_LT((rs * rs.transpose() - singular).cwiseAbs().maxCoeff(), 1e-12);
}
