#include <cmath>

#include <gtest/gtest.h>

#include "dmft_sgd/analytic_maps.hpp"
#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/fixed_point.hpp"

using namespace dmft_sgd;

namespace {

ModelSpec linear_spec() {
    return single_index_spec(Activation::Linear, Loss{}, TeacherKind::Identity, 0.8, 0.8, 0.1);
}

}  // namespace

TEST(RidgeMap, VanishingXiSideGivesPureDecay) {
    // no data forces: C_theta^{t,s} = q^{t+s}, C_theta^{t,*} = 0, R_theta^{t,s} = q^{t-s-1}
    ModelSpec spec = linear_spec();
    spec.regularizer.lambda = 0.5;
    const TimeGrid g = TimeGrid::make(1.0, 0.1);
    const XiKernels xi(g, 1, 1);
    const ThetaKernels th = ridge_map(xi, spec);
    const double q = 1 - 0.1 * 0.8 * 0.5;
    for (std::size_t t = 0; t < g.points(); ++t) {
        EXPECT_NEAR(th.C_theta_star(t), 0.0, 1e-15);
        for (std::size_t s = 0; s < g.points(); ++s) {
            EXPECT_NEAR(th.C_theta(t, s), std::pow(q, static_cast<double>(t + s)), 1e-12);
            const double r = s < t ? std::pow(q, static_cast<double>(t - s - 1)) : 0.0;
            EXPECT_NEAR(th.R_theta(t, s), r, 1e-12);
        }
    }
    EXPECT_TRUE(th.R_theta.is_causal());
}

TEST(RidgeMap, ConstantGammaAddsToRidge) {
    // Gamma acts like an extra ridge of strength gamma * Gamma
    ModelSpec spec = linear_spec();
    const TimeGrid g = TimeGrid::make(0.5, 0.05);
    XiKernels xi(g, 1, 1);
    for (std::size_t t = 0; t < g.points(); ++t) xi.Gamma(t) = 0.5;
    const ThetaKernels a = ridge_map(xi, spec);
    ModelSpec b = spec;
    b.regularizer.lambda = 0.1 + 0.8 * 0.5;
    const ThetaKernels c = ridge_map(XiKernels(g, 1, 1), b);
    EXPECT_LT(sup_distance(a.C_theta, c.C_theta), 1e-12);
    EXPECT_LT(sup_distance(a.R_theta, c.R_theta), 1e-12);
}

TEST(LinearMap, DriverIndependentAndExact) {
    const ModelSpec spec = linear_spec();
    const TimeGrid g = TimeGrid::make(2.0, 0.05);
    SolveOptions so;
    const DMFTState st = solve(spec, g, so).state;
    ModelSpec gauss = spec;
    gauss.driver = Driver::Gaussian;
    LinearAux aux;
    const XiKernels a = linear_map(st.theta, spec, &aux);
    EXPECT_TRUE(a == linear_map(st.theta, gauss));
    EXPECT_LT(linear_diagonal_residual(aux, g.delta, spec.kappa_bar), 1e-12);
    EXPECT_EQ(a.C_f(0, 0), 0.0);
    EXPECT_TRUE(a.R_f.is_causal());
    // linear activation, squared loss: Gamma = E[D_xi f] = 1
    for (std::size_t t = 0; t < g.points(); ++t) EXPECT_DOUBLE_EQ(a.Gamma(t), 1.0);
}

TEST(LinearMap, TrainLossAtStartIsHalfInitialResidual) {
    const ModelSpec spec = linear_spec();
    const TimeGrid g = TimeGrid::make(1.0, 0.1);
    const DMFTState st = free_state(spec, g);
    LinearAux aux;
    linear_map(st.theta, spec, &aux);
    // theta0 and theta* independent standard: E[(w0 - w*)^2] / 2 = 1
    EXPECT_NEAR(linear_train_loss(aux)(0), 1.0, 1e-12);
}

TEST(LinearMap, RejectsNonlinearModels) {
    ModelSpec spec = linear_spec();
    const ThetaKernels th(TimeGrid::make(1.0, 0.5), 1, 1);
    spec.activation = Activation::Tanh;
    EXPECT_THROW(linear_map(th, spec), UnsupportedModel);
    spec.activation = Activation::Linear;
    spec.loss.kind = LossKind::Huber;
    EXPECT_THROW(linear_map(th, spec), UnsupportedModel);
    spec = linear_spec();
    spec.k = 2;
    spec.init.covariance = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(linear_map(ThetaKernels(TimeGrid::make(1.0, 0.5), 2, 1), spec), UnsupportedModel);
}
