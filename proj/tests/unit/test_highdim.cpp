#include <cmath>

#include <gtest/gtest.h>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/highdim.hpp"

using namespace dmft_sgd;

namespace {

ModelSpec linear_spec(double eta = 0.8, double lambda = 0.1) {
    return single_index_spec(Activation::Linear, Loss{}, TeacherKind::Identity, 0.75, eta, lambda);
}

SimConfig small(std::size_t n = 60, std::size_t d = 80) {
    SimConfig c;
    c.n = n;
    c.d = d;
    c.kappa = 1;
    c.trials = 3;
    c.seed = 50;
    c.grid = TimeGrid::make(1.0, 0.1);
    return c;
}

// theta(tau) for d theta / d tau = -(X^T (X theta - X theta*) + lambda theta)
Eigen::MatrixXd exact_flow(const Dataset& ds, double lambda, double tau) {
    const Eigen::MatrixXd X = ds.X;
    const Eigen::MatrixXd A = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    const Eigen::VectorXd ev = es.eigenvalues().array() + lambda;
    const Eigen::MatrixXd V = es.eigenvectors();
    const Eigen::MatrixXd inf = V * (ev.cwiseInverse().asDiagonal() * (V.transpose() * (A * ds.theta_star)));
    const Eigen::VectorXd decay = (-tau * ev.array()).exp();
    return inf + V * (decay.asDiagonal() * (V.transpose() * (ds.theta0 - inf)));
}

}  // namespace

TEST(Highdim, DatasetScaling) {
    SimConfig c = small(400, 300);
    const ModelSpec spec = linear_spec();
    const Dataset g = generate_dataset(c, spec, 1);
    EXPECT_NEAR(g.X.squaredNorm() / (400.0 * 300.0), 1.0 / 300, 0.05 / 300);
    EXPECT_LT((g.y - g.X * g.theta_star).cwiseAbs().maxCoeff(), 1e-12);
    c.data_dist = DataDist::Rademacher;
    const Dataset r = generate_dataset(c, spec, 1);
    for (Eigen::Index i = 0; i < r.X.size(); ++i) ASSERT_DOUBLE_EQ(std::abs(r.X.data()[i]), 1 / std::sqrt(300.0));
    EXPECT_TRUE(generate_dataset(c, spec, 1).X == r.X);
}

TEST(Highdim, ZeroLearningRateFreezesObservables) {
    const ModelSpec spec = linear_spec(0.0);
    const SimConfig c = small();
    for (Engine e : {Engine::Sgd, Engine::Sme, Engine::GradientFlow}) {
        if (e == Engine::GradientFlow) continue;  // gf ignores eta
        const ObservableTrace tr = simulate(e, c, spec);
        for (const auto& trial : tr.trials)
            for (std::size_t t = 1; t < tr.times.size(); ++t) {
                EXPECT_DOUBLE_EQ(trial.overlap[t](0, 0), trial.overlap[0](0, 0));
                EXPECT_DOUBLE_EQ(trial.train_loss[t], trial.train_loss[0]);
            }
    }
    SimConfig one = c;
    const ObservableTrace op = simulate(Engine::OnePass, one, spec);
    EXPECT_DOUBLE_EQ(op.trials[0].self_overlap.back()(0, 0), op.trials[0].self_overlap.front()(0, 0));
}

TEST(Highdim, GradientFlowMatchesExactSolution) {
    SimConfig c = small(30, 40);
    c.gf_step = 0.1 / 64;
    const ModelSpec spec = linear_spec(1.0, 0.1);
    const Dataset ds = generate_dataset(c, spec, 2);
    Eigen::MatrixXd last;
    const TrialObservables obs = run_gradient_flow(ds, c, spec, &last);
    for (std::size_t t = 0; t < c.grid.points(); ++t) {
        const Eigen::MatrixXd th = exact_flow(ds, 0.1, c.grid.time(t));
        const double want = (th.transpose() * ds.theta_star)(0, 0) / 40.0;
        EXPECT_NEAR(obs.overlap[t](0, 0), want, 2e-3 * std::max(1.0, std::abs(want)));
    }
}

TEST(Highdim, GradientFlowEulerIsFirstOrder) {
    SimConfig c = small(30, 40);
    c.grid = TimeGrid::make(1.0, 0.5);
    const ModelSpec spec = linear_spec(1.0, 0.1);
    const Dataset ds = generate_dataset(c, spec, 3);
    const Eigen::MatrixXd exact = exact_flow(ds, 0.1, 1.0);
    auto err = [&](double h) {
        c.gf_step = h;
        Eigen::MatrixXd th;
        run_gradient_flow(ds, c, spec, &th);
        return (th - exact).norm();
    };
    const double r = err(0.5 / 16) / err(0.5 / 32);
    EXPECT_GT(r, 1.6);
    EXPECT_LT(r, 2.4);
}

TEST(Highdim, FlowUntilConvergedReachesStationaryPoint) {
    const SimConfig c = small(30, 40);
    const ModelSpec spec = linear_spec(1.0, 0.1);
    const Dataset ds = generate_dataset(c, spec, 4);
    const FlowResult fr = gradient_flow_until_converged(ds, ds.theta0, spec, 0.05, 1e-10);
    ASSERT_TRUE(fr.converged);
    EXPECT_LT((fr.theta - exact_flow(ds, 0.1, 1e4)).norm(), 1e-6);
}

TEST(Highdim, SgdAndSmeShareDatasetsAndStart) {
    const ModelSpec spec = linear_spec();
    const SimConfig c = small();
    const ObservableTrace a = simulate(Engine::Sgd, c, spec), b = simulate(Engine::Sme, c, spec);
    for (std::size_t m = 0; m < c.trials; ++m) {
        EXPECT_EQ(a.trials[m].overlap[0], b.trials[m].overlap[0]);
        EXPECT_EQ(a.trials[m].train_loss[0], b.trials[m].train_loss[0]);
        EXPECT_NE(a.trials[m].overlap.back(), b.trials[m].overlap.back());
    }
    EXPECT_NE(a.trials[0].overlap[0], a.trials[1].overlap[0]);
}

TEST(Highdim, SharedDatasetOption) {
    SimConfig c = small();
    c.share_dataset = true;
    const ObservableTrace a = simulate(Engine::Sgd, c, linear_spec());
    EXPECT_EQ(a.trials[0].overlap[0], a.trials[1].overlap[0]);
    EXPECT_NE(a.trials[0].overlap.back(), a.trials[1].overlap.back());
}

TEST(Highdim, DeterministicAcrossThreadCounts) {
    const ModelSpec spec = single_index_spec(Activation::Tanh, Loss{LossKind::Huber, 1.0}, TeacherKind::TanhNoisy, 0.75,
                                             1.0, 0.1, 0.1);
    SimConfig c = small();
    c.threads = 1;
    const auto a = simulate(Engine::Sgd, c, spec).summarize();
    c.threads = 3;
    EXPECT_TRUE(a == simulate(Engine::Sgd, c, spec).summarize());
}

TEST(Highdim, SgdReadsIterateOnTheEpochScale) {
    // alpha = 1/2, n = 64: 8 updates per unit time, batch round(kappa_bar * 8)
    SimConfig c = small(64, 80);
    c.alpha = 0.5;
    c.kappa = 0;
    const ModelSpec spec = linear_spec();
    EXPECT_EQ(c.batch_size(spec), 8u);
    const ObservableTrace tr = simulate(Engine::Sgd, c, spec);
    EXPECT_EQ(tr.times.size(), c.grid.points());
}

TEST(Highdim, ContinuationAppendsFlowTail) {
    SimConfig c = small();
    c.gf_continuation = 0.5;
    const ObservableTrace tr = simulate(Engine::Sgd, c, linear_spec());
    ASSERT_EQ(tr.times.size(), c.grid.points() + 5);
    EXPECT_NEAR(tr.times.back(), 1.5, 1e-12);
    EXPECT_EQ(tr.trials[0].overlap.size(), tr.times.size());
}

TEST(Highdim, DivergenceIsReported) {
    const SimConfig c = small();
    EXPECT_THROW(simulate(Engine::Sgd, c, linear_spec(200.0)), DivergenceError);
    EXPECT_THROW(simulate(Engine::Sme, c, linear_spec(200.0)), NumericalError);
}

TEST(Highdim, ConfigValidation) {
    const ModelSpec spec = linear_spec();
    SimConfig c = small();
    c.kappa = 100;
    EXPECT_THROW(c.validate(spec), InvalidInput);
    c = small();
    c.alpha = 1.0;
    EXPECT_THROW(c.validate(spec), InvalidInput);
    c = small();
    c.trials = 0;
    EXPECT_THROW(c.validate(spec), InvalidInput);
    c = small();
    c.gf_step = 0.03;
    const Dataset ds = generate_dataset(c, spec, 1);
    EXPECT_THROW(run_gradient_flow(ds, c, spec), InvalidInput);
}

TEST(Highdim, EngineStrings) {
    for (Engine e : {Engine::Sgd, Engine::Sme, Engine::GradientFlow, Engine::OnePass})
        EXPECT_EQ(engine_from_string(to_string(e)), e);
    EXPECT_EQ(data_dist_from_string("rademacher"), DataDist::Rademacher);
    EXPECT_THROW(engine_from_string("adam"), InvalidInput);
}
