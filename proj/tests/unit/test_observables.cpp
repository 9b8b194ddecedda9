#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "dmft_sgd/errors.hpp"
#include "dmft_sgd/observables.hpp"

using namespace dmft_sgd;

namespace {

ObservableTrace two_trials() {
    ObservableTrace tr;
    tr.times = {0.0, 0.5};
    tr.thresholds = {1.0};
    for (double base : {1.0, 3.0}) {
        TrialObservables o;
        o.overlap = {Eigen::MatrixXd::Constant(1, 1, base), Eigen::MatrixXd::Constant(1, 1, 2 * base)};
        o.self_overlap = o.overlap;
        o.train_loss = {base, base / 3};
        o.xi_cdf = {{0.1}, {0.2}};
        tr.trials.push_back(o);
    }
    return tr;
}

}  // namespace

TEST(Observables, SummarizeGivesMeanAndStandardError) {
    const ObservableTable t = two_trials().summarize();
    const auto ov = select(t, "overlap");
    ASSERT_EQ(ov.size(), 2u);
    EXPECT_DOUBLE_EQ(ov[0].mean, 2.0);
    EXPECT_DOUBLE_EQ(ov[0].std_error, 1.0);  // sample sd sqrt(2) over sqrt(2)
    EXPECT_DOUBLE_EQ(ov[1].mean, 4.0);
    EXPECT_EQ(ov[1].n_trials, 2u);
    EXPECT_DOUBLE_EQ(select(t, "xi_cdf")[1].std_error, 0.0);
    EXPECT_EQ(t.size(), 8u);
}

TEST(Observables, CsvRoundTripIsExact) {
    ObservableTable t = two_trials().summarize();
    t[0].mean = 0.1 + 0.2;
    t[1].mean = 1e-310;
    t[2].mean = -std::numeric_limits<double>::max();
    std::stringstream ss;
    write_table_csv(ss, t, 99, {"engine=sgd"});
    const std::string text = ss.str();
    EXPECT_EQ(text.rfind("# seed=99\n# engine=sgd\n", 0), 0u);
    EXPECT_NE(text.find(std::string(kTraceHeader) + "\n"), std::string::npos);
    EXPECT_TRUE(read_table_csv(ss) == t);
}

TEST(Observables, MalformedCsvReportsLine) {
    std::stringstream ss(std::string(kTraceHeader) + "\n0,overlap,0,0,abc,0,1\n");
    try {
        read_table_csv(ss, "trace.csv");
        FAIL() << "no exception";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("trace.csv:2"), std::string::npos);
    }
}

TEST(Observables, FormatDoubleIsShortest) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
    EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
}
