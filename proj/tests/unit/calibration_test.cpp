#include <gtest/gtest.h>

#include "qpgamma/calibration.hpp"
#include "qpgamma/errors.hpp"
#include "test_support.hpp"

using namespace qpgamma;

namespace {

const DepositLog& deposits()
{
    static const DepositLog log = [] {
        BatchOptions o;
        o.bias_cone_fraction = 0.99;
        return run_decay_batch(default_config(), 30000, o);
    }();
    return log;
}

CalibrationGrid small_grid()
{
    CalibrationGrid g;
    g.lambda_e = {400e-6, 800e-6};
    g.ratio = {1.0, 1.55};
    g.f_q = {0.2, 0.3};
    return g;
}

}  // namespace

TEST(Calibration, SurfaceOrderingAndSelfConsistency)
{
    const auto& table = qpgamma::testing::default_table();
    auto res = calibrate_parameters(default_config(), table, deposits(), CalibrationTargets{}, small_grid());
    ASSERT_EQ(res.surface.size(), 8u);
    EXPECT_EQ(res.surface[0].params.lambda_e, 400e-6);
    EXPECT_EQ(res.surface[1].params.f_q, 0.3);
    EXPECT_NEAR(res.surface[2].params.lambda_h, 400e-6 * 1.55, 1e-15);
    EXPECT_EQ(res.surface[4].params.lambda_e, 800e-6);
    for (std::size_t i = 0; i < res.surface.size(); ++i)
        EXPECT_GE(res.surface[i].chi2, res.surface[res.best].chi2);

    for (std::size_t k : {1u, 6u}) {
        const auto t = targets_from_point(res, k);
        rescore(res, t);
        EXPECT_EQ(res.best, k);
        EXPECT_NEAR(res.surface[k].chi2, 0.0, 1e-12);
    }
}

TEST(Calibration, DeterministicAcrossWorkers)
{
    const auto& table = qpgamma::testing::default_table();
    CalibrationOptions o1, o3;
    o3.jobs = 3;
    const auto a = calibrate_parameters(default_config(), table, deposits(), CalibrationTargets{}, small_grid(), o1);
    const auto b = calibrate_parameters(default_config(), table, deposits(), CalibrationTargets{}, small_grid(), o3);
    ASSERT_EQ(a.surface.size(), b.surface.size());
    for (std::size_t i = 0; i < a.surface.size(); ++i) {
        EXPECT_EQ(a.surface[i].asymmetry, b.surface[i].asymmetry);
        EXPECT_EQ(a.surface[i].pcorr_a, b.surface[i].pcorr_a);
        EXPECT_EQ(a.surface[i].chi2, b.surface[i].chi2);
    }
    EXPECT_EQ(a.best, b.best);
}

TEST(Calibration, EmptyGridThrows)
{
    CalibrationGrid g = small_grid();
    g.ratio.clear();
    EXPECT_THROW(calibrate_parameters(default_config(), qpgamma::testing::default_table(), deposits(),
                                      CalibrationTargets{}, g),
                 ConfigError);
}
