// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "loopcluster/scaling.hpp"

namespace loopcluster {
namespace {

TEST(DetectionRate, UnitBudget) {
    EfficiencyBudget b;
    b.R = 1.0;
    for (int n = 1; n <= 8; ++n) EXPECT_DOUBLE_EQ(detection_rate(b, n), 1.0);
    EXPECT_THROW(detection_rate(b, 0), ArgumentError);
}

TEST(DetectionRate, ReferenceBudgetRatio) {
    const EfficiencyBudget b = EfficiencyBudget::reference();
    const double product = 0.25 * 0.7 * 0.75 * 0.15 * 0.5;
    EXPECT_NEAR(detection_rate(b, 2) / detection_rate(b, 3), 1.0 / product, 1e-9);
    EXPECT_NEAR(detection_rate(b, 2) / detection_rate(b, 3), 101.6, 0.05);
}

TEST(DetectionRate, MeasuredRatiosWithinQuarterOfModel) {
    const double r = scaling_ratio(EfficiencyBudget::reference());
    for (double measured : {480.0 / 4.3, 4.3 / 0.04}) EXPECT_LT(std::abs(measured - r) / r, 0.25) << measured;
}

TEST(ScalingRatio, Limits) {
    EfficiencyBudget unit;
    EXPECT_DOUBLE_EQ(scaling_ratio(unit), 1.0);
    EXPECT_DOUBLE_EQ(scaling_ratio(EfficiencyBudget::gate_floor()), 2.0);
    EXPECT_NEAR(scaling_ratio(EfficiencyBudget::reference()), 101.587301587, 1e-6);
}

TEST(ScalingRatio, Validation) {
    EfficiencyBudget b;
    b.eta_l = 0.0;
    EXPECT_THROW(scaling_ratio(b), ArgumentError);
    b.eta_l = 1.1;
    EXPECT_THROW(scaling_ratio(b), ArgumentError);
    b = EfficiencyBudget{};
    b.R = -1.0;
    EXPECT_THROW(detection_rate(b, 2), ArgumentError);
    EXPECT_THROW(EfficiencyBudget::preset("nope"), ArgumentError);
}

TEST(Invariants, RatioIndependentOfN) {
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 0; i < 100; ++i) {
        EfficiencyBudget b{"random", 1e6 * u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)};
        const double r = scaling_ratio(b);
        for (int n = 1; n <= 10; ++n) ASSERT_NEAR(detection_rate(b, n) / detection_rate(b, n + 1) / r, 1.0, 1e-12);
    }
}

TEST(Pdc, PairProbability) {
    EXPECT_EQ(pdc_pair_probability({0.0}), 0.0);
    EXPECT_NEAR(pdc_pair_probability({0.5}), 0.21356, 1e-5);
    EXPECT_NEAR(pdc_pair_probability({20.0}), 1.0, 1e-12);
    EXPECT_THROW(pdc_pair_probability({-0.1}), ArgumentError);
}

TEST(Pdc, Visibility) {
    EXPECT_EQ(pdc_visibility({0.0}), 1.0);
    const double tau = std::atanh(std::sqrt(0.5));
    EXPECT_NEAR(pdc_visibility({tau}), 1.0 / 3.0, 1e-12);
}

TEST(Pdc, ScalingRatio) {
    EXPECT_NEAR(pdc_scaling_ratio(1.0 / 3.0, false), 2.0, 1e-12);
    EXPECT_NEAR(pdc_scaling_ratio(1.0 / 3.0, true), 4.0, 1e-12);
    EXPECT_THROW(pdc_scaling_ratio(1.0, true), SingularLimitError);
    EXPECT_THROW(pdc_scaling_ratio(1.5, true), ArgumentError);
    EXPECT_GT(pdc_scaling_ratio(1.0 - 1e-9, false), 1e9);
}

TEST(Invariants, PdcChainIdentity) {
    for (int i = 1; i <= 500; ++i) {
        const double tau = 5.0 * i / 500.0;
        const double v = pdc_visibility({tau});
        const double t2 = pdc_pair_probability({tau});
        ASSERT_NEAR((1.0 + v) / (1.0 - v) * t2, 1.0, 1e-12) << tau;
        if (i <= 20) {
            ASSERT_NEAR(pdc_scaling_ratio(v, false), 1.0 / t2, 1e-12 / t2);
        }
    }
}

TEST(Invariants, PdcMonotone) {
    double prev_v = 2.0;
    double prev_r = 1e300;
    for (int i = 1; i <= 200; ++i) {
        const PdcSource s{0.02 * i};
        const double v = pdc_visibility(s);
        EXPECT_LT(v, prev_v);
        const double r = pdc_scaling_ratio(v, true);
        EXPECT_LT(r, prev_r);
        prev_v = v;
        prev_r = r;
    }
}

TEST(Curves, GateFloorAndPdc) {
    const auto rows = ratio_curves({0.2, 0.5, 0.8});
    ASSERT_EQ(rows.size(), 3U);
    for (const auto& r : rows) {
        EXPECT_DOUBLE_EQ(r.r_gate_floor, 2.0);
        EXPECT_NEAR(r.r_pdc_with_gate, 2.0 * (1 + r.v2) / (1 - r.v2), 1e-12);
    }
}

TEST(Curves, BudgetPoints) {
    const BudgetPoint p = budget_point(EfficiencyBudget::reference(), 0.76);
    EXPECT_EQ(p.name, "reference");
    EXPECT_NEAR(p.r, 101.6, 0.5);
    const BudgetPoint q = budget_point(EfficiencyBudget::reference_eta_d09(), 0.76);
    EXPECT_NEAR(q.r, p.r * 0.25 / 0.9, 1e-9);
    EXPECT_NEAR(q.r, 28.2, 0.05);
    EXPECT_EQ(EfficiencyBudget::preset("gate-floor").eta_g, 0.5);
}

}  // namespace
}  // namespace loopcluster
