// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "hyperwrap/special.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using namespace hyperwrap;

// Reference values below were computed with mpmath at 40 digits.

TEST(Special, ArccoshMatchesHighPrecision)
{
    EXPECT_EQ(arccosh(1.0), 0.0);
    EXPECT_EQ(arccosh(0.5), 0.0);
    EXPECT_NEAR(arccosh(1.5), 0.9624236501192068949955, 1e-15);
    EXPECT_NEAR(arccosh(1e10), 23.718998110500402149594, 1e-13);
    // 1.0000001 is not exact in binary; x - 1 carries ~1e-9 relative error.
    EXPECT_NEAR(arccosh(1.0000001), 4.4721359177317806063e-4, 1e-12);
}

TEST(Special, LogSinhcAcrossBranches)
{
    EXPECT_EQ(log_sinhc(0.0), 0.0);
    EXPECT_NEAR(log_sinhc(1e-7), 1.666666666666666111e-15, 1e-28);
    EXPECT_NEAR(log_sinhc(1e-3) / 1.666666611111114638e-7, 1.0, 1e-13);
    EXPECT_NEAR(log_sinhc(0.5), 0.041324854612918108978, 1e-16);
    EXPECT_NEAR(log_sinhc(2.0), 0.59522019205422282064, 1e-15);
    EXPECT_NEAR(log_sinhc(30.0), 25.905655437777899315, 1e-13);
    EXPECT_TRUE(std::isfinite(log_sinhc(1000.0)));
}

TEST(Special, LogSinhcSeriesSwitchIsContinuous)
{
    const double below = std::nextafter(kSeriesRadius, 0.0);
    EXPECT_NEAR(log_sinhc(below), log_sinhc(kSeriesRadius), 1e-20);
    EXPECT_NEAR(sinhc(below), sinhc(kSeriesRadius), 1e-15);
}

TEST(Special, DerivativeOfLogSinhc)
{
    EXPECT_EQ(d_log_sinhc(0.0), 0.0);
    EXPECT_NEAR(d_log_sinhc(1e-7), 3.33333333333333311e-8, 1e-22);
    EXPECT_NEAR(d_log_sinhc(1e-3), 3.333333111111132275e-4, 1e-18);
    EXPECT_NEAR(d_log_sinhc(0.5), 0.16395341373865284877, 1e-15);
    EXPECT_NEAR(d_log_sinhc(2.0), 0.53731472072754809588, 1e-15);
    EXPECT_NEAR(d_log_sinhc(30.0), 0.96666666666666666667, 1e-15);
}

TEST(Special, LogMapFactor)
{
    EXPECT_EQ(log_map_factor(0.0), 1.0);
    EXPECT_EQ(log_map_factor(-1e-17), 1.0);
    EXPECT_NEAR(log_map_factor(1e-7), 0.99999996666666799999, 1e-16);
    EXPECT_NEAR(log_map_factor(1e-4), 0.99996666799994285968, 1e-15);
    EXPECT_NEAR(log_map_factor(0.3), 0.91063821275666686971, 1e-15);
    EXPECT_NEAR(log_map_factor(5.0), 0.41883964062942926295, 1e-15);
    const double below = std::nextafter(kSeriesAlpha, 0.0);
    EXPECT_NEAR(log_map_factor(below), log_map_factor(kSeriesAlpha), 1e-14);
}

TEST(Special, SoftplusRoundTrip)
{
    for (double x : {-40.0, -3.0, -1e-3, 0.0, 0.7, 5.0, 50.0}) {
        const double y = softplus(x);
        EXPECT_GT(y, 0.0);
        EXPECT_NEAR(softplus_inverse(y), x, 1e-9 * std::max(1.0, std::abs(x)));
    }
    EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-16);
}

} // namespace
