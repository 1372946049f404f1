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

#include "hyperwrap/errors.hpp"
#include "hyperwrap/random.hpp"
#include "hyperwrap/stats.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace {

using namespace hyperwrap;

// References from scipy.special.kolmogorov and scipy.stats.kstest.
TEST(Stats, KolmogorovSurvival)
{
    EXPECT_NEAR(stats::kolmogorov_sf(0.1), 1.0, 1e-15);
    EXPECT_NEAR(stats::kolmogorov_sf(0.3), 0.9999906941986655, 1e-13);
    EXPECT_NEAR(stats::kolmogorov_sf(0.5), 0.9639452436648751, 1e-13);
    EXPECT_NEAR(stats::kolmogorov_sf(1.0), 0.26999967167735456, 1e-13);
    EXPECT_NEAR(stats::kolmogorov_sf(1.36), 0.049485876755377876, 1e-13);
    EXPECT_NEAR(stats::kolmogorov_sf(2.0), 0.0006709252557796953, 1e-15);
    EXPECT_EQ(stats::kolmogorov_sf(0.0), 1.0);
}

TEST(Stats, KsStatistic)
{
    const std::vector<double> x {-1.2, 0.3, 0.8, -0.1, 2.2, -0.7, 0.05, 1.1};
    const auto r = stats::ks_test_normal(x, 1.5);
    EXPECT_NEAR(r.statistic, 0.2234235356996349, 1e-14);
    EXPECT_GT(r.p_value, 0.5);
    EXPECT_THROW((void)stats::ks_test_normal({}, 1.0), ValidationError);
}

TEST(Stats, KsRejectsWrongScale)
{
    Rng rng {4};
    std::vector<double> x(4000);
    rng.fill_normal(x);
    EXPECT_GT(stats::ks_test_normal(x, 1.0).p_value, 0.01);
    EXPECT_LT(stats::ks_test_normal(x, 1.25).p_value, 1e-6);
}

TEST(Stats, Pearson)
{
    const std::vector<double> x {1, 2, 3, 4, 5};
    const std::vector<double> y {2, 4, 6, 8, 10};
    const std::vector<double> z {5, 4, 3, 2, 1};
    EXPECT_NEAR(stats::pearson(x, y), 1.0, 1e-15);
    EXPECT_NEAR(stats::pearson(x, z), -1.0, 1e-15);
    const std::vector<double> a {1, 2, 3, 4};
    const std::vector<double> b {1, 3, 2, 4};
    EXPECT_NEAR(stats::pearson(a, b), 0.8, 1e-15);
    EXPECT_THROW((void)stats::pearson(x, a), DimensionError);
}

TEST(Stats, MedianMeanStd)
{
    const std::vector<double> x {3, 1, 2, 10};
    EXPECT_EQ(stats::median(x), 2.5);
    EXPECT_EQ(stats::mean(x), 4.0);
    EXPECT_NEAR(stats::stddev(x), 4.08248290463863, 1e-13);
}

TEST(Stats, SeedMixingIsStable)
{
    EXPECT_EQ(mix_seed(0, 0), mix_seed(0, 0));
    EXPECT_NE(mix_seed(0, 0), mix_seed(0, 1));
    EXPECT_NE(mix_seed(1, 0), mix_seed(0, 1));
}

} // namespace
