/*
 Copyright 2026 The prefmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "prefmpc/surrogate.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace prefmpc;

namespace {

// One state, one input: cost terms are easy to set by hand.
Trajectory scalar_trajectory(std::initializer_list<double> x, std::initializer_list<double> u) {
    Trajectory t{Matrix(1, static_cast<Eigen::Index>(x.size())), Matrix(1, static_cast<Eigen::Index>(u.size()))};
    Eigen::Index i = 0;
    for (double v : x) t.states(0, i++) = v;
    i = 0;
    for (double v : u) t.inputs(0, i++) = v;
    return t;
}

ObjectiveParams ones_theta() { return {Vector::Ones(1), Vector::Ones(1), Vector::Ones(1)}; }

PreferenceDataset random_dataset(Rng& rng, std::size_t n, double scale) {
    PreferenceDataset d;
    for (std::size_t i = 0; i < n; ++i) {
        Vector x0(6);
        for (auto& v : x0) v = scale * rng.uniform(-1, 1);
        const auto T = oracle_ref::random_free_trajectory(rng, x0, 2, 6, scale);
        const auto S = oracle_ref::random_free_trajectory(rng, x0, 2, 6, scale);
        d.add({T, S, rng.uniform() < 0.5 ? 0 : 1, {}});
    }
    return d;
}

}  // namespace

TEST(Features, HandComputedExample) {
    const auto t = scalar_trajectory({2.0, 3.0}, {1.0});
    const Vector phi = features(t);
    ASSERT_EQ(phi.size(), 3);
    EXPECT_DOUBLE_EQ(phi(0), 4.0);
    EXPECT_DOUBLE_EQ(phi(1), 1.0);
    EXPECT_DOUBLE_EQ(phi(2), 9.0);
}

TEST(Features, ZeroTrajectoryHasZeroFeatures) {
    Trajectory t{Matrix::Zero(6, 31), Matrix::Zero(2, 30)};
    EXPECT_EQ(features(t), Vector::Zero(14));
    Rng rng(1);
    EXPECT_EQ(cost(random_objective(rng, 6, 2), t), 0.0);
}

TEST(Cost, MatchesDirectQuadraticForm) {
    const auto sys = make_oscillating_masses();
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const auto theta = random_objective(rng, 6, 2);
        const auto t = oracle_ref::random_open_loop(sys, rng, sample_in_box(default_initial_box(), rng), 30);
        const double ref = oracle_ref::direct_quadratic_cost(theta, t);
        EXPECT_NEAR(cost(theta, t), ref, 1e-12 * std::max(1.0, ref));
    }
}

TEST(Cost, LinearInTheta) {
    Rng rng(3);
    const auto t = oracle_ref::random_free_trajectory(rng, Vector::Ones(6), 2, 10, 1.0);
    const auto a = random_objective(rng, 6, 2), b = random_objective(rng, 6, 2);
    const double al = 0.37, be = 2.9;
    const ObjectiveParams mix{al * a.q + be * b.q, al * a.r + be * b.r, al * a.p + be * b.p};
    EXPECT_NEAR(cost(mix, t), al * cost(a, t) + be * cost(b, t), 1e-10 * cost(mix, t));
}

TEST(PrefProbability, EqualCostsGiveOneHalf) {
    const auto t = scalar_trajectory({1.0, 0.5}, {0.2});
    EXPECT_DOUBLE_EQ(pref_probability(ones_theta(), t, t), 0.5);
}

TEST(PrefProbability, CostGapOfLogThree) {
    const auto T = scalar_trajectory({1.0, std::sqrt(std::log(3.0))}, {0.0});
    const auto S = scalar_trajectory({1.0, 0.0}, {0.0});
    EXPECT_NEAR(pref_probability(ones_theta(), T, S), 0.25, 1e-12);
    EXPECT_NEAR(pref_probability(ones_theta(), S, T), 0.75, 1e-12);
}

TEST(PrefProbability, LargeGapSaturatesWithoutOverflow) {
    const auto T = scalar_trajectory({1.0, 0.0}, {0.0});
    const auto S = scalar_trajectory({1.0, std::sqrt(50.0)}, {0.0});
    EXPECT_GE(pref_probability(ones_theta(), T, S), 1.0 - 1e-20);
    const auto far = scalar_trajectory({1.0, 1e3}, {0.0});
    const double p = pref_probability(ones_theta(), far, T);
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_GE(p, 0.0);
    EXPECT_EQ(sigmoid(-1e6), 0.0);
    EXPECT_EQ(sigmoid(1e6), 1.0);
}

TEST(Classify, TiesGoToTheFirstTrajectory) {
    const auto t = scalar_trajectory({1.0, 0.3}, {0.1});
    EXPECT_EQ(classify(ones_theta(), t, t), 1);
}

TEST(Classify, ScaleInvariantAndConsistentWithProbability) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector x0 = Vector::Ones(6);
        const auto T = oracle_ref::random_free_trajectory(rng, x0, 2, 5, 1.0);
        const auto S = oracle_ref::random_free_trajectory(rng, x0, 2, 5, 1.0);
        const auto th = random_objective(rng, 6, 2);
        const ObjectiveParams scaled{42.0 * th.q, 42.0 * th.r, 42.0 * th.p};
        EXPECT_EQ(classify(th, T, S), classify(scaled, T, S));
        EXPECT_EQ(classify(th, T, S) == 1, pref_probability(th, T, S) >= 0.5);
    }
}

TEST(Dataset, RejectsMismatchedStartsAndBadLabels) {
    PreferenceDataset d;
    const auto a = scalar_trajectory({1.0, 0.0}, {0.0});
    const auto b = scalar_trajectory({1.5, 0.0}, {0.0});
    EXPECT_THROW(d.add({a, b, 1, {}}), InvalidQuery);
    EXPECT_THROW(d.add({a, a, 2, {}}), std::invalid_argument);
    EXPECT_TRUE(d.empty());
}

TEST(Dataset, JsonLinesRoundTrip) {
    Rng rng(5);
    auto d = random_dataset(rng, 4, 1.0);
    std::stringstream ss;
    write_jsonl(ss, d);
    const auto back = read_jsonl(ss);
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_TRUE(back[i].T == d[i].T);
        EXPECT_TRUE(back[i].S == d[i].S);
        EXPECT_EQ(back[i].label, d[i].label);
    }
}

TEST(Objective, SingleUndecidedRecordCostsLogTwo) {
    PreferenceDataset d;
    const auto t = scalar_trajectory({1.0, 0.5}, {0.2});
    d.add({t, t, 1, {}});
    TrainConfig cfg;
    cfg.ridge = 0.0;
    EXPECT_NEAR(training_objective(ones_theta(), d, cfg).value, std::log(2.0), 1e-15);
}

TEST(Objective, VanishesWhenPredictionsMatchLabels) {
    PreferenceDataset d;
    const auto good = scalar_trajectory({1.0, 0.1}, {0.1});
    const auto bad = scalar_trajectory({1.0, 2.0}, {1.0});
    d.add({good, bad, 1, {}});
    d.add({bad, good, 0, {}});
    TrainConfig cfg;
    cfg.ridge = 0.0;
    const double f1 = training_objective(ones_theta(), d, cfg).value;
    const ObjectiveParams big{Vector::Constant(1, 1e3), Vector::Constant(1, 1e3), Vector::Constant(1, 1e3)};
    const double f2 = training_objective(big, d, cfg).value;
    EXPECT_LT(f2, f1);
    EXPECT_LT(f2, 1e-12);
}

TEST(Objective, MatchesSpelledOutFormula) {
    Rng rng(6);
    const auto d = random_dataset(rng, 30, 0.5);
    TrainConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const auto th = random_objective(rng, 6, 2, 0.1, 10.0);
        EXPECT_NEAR(training_objective(th, d, cfg).value, oracle_ref::reference_objective(th.flat(), d, cfg.ridge),
                    1e-10);
    }
}

TEST(Objective, GradientMatchesFiniteDifferences) {
    Rng rng(7);
    TrainConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = random_dataset(rng, 1 + rng.index(20), 0.5);
        const auto th = random_objective(rng, 6, 2, 0.1, 10.0);
        const Vector g = training_objective(th, d, cfg).gradient;
        const Vector fd = oracle_ref::central_difference(
            [&](const Vector& v) { return training_objective(ObjectiveParams::from_flat(v, 6, 2), d, cfg).value; },
            th.flat(), 1e-6);
        EXPECT_LE((g - fd).norm() / std::max(fd.norm(), 1e-8), 1e-5) << "trial " << trial;
    }
}

TEST(Objective, ConvexAlongSegments) {
    Rng rng(8);
    const auto d = random_dataset(rng, 25, 0.5);
    TrainConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const Vector a = random_objective(rng, 6, 2, 0.01, 10.0).flat();
        const Vector b = random_objective(rng, 6, 2, 0.01, 10.0).flat();
        auto f = [&](const Vector& v) { return training_objective(ObjectiveParams::from_flat(v, 6, 2), d, cfg).value; };
        EXPECT_LE(f(0.5 * (a + b)), 0.5 * (f(a) + f(b)) + 1e-12);
    }
}

TEST(Train, EmptyDatasetIsRejected) {
    EXPECT_THROW(train(PreferenceDataset{}, ones_theta(), TrainConfig{}), std::invalid_argument);
}

TEST(Train, NonFiniteFeaturesRaiseTrainingFailure) {
    PreferenceDataset d;
    d.add({scalar_trajectory({1.0, 1e200}, {0.0}), scalar_trajectory({1.0, 0.0}, {0.0}), 1, {}});
    EXPECT_THROW(train(d, ones_theta(), TrainConfig{}), TrainingFailure);
}

TEST(Train, HugeRidgeDrivesThetaToLowerBound) {
    Rng rng(9);
    const auto d = random_dataset(rng, 10, 0.5);
    TrainConfig cfg;
    cfg.ridge = 1e6;
    const auto th = train(d, random_objective(rng, 6, 2), cfg);
    EXPECT_LE((th.flat().array() - kThetaMin).abs().maxCoeff(), 1e-12);
}

TEST(Train, DeterministicAndNotWorseThanStart) {
    Rng rng(10);
    const auto d = random_dataset(rng, 30, 0.5);
    const auto init = random_objective(rng, 6, 2);
    TrainConfig cfg;
    const auto a = train_detailed(d, init, cfg);
    const auto b = train_detailed(d, init, cfg);
    EXPECT_TRUE(a.theta == b.theta);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_LE(a.objective, training_objective(init, d, cfg).value);
    EXPECT_GE(a.theta.flat().minCoeff(), kThetaMin);
    EXPECT_LE(a.theta.flat().maxCoeff(), kThetaMax);
}

TEST(Train, RecoversHiddenPreferenceWeights) {
    const auto sys = make_oscillating_masses();
    Rng rng(11);
    const auto hidden = random_objective(rng, 6, 2);
    auto make_pair = [&] {
        const Vector x0 = sample_in_box(default_initial_box(), rng);
        auto T = oracle_ref::random_open_loop(sys, rng, x0, 30);
        auto S = oracle_ref::random_open_loop(sys, rng, x0, 30);
        const int label = classify(hidden, T, S);
        return PreferenceRecord{std::move(T), std::move(S), label, {}};
    };
    PreferenceDataset train_set;
    for (int i = 0; i < 200; ++i) train_set.add(make_pair());
    const auto learned = train(train_set, random_initial_theta(12, 6, 2), TrainConfig{});
    int agree = 0;
    for (int i = 0; i < 500; ++i) {
        const auto r = make_pair();
        agree += classify(learned, r.T, r.S) == r.label;
    }
    EXPECT_GE(agree, 475);
}

TEST(SelectModel, PrefersSmallerMaximumThenAverageThenIndex) {
    std::vector<ObjectiveParams> c(3, ones_theta());
    auto by_table = [](std::vector<CandidateScore> table) {
        return [table, i = std::make_shared<std::size_t>(0)](const ObjectiveParams&) { return table[(*i)++]; };
    };
    EXPECT_EQ(select_model(c, by_table({{17, 5}, {13, 9}, {15, 1}})).index, 1u);
    EXPECT_EQ(select_model(c, by_table({{13, 5}, {13, 4}, {14, 1}})).index, 1u);
    EXPECT_EQ(select_model(c, by_table({{13, 4}, {13, 4}, {13, 4}})).index, 0u);
    EXPECT_EQ(select_model({ones_theta()}, by_table({{30, 30}})).index, 0u);
}

TEST(SelectModel, FailedCandidatesAreDisqualified) {
    std::vector<ObjectiveParams> c(2, ones_theta());
    std::size_t i = 0;
    const auto sel = select_model(c, [&](const ObjectiveParams&) -> CandidateScore {
        if (i++ == 0) throw ConstraintViolation(0, "rollout failed");
        return {20, 10};
    });
    EXPECT_EQ(sel.index, 1u);
    EXPECT_THROW(select_model(c, [](const ObjectiveParams&) -> CandidateScore { throw std::runtime_error("x"); }),
                 std::runtime_error);
}
