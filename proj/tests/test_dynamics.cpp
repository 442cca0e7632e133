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
#include "prefmpc/dynamics.hpp"
#include "prefmpc/mpc.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace prefmpc;

namespace {

LinearSystem small_system() {
    LinearSystem s;
    s.A = (Matrix(2, 2) << 1.0, 0.1, -0.2, 0.9).finished();
    s.B = (Matrix(2, 1) << 0.0, 0.5).finished();
    s.C = Matrix::Identity(2, 2);
    s.u_max = Vector::Constant(1, 1.0);
    return s;
}

Matrix matrix_power(const Matrix& M, int i) {
    Matrix out = Matrix::Identity(M.rows(), M.cols());
    for (int k = 0; k < i; ++k) out = out * M;
    return out;
}

}  // namespace

TEST(SimulateStep, ZeroStateAndInputStayAtOrigin) {
    const auto sys = make_oscillating_masses();
    EXPECT_EQ(simulate_step(sys, Vector::Zero(6), Vector::Zero(2)), Vector::Zero(6));
}

TEST(SimulateStep, IdentityMatricesAddStateAndInput) {
    LinearSystem s;
    s.A = Matrix::Identity(3, 3);
    s.B = Matrix::Identity(3, 3);
    s.C = Matrix::Identity(3, 3);
    s.u_max = Vector::Ones(3);
    const Vector x = (Vector(3) << 1, 2, 3).finished();
    const Vector u = (Vector(3) << 0.5, -1, 0.25).finished();
    EXPECT_EQ(simulate_step(s, x, u), x + u);
}

TEST(SimulateStep, MatchesNaiveLoopOnRandomData) {
    const auto sys = make_oscillating_masses();
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Vector x(6), u(2);
        for (auto& v : x) v = rng.uniform(-5, 5);
        for (auto& v : u) v = rng.uniform(-2, 2);
        const Vector ref = oracle_ref::naive_step(sys.A, sys.B, x, u);
        EXPECT_LE((simulate_step(sys, x, u) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SimulateStep, DimensionMismatchThrows) {
    const auto sys = make_oscillating_masses();
    EXPECT_THROW(simulate_step(sys, Vector::Zero(5), Vector::Zero(2)), std::invalid_argument);
    EXPECT_THROW(simulate_step(sys, Vector::Zero(6), Vector::Zero(3)), std::invalid_argument);
}

TEST(ClosedLoop, ZeroControllerFromOriginIsIdenticallyZero) {
    const auto sys = make_oscillating_masses();
    const auto t = simulate_closed_loop(sys, [](const Vector&) { return Vector::Zero(2).eval(); }, Vector::Zero(6), 30);
    EXPECT_EQ(t.states.cols(), 31);
    EXPECT_EQ(t.inputs.cols(), 30);
    EXPECT_EQ(t.states.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(t.inputs.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ClosedLoop, LinearFeedbackMatchesMatrixPowers) {
    const auto sys = small_system();
    const Matrix K = (Matrix(1, 2) << 0.3, 0.4).finished();
    const Vector x0 = (Vector(2) << 1.0, -0.5).finished();
    const auto t = simulate_closed_loop(sys, [&](const Vector& x) { return (-K * x).eval(); }, x0, 40);
    const Matrix Acl = sys.A - sys.B * K;
    for (int i = 0; i <= 40; ++i)
        EXPECT_LE((t.states.col(i) - matrix_power(Acl, i) * x0).norm(), 1e-9) << "step " << i;
}

TEST(ClosedLoop, ViolationReportsStepIndex) {
    const auto sys = make_oscillating_masses();
    int calls = 0;
    auto ctrl = [&](const Vector&) {
        Vector u = Vector::Zero(2);
        if (calls++ == 3) u(1) = 2.5;
        return u;
    };
    try {
        simulate_closed_loop(sys, ctrl, Vector::Zero(6), 10);
        FAIL() << "expected ConstraintViolation";
    } catch (const ConstraintViolation& e) {
        EXPECT_EQ(e.step(), 3u);
    }
}

TEST(ClosedLoop, InputOnTheBoundIsAdmissible) {
    const auto sys = make_oscillating_masses();
    auto ctrl = [](const Vector&) { return Vector::Constant(2, 2.0).eval(); };
    const auto t = simulate_closed_loop(sys, ctrl, Vector::Zero(6), 5);
    EXPECT_TRUE(is_valid_trajectory(sys, t));
}

TEST(ClosedLoop, MpcTrajectoriesAreValidAndDeterministic) {
    const auto sys = make_oscillating_masses();
    const auto states = sample_initial_states(default_initial_box(), 5, 99);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto mpc = make_random_quadratic_controller(seed, sys, 30);
        for (const auto& x0 : states) {
            const auto a = rollout(sys, mpc, x0, 30);
            const auto b = rollout(sys, mpc, x0, 30);
            EXPECT_TRUE(a == b);
            EXPECT_TRUE(is_valid_trajectory(sys, a));
            EXPECT_LE(a.inputs.cwiseAbs().maxCoeff(), 2.0);
        }
    }
}

TEST(OscillatingMasses, DimensionsAndOutputMap) {
    const auto sys = make_oscillating_masses();
    EXPECT_EQ(sys.nx(), 6);
    EXPECT_EQ(sys.nu(), 2);
    EXPECT_EQ(sys.ny(), 3);
    Matrix C = Matrix::Zero(3, 6);
    C.leftCols(3) = Matrix::Identity(3, 3);
    EXPECT_EQ(sys.C, C);
    EXPECT_EQ(sys.u_max, Vector::Constant(2, 2.0));
}

TEST(OscillatingMasses, ForcesActOnOuterMassesOnly) {
    const auto sys = make_oscillating_masses();
    // Forcing the outer masses only reaches the middle one through the springs,
    // so its velocity response to u is second order in Ts.
    EXPECT_GT(std::abs(sys.B(3, 0)), 0.1);
    EXPECT_GT(std::abs(sys.B(5, 1)), 0.1);
    EXPECT_LT(std::abs(sys.B(4, 0)), std::abs(sys.B(3, 0)));
}

TEST(OscillatingMasses, SpectralRadiusAtMostOne) {
    const auto sys = make_oscillating_masses();
    const Eigen::EigenSolver<Matrix> es(sys.A);
    EXPECT_LE(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-9);
}

TEST(OscillatingMasses, EnergyConservedWithoutInput) {
    const OscillatingMassesConfig cfg;
    const auto sys = make_oscillating_masses(cfg);
    Vector x = (Vector(6) << 0.2, -0.1, 0.15, 0.0, 0.0, 0.0).finished();
    const double e0 = chain_energy(cfg, x);
    double prev = e0;
    for (int i = 0; i < 100; ++i) {
        x = simulate_step(sys, x, Vector::Zero(2));
        const double e = chain_energy(cfg, x);
        EXPECT_LE(std::abs(e - prev), 1e-9);
        prev = e;
    }
    EXPECT_LE(std::abs(prev - e0), 1e-8);
}

TEST(OscillatingMasses, StiffnessMatrixOfUniformChain) {
    const Matrix K = chain_stiffness({});
    const Matrix expected = (Matrix(3, 3) << 4, -2, 0, -2, 4, -2, 0, -2, 4).finished();
    EXPECT_LE((K - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(OscillatingMasses, RejectsNonPositiveParameters) {
    OscillatingMassesConfig c;
    c.mass2 = 0.0;
    EXPECT_THROW(make_oscillating_masses(c), std::invalid_argument);
    c = {};
    c.sample_time = -0.1;
    EXPECT_THROW(make_oscillating_masses(c), std::invalid_argument);
}

TEST(Sampler, StatesLieInTheBox) {
    const auto box = default_initial_box();
    const auto xs = sample_initial_states(box, 500, 5);
    ASSERT_EQ(xs.size(), 500u);
    for (const auto& x : xs) {
        EXPECT_TRUE(box.contains(x));
        EXPECT_LE(x.head(3).cwiseAbs().maxCoeff(), 0.2);
        EXPECT_LE(x.tail(3).cwiseAbs().maxCoeff(), 0.05);
    }
}

TEST(Sampler, SameSeedSameStates) {
    const auto box = default_initial_box();
    EXPECT_EQ(sample_initial_states(box, 20, 42), sample_initial_states(box, 20, 42));
    EXPECT_NE(sample_initial_states(box, 20, 42), sample_initial_states(box, 20, 43));
}

TEST(Sampler, RejectsDegenerateBoxAndZeroCount) {
    StateBox flat{Vector::Zero(6), Vector::Zero(6)};
    EXPECT_THROW(sample_initial_states(flat, 3, 1), std::invalid_argument);
    EXPECT_THROW(sample_initial_states(default_initial_box(), 0, 1), std::invalid_argument);
}

TEST(Serialization, TrajectoryAndSystemRoundTrip) {
    const auto sys = make_oscillating_masses();
    Rng rng(3);
    const auto t = oracle_ref::random_open_loop(sys, rng, sample_in_box(default_initial_box(), rng), 30);
    const auto back = trajectory_from_json(nlohmann::json::parse(to_json(t).dump()));
    EXPECT_TRUE(back == t);
    const auto s2 = system_from_json(nlohmann::json::parse(to_json(sys).dump()));
    EXPECT_EQ(s2.A, sys.A);
    EXPECT_EQ(s2.B, sys.B);
    EXPECT_EQ(s2.C, sys.C);
    EXPECT_EQ(s2.u_max, sys.u_max);
}
