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
#ifndef PREFMPC_DYNAMICS_HPP
#define PREFMPC_DYNAMICS_HPP

#include "prefmpc/common.hpp"
#include "prefmpc/rng.hpp"

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <concepts>
#include <sstream>
#include <utility>

namespace prefmpc {

/**
 * @brief Discrete-time linear plant x+ = A x + B u, y = C x, with |u_j| <= u_max_j.
 *
 * The origin is an equilibrium by construction; the only constraint
 * enforced anywhere is the input box.
 */
struct LinearSystem {
    Matrix A;
    Matrix B;
    Matrix C;
    Vector u_max;

    Eigen::Index nx() const { return A.rows(); }
    Eigen::Index nu() const { return B.cols(); }
    Eigen::Index ny() const { return C.rows(); }

    /// Throws std::invalid_argument unless dimensions agree and u_max > 0.
    void validate() const {
        detail::require(A.rows() >= 1 && A.rows() == A.cols(), "LinearSystem: A must be square and non-empty");
        detail::require(B.rows() == A.rows() && B.cols() >= 1, "LinearSystem: B rows must match A");
        detail::require(C.cols() == A.rows() && C.rows() >= 1, "LinearSystem: C cols must match A");
        detail::require(u_max.size() == B.cols(), "LinearSystem: u_max size must match nu");
        detail::require((u_max.array() > 0.0).all(), "LinearSystem: u_max must be positive");
        detail::require(A.allFinite() && B.allFinite() && C.allFinite(), "LinearSystem: non-finite entries");
    }
};

/// One closed-loop rollout. Column i of `states` is x_i (N+1 columns),
/// column i of `inputs` is u_i (N columns).
struct Trajectory {
    Matrix states;
    Matrix inputs;

    Eigen::Index horizon() const { return inputs.cols(); }
    Vector initial_state() const { return states.col(0); }
    bool operator==(const Trajectory&) const = default;
};

/// Axis-aligned box of initial states.
struct StateBox {
    Vector lower;
    Vector upper;

    void validate() const {
        detail::require(lower.size() == upper.size() && lower.size() >= 1, "StateBox: size mismatch");
        detail::require((lower.array() < upper.array()).all(), "StateBox: lower must be < upper");
    }
    bool contains(const Vector& x) const {
        return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
               (x.array() <= upper.array()).all();
    }
};

inline Vector simulate_step(const LinearSystem& sys, const Vector& x, const Vector& u) {
    if (x.size() != sys.nx() || u.size() != sys.nu())
        throw std::invalid_argument("simulate_step: dimension mismatch");
    return sys.A * x + sys.B * u;
}

/// Output sequence y_i = C x_i, one column per time step.
inline Matrix outputs(const LinearSystem& sys, const Trajectory& t) { return sys.C * t.states; }

template <typename F>
concept StateFeedback = requires(F f, const Vector& x) {
    { f(x) } -> std::convertible_to<Vector>;
};

/**
 * @brief Roll out `controller` from x0 for N steps.
 *
 * Every input is checked against the box exactly; a violation raises
 * ConstraintViolation carrying the step. Controller exceptions propagate.
 */
template <StateFeedback Controller>
Trajectory simulate_closed_loop(const LinearSystem& sys, Controller&& controller, const Vector& x0,
                                Eigen::Index N) {
    detail::require(N >= 1, "simulate_closed_loop: N must be >= 1");
    detail::require(x0.size() == sys.nx(), "simulate_closed_loop: x0 dimension mismatch");
    Trajectory t{Matrix(sys.nx(), N + 1), Matrix(sys.nu(), N)};
    t.states.col(0) = x0;
    for (Eigen::Index i = 0; i < N; ++i) {
        Vector u = controller(static_cast<Vector>(t.states.col(i)));
        if (u.size() != sys.nu())
            throw std::invalid_argument("simulate_closed_loop: controller returned wrong input size");
        if (!u.allFinite() || ((u.array().abs() - sys.u_max.array()) > 0.0).any()) {
            std::ostringstream os;
            os << "controller input outside the admissible box at step " << i;
            throw ConstraintViolation(static_cast<std::size_t>(i), os.str());
        }
        t.inputs.col(i) = u;
        t.states.col(i + 1) = sys.A * t.states.col(i) + sys.B * u;
    }
    return t;
}

/// Largest violation of x_{i+1} = A x_i + B u_i over the trajectory.
inline double dynamics_residual(const LinearSystem& sys, const Trajectory& t) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < t.horizon(); ++i) {
        Vector r = t.states.col(i + 1) - sys.A * t.states.col(i) - sys.B * t.inputs.col(i);
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
}

inline bool satisfies_input_box(const LinearSystem& sys, const Trajectory& t) {
    for (Eigen::Index i = 0; i < t.horizon(); ++i)
        if (((t.inputs.col(i).array().abs() - sys.u_max.array()) > 0.0).any()) return false;
    return true;
}

/// Membership in the trajectory space: dynamics consistent to `tol`, inputs inside the box.
inline bool is_valid_trajectory(const LinearSystem& sys, const Trajectory& t, double tol = 1e-10) {
    if (t.states.rows() != sys.nx() || t.inputs.rows() != sys.nu()) return false;
    if (t.states.cols() != t.inputs.cols() + 1 || t.inputs.cols() < 1) return false;
    return dynamics_residual(sys, t) <= tol && satisfies_input_box(sys, t);
}

/// Physical parameters of a chain of three masses between two walls.
struct OscillatingMassesConfig {
    double mass1 = 1.0;
    double mass2 = 1.0;
    double mass3 = 1.0;
    /// Stiffness of the four springs wall-m1, m1-m2, m2-m3, m3-wall.
    double k_wall_left = 2.0;
    double k_12 = 2.0;
    double k_23 = 2.0;
    double k_wall_right = 2.0;
    double sample_time = 0.25;
    double u_max = 2.0;
};

/// Continuous-time stiffness matrix of the chain (positions p1..p3).
inline Matrix chain_stiffness(const OscillatingMassesConfig& c) {
    Matrix K(3, 3);
    K << c.k_wall_left + c.k_12, -c.k_12, 0.0,
        -c.k_12, c.k_12 + c.k_23, -c.k_23,
        0.0, -c.k_23, c.k_23 + c.k_wall_right;
    return K;
}

/**
 * @brief Three masses coupled by springs, forces on the outer two.
 *
 * State (p1,p2,p3,v1,v2,v3), input (F1,F2), output (p1,p2,p3).
 * Discretized by exact zero-order hold through the exponential of the
 * augmented matrix [[Ac, Bc], [0, 0]] * Ts.
 */
inline LinearSystem make_oscillating_masses(const OscillatingMassesConfig& c = {}) {
    for (double v : {c.mass1, c.mass2, c.mass3, c.k_wall_left, c.k_12, c.k_23, c.k_wall_right,
                     c.sample_time, c.u_max})
        detail::require(v > 0.0 && std::isfinite(v), "make_oscillating_masses: parameters must be positive");

    const Vector inv_m = Eigen::Vector3d(1.0 / c.mass1, 1.0 / c.mass2, 1.0 / c.mass3);
    Matrix Ac = Matrix::Zero(6, 6);
    Ac.topRightCorner(3, 3) = Matrix::Identity(3, 3);
    Ac.bottomLeftCorner(3, 3) = -(inv_m.asDiagonal() * chain_stiffness(c));
    Matrix Bc = Matrix::Zero(6, 2);
    Bc(3, 0) = inv_m(0);
    Bc(5, 1) = inv_m(2);

    Matrix aug = Matrix::Zero(8, 8);
    aug.topLeftCorner(6, 6) = Ac * c.sample_time;
    aug.topRightCorner(6, 2) = Bc * c.sample_time;
    const Matrix E = aug.exp();

    LinearSystem sys;
    sys.A = E.topLeftCorner(6, 6);
    sys.B = E.topRightCorner(6, 2);
    sys.C = Matrix::Zero(3, 6);
    sys.C.leftCols(3) = Matrix::Identity(3, 3);
    sys.u_max = Vector::Constant(2, c.u_max);
    return sys;
}

/// Mechanical energy 1/2 v'Mv + 1/2 p'Kp of an oscillating-masses state.
inline double chain_energy(const OscillatingMassesConfig& c, const Vector& x) {
    const Vector p = x.head(3);
    const Vector v = x.tail(3);
    const Eigen::Vector3d m(c.mass1, c.mass2, c.mass3);
    return 0.5 * v.dot(m.asDiagonal() * v) + 0.5 * p.dot(chain_stiffness(c) * p);
}

/// Initial-state box |p_i| <= 0.2, |v_i| <= 0.05.
inline StateBox default_initial_box() {
    StateBox b;
    b.upper = Vector(6);
    b.upper << 0.2, 0.2, 0.2, 0.05, 0.05, 0.05;
    b.lower = -b.upper;
    return b;
}

inline Vector sample_in_box(const StateBox& box, Rng& rng) {
    Vector x(box.lower.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = rng.uniform(box.lower(j), box.upper(j));
    return x;
}

/// n i.i.d. uniform samples from the box, deterministic in the seed.
inline std::vector<Vector> sample_initial_states(const StateBox& box, std::size_t n, std::uint64_t seed) {
    box.validate();
    detail::require(n >= 1, "sample_initial_states: n must be >= 1");
    Rng rng(seed);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_in_box(box, rng));
    return out;
}

// JSON. Vectors are arrays; matrices are row-major arrays of rows; a
// trajectory stores one row per time step.

inline nlohmann::json vector_to_json(const Vector& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vector_from_json(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j.at(r).size()) != cols)
            throw std::invalid_argument("matrix_from_json: ragged rows");
        m.row(r) = vector_from_json(j.at(r)).transpose();
    }
    return m;
}

inline nlohmann::json to_json(const Trajectory& t) {
    return {{"x", matrix_to_json(t.states.transpose())}, {"u", matrix_to_json(t.inputs.transpose())}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t{matrix_from_json(j.at("x")).transpose(), matrix_from_json(j.at("u")).transpose()};
    if (t.states.cols() != t.inputs.cols() + 1)
        throw std::invalid_argument("trajectory_from_json: need N+1 state rows and N input rows");
    return t;
}

inline nlohmann::json to_json(const LinearSystem& s) {
    return {{"A", matrix_to_json(s.A)}, {"B", matrix_to_json(s.B)}, {"C", matrix_to_json(s.C)},
            {"u_max", vector_to_json(s.u_max)}};
}

inline LinearSystem system_from_json(const nlohmann::json& j) {
    LinearSystem s{matrix_from_json(j.at("A")), matrix_from_json(j.at("B")), matrix_from_json(j.at("C")),
                   vector_from_json(j.at("u_max"))};
    s.validate();
    return s;
}

}  // namespace prefmpc

#endif  // PREFMPC_DYNAMICS_HPP
