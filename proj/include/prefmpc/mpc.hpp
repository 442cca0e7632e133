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
#ifndef PREFMPC_MPC_HPP
#define PREFMPC_MPC_HPP

#include "prefmpc/box_qp.hpp"
#include "prefmpc/dynamics.hpp"

#include <memory>

namespace prefmpc {

inline constexpr double kThetaMin = 1e-6;
inline constexpr double kThetaMax = 1e6;

/**
 * @brief Diagonal weights of the quadratic MPC cost
 * ||x_N||_P^2 + sum_{i<N} ||x_i||_Q^2 + ||u_i||_R^2.
 *
 * Flattened order is (q, r, p), which matches the feature layout used by the
 * surrogate.
 */
struct ObjectiveParams {
    Vector q;
    Vector r;
    Vector p;

    Eigen::Index size() const { return q.size() + r.size() + p.size(); }

    Vector flat() const {
        Vector v(size());
        v << q, r, p;
        return v;
    }

    static ObjectiveParams from_flat(const Vector& v, Eigen::Index nx, Eigen::Index nu) {
        detail::require(v.size() == 2 * nx + nu, "ObjectiveParams: flat vector must have 2*nx+nu entries");
        return {v.head(nx), v.segment(nx, nu), v.tail(nx)};
    }

    void validate(Eigen::Index nx, Eigen::Index nu, double lo = kThetaMin, double hi = kThetaMax) const {
        detail::require(q.size() == nx && r.size() == nu && p.size() == nx, "ObjectiveParams: dimension mismatch");
        const Vector v = flat();
        detail::require(v.allFinite() && (v.array() >= lo).all() && (v.array() <= hi).all(),
                        "ObjectiveParams: entries must lie in [theta_min, theta_max]");
    }

    bool operator==(const ObjectiveParams&) const = default;
};

inline nlohmann::json to_json(const ObjectiveParams& t) {
    return {{"q", vector_to_json(t.q)}, {"r", vector_to_json(t.r)}, {"p", vector_to_json(t.p)}};
}

inline ObjectiveParams theta_from_json(const nlohmann::json& j) {
    return {vector_from_json(j.at("q")), vector_from_json(j.at("r")), vector_from_json(j.at("p"))};
}

/// Stacked prediction x = Phi x0 + Gamma U over i = 0..N.
struct PredictionModel {
    Matrix Phi;    // (N+1)nx x nx
    Matrix Gamma;  // (N+1)nx x N nu
    Eigen::Index N = 0;

    PredictionModel(const LinearSystem& sys, Eigen::Index horizon) : N(horizon) {
        sys.validate();
        detail::require(horizon >= 1, "PredictionModel: horizon must be >= 1");
        const Eigen::Index nx = sys.nx(), nu = sys.nu();
        Phi = Matrix::Zero((N + 1) * nx, nx);
        Gamma = Matrix::Zero((N + 1) * nx, N * nu);
        Phi.topRows(nx) = Matrix::Identity(nx, nx);
        for (Eigen::Index i = 1; i <= N; ++i) {
            Phi.middleRows(i * nx, nx) = sys.A * Phi.middleRows((i - 1) * nx, nx);
            Gamma.block(i * nx, 0, nx, N * nu) = sys.A * Gamma.block((i - 1) * nx, 0, nx, N * nu);
            Gamma.block(i * nx, (i - 1) * nu, nx, nu) = sys.B;
        }
    }
};

/**
 * @brief Receding-horizon MPC with a fixed diagonal quadratic cost.
 *
 * The Hessian, its largest eigenvalue and the linear-term map depend only on
 * (system, theta, N) and are computed once; each call only forms q = F x.
 * Instances are immutable and may be shared across threads.
 */
class MpcController {
public:
    MpcController(const LinearSystem& sys, ObjectiveParams theta, Eigen::Index N, BoxQpOptions opt = {})
        : MpcController(std::make_shared<const PredictionModel>(sys, N), sys, std::move(theta), opt) {}

    MpcController(std::shared_ptr<const PredictionModel> model, const LinearSystem& sys, ObjectiveParams theta,
                  BoxQpOptions opt = {})
        : model_(std::move(model)), theta_(std::move(theta)), nx_(sys.nx()), nu_(sys.nu()), opt_(opt) {
        theta_.validate(nx_, nu_);
        const Eigen::Index N = model_->N;
        Vector qbar((N + 1) * nx_);
        for (Eigen::Index i = 0; i < N; ++i) qbar.segment(i * nx_, nx_) = theta_.q;
        qbar.segment(N * nx_, nx_) = theta_.p;
        Vector rbar(N * nu_);
        for (Eigen::Index i = 0; i < N; ++i) rbar.segment(i * nu_, nu_) = theta_.r;

        const Matrix QG = qbar.asDiagonal() * model_->Gamma;
        H_ = 2.0 * (model_->Gamma.transpose() * QG);
        H_.diagonal() += 2.0 * rbar;
        H_ = (0.5 * (H_ + H_.transpose())).eval();
        F_ = 2.0 * QG.transpose() * model_->Phi;
        G_ = model_->Phi.transpose() * qbar.asDiagonal() * model_->Phi;
        lipschitz_ = max_eigenvalue(H_) * (1.0 + 1e-6);
        lower_ = Vector(N * nu_);
        for (Eigen::Index i = 0; i < N; ++i) lower_.segment(i * nu_, nu_) = -sys.u_max;
        upper_ = -lower_;
    }

    const ObjectiveParams& theta() const { return theta_; }
    Eigen::Index horizon() const { return model_->N; }

    CondensedQP qp(const Vector& x) const {
        detail::require(x.size() == nx_, "MpcController: state dimension mismatch");
        return {H_, F_ * x, lower_, upper_, x.dot(G_ * x), lipschitz_};
    }

    /// Optimal input sequence from x; `warm` is an optional starting point.
    Vector solve(const Vector& x, const std::optional<Vector>& warm = std::nullopt) const {
        return solve_box_qp_detailed(qp(x), opt_, warm).U;
    }

    Vector first_input(const Vector& x) const { return solve(x).head(nu_); }

    /**
     * @brief Stateful control law for one rollout: warm-starts each solve from
     * the previous optimum shifted by one step. Confine to one thread.
     */
    class Law {
    public:
        explicit Law(std::shared_ptr<const MpcController> mpc) : mpc_(std::move(mpc)) {}
        Vector operator()(const Vector& x) {
            std::optional<Vector> warm;
            if (last_.size() > 0) {
                const Eigen::Index nu = mpc_->nu_;
                Vector shifted(last_.size());
                shifted.head(last_.size() - nu) = last_.tail(last_.size() - nu);
                shifted.tail(nu) = last_.tail(nu);
                warm = std::move(shifted);
            }
            last_ = mpc_->solve(x, warm);
            return last_.head(mpc_->nu_);
        }
        void reset() { last_.resize(0); }

    private:
        std::shared_ptr<const MpcController> mpc_;
        Vector last_;
    };

private:
    std::shared_ptr<const PredictionModel> model_;
    ObjectiveParams theta_;
    Eigen::Index nx_, nu_;
    BoxQpOptions opt_;
    Matrix H_, F_, G_;
    double lipschitz_ = 0.0;
    Vector lower_, upper_;
};

/// Condensed QP at x_t; 1/2 U'HU + q'U + constant equals the trajectory cost.
inline CondensedQP build_condensed_qp(const LinearSystem& sys, const ObjectiveParams& theta, const Vector& x,
                                      Eigen::Index N) {
    detail::require(x.size() == sys.nx(), "build_condensed_qp: state dimension mismatch");
    return MpcController(sys, theta, N).qp(x);
}

/// u_0^* of the MPC problem at x_t.
inline Vector mpc_step(const LinearSystem& sys, const ObjectiveParams& theta, const Vector& x, Eigen::Index N,
                       const BoxQpOptions& opt = {}) {
    return MpcController(sys, theta, N, opt).first_input(x);
}

/// Diagonal weights drawn log-uniformly on [lo, hi] in (q, r, p) order.
inline ObjectiveParams random_objective(Rng& rng, Eigen::Index nx, Eigen::Index nu, double lo = 1e-2,
                                        double hi = 1e2) {
    Vector v(2 * nx + nu);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.log_uniform(lo, hi);
    return ObjectiveParams::from_flat(v, nx, nu);
}

inline std::shared_ptr<const MpcController> make_random_quadratic_controller(
    std::uint64_t seed, const LinearSystem& sys, Eigen::Index N,
    std::shared_ptr<const PredictionModel> model = nullptr) {
    Rng rng(seed);
    auto theta = random_objective(rng, sys.nx(), sys.nu());
    if (!model) model = std::make_shared<const PredictionModel>(sys, N);
    return std::make_shared<const MpcController>(std::move(model), sys, std::move(theta));
}

/// Closed-loop rollout of an MPC with a fresh warm-start state.
inline Trajectory rollout(const LinearSystem& sys, const std::shared_ptr<const MpcController>& mpc, const Vector& x0,
                          Eigen::Index N) {
    MpcController::Law law(mpc);
    return simulate_closed_loop(sys, law, x0, N);
}

}  // namespace prefmpc

#endif  // PREFMPC_MPC_HPP
