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
#ifndef PREFMPC_BOX_QP_HPP
#define PREFMPC_BOX_QP_HPP

#include "prefmpc/common.hpp"

#include <optional>
#include <sstream>

namespace prefmpc {

/**
 * @brief min 1/2 U'HU + q'U + constant  s.t.  lower <= U <= upper.
 *
 * H is symmetric positive definite. `lipschitz` caches lambda_max(H) so that
 * controllers reusing one Hessian skip the power iteration.
 */
struct CondensedQP {
    Matrix H;
    Vector q;
    Vector lower;
    Vector upper;
    double constant = 0.0;
    std::optional<double> lipschitz;

    double objective(const Vector& U) const { return 0.5 * U.dot(H * U) + q.dot(U) + constant; }
    Vector gradient(const Vector& U) const { return H * U + q; }
};

struct BoxQpOptions {
    double tol = 1e-8;
    std::size_t max_iter = 20000;
    /// Iterations between active-set Newton polish attempts; 0 disables polishing.
    std::size_t polish_every = 10;
};

struct BoxQpResult {
    Vector U;
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Power iteration on a symmetric PSD matrix, relative tolerance on successive Rayleigh quotients.
inline double max_eigenvalue(const Matrix& H, double rel_tol = 1e-10, std::size_t max_iter = 100000) {
    const Eigen::Index n = H.rows();
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = v.dot(H * v);
    for (std::size_t it = 0; it < max_iter; ++it) {
        Vector w = H * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        const double next = v.dot(H * v);
        if (std::abs(next - lambda) <= rel_tol * std::abs(next)) return next;
        lambda = next;
    }
    // Gershgorin row-sum bound is always >= lambda_max.
    return H.cwiseAbs().rowwise().sum().maxCoeff();
}

inline Vector project_box(const Vector& U, const Vector& lower, const Vector& upper) {
    return U.cwiseMax(lower).cwiseMin(upper);
}

/// Fixed-point residual ||U - P(U - grad/L)||_inf of the projected-gradient map.
inline double projected_gradient_residual(const CondensedQP& qp, const Vector& U, double L) {
    return (U - project_box(U - qp.gradient(U) / L, qp.lower, qp.upper)).cwiseAbs().maxCoeff();
}

namespace detail {

inline void validate_qp(const CondensedQP& qp) {
    const Eigen::Index n = qp.H.rows();
    require(n >= 1 && qp.H.cols() == n, "CondensedQP: H must be square");
    require(qp.q.size() == n && qp.lower.size() == n && qp.upper.size() == n, "CondensedQP: size mismatch");
    require((qp.lower.array() <= qp.upper.array()).all(), "CondensedQP: empty box");
    require(qp.H.allFinite() && qp.q.allFinite(), "CondensedQP: non-finite data");
}

// Fix coordinates sitting on a bound whose gradient pushes outward, solve the
// reduced Newton system on the rest, and project the result.
inline Vector polish_active_set(const CondensedQP& qp, const Vector& U) {
    const Eigen::Index n = U.size();
    const Vector g = qp.gradient(U);
    std::vector<Eigen::Index> free;
    free.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool at_lower = U(i) <= qp.lower(i) && g(i) >= 0.0;
        const bool at_upper = U(i) >= qp.upper(i) && g(i) <= 0.0;
        if (!at_lower && !at_upper) free.push_back(i);
    }
    Vector z = U;
    if (free.empty()) return z;
    const auto nf = static_cast<Eigen::Index>(free.size());
    Matrix Hff(nf, nf);
    Vector rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) Hff(a, b) = qp.H(free[a], free[b]);
        // -(q_F + H_FA U_A) = -(g_F - H_FF U_F)
        double hu = 0.0;
        for (Eigen::Index b = 0; b < nf; ++b) hu += qp.H(free[a], free[b]) * U(free[b]);
        rhs(a) = -(g(free[a]) - hu);
    }
    Eigen::LLT<Matrix> llt(Hff);
    if (llt.info() != Eigen::Success) return z;
    const Vector zf = llt.solve(rhs);
    for (Eigen::Index a = 0; a < nf; ++a) z(free[a]) = zf(a);
    return project_box(z, qp.lower, qp.upper);
}

}  // namespace detail

/**
 * @brief Accelerated projected gradient (FISTA, gradient-based restart) with
 * step 1/lambda_max(H).
 *
 * Every `polish_every` iterations an active-set Newton step is tried; it is
 * accepted when it lowers the objective, and returned when it already meets
 * the tolerance. Throws NonConvergence after max_iter iterations.
 */
inline BoxQpResult solve_box_qp_detailed(const CondensedQP& qp, const BoxQpOptions& opt = {},
                                         const std::optional<Vector>& warm_start = std::nullopt) {
    detail::validate_qp(qp);
    detail::require(opt.tol > 0.0, "solve_box_qp: tol must be positive");
    const double L = qp.lipschitz ? *qp.lipschitz : max_eigenvalue(qp.H) * (1.0 + 1e-6);
    detail::require(L > 0.0, "solve_box_qp: H must be positive definite");

    Vector x = warm_start && warm_start->size() == qp.q.size() ? project_box(*warm_start, qp.lower, qp.upper)
                                                                 : project_box(Vector::Zero(qp.q.size()), qp.lower, qp.upper);
    double residual = projected_gradient_residual(qp, x, L);
    if (residual <= opt.tol) return {x, residual, 0};

    Vector y = x;
    double t = 1.0;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        const Vector x_next = project_box(y - qp.gradient(y) / L, qp.lower, qp.upper);
        if ((y - x_next).dot(x_next - x) > 0.0) {
            t = 1.0;
            y = x_next;
        } else {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = x_next + ((t - 1.0) / t_next) * (x_next - x);
            t = t_next;
        }
        x = x_next;
        residual = projected_gradient_residual(qp, x, L);
        if (residual <= opt.tol) return {x, residual, it};

        if (opt.polish_every > 0 && it % opt.polish_every == 0) {
            const Vector z = detail::polish_active_set(qp, x);
            const double rz = projected_gradient_residual(qp, z, L);
            if (rz <= opt.tol) return {z, rz, it};
            if (qp.objective(z) < qp.objective(x)) {
                x = z;
                y = z;
                t = 1.0;
                residual = rz;
            }
        }
    }
    std::ostringstream os;
    os << "solve_box_qp: no convergence after " << opt.max_iter << " iterations, residual " << residual;
    throw NonConvergence(residual, os.str());
}

inline Vector solve_box_qp(const CondensedQP& qp, double tol = 1e-8, std::size_t max_iter = 20000) {
    BoxQpOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return solve_box_qp_detailed(qp, opt).U;
}

}  // namespace prefmpc

#endif  // PREFMPC_BOX_QP_HPP
