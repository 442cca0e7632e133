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
#ifndef PREFMPC_OPTIM_HPP
#define PREFMPC_OPTIM_HPP

#include "prefmpc/box_qp.hpp"
#include "prefmpc/common.hpp"

#include <deque>
#include <functional>

namespace prefmpc {

/// Returns f(x) and writes the gradient into the second argument.
using ObjectiveFn = std::function<double(const Vector&, Vector&)>;

struct AdamOptions {
    std::size_t iterations = 1000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with projection onto [lower, upper] after every step.
inline Vector adam_projected(const ObjectiveFn& f, Vector x, const Vector& lower, const Vector& upper,
                             const AdamOptions& opt) {
    x = project_box(x, lower, upper);
    Vector m = Vector::Zero(x.size());
    Vector v = Vector::Zero(x.size());
    Vector g(x.size());
    double b1t = 1.0, b2t = 1.0;
    for (std::size_t k = 0; k < opt.iterations; ++k) {
        const double fx = f(x, g);
        if (!std::isfinite(fx) || !g.allFinite()) throw TrainingFailure("adam: non-finite objective or gradient");
        m = opt.beta1 * m + (1.0 - opt.beta1) * g;
        v = opt.beta2 * v + (1.0 - opt.beta2) * g.cwiseProduct(g);
        b1t *= opt.beta1;
        b2t *= opt.beta2;
        const Vector mhat = m / (1.0 - b1t);
        const Vector vhat = v / (1.0 - b2t);
        x -= opt.learning_rate * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + opt.epsilon).matrix());
        x = project_box(x, lower, upper);
    }
    return x;
}

struct LbfgsOptions {
    std::size_t max_iter = 500;
    double gradient_tol = 1e-8;
    std::size_t memory = 10;
};

struct LbfgsResult {
    Vector x;
    double value = 0.0;
    double projected_gradient = 0.0;
    std::size_t iterations = 0;
};

/**
 * @brief Bound-constrained limited-memory BFGS.
 *
 * Variables at a bound with the gradient pointing outward are frozen for the
 * step; the two-loop recursion runs on the remaining coordinates and an
 * Armijo backtracking search follows the projected path. Stops when
 * ||x - P(x - g)||_inf <= gradient_tol or after max_iter iterations.
 */
inline LbfgsResult lbfgs_projected(const ObjectiveFn& f, Vector x, const Vector& lower, const Vector& upper,
                                   const LbfgsOptions& opt) {
    const Eigen::Index n = x.size();
    x = project_box(x, lower, upper);
    Vector g(n);
    double fx = f(x, g);
    if (!std::isfinite(fx)) throw TrainingFailure("lbfgs: non-finite objective at start");

    std::deque<std::pair<Vector, Vector>> history;
    LbfgsResult res;
    for (std::size_t it = 0;; ++it) {
        const double pg = (x - project_box(x - g, lower, upper)).cwiseAbs().maxCoeff();
        res = {x, fx, pg, it};
        if (pg <= opt.gradient_tol || it >= opt.max_iter) return res;

        Vector free_mask(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool pinned = (x(i) <= lower(i) && g(i) > 0.0) || (x(i) >= upper(i) && g(i) < 0.0);
            free_mask(i) = pinned ? 0.0 : 1.0;
        }

        // Two-loop recursion restricted to free coordinates.
        Vector d = -g.cwiseProduct(free_mask);
        std::vector<double> alpha(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            const Vector s = history[k].first.cwiseProduct(free_mask);
            const Vector y = history[k].second.cwiseProduct(free_mask);
            const double sy = s.dot(y);
            if (sy <= 0.0) {
                alpha[k] = 0.0;
                continue;
            }
            alpha[k] = s.dot(d) / sy;
            d -= alpha[k] * y;
        }
        if (!history.empty()) {
            const Vector s = history.back().first.cwiseProduct(free_mask);
            const Vector y = history.back().second.cwiseProduct(free_mask);
            const double yy = y.dot(y);
            if (yy > 0.0 && s.dot(y) > 0.0) d *= s.dot(y) / yy;
        }
        for (std::size_t k = 0; k < history.size(); ++k) {
            const Vector s = history[k].first.cwiseProduct(free_mask);
            const Vector y = history[k].second.cwiseProduct(free_mask);
            const double sy = s.dot(y);
            if (sy <= 0.0) continue;
            const double beta = y.dot(d) / sy;
            d += (alpha[k] - beta) * s;
        }
        if (d.dot(g) >= 0.0) {
            d = -g.cwiseProduct(free_mask);
            history.clear();
        }
        if (history.empty()) {
            // First step: scale steepest descent to a unit-length move.
            const double dn = d.cwiseAbs().maxCoeff();
            if (dn > 0.0) d /= std::max(1.0, dn);
        }

        double step = 1.0;
        Vector x_new(n), g_new(n);
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = project_box(x + step * d, lower, upper);
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * g.dot(x_new - x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!history.empty()) {
                history.clear();
                continue;
            }
            return res;
        }
        const Vector s = x_new - x;
        const Vector y = g_new - g;
        if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
            history.emplace_back(s, y);
            if (history.size() > opt.memory) history.pop_front();
        }
        x = x_new;
        g = g_new;
        fx = f_new;
    }
}

}  // namespace prefmpc

#endif  // PREFMPC_OPTIM_HPP
