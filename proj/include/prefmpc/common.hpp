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
#ifndef PREFMPC_COMMON_HPP
#define PREFMPC_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefmpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a closed-loop input leaves the admissible box.
class ConstraintViolation : public std::runtime_error {
public:
    ConstraintViolation(std::size_t step, const std::string& what)
        : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Iterative solver hit its iteration cap.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(double residual, const std::string& what)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class TrainingFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two trajectories of a query do not share their initial state.
class InvalidQuery : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class QueryTimeout : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class PoolExhausted : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure inside one active-learning iteration; the message carries provenance.
class IterationFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

}  // namespace prefmpc

#endif  // PREFMPC_COMMON_HPP
