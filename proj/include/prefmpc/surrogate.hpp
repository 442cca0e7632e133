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
#ifndef PREFMPC_SURROGATE_HPP
#define PREFMPC_SURROGATE_HPP

#include "prefmpc/mpc.hpp"
#include "prefmpc/optim.hpp"

#include <functional>
#include <istream>
#include <ostream>

namespace prefmpc {

/**
 * @brief Per-coordinate squares whose weighted sum is the quadratic cost.
 *
 * Layout (q, r, p): sum_{i<N} x_{i,j}^2, then sum_{i<N} u_{i,j}^2, then
 * x_{N,j}^2, so cost(theta, T) = theta.flat() . features(T).
 */
inline Vector features(const Trajectory& t) {
    const Eigen::Index nx = t.states.rows(), nu = t.inputs.rows(), N = t.horizon();
    Vector phi(2 * nx + nu);
    phi.head(nx) = t.states.leftCols(N).cwiseAbs2().rowwise().sum();
    phi.segment(nx, nu) = t.inputs.cwiseAbs2().rowwise().sum();
    phi.tail(nx) = t.states.col(N).cwiseAbs2();
    return phi;
}

inline double cost(const ObjectiveParams& theta, const Trajectory& t) { return theta.flat().dot(features(t)); }

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(a)) without overflow.
inline double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

/// Probability that T is preferred to S: 1 / (1 + exp(f(T) - f(S))).
inline double pref_probability(const ObjectiveParams& theta, const Trajectory& T, const Trajectory& S) {
    return sigmoid(cost(theta, S) - cost(theta, T));
}

/// 1 iff f(T) <= f(S).
inline int classify(const ObjectiveParams& theta, const Trajectory& T, const Trajectory& S) {
    return cost(theta, T) <= cost(theta, S) ? 1 : 0;
}

struct RecordMeta {
    std::string generator_t;
    std::string generator_s;
    std::int64_t initial_state_id = -1;
    /// Pool id for pool-drawn pairs, -1 otherwise.
    std::int64_t source_id = -1;
    /// AL iteration that added the record (0 for the initial dataset).
    std::int64_t iteration = 0;
    bool operator==(const RecordMeta&) const = default;
};

struct PreferenceRecord {
    Trajectory T;
    Trajectory S;
    int label = 0;
    RecordMeta meta;
};

inline constexpr double kSharedInitialStateTol = 1e-12;

inline bool share_initial_state(const Trajectory& a, const Trajectory& b) {
    return a.states.rows() == b.states.rows() &&
           (a.states.col(0) - b.states.col(0)).cwiseAbs().maxCoeff() <= kSharedInitialStateTol;
}

/// Labeled comparisons. Only pairs from a common initial state are admitted.
class PreferenceDataset {
public:
    void add(PreferenceRecord r) {
        if (!share_initial_state(r.T, r.S))
            throw InvalidQuery("PreferenceDataset: trajectories must start from the same initial state");
        if (r.label != 0 && r.label != 1) throw std::invalid_argument("PreferenceDataset: label must be 0 or 1");
        records_.push_back(std::move(r));
    }
    const std::vector<PreferenceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const PreferenceRecord& operator[](std::size_t i) const { return records_[i]; }

private:
    std::vector<PreferenceRecord> records_;
};

inline nlohmann::json to_json(const RecordMeta& m) {
    return {{"generator_t", m.generator_t}, {"generator_s", m.generator_s}, {"initial_state_id", m.initial_state_id},
            {"source_id", m.source_id}, {"iteration", m.iteration}};
}

inline RecordMeta meta_from_json(const nlohmann::json& j) {
    RecordMeta m;
    m.generator_t = j.value("generator_t", "");
    m.generator_s = j.value("generator_s", "");
    m.initial_state_id = j.value("initial_state_id", std::int64_t{-1});
    m.source_id = j.value("source_id", std::int64_t{-1});
    m.iteration = j.value("iteration", std::int64_t{0});
    return m;
}

inline nlohmann::json to_json(const PreferenceRecord& r) {
    return {{"T", to_json(r.T)}, {"S", to_json(r.S)}, {"p", r.label}, {"meta", to_json(r.meta)}};
}

/// One JSON object per line.
inline void write_jsonl(std::ostream& os, const PreferenceDataset& d) {
    for (const auto& r : d.records()) os << to_json(r).dump() << '\n';
}

inline PreferenceDataset read_jsonl(std::istream& is) {
    PreferenceDataset d;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        d.add({trajectory_from_json(j.at("T")), trajectory_from_json(j.at("S")), j.at("p").get<int>(),
               meta_from_json(j.value("meta", nlohmann::json::object()))});
    }
    return d;
}

struct TrainConfig {
    AdamOptions adam;
    double ridge = 1e-4;
    LbfgsOptions lbfgs;
    double theta_min = kThetaMin;
    double theta_max = kThetaMax;

    void validate() const {
        detail::require(adam.iterations >= 1 && adam.learning_rate > 0.0 && adam.beta1 > 0.0 && adam.beta2 > 0.0 &&
                            ridge > 0.0 && lbfgs.max_iter >= 1 && lbfgs.gradient_tol > 0.0 && theta_min > 0.0 &&
                            theta_max > theta_min,
                        "TrainConfig: all settings must be positive");
    }
};

/**
 * @brief Regularized cross-entropy over precomputed feature differences.
 *
 * Row l of `delta` is phi(S_l) - phi(T_l), so z_l = theta . delta_l =
 * f(S_l) - f(T_l) and the predicted probability is sigmoid(z_l).
 */
struct PreferenceProblem {
    Matrix delta;
    Vector labels;
    double ridge = 0.0;

    PreferenceProblem(const PreferenceDataset& d, double rho) : ridge(rho) {
        detail::require(!d.empty(), "training objective: dataset is empty");
        const Eigen::Index n = static_cast<Eigen::Index>(d.size());
        const Eigen::Index dim = features(d[0].T).size();
        delta.resize(n, dim);
        labels.resize(n);
        for (Eigen::Index l = 0; l < n; ++l) {
            const auto& r = d[static_cast<std::size_t>(l)];
            delta.row(l) = (features(r.S) - features(r.T)).transpose();
            labels(l) = r.label;
        }
    }

    double value(const Vector& theta, Vector& grad) const {
        const Eigen::Index n = delta.rows();
        const Vector z = delta * theta;
        double loss = 0.0;
        Vector w(n);
        for (Eigen::Index l = 0; l < n; ++l) {
            const double p = labels(l);
            // -p log sigmoid(z) - (1-p) log sigmoid(-z)
            loss += p * softplus(-z(l)) + (1.0 - p) * softplus(z(l));
            w(l) = sigmoid(z(l)) - p;
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        grad = 2.0 * ridge * theta + inv_n * (delta.transpose() * w);
        return ridge * theta.squaredNorm() + inv_n * loss;
    }

    ObjectiveFn as_function() const {
        return [this](const Vector& x, Vector& g) { return value(x, g); };
    }
};

struct ObjectiveValue {
    double value = 0.0;
    Vector gradient;
};

inline ObjectiveValue training_objective(const ObjectiveParams& theta, const PreferenceDataset& d,
                                         const TrainConfig& cfg) {
    const PreferenceProblem prob(d, cfg.ridge);
    ObjectiveValue out;
    out.value = prob.value(theta.flat(), out.gradient);
    return out;
}

struct TrainResult {
    ObjectiveParams theta;
    double objective = 0.0;
    double projected_gradient = 0.0;
};

/**
 * @brief Adam with box projection, then bounded L-BFGS refinement from the
 * Adam iterate. The returned point never has a larger objective than theta_init.
 */
inline TrainResult train_detailed(const PreferenceDataset& d, const ObjectiveParams& theta_init,
                                  const TrainConfig& cfg) {
    cfg.validate();
    const Eigen::Index nx = theta_init.q.size(), nu = theta_init.r.size();
    theta_init.validate(nx, nu, cfg.theta_min, cfg.theta_max);
    const PreferenceProblem prob(d, cfg.ridge);
    detail::require(prob.delta.cols() == theta_init.size(), "train: theta and feature dimension differ");
    const auto f = prob.as_function();
    const Vector lo = Vector::Constant(theta_init.size(), cfg.theta_min);
    const Vector hi = Vector::Constant(theta_init.size(), cfg.theta_max);

    Vector g;
    const Vector x0 = theta_init.flat();
    const double f0 = f(x0, g);
    if (!std::isfinite(f0)) throw TrainingFailure("train: non-finite objective at initial theta");

    const Vector x_adam = adam_projected(f, x0, lo, hi, cfg.adam);
    const LbfgsResult refined = lbfgs_projected(f, x_adam, lo, hi, cfg.lbfgs);
    if (!std::isfinite(refined.value) || !refined.x.allFinite()) {
        std::ostringstream os;
        os << "train: non-finite result (objective " << refined.value << ", after " << refined.iterations
           << " quasi-Newton iterations, n_p = " << d.size() << ")";
        throw TrainingFailure(os.str());
    }
    if (refined.value > f0) return {theta_init, f0, (x0 - project_box(x0 - g, lo, hi)).cwiseAbs().maxCoeff()};
    return {ObjectiveParams::from_flat(refined.x, nx, nu), refined.value, refined.projected_gradient};
}

inline ObjectiveParams train(const PreferenceDataset& d, const ObjectiveParams& theta_init, const TrainConfig& cfg) {
    return train_detailed(d, theta_init, cfg).theta;
}

/// Restart point: each coordinate log-uniform on [1e-2, 1e2].
inline ObjectiveParams random_initial_theta(std::uint64_t seed, Eigen::Index nx, Eigen::Index nu) {
    Rng rng(seed);
    return random_objective(rng, nx, nu);
}

/// Closed-loop quality of one candidate over a fixed set of evaluation states.
struct CandidateScore {
    double max_settling = 0.0;
    double avg_settling = 0.0;
};

using CandidateEvaluator = std::function<CandidateScore(const ObjectiveParams&)>;

struct Selection {
    std::size_t index = 0;
    ObjectiveParams theta;
    CandidateScore score;
};

/**
 * @brief Keep the candidate with the smallest maximum settling time; ties go
 * to the smaller average, then to the earlier candidate. A candidate whose
 * evaluation throws is disqualified.
 */
inline Selection select_model(const std::vector<ObjectiveParams>& candidates, const CandidateEvaluator& evaluate) {
    detail::require(!candidates.empty(), "select_model: no candidates");
    std::optional<Selection> best;
    std::string failures;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        CandidateScore s;
        try {
            s = evaluate(candidates[i]);
        } catch (const std::exception& e) {
            failures += " [" + std::to_string(i) + "] " + e.what();
            continue;
        }
        const bool better = !best || s.max_settling < best->score.max_settling ||
                            (s.max_settling == best->score.max_settling && s.avg_settling < best->score.avg_settling);
        if (better) best = Selection{i, candidates[i], s};
    }
    if (!best) throw std::runtime_error("select_model: every candidate was disqualified:" + failures);
    return *best;
}

}  // namespace prefmpc

#endif  // PREFMPC_SURROGATE_HPP
