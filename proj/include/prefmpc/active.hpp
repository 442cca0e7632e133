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
#ifndef PREFMPC_ACTIVE_HPP
#define PREFMPC_ACTIVE_HPP

#include "prefmpc/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace prefmpc {

// Acquisition ingredients

/// 0.5 - |p_hat(T, S) - 0.5|; largest when the surrogate cannot tell T and S apart.
inline double uncertainty(const ObjectiveParams& theta, const Trajectory& T, const Trajectory& S) {
    return 0.5 - std::abs(pref_probability(theta, T, S) - 0.5);
}

/// Sum of squared state and input differences over the whole horizon.
inline double traj_distance(const Trajectory& a, const Trajectory& b) {
    if (a.states.rows() != b.states.rows() || a.states.cols() != b.states.cols() ||
        a.inputs.rows() != b.inputs.rows() || a.inputs.cols() != b.inputs.cols())
        throw std::invalid_argument("traj_distance: trajectories have different shapes");
    return (a.states - b.states).squaredNorm() + (a.inputs - b.inputs).squaredNorm();
}

/// Matching distance between {a1, a2} and {b1, b2}: the cheaper of the two pairings.
inline double pair_distance(const Trajectory& a1, const Trajectory& a2, const Trajectory& b1, const Trajectory& b2) {
    return std::min(traj_distance(a1, b1) + traj_distance(a2, b2), traj_distance(a1, b2) + traj_distance(a2, b1));
}

/// Minimum pair distance from (T, S) to any labeled pair.
inline double inter_diversity(const Trajectory& T, const Trajectory& S, const PreferenceDataset& labeled) {
    if (labeled.empty()) throw std::invalid_argument("inter_diversity: labeled set is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : labeled.records()) best = std::min(best, pair_distance(r.T, r.S, T, S));
    return best;
}

enum class DiversityVariant { UncertaintyOnly, IntraOnly, InterOnly, Sum, Product };

inline const std::vector<DiversityVariant>& all_diversity_variants() {
    static const std::vector<DiversityVariant> v{DiversityVariant::UncertaintyOnly, DiversityVariant::IntraOnly,
                                                 DiversityVariant::InterOnly, DiversityVariant::Sum,
                                                 DiversityVariant::Product};
    return v;
}

inline std::string to_string(DiversityVariant v) {
    switch (v) {
        case DiversityVariant::UncertaintyOnly: return "uncertainty";
        case DiversityVariant::IntraOnly: return "intra";
        case DiversityVariant::InterOnly: return "inter";
        case DiversityVariant::Sum: return "sum";
        case DiversityVariant::Product: return "product";
    }
    return "sum";
}

inline DiversityVariant parse_variant(const std::string& s) {
    for (auto v : all_diversity_variants())
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown diversity variant: " + s);
}

/// Diversity factor D for inter-pair diversity `inter` and intra-pair distance `intra`.
inline double diversity(DiversityVariant v, double inter, double intra) {
    switch (v) {
        case DiversityVariant::UncertaintyOnly: return 1.0;
        case DiversityVariant::IntraOnly: return intra;
        case DiversityVariant::InterOnly: return inter;
        case DiversityVariant::Sum: return inter + intra;
        case DiversityVariant::Product: return inter * intra;
    }
    return inter + intra;
}

inline double acquisition(const ObjectiveParams& theta, const Trajectory& T, const Trajectory& S,
                          const PreferenceDataset& labeled, DiversityVariant v) {
    const double u = uncertainty(theta, T, S);
    if (v == DiversityVariant::UncertaintyOnly) return u;
    const double intra = v == DiversityVariant::InterOnly ? 0.0 : traj_distance(T, S);
    const double inter = v == DiversityVariant::IntraOnly ? 0.0 : inter_diversity(T, S, labeled);
    return u * diversity(v, inter, intra);
}

// Pools

struct PoolPair {
    std::int64_t id = 0;
    Trajectory T;
    Trajectory S;
    RecordMeta meta;
};

/// Candidate pairs with unique ids; after construction entries are only removed.
class UnlabeledPool {
public:
    void add(PoolPair p) {
        if (!share_initial_state(p.T, p.S)) throw InvalidQuery("UnlabeledPool: pair does not share its initial state");
        if (!pairs_.empty() && p.id <= pairs_.back().id)
            throw std::invalid_argument("UnlabeledPool: ids must be unique and increasing");
        pairs_.push_back(std::move(p));
    }
    PoolPair remove(std::int64_t id) {
        auto it = std::lower_bound(pairs_.begin(), pairs_.end(), id,
                                   [](const PoolPair& p, std::int64_t v) { return p.id < v; });
        if (it == pairs_.end() || it->id != id) throw std::out_of_range("UnlabeledPool: unknown id");
        PoolPair out = std::move(*it);
        pairs_.erase(it);
        return out;
    }
    bool contains(std::int64_t id) const {
        auto it = std::lower_bound(pairs_.begin(), pairs_.end(), id,
                                   [](const PoolPair& p, std::int64_t v) { return p.id < v; });
        return it != pairs_.end() && it->id == id;
    }
    const std::vector<PoolPair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }
    bool empty() const { return pairs_.empty(); }

private:
    std::vector<PoolPair> pairs_;
};

struct ControllerEntry {
    std::shared_ptr<const MpcController> mpc;
    std::string provenance;
};

/// Ordered control laws: the initial random-cost MPCs followed by learned ones.
class ControllerPool {
public:
    void add(std::shared_ptr<const MpcController> mpc, std::string provenance) {
        entries_.push_back({std::move(mpc), std::move(provenance)});
    }
    const ControllerEntry& operator[](std::size_t i) const { return entries_[i]; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<ControllerEntry>& entries() const { return entries_; }

private:
    std::vector<ControllerEntry> entries_;
};

/**
 * @brief Greedy max-min exploration of initial states.
 *
 * Screens `n_candidates` uniform samples from the box and returns the first
 * one maximizing the minimum squared distance to `history`. An empty history
 * yields a single uniform sample.
 */
inline Vector greedy_next_init(const std::vector<Vector>& history, const StateBox& box, std::size_t n_candidates,
                               std::uint64_t seed) {
    box.validate();
    Rng rng(seed);
    if (history.empty()) return sample_in_box(box, rng);
    detail::require(n_candidates >= 1, "greedy_next_init: need at least one candidate");
    Vector best;
    double best_d = -1.0;
    for (std::size_t c = 0; c < n_candidates; ++c) {
        Vector x = sample_in_box(box, rng);
        double d = std::numeric_limits<double>::infinity();
        for (const auto& h : history) d = std::min(d, (x - h).squaredNorm());
        if (d > best_d) {
            best_d = d;
            best = std::move(x);
        }
    }
    return best;
}

// Active-learning loop

/// Uniform draw of n distinct ids without replacement, in draw order.
inline std::vector<std::int64_t> random_subset(std::vector<std::int64_t> ids, std::size_t n, std::uint64_t seed) {
    detail::require(n <= ids.size(), "random_subset: not enough ids");
    Rng rng(seed);
    std::vector<std::int64_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.index(ids.size());
        out.push_back(ids[j]);
        ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
}

enum class Strategy { Pool, Synthesis, Random };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Pool: return "pool";
        case Strategy::Synthesis: return "synth";
        case Strategy::Random: return "random";
    }
    return "pool";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "pool") return Strategy::Pool;
    if (s == "synth") return Strategy::Synthesis;
    if (s == "random") return Strategy::Random;
    throw std::invalid_argument("unknown strategy: " + s);
}

struct ActiveConfig {
    Eigen::Index horizon = 30;
    DiversityVariant variant = DiversityVariant::Sum;
    TrainConfig train;
    SettlingConfig settling;
    StateBox initial_box = default_initial_box();
    std::size_t greedy_candidates = 1024;
    /// Drives training restarts, random selection and synthesis controller picks.
    std::uint64_t seed = 0;
    bool record_wall_time = false;
};

struct IterationMetrics {
    std::int64_t iteration = 0;
    std::size_t n_labeled = 0;
    std::size_t pool_size = 0;
    std::size_t n_controllers = 0;
    int settle_min = 0;
    double settle_avg = 0.0;
    int settle_max = 0;
    double umax_avg = 0.0;
    double wall_time_s = 0.0;
    double objective = 0.0;
    ObjectiveParams theta;
};

/**
 * @brief State of one active-learning run: labeled set, unlabeled pool,
 * controller pool and the current surrogate.
 *
 * Every step queries the oracle, grows the labeled set and retrains with two
 * starts (from the previous theta and from a fresh random point); the
 * winner is the candidate whose MPC has the smallest maximum settling time
 * over the evaluation states.
 */
class ActiveLearner {
public:
    ActiveLearner(LinearSystem sys, ActiveConfig cfg, PreferenceDataset initial, UnlabeledPool pool,
                  ControllerPool controllers, std::vector<Vector> eval_states, PreferenceOracle& oracle)
        : sys_(std::move(sys)),
          cfg_(std::move(cfg)),
          model_(std::make_shared<const PredictionModel>(sys_, cfg_.horizon)),
          dataset_(std::move(initial)),
          pool_(std::move(pool)),
          controllers_(std::move(controllers)),
          eval_states_(std::move(eval_states)),
          oracle_(&oracle) {
        detail::require(!dataset_.empty(), "ActiveLearner: initial dataset must be labeled and non-empty");
        detail::require(!eval_states_.empty(), "ActiveLearner: no evaluation states");
    }

    /// Learns theta^0 from the initial dataset.
    const IterationMetrics& initialize() {
        if (!initialized_) {
            const auto start = std::chrono::steady_clock::now();
            current_ = retrain(start);
            initialized_ = true;
        }
        return current_;
    }

    bool initialized() const { return initialized_; }
    std::int64_t iteration() const { return k_; }
    const ObjectiveParams& theta() const { return current_.theta; }
    const IterationMetrics& current() const { return current_; }
    const PreferenceDataset& dataset() const { return dataset_; }
    const UnlabeledPool& pool() const { return pool_; }
    const ControllerPool& controllers() const { return controllers_; }
    const std::vector<Vector>& eval_states() const { return eval_states_; }
    const LinearSystem& system() const { return sys_; }
    const ActiveConfig& config() const { return cfg_; }
    std::shared_ptr<const PredictionModel> prediction_model() const { return model_; }

    std::shared_ptr<const MpcController> make_mpc(const ObjectiveParams& theta) const {
        return std::make_shared<const MpcController>(model_, sys_, theta);
    }

    /// Acquisition score of every pool pair under the current surrogate, in pool order.
    std::vector<double> acquisition_scores() const {
        std::vector<double> scores;
        scores.reserve(pool_.size());
        for (const auto& p : pool_.pairs()) scores.push_back(acquisition(current_.theta, p.T, p.S, dataset_, cfg_.variant));
        return scores;
    }

    /// Ids of the n highest-scoring pool pairs; ties go to the smaller id.
    std::vector<std::int64_t> select_top(std::size_t n) const {
        const auto scores = acquisition_scores();
        std::vector<std::size_t> order(pool_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        std::vector<std::int64_t> ids;
        for (std::size_t i = 0; i < n; ++i) ids.push_back(pool_.pairs()[order[i]].id);
        return ids;
    }

    const IterationMetrics& pool_step(std::size_t n_k) {
        initialize();
        check_batch(n_k);
        const auto start = std::chrono::steady_clock::now();
        label_from_pool(select_top(n_k));
        return finish_iteration(start);
    }

    const IterationMetrics& random_step(std::size_t n_k) {
        initialize();
        check_batch(n_k);
        const auto start = std::chrono::steady_clock::now();
        std::vector<std::int64_t> remaining;
        for (const auto& p : pool_.pairs()) remaining.push_back(p.id);
        label_from_pool(random_subset(remaining, n_k, derive_seed(cfg_.seed, 3 * static_cast<std::uint64_t>(k_ + 1))));
        return finish_iteration(start);
    }

    const IterationMetrics& synthesis_step() {
        initialize();
        detail::require(!controllers_.empty(), "synthesis_step: controller pool is empty");
        const auto start = std::chrono::steady_clock::now();
        const std::int64_t k = k_ + 1;
        const std::uint64_t stream = 3 * static_cast<std::uint64_t>(k) + 1;

        std::vector<Vector> history;
        history.reserve(dataset_.size());
        for (const auto& r : dataset_.records()) history.push_back(r.T.initial_state());
        const Vector x0 = greedy_next_init(history, cfg_.initial_box, cfg_.greedy_candidates, derive_seed(cfg_.seed, stream));

        Rng rng(derive_seed(cfg_.seed, stream + 1000000));
        const std::size_t pick = rng.index(controllers_.size());
        const auto& kappa = controllers_[pick];
        Trajectory t_pool, t_learned;
        try {
            t_pool = rollout(sys_, kappa.mpc, x0, cfg_.horizon);
        } catch (const std::exception& e) {
            throw IterationFailure("synthesis iteration " + std::to_string(k) + ": rollout of controller " +
                                   kappa.provenance + " failed: " + e.what());
        }
        try {
            t_learned = rollout(sys_, make_mpc(current_.theta), x0, cfg_.horizon);
        } catch (const std::exception& e) {
            throw IterationFailure("synthesis iteration " + std::to_string(k) + ": rollout of learned MPC theta^" +
                                   std::to_string(k_) + " failed: " + e.what());
        }

        PreferenceQuery q{"synth-" + std::to_string(k), t_pool, t_learned};
        q.iteration = k;
        const int label = oracle_->ask(q);
        RecordMeta meta{kappa.provenance, "learned:" + std::to_string(k_), next_synth_state_id_++, -1, k};
        dataset_.add({std::move(t_pool), std::move(t_learned), label, std::move(meta)});

        const IterationMetrics& m = finish_iteration(start);
        controllers_.add(make_mpc(current_.theta), "learned:" + std::to_string(k));
        current_.n_controllers = controllers_.size();
        return m;
    }

    /// Initial-state ids for synthesized pairs start here.
    void set_synth_state_id_base(std::int64_t base) { next_synth_state_id_ = base; }

    /// Evaluation statistics of the current theta.
    EvaluationReport evaluate(const ObjectiveParams& theta) const {
        return evaluate_controller(sys_, make_mpc(theta), eval_states_, cfg_.settling);
    }

private:
    void check_batch(std::size_t n_k) const {
        detail::require(n_k >= 1, "batch size must be >= 1");
        if (pool_.size() < n_k) throw PoolExhausted("unlabeled pool has fewer pairs than the batch size");
    }

    void label_from_pool(const std::vector<std::int64_t>& ids) {
        const std::int64_t k = k_ + 1;
        for (auto id : ids) {
            PoolPair p = pool_.remove(id);
            PreferenceQuery q{"pool-" + std::to_string(p.id), p.T, p.S};
            q.iteration = k;
            const int label = oracle_->ask(q);
            p.meta.source_id = p.id;
            p.meta.iteration = k;
            dataset_.add({std::move(p.T), std::move(p.S), label, std::move(p.meta)});
        }
    }

    const IterationMetrics& finish_iteration(std::chrono::steady_clock::time_point start) {
        ++k_;
        current_ = retrain(start);
        return current_;
    }

    IterationMetrics retrain(std::chrono::steady_clock::time_point start) {
        const Eigen::Index nx = sys_.nx(), nu = sys_.nu();
        const std::uint64_t stream = 3 * static_cast<std::uint64_t>(k_) + 2;
        std::vector<TrainResult> fits;
        if (k_ == 0) {
            fits.push_back(train_detailed(dataset_, random_initial_theta(derive_seed(cfg_.seed, stream), nx, nu), cfg_.train));
            fits.push_back(train_detailed(dataset_, random_initial_theta(derive_seed(cfg_.seed, stream + 7), nx, nu), cfg_.train));
        } else {
            fits.push_back(train_detailed(dataset_, current_.theta, cfg_.train));
            fits.push_back(train_detailed(dataset_, random_initial_theta(derive_seed(cfg_.seed, stream), nx, nu), cfg_.train));
        }
        std::vector<ObjectiveParams> candidates;
        for (const auto& f : fits) candidates.push_back(f.theta);

        std::vector<EvaluationReport> reports(candidates.size());
        std::size_t evaluated = 0;
        const auto sel = select_model(candidates, [&](const ObjectiveParams& th) {
            EvaluationReport rep = evaluate(th);
            const std::size_t slot = evaluated++;
            if (!rep.all_ok()) throw std::runtime_error("evaluation rollout failed");
            CandidateScore s{static_cast<double>(rep.settle_max), rep.settle_avg};
            reports[slot] = std::move(rep);
            return s;
        });
        const EvaluationReport& rep = reports[sel.index];

        IterationMetrics m;
        m.iteration = k_;
        m.n_labeled = dataset_.size();
        m.pool_size = pool_.size();
        m.n_controllers = controllers_.size();
        m.settle_min = rep.settle_min;
        m.settle_avg = rep.settle_avg;
        m.settle_max = rep.settle_max;
        m.umax_avg = rep.umax_avg;
        m.objective = fits[sel.index].objective;
        m.theta = sel.theta;
        if (cfg_.record_wall_time)
            m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return m;
    }

    LinearSystem sys_;
    ActiveConfig cfg_;
    std::shared_ptr<const PredictionModel> model_;
    PreferenceDataset dataset_;
    UnlabeledPool pool_;
    ControllerPool controllers_;
    std::vector<Vector> eval_states_;
    PreferenceOracle* oracle_;
    IterationMetrics current_;
    std::int64_t k_ = 0;
    std::int64_t next_synth_state_id_ = 1000000;
    bool initialized_ = false;
};

struct LoopHistory {
    IterationMetrics initial;
    std::vector<IterationMetrics> iterations;
    /// Set when the loop stopped early; rows completed before the failure are kept.
    std::optional<std::string> error;
    bool complete() const { return !error.has_value(); }
};

/// Runs M iterations of `strategy`; metrics are those of theta^k over the evaluation states.
inline LoopHistory run_loop(ActiveLearner& learner, Strategy strategy, std::size_t M, std::size_t n_k = 1) {
    detail::require(M >= 1, "run_loop: M must be >= 1");
    LoopHistory h;
    try {
        h.initial = learner.initialize();
        for (std::size_t k = 0; k < M; ++k) {
            switch (strategy) {
                case Strategy::Pool: h.iterations.push_back(learner.pool_step(n_k)); break;
                case Strategy::Random: h.iterations.push_back(learner.random_step(n_k)); break;
                case Strategy::Synthesis: h.iterations.push_back(learner.synthesis_step()); break;
            }
        }
    } catch (const std::exception& e) {
        h.error = e.what();
    }
    return h;
}

}  // namespace prefmpc

#endif  // PREFMPC_ACTIVE_HPP
