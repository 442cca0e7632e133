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
#ifndef PREFMPC_ORACLE_HPP
#define PREFMPC_ORACLE_HPP

#include "prefmpc/surrogate.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>

namespace prefmpc {

struct SettlingConfig {
    double epsilon = 0.05;
};

/// Euclidean output norms ||C x_i||, i = 0..N.
inline Vector output_norms(const Trajectory& t, const Matrix& C) {
    return (C * t.states).colwise().norm().transpose();
}

/**
 * @brief Smallest i such that ||y_l|| <= epsilon for every l >= i; N when the
 * output is still outside the band at the last sample.
 */
inline int settling_time(const Trajectory& t, const Matrix& C, const SettlingConfig& cfg = {}) {
    detail::require(cfg.epsilon > 0.0, "settling_time: epsilon must be positive");
    const Vector norms = output_norms(t, C);
    const auto N = static_cast<int>(t.horizon());
    if (norms(N) > cfg.epsilon) return N;
    int i = N;
    while (i > 0 && norms(i - 1) <= cfg.epsilon) --i;
    return i;
}

/// max_{i,j} |u_{i,j}|.
inline double max_input_norm(const Trajectory& t) {
    return t.inputs.size() == 0 ? 0.0 : t.inputs.cwiseAbs().maxCoeff();
}

/**
 * @brief Shorter settling time wins; equal settling times go to the smaller
 * peak input, with exact ties labeled 1.
 */
inline int synthetic_preference(const Trajectory& T, const Trajectory& S, const Matrix& C,
                                const SettlingConfig& cfg = {}) {
    if (!share_initial_state(T, S)) throw InvalidQuery("synthetic_preference: trajectories start from different states");
    const int tau_t = settling_time(T, C, cfg);
    const int tau_s = settling_time(S, C, cfg);
    if (tau_t < tau_s) return 1;
    if (tau_t > tau_s) return 0;
    return max_input_norm(T) <= max_input_norm(S) ? 1 : 0;
}

struct PreferenceQuery {
    std::string id;
    Trajectory T;
    Trajectory S;
    std::chrono::system_clock::time_point issued_at = std::chrono::system_clock::now();
    /// Active-learning iteration that issued the query.
    std::int64_t iteration = 0;
};

/// Display payload: both trajectories with outputs and output norms precomputed.
inline nlohmann::json query_payload(const PreferenceQuery& q, const Matrix& C, const SettlingConfig& cfg) {
    auto side = [&](const Trajectory& t) {
        return nlohmann::json{{"x", matrix_to_json(t.states.transpose())},
                              {"y", matrix_to_json((C * t.states).transpose())},
                              {"u", matrix_to_json(t.inputs.transpose())},
                              {"y_norm", vector_to_json(output_norms(t, C))}};
    };
    return {{"id", q.id},
            {"horizon", q.T.horizon()},
            {"epsilon", cfg.epsilon},
            {"initial_state", vector_to_json(q.T.initial_state())},
            {"iteration", q.iteration},
            {"issued_at", std::chrono::duration_cast<std::chrono::milliseconds>(q.issued_at.time_since_epoch()).count()},
            {"T", side(q.T)},
            {"S", side(q.S)}};
}

/// Source of binary labels: 1 when q.T is preferred to q.S.
class PreferenceOracle {
public:
    virtual ~PreferenceOracle() = default;
    virtual int ask(const PreferenceQuery& q) = 0;
};

class SyntheticOracle final : public PreferenceOracle {
public:
    explicit SyntheticOracle(Matrix C, SettlingConfig cfg = {}) : C_(std::move(C)), cfg_(cfg) {}
    int ask(const PreferenceQuery& q) override { return synthetic_preference(q.T, q.S, C_, cfg_); }

private:
    Matrix C_;
    SettlingConfig cfg_;
};

/**
 * @brief Thread-safe store of pending and answered queries.
 *
 * Pending queries are served oldest first; each id resolves exactly once.
 * The issuing oracle blocks in wait() while another thread posts the label.
 */
class QueryBroker {
public:
    enum class PostResult { Accepted, Conflict, InvalidLabel };

    explicit QueryBroker(std::string session_id = "default") : session_(std::move(session_id)) {}

    const std::string& session() const { return session_; }

    void enqueue(const std::string& id, nlohmann::json payload) {
        std::lock_guard lock(mu_);
        if (pending_.count(id) || answered_.count(id))
            throw std::invalid_argument("QueryBroker: duplicate query id " + id);
        pending_.emplace(id, std::move(payload));
        order_.push_back(id);
    }

    /// Oldest pending payload, if any.
    std::optional<nlohmann::json> next() const {
        std::lock_guard lock(mu_);
        for (const auto& id : order_)
            if (auto it = pending_.find(id); it != pending_.end()) return it->second;
        return std::nullopt;
    }

    PostResult post_label(const std::string& id, int label) {
        if (label != 0 && label != 1) return PostResult::InvalidLabel;
        {
            std::lock_guard lock(mu_);
            auto it = pending_.find(id);
            if (it == pending_.end()) {
                if (answered_.count(id))
                    std::cerr << "warning: duplicate answer for query " << id << " ignored\n";
                return PostResult::Conflict;
            }
            pending_.erase(it);
            answered_.emplace(id, label);
            std::erase(order_, id);
        }
        cv_.notify_all();
        return PostResult::Accepted;
    }

    /// Blocks until `id` is answered; withdraws it and throws QueryTimeout otherwise.
    int wait(const std::string& id, std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu_);
        const bool done = cv_.wait_for(lock, timeout, [&] { return answered_.count(id) > 0; });
        if (!done) {
            pending_.erase(id);
            std::erase(order_, id);
            throw QueryTimeout("query " + id + " was not answered in time");
        }
        return answered_.at(id);
    }

    std::size_t pending_count() const {
        std::lock_guard lock(mu_);
        return pending_.size();
    }
    std::size_t answered_count() const {
        std::lock_guard lock(mu_);
        return answered_.size();
    }

    void set_iteration(std::int64_t k) {
        std::lock_guard lock(mu_);
        iteration_ = k;
    }
    std::int64_t iteration() const {
        std::lock_guard lock(mu_);
        return iteration_;
    }

private:
    std::string session_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, nlohmann::json> pending_;
    std::deque<std::string> order_;
    std::map<std::string, int> answered_;
    std::int64_t iteration_ = 0;
};

/// Publishes each query on a broker and blocks until a person answers it.
class HumanOracle final : public PreferenceOracle {
public:
    HumanOracle(std::shared_ptr<QueryBroker> broker, Matrix C, SettlingConfig cfg = {},
                std::chrono::milliseconds timeout = std::chrono::hours(1))
        : broker_(std::move(broker)), C_(std::move(C)), cfg_(cfg), timeout_(timeout) {}

    int ask(const PreferenceQuery& q) override {
        if (!share_initial_state(q.T, q.S)) throw InvalidQuery("HumanOracle: trajectories start from different states");
        broker_->set_iteration(q.iteration);
        broker_->enqueue(q.id, query_payload(q, C_, cfg_));
        return broker_->wait(q.id, timeout_);
    }

    QueryBroker& broker() { return *broker_; }

private:
    std::shared_ptr<QueryBroker> broker_;
    Matrix C_;
    SettlingConfig cfg_;
    std::chrono::milliseconds timeout_;
};

}  // namespace prefmpc

#endif  // PREFMPC_ORACLE_HPP
