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
#ifndef PREFMPC_EVALUATION_HPP
#define PREFMPC_EVALUATION_HPP

#include "prefmpc/oracle.hpp"

namespace prefmpc {

/// Closed-loop statistics of one controller over a fixed set of initial states.
struct EvaluationReport {
    struct Row {
        std::size_t state_id = 0;
        bool ok = false;
        int settling = 0;
        double max_input = 0.0;
        std::string error;
    };
    std::vector<Row> rows;
    std::size_t n_ok = 0;
    double settle_avg = 0.0;
    int settle_max = 0;
    int settle_min = 0;
    double umax_avg = 0.0;
    double umax_max = 0.0;
    double umax_min = 0.0;

    bool all_ok() const { return n_ok == rows.size(); }

    /// Recomputes the aggregates from the successful rows.
    void aggregate() {
        n_ok = 0;
        double s_sum = 0.0, u_sum = 0.0;
        for (const auto& r : rows) {
            if (!r.ok) continue;
            if (n_ok == 0) {
                settle_max = settle_min = r.settling;
                umax_max = umax_min = r.max_input;
            }
            ++n_ok;
            s_sum += r.settling;
            u_sum += r.max_input;
            settle_max = std::max(settle_max, r.settling);
            settle_min = std::min(settle_min, r.settling);
            umax_max = std::max(umax_max, r.max_input);
            umax_min = std::min(umax_min, r.max_input);
        }
        settle_avg = n_ok ? s_sum / static_cast<double>(n_ok) : 0.0;
        umax_avg = n_ok ? u_sum / static_cast<double>(n_ok) : 0.0;
    }
};

/**
 * @brief One rollout per state with a fresh control law from `make_law()`.
 * A failed rollout is flagged on its row and excluded from the aggregates.
 */
template <typename MakeLaw>
EvaluationReport evaluate_controller(const LinearSystem& sys, MakeLaw&& make_law, const std::vector<Vector>& states,
                                     Eigen::Index N, const SettlingConfig& cfg = {}) {
    detail::require(!states.empty(), "evaluate_controller: no evaluation states");
    EvaluationReport rep;
    rep.rows.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        EvaluationReport::Row row;
        row.state_id = i;
        try {
            auto law = make_law();
            const Trajectory t = simulate_closed_loop(sys, law, states[i], N);
            row.settling = settling_time(t, sys.C, cfg);
            row.max_input = max_input_norm(t);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rep.rows.push_back(std::move(row));
    }
    rep.aggregate();
    return rep;
}

inline EvaluationReport evaluate_controller(const LinearSystem& sys, const std::shared_ptr<const MpcController>& mpc,
                                            const std::vector<Vector>& states, const SettlingConfig& cfg = {}) {
    return evaluate_controller(sys, [&] { return MpcController::Law(mpc); }, states, mpc->horizon(), cfg);
}

inline nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json j{{"state_id", row.state_id}, {"ok", row.ok}};
        if (row.ok) {
            j["settling"] = row.settling;
            j["max_input"] = row.max_input;
        } else {
            j["error"] = row.error;
        }
        rows.push_back(std::move(j));
    }
    return {{"rows", rows},
            {"n_states", r.rows.size()},
            {"n_ok", r.n_ok},
            {"settling", {{"avg", r.settle_avg}, {"max", r.settle_max}, {"min", r.settle_min}}},
            {"max_input", {{"avg", r.umax_avg}, {"max", r.umax_max}, {"min", r.umax_min}}}};
}

}  // namespace prefmpc

#endif  // PREFMPC_EVALUATION_HPP
