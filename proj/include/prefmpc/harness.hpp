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
#ifndef PREFMPC_HARNESS_HPP
#define PREFMPC_HARNESS_HPP

#include "prefmpc/active.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>

namespace prefmpc {

enum class OracleKind { Synthetic, Human };

inline std::string to_string(OracleKind k) { return k == OracleKind::Human ? "human" : "synthetic"; }

inline OracleKind parse_oracle_kind(const std::string& s) {
    if (s == "synthetic") return OracleKind::Synthetic;
    if (s == "human") return OracleKind::Human;
    throw std::invalid_argument("unknown oracle kind: " + s);
}

struct SeedConfig {
    std::uint64_t system = 1;      // weights of the initial controllers
    std::uint64_t pool = 2;        // initial states and controller pairs of P0 and Q
    std::uint64_t training = 3;    // restarts, random selection, synthesis picks
    std::uint64_t evaluation = 4;  // frozen evaluation states

    static SeedConfig from_base(std::uint64_t base) {
        return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3)};
    }
    bool operator==(const SeedConfig&) const = default;
};

struct ExperimentConfig {
    OscillatingMassesConfig system;
    Eigen::Index horizon = 30;
    std::size_t n_controllers = 10;
    std::size_t n_initial = 20;
    std::size_t pool_size = 280;
    std::size_t batch = 1;
    std::size_t iterations = 20;
    std::size_t n_eval = 10;
    SeedConfig seeds;
    Strategy strategy = Strategy::Pool;
    DiversityVariant variant = DiversityVariant::Sum;
    OracleKind oracle = OracleKind::Synthetic;
    TrainConfig train;
    SettlingConfig settling;
    std::size_t greedy_candidates = 1024;
    /// Also train on P0 plus the fully labeled pool (synthetic labels).
    bool full_pool_reference = false;
    /// Writes measured durations into metrics.csv; off keeps the file reproducible.
    bool record_wall_time = false;
    int port = 8700;
    double human_timeout_s = 3600.0;

    void validate() const {
        detail::require(horizon >= 1 && n_initial >= 1 && iterations >= 1 && batch >= 1 && n_eval >= 1 &&
                            greedy_candidates >= 1,
                        "ExperimentConfig: counts must be >= 1");
        detail::require(n_controllers >= 2, "ExperimentConfig: need at least two initial controllers");
        train.validate();
        detail::require(settling.epsilon > 0.0, "ExperimentConfig: epsilon must be positive");
    }

    ActiveConfig active_config() const {
        ActiveConfig a;
        a.horizon = horizon;
        a.variant = variant;
        a.train = train;
        a.settling = settling;
        a.greedy_candidates = greedy_candidates;
        a.seed = seeds.training;
        a.record_wall_time = record_wall_time;
        return a;
    }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
    const auto& s = c.system;
    return {
        {"system",
         {{"mass1", s.mass1}, {"mass2", s.mass2}, {"mass3", s.mass3}, {"k_wall_left", s.k_wall_left},
          {"k_12", s.k_12}, {"k_23", s.k_23}, {"k_wall_right", s.k_wall_right}, {"sample_time", s.sample_time},
          {"u_max", s.u_max}}},
        {"horizon", c.horizon},
        {"n_controllers", c.n_controllers},
        {"n_initial", c.n_initial},
        {"pool_size", c.pool_size},
        {"batch", c.batch},
        {"iterations", c.iterations},
        {"n_eval", c.n_eval},
        {"seeds",
         {{"system", c.seeds.system}, {"pool", c.seeds.pool}, {"training", c.seeds.training},
          {"evaluation", c.seeds.evaluation}}},
        {"strategy", to_string(c.strategy)},
        {"variant", to_string(c.variant)},
        {"oracle", to_string(c.oracle)},
        {"train",
         {{"adam_iters", c.train.adam.iterations}, {"adam_lr", c.train.adam.learning_rate},
          {"adam_beta1", c.train.adam.beta1}, {"adam_beta2", c.train.adam.beta2}, {"ridge", c.train.ridge},
          {"qn_max_iter", c.train.lbfgs.max_iter}, {"qn_gradient_tol", c.train.lbfgs.gradient_tol},
          {"theta_min", c.train.theta_min}, {"theta_max", c.train.theta_max}}},
        {"epsilon", c.settling.epsilon},
        {"greedy_candidates", c.greedy_candidates},
        {"full_pool_reference", c.full_pool_reference},
        {"record_wall_time", c.record_wall_time},
        {"port", c.port},
        {"human_timeout_s", c.human_timeout_s},
    };
}

/// Missing keys keep their defaults, so partial config files are accepted.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig c = {}) {
    if (j.contains("system")) {
        const auto& s = j.at("system");
        auto& o = c.system;
        o.mass1 = s.value("mass1", o.mass1);
        o.mass2 = s.value("mass2", o.mass2);
        o.mass3 = s.value("mass3", o.mass3);
        o.k_wall_left = s.value("k_wall_left", o.k_wall_left);
        o.k_12 = s.value("k_12", o.k_12);
        o.k_23 = s.value("k_23", o.k_23);
        o.k_wall_right = s.value("k_wall_right", o.k_wall_right);
        o.sample_time = s.value("sample_time", o.sample_time);
        o.u_max = s.value("u_max", o.u_max);
    }
    c.horizon = j.value("horizon", c.horizon);
    c.n_controllers = j.value("n_controllers", c.n_controllers);
    c.n_initial = j.value("n_initial", c.n_initial);
    c.pool_size = j.value("pool_size", c.pool_size);
    c.batch = j.value("batch", c.batch);
    c.iterations = j.value("iterations", c.iterations);
    c.n_eval = j.value("n_eval", c.n_eval);
    if (j.contains("seeds")) {
        const auto& s = j.at("seeds");
        c.seeds.system = s.value("system", c.seeds.system);
        c.seeds.pool = s.value("pool", c.seeds.pool);
        c.seeds.training = s.value("training", c.seeds.training);
        c.seeds.evaluation = s.value("evaluation", c.seeds.evaluation);
    }
    if (j.contains("strategy")) c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("oracle")) c.oracle = parse_oracle_kind(j.at("oracle").get<std::string>());
    if (j.contains("train")) {
        const auto& t = j.at("train");
        auto& o = c.train;
        o.adam.iterations = t.value("adam_iters", o.adam.iterations);
        o.adam.learning_rate = t.value("adam_lr", o.adam.learning_rate);
        o.adam.beta1 = t.value("adam_beta1", o.adam.beta1);
        o.adam.beta2 = t.value("adam_beta2", o.adam.beta2);
        o.ridge = t.value("ridge", o.ridge);
        o.lbfgs.max_iter = t.value("qn_max_iter", o.lbfgs.max_iter);
        o.lbfgs.gradient_tol = t.value("qn_gradient_tol", o.lbfgs.gradient_tol);
        o.theta_min = t.value("theta_min", o.theta_min);
        o.theta_max = t.value("theta_max", o.theta_max);
    }
    c.settling.epsilon = j.value("epsilon", c.settling.epsilon);
    c.greedy_candidates = j.value("greedy_candidates", c.greedy_candidates);
    c.full_pool_reference = j.value("full_pool_reference", c.full_pool_reference);
    c.record_wall_time = j.value("record_wall_time", c.record_wall_time);
    c.port = j.value("port", c.port);
    c.human_timeout_s = j.value("human_timeout_s", c.human_timeout_s);
    return c;
}

/// Everything an experiment starts from; shared by paired strategy runs.
struct InitialAssets {
    LinearSystem sys;
    ControllerPool controllers;
    PreferenceDataset dataset;
    UnlabeledPool pool;
    std::vector<Vector> eval_states;
};

/**
 * @brief Builds C0 (random-weight MPCs), the labeled initial set P0 and the
 * unlabeled pool Q. Each pair rolls out two distinct controllers, drawn
 * without replacement, from one uniformly sampled initial state.
 */
inline InitialAssets generate_initial_assets(const ExperimentConfig& cfg, PreferenceOracle& oracle) {
    cfg.validate();
    InitialAssets a;
    a.sys = make_oscillating_masses(cfg.system);
    const auto model = std::make_shared<const PredictionModel>(a.sys, cfg.horizon);
    for (std::size_t i = 0; i < cfg.n_controllers; ++i)
        a.controllers.add(make_random_quadratic_controller(derive_seed(cfg.seeds.system, i), a.sys, cfg.horizon, model),
                          "C0:" + std::to_string(i));

    const StateBox box = default_initial_box();
    Rng rng(cfg.seeds.pool);
    const std::size_t total = cfg.n_initial + cfg.pool_size;
    for (std::size_t s = 0; s < total; ++s) {
        const Vector x0 = sample_in_box(box, rng);
        const std::size_t ia = rng.index(cfg.n_controllers);
        std::size_t ib = rng.index(cfg.n_controllers - 1);
        if (ib >= ia) ++ib;
        Trajectory ta, tb;
        for (auto [idx, out] : {std::pair{ia, &ta}, std::pair{ib, &tb}}) {
            try {
                *out = rollout(a.sys, a.controllers[idx].mpc, x0, cfg.horizon);
            } catch (const std::exception& e) {
                throw GenerationError("asset generation (pool seed " + std::to_string(cfg.seeds.pool) + ", state " +
                                      std::to_string(s) + "): controller " + a.controllers[idx].provenance +
                                      " failed: " + e.what());
            }
        }
        RecordMeta meta{a.controllers[ia].provenance, a.controllers[ib].provenance, static_cast<std::int64_t>(s), -1, 0};
        if (s < cfg.n_initial) {
            PreferenceQuery q{"init-" + std::to_string(s), ta, tb};
            const int label = oracle.ask(q);
            a.dataset.add({std::move(ta), std::move(tb), label, std::move(meta)});
        } else {
            const auto id = static_cast<std::int64_t>(s - cfg.n_initial);
            meta.source_id = id;
            a.pool.add({id, std::move(ta), std::move(tb), std::move(meta)});
        }
    }
    a.eval_states = sample_initial_states(box, cfg.n_eval, cfg.seeds.evaluation);
    return a;
}

/// Pairwise comparison of two controllers over common initial states.
struct HeadToHead {
    EvaluationReport a;
    EvaluationReport b;
    std::size_t n_states = 0;
    std::size_t a_preferred = 0;
    std::size_t b_preferred = 0;
    std::size_t tied_settling = 0;
    std::size_t a_preferred_tied = 0;
    /// States where neither rollout succeeded; counted for neither side.
    std::size_t both_failed = 0;
    /// max ||u||_inf statistics over the states where both settle at the same step.
    struct InputStats {
        double avg = 0.0, max = 0.0, min = 0.0;
    };
    InputStats a_tied, b_tied;
    double u_max = 1.0;
};

inline HeadToHead head_to_head(const LinearSystem& sys, const std::shared_ptr<const MpcController>& A,
                               const std::shared_ptr<const MpcController>& B, const std::vector<Vector>& states,
                               const SettlingConfig& cfg = {}) {
    detail::require(!states.empty(), "head_to_head: no states");
    HeadToHead h;
    h.n_states = states.size();
    h.u_max = sys.u_max.minCoeff();
    std::vector<double> ua, ub;
    for (std::size_t i = 0; i < states.size(); ++i) {
        EvaluationReport::Row ra{i}, rb{i};
        Trajectory ta, tb;
        try {
            ta = rollout(sys, A, states[i], A->horizon());
            ra = {i, true, settling_time(ta, sys.C, cfg), max_input_norm(ta), {}};
        } catch (const std::exception& e) {
            ra.error = e.what();
        }
        try {
            tb = rollout(sys, B, states[i], B->horizon());
            rb = {i, true, settling_time(tb, sys.C, cfg), max_input_norm(tb), {}};
        } catch (const std::exception& e) {
            rb.error = e.what();
        }
        if (ra.ok && rb.ok) {
            const int p = synthetic_preference(ta, tb, sys.C, cfg);
            (p == 1 ? h.a_preferred : h.b_preferred)++;
            if (ra.settling == rb.settling) {
                ++h.tied_settling;
                if (p == 1) ++h.a_preferred_tied;
                ua.push_back(ra.max_input);
                ub.push_back(rb.max_input);
            }
        } else if (ra.ok) {
            ++h.a_preferred;
        } else if (rb.ok) {
            ++h.b_preferred;
        } else {
            ++h.both_failed;
        }
        h.a.rows.push_back(std::move(ra));
        h.b.rows.push_back(std::move(rb));
    }
    h.a.aggregate();
    h.b.aggregate();
    auto stats = [](const std::vector<double>& v) {
        HeadToHead::InputStats s;
        if (v.empty()) return s;
        s.max = *std::max_element(v.begin(), v.end());
        s.min = *std::min_element(v.begin(), v.end());
        s.avg = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        return s;
    };
    h.a_tied = stats(ua);
    h.b_tied = stats(ub);
    return h;
}

inline nlohmann::json to_json(const HeadToHead& h, const std::string& name_a = "A", const std::string& name_b = "B") {
    auto side = [&](const std::string& name, const EvaluationReport& r, const HeadToHead::InputStats& s) {
        return nlohmann::json{
            {"name", name},
            {"settling", {{"avg", r.settle_avg}, {"max", r.settle_max}, {"min", r.settle_min}}},
            {"max_input_tied", {{"avg", s.avg}, {"max", s.max}, {"min", s.min}}},
            {"max_input_tied_normalized", {{"avg", s.avg / h.u_max}, {"max", s.max / h.u_max}, {"min", s.min / h.u_max}}},
            {"n_failed", r.rows.size() - r.n_ok}};
    };
    return {{"n_states", h.n_states},
            {"controllers", {side(name_a, h.a, h.a_tied), side(name_b, h.b, h.b_tied)}},
            {"head_to_head",
             {{"a_preferred", h.a_preferred}, {"b_preferred", h.b_preferred}, {"tied_settling", h.tied_settling},
              {"a_preferred_among_tied", h.a_preferred_tied}, {"both_failed", h.both_failed}}}};
}

/// Table layout: settling avg/max and tied-state max input (normalized by u_max).
inline std::string format_table(const HeadToHead& h, const std::string& name_a, const std::string& name_b) {
    std::ostringstream os;
    os << std::fixed;
    os << "controller            settle_avg  settle_max  umax_avg  umax_max  umax_min\n";
    auto row = [&](const std::string& n, const EvaluationReport& r, const HeadToHead::InputStats& s) {
        os << std::left << std::setw(20) << n << std::right << std::setprecision(2) << std::setw(12) << r.settle_avg
           << std::setw(12) << r.settle_max << std::setw(10) << s.avg / h.u_max << std::setw(10) << s.max / h.u_max
           << std::setw(10) << s.min / h.u_max << '\n';
    };
    row(name_a, h.a, h.a_tied);
    row(name_b, h.b, h.b_tied);
    os << name_a << " preferred in " << h.a_preferred << " of " << h.n_states << " states (" << h.a_preferred_tied
       << " of " << h.tied_settling << " with equal settling time)\n";
    return os.str();
}

/// Head-to-head of two objectives over `n_states` fresh initial states drawn with `seed`.
inline HeadToHead compare_objectives(const ExperimentConfig& cfg, const ObjectiveParams& a, const ObjectiveParams& b,
                                     std::size_t n_states, std::uint64_t seed) {
    const LinearSystem sys = make_oscillating_masses(cfg.system);
    const auto model = std::make_shared<const PredictionModel>(sys, cfg.horizon);
    const auto states = sample_initial_states(default_initial_box(), n_states, seed);
    return head_to_head(sys, std::make_shared<const MpcController>(model, sys, a),
                        std::make_shared<const MpcController>(model, sys, b), states, cfg.settling);
}

inline std::string metrics_csv_header() { return "iteration,n_labeled,settle_min,settle_avg,settle_max,umax_avg,wall_time_s\n"; }

inline std::string metrics_csv_row(const IterationMetrics& m) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%lld,%zu,%d,%.6f,%d,%.6f,%.3f\n", static_cast<long long>(m.iteration), m.n_labeled,
                  m.settle_min, m.settle_avg, m.settle_max, m.umax_avg, m.wall_time_s);
    return buf;
}

struct ExperimentResult {
    LoopHistory history;
    ObjectiveParams theta_final;
    EvaluationReport final_report;
    std::vector<EvaluationReport> initial_controller_reports;
    std::optional<ObjectiveParams> reference_theta;
    std::optional<EvaluationReport> reference_report;
    PreferenceDataset dataset;
    std::size_t reference_dataset_size = 0;
};

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

inline void write_pool_jsonl(const std::filesystem::path& p, const UnlabeledPool& pool) {
    std::ofstream f(p, std::ios::binary);
    for (const auto& q : pool.pairs())
        f << nlohmann::json{{"id", q.id}, {"T", to_json(q.T)}, {"S", to_json(q.S)}, {"meta", to_json(q.meta)}}.dump()
          << '\n';
}

}  // namespace detail

/// Labels every pool pair with the synthetic criterion and trains with two random restarts.
inline std::pair<ObjectiveParams, EvaluationReport> train_full_pool_reference(const ExperimentConfig& cfg,
                                                                             const InitialAssets& assets,
                                                                             std::size_t* dataset_size = nullptr) {
    SyntheticOracle synth(assets.sys.C, cfg.settling);
    PreferenceDataset full = assets.dataset;
    for (const auto& p : assets.pool.pairs()) {
        RecordMeta m = p.meta;
        m.source_id = p.id;
        full.add({p.T, p.S, synth.ask({"ref-" + std::to_string(p.id), p.T, p.S}), m});
    }
    if (dataset_size) *dataset_size = full.size();
    ActiveConfig ac = cfg.active_config();
    ac.seed = derive_seed(cfg.seeds.training, 0xfeed);
    ActiveLearner ref(assets.sys, ac, std::move(full), UnlabeledPool{}, ControllerPool{}, assets.eval_states, synth);
    const auto& m = ref.initialize();
    return {m.theta, ref.evaluate(m.theta)};
}

/**
 * @brief One full run: assets, theta^0, M iterations of the configured
 * strategy, optional full-pool reference, artifacts under `out_dir`.
 *
 * On failure the artifacts written so far stay on disk with a manifest
 * marked incomplete, and the error is rethrown.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                       PreferenceOracle& oracle, const InitialAssets* precomputed = nullptr) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);
    detail::write_text(out_dir / "config.json", to_json(cfg).dump(2) + "\n");

    nlohmann::json manifest{{"complete", false}, {"strategy", to_string(cfg.strategy)},
                            {"files", nlohmann::json::array({"config.json"})}};
    auto flush_manifest = [&] { detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n"); };
    flush_manifest();

    ExperimentResult res;
    try {
        InitialAssets generated;
        if (!precomputed) generated = generate_initial_assets(cfg, oracle);
        const InitialAssets& assets = precomputed ? *precomputed : generated;
        detail::write_pool_jsonl(out_dir / "pool.jsonl", assets.pool);
        manifest["files"].push_back("pool.jsonl");

        for (const auto& c : assets.controllers.entries())
            res.initial_controller_reports.push_back(evaluate_controller(assets.sys, c.mpc, assets.eval_states, cfg.settling));

        ActiveLearner learner(assets.sys, cfg.active_config(), assets.dataset, assets.pool, assets.controllers,
                              assets.eval_states, oracle);
        learner.set_synth_state_id_base(static_cast<std::int64_t>(cfg.n_initial + cfg.pool_size));
        res.history = run_loop(learner, cfg.strategy, cfg.iterations, cfg.batch);
        res.dataset = learner.dataset();

        std::string csv = metrics_csv_header();
        if (learner.initialized()) csv += metrics_csv_row(res.history.initial);
        for (const auto& m : res.history.iterations) csv += metrics_csv_row(m);
        detail::write_text(out_dir / "metrics.csv", csv);
        std::ofstream ds(out_dir / "dataset.jsonl", std::ios::binary);
        write_jsonl(ds, res.dataset);
        ds.close();
        manifest["files"].push_back("metrics.csv");
        manifest["files"].push_back("dataset.jsonl");
        manifest["iterations_completed"] = res.history.iterations.size();
        if (!res.history.complete()) throw IterationFailure(*res.history.error);

        res.theta_final = learner.theta();
        res.final_report = learner.evaluate(res.theta_final);
        detail::write_text(out_dir / "theta_final.json", to_json(res.theta_final).dump(2) + "\n");
        manifest["files"].push_back("theta_final.json");

        nlohmann::json report{{"final", to_json(res.final_report)}, {"initial_controllers", nlohmann::json::array()}};
        for (std::size_t i = 0; i < res.initial_controller_reports.size(); ++i) {
            auto j = to_json(res.initial_controller_reports[i]);
            j["provenance"] = assets.controllers[i].provenance;
            report["initial_controllers"].push_back(std::move(j));
        }
        if (cfg.full_pool_reference) {
            auto [theta_ref, rep_ref] = train_full_pool_reference(cfg, assets, &res.reference_dataset_size);
            res.reference_theta = theta_ref;
            res.reference_report = rep_ref;
            report["reference"] = to_json(rep_ref);
            report["reference"]["n_labeled"] = res.reference_dataset_size;
            detail::write_text(out_dir / "theta_reference.json", to_json(theta_ref).dump(2) + "\n");
            manifest["files"].push_back("theta_reference.json");
        }
        detail::write_text(out_dir / "eval_report.json", report.dump(2) + "\n");
        manifest["files"].push_back("eval_report.json");
        manifest["complete"] = true;
        manifest["final_dataset_size"] = res.dataset.size();
        flush_manifest();
    } catch (const std::exception& e) {
        manifest["error"] = e.what();
        flush_manifest();
        throw;
    }
    return res;
}

struct AblationRow {
    DiversityVariant variant;
    std::uint64_t seed = 0;
    std::int64_t iteration = 0;
    std::size_t n_labeled = 0;
    int settle_max = 0;
    double settle_avg = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    /// Runs that failed, as "variant/seed: message".
    std::vector<std::string> failures;

    std::string csv() const {
        std::string out = "variant,seed,iteration,n_labeled,settle_max,settle_avg\n";
        char buf[192];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof buf, "%s,%llu,%lld,%zu,%d,%.6f\n", to_string(r.variant).c_str(),
                          static_cast<unsigned long long>(r.seed), static_cast<long long>(r.iteration), r.n_labeled,
                          r.settle_max, r.settle_avg);
            out += buf;
        }
        return out;
    }

    /// Mean over seeds of the final-iteration maximum settling time.
    double mean_final_max(DiversityVariant v) const {
        std::map<std::uint64_t, const AblationRow*> last;
        for (const auto& r : rows)
            if (r.variant == v && (!last.count(r.seed) || last[r.seed]->iteration < r.iteration)) last[r.seed] = &r;
        if (last.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (const auto& [seed, r] : last) s += r->settle_max;
        return s / static_cast<double>(last.size());
    }
};

/**
 * @brief Pool-based runs for every (variant, seed). Each base seed expands into
 * the four experiment seeds; assets are shared by all variants of a seed.
 */
inline AblationResult compare_variants(const ExperimentConfig& base, const std::vector<DiversityVariant>& variants,
                                       const std::vector<std::uint64_t>& seeds) {
    detail::require(variants.size() >= 2, "compare_variants: need at least two variants");
    AblationResult out;
    for (auto seed : seeds) {
        ExperimentConfig cfg = base;
        cfg.seeds = SeedConfig::from_base(seed);
        cfg.strategy = Strategy::Pool;
        InitialAssets assets;
        SyntheticOracle oracle(make_oscillating_masses(cfg.system).C, cfg.settling);
        try {
            assets = generate_initial_assets(cfg, oracle);
        } catch (const std::exception& e) {
            for (auto v : variants) out.failures.push_back(to_string(v) + "/" + std::to_string(seed) + ": " + e.what());
            continue;
        }
        for (auto v : variants) {
            cfg.variant = v;
            ActiveLearner learner(assets.sys, cfg.active_config(), assets.dataset, assets.pool, assets.controllers,
                                  assets.eval_states, oracle);
            const LoopHistory h = run_loop(learner, Strategy::Pool, cfg.iterations, cfg.batch);
            if (!h.complete()) {
                out.failures.push_back(to_string(v) + "/" + std::to_string(seed) + ": " + *h.error);
                continue;
            }
            auto push = [&](const IterationMetrics& m) {
                out.rows.push_back({v, seed, m.iteration, m.n_labeled, m.settle_max, m.settle_avg});
            };
            push(h.initial);
            for (const auto& m : h.iterations) push(m);
        }
    }
    return out;
}

}  // namespace prefmpc

#endif  // PREFMPC_HARNESS_HPP
