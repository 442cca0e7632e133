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
#include "prefmpc/harness.hpp"
#include "prefmpc/service.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace prefmpc;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed, seed_system, seed_pool, seed_training, seed_evaluation;
    std::optional<std::size_t> iters, batch;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON file mirroring the experiment configuration");
        app->add_option("--seed", seed, "base seed; expands into the four experiment seeds");
        app->add_option("--seed-system", seed_system, "seed of the initial controller weights");
        app->add_option("--seed-pool", seed_pool, "seed of initial states and controller pairs");
        app->add_option("--seed-training", seed_training, "seed of training restarts and random choices");
        app->add_option("--seed-evaluation", seed_evaluation, "seed of the evaluation states");
        app->add_option("--iters", iters, "active-learning iterations M");
        app->add_option("--batch", batch, "pairs labeled per iteration n_k");
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw std::runtime_error("cannot open config " + config_path);
            cfg = config_from_json(nlohmann::json::parse(f));
        }
        if (seed) cfg.seeds = SeedConfig::from_base(*seed);
        if (seed_system) cfg.seeds.system = *seed_system;
        if (seed_pool) cfg.seeds.pool = *seed_pool;
        if (seed_training) cfg.seeds.training = *seed_training;
        if (seed_evaluation) cfg.seeds.evaluation = *seed_evaluation;
        if (iters) cfg.iterations = *iters;
        if (batch) cfg.batch = *batch;
        return cfg;
    }
};

std::vector<DiversityVariant> parse_variants(const std::vector<std::string>& names) {
    if (names.empty()) return all_diversity_variants();
    std::vector<DiversityVariant> out;
    for (const auto& n : names) out.push_back(parse_variant(n));
    return out;
}

void write_file(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
}

int cmd_gen(const CommonFlags& flags, const fs::path& out) {
    const ExperimentConfig cfg = flags.resolve();
    SyntheticOracle oracle(make_oscillating_masses(cfg.system).C, cfg.settling);
    const InitialAssets a = generate_initial_assets(cfg, oracle);
    fs::create_directories(out);
    write_file(out / "config.json", to_json(cfg).dump(2) + "\n");
    write_file(out / "system.json", to_json(a.sys).dump(2) + "\n");
    nlohmann::json ctrl = nlohmann::json::array();
    for (const auto& c : a.controllers.entries()) {
        auto j = to_json(c.mpc->theta());
        j["provenance"] = c.provenance;
        ctrl.push_back(std::move(j));
    }
    write_file(out / "controllers.json", ctrl.dump(2) + "\n");
    std::ofstream ds(out / "dataset.jsonl", std::ios::binary);
    write_jsonl(ds, a.dataset);
    ds.close();
    detail::write_pool_jsonl(out / "pool.jsonl", a.pool);
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& x : a.eval_states) ev.push_back(vector_to_json(x));
    write_file(out / "eval_states.json", ev.dump(2) + "\n");
    std::cout << "wrote " << a.controllers.size() << " controllers, " << a.dataset.size() << " labeled pairs, "
              << a.pool.size() << " pool pairs to " << out << "\n";
    return 0;
}

int run_with_oracle(const ExperimentConfig& cfg, const fs::path& out, const std::string& static_dir) {
    const LinearSystem sys = make_oscillating_masses(cfg.system);
    ExperimentResult res;
    if (cfg.oracle == OracleKind::Human) {
        auto broker = std::make_shared<QueryBroker>();
        PreferenceService service(broker, static_dir);
        const int port = service.start("0.0.0.0", cfg.port);
        std::cout << "preference service listening on port " << port << "\n" << std::flush;
        HumanOracle oracle(broker, sys.C, cfg.settling,
                           std::chrono::milliseconds(static_cast<long long>(cfg.human_timeout_s * 1000.0)));
        res = run_experiment(cfg, out, oracle);
    } else {
        SyntheticOracle oracle(sys.C, cfg.settling);
        res = run_experiment(cfg, out, oracle);
    }
    std::cout << "strategy " << to_string(cfg.strategy) << ": " << res.dataset.size() << " labeled pairs, final max settling "
              << res.final_report.settle_max << ", avg " << res.final_report.settle_avg << "\n";
    if (res.reference_report)
        std::cout << "full-pool reference (" << res.reference_dataset_size << " pairs): max settling "
                  << res.reference_report->settle_max << ", avg " << res.reference_report->settle_avg << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active preference learning of MPC objective functions"};
    app.require_subcommand(1);

    CommonFlags gen_flags, run_flags, abl_flags, serve_flags;
    std::string gen_out = "assets";

    auto* gen = app.add_subcommand("gen", "generate the initial controllers, labeled set and pool");
    gen_flags.attach(gen);
    gen->add_option("--out", gen_out, "output directory");

    std::string strategy, variant, oracle_kind, run_out = "run", static_dir;
    std::optional<int> port;
    std::optional<double> timeout_s;
    bool full_pool = false, wall_time = false;
    auto* run = app.add_subcommand("run", "run one experiment");
    run_flags.attach(run);
    run->add_option("--strategy", strategy, "pool | synth | random")->check(CLI::IsMember({"pool", "synth", "random"}));
    run->add_option("--variant", variant, "uncertainty | intra | inter | sum | product")
        ->check(CLI::IsMember({"uncertainty", "intra", "inter", "sum", "product"}));
    run->add_option("--oracle", oracle_kind, "synthetic | human")->check(CLI::IsMember({"synthetic", "human"}));
    run->add_option("--out", run_out, "run directory");
    run->add_flag("--full-pool", full_pool, "also train the reference model on P0 plus the labeled pool");
    run->add_flag("--record-wall-time", wall_time, "store iteration durations in metrics.csv");
    run->add_option("--port", port, "service port for the human oracle");
    run->add_option("--timeout", timeout_s, "seconds to wait for each human answer");
    run->add_option("--static", static_dir, "directory of UI assets served at /");

    std::vector<std::uint64_t> abl_seeds{1, 2, 3, 4, 5};
    std::vector<std::string> abl_variants;
    std::string abl_out = "ablation.csv";
    auto* abl = app.add_subcommand("ablation", "pool-based runs for each diversity variant and seed");
    abl_flags.attach(abl);
    abl->add_option("--seeds", abl_seeds, "base seeds");
    abl->add_option("--variants", abl_variants, "variants to compare (default: all five)");
    abl->add_option("--out", abl_out, "CSV output path");

    std::string theta_a, theta_b, eval_out, name_a = "A", name_b = "B";
    std::size_t n_states = 200;
    std::uint64_t eval_seed = 2024;
    std::string eval_config;
    auto* ev = app.add_subcommand("eval", "head-to-head comparison of two objective files");
    ev->add_option("--theta-a", theta_a, "first theta JSON")->required();
    ev->add_option("--theta-b", theta_b, "second theta JSON")->required();
    ev->add_option("--name-a", name_a);
    ev->add_option("--name-b", name_b);
    ev->add_option("--n-states", n_states, "number of fresh initial states");
    ev->add_option("--seed", eval_seed, "seed of the initial states");
    ev->add_option("--config", eval_config, "experiment config (system, horizon, epsilon)");
    ev->add_option("--out", eval_out, "JSON output path");

    std::string serve_out = "run", serve_static, serve_strategy;
    int serve_port = 8700;
    double serve_timeout = 3600.0;
    auto* serve = app.add_subcommand("serve", "start the preference service and run an experiment labeled by a person");
    serve_flags.attach(serve);
    serve->add_option("--port", serve_port, "listening port");
    serve->add_option("--static", serve_static, "directory of UI assets served at /");
    serve->add_option("--strategy", serve_strategy, "pool | synth | random")
        ->check(CLI::IsMember({"pool", "synth", "random"}));
    serve->add_option("--timeout", serve_timeout, "seconds to wait for each answer");
    serve->add_option("--out", serve_out, "run directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen(gen_flags, gen_out);
        if (*run) {
            ExperimentConfig cfg = run_flags.resolve();
            if (!strategy.empty()) cfg.strategy = parse_strategy(strategy);
            if (!variant.empty()) cfg.variant = parse_variant(variant);
            if (!oracle_kind.empty()) cfg.oracle = parse_oracle_kind(oracle_kind);
            if (full_pool) cfg.full_pool_reference = true;
            if (wall_time) cfg.record_wall_time = true;
            if (port) cfg.port = *port;
            if (timeout_s) cfg.human_timeout_s = *timeout_s;
            return run_with_oracle(cfg, run_out, static_dir);
        }
        if (*abl) {
            const ExperimentConfig cfg = abl_flags.resolve();
            const auto variants = parse_variants(abl_variants);
            const AblationResult r = compare_variants(cfg, variants, abl_seeds);
            write_file(abl_out, r.csv());
            for (auto v : variants)
                std::cout << to_string(v) << ": mean final max settling " << r.mean_final_max(v) << "\n";
            for (const auto& f : r.failures) std::cerr << "failed run " << f << "\n";
            return 0;
        }
        if (*ev) {
            ExperimentConfig cfg;
            if (!eval_config.empty()) {
                std::ifstream f(eval_config);
                cfg = config_from_json(nlohmann::json::parse(f));
            }
            auto load = [](const std::string& p) {
                std::ifstream f(p);
                if (!f) throw std::runtime_error("cannot open " + p);
                return theta_from_json(nlohmann::json::parse(f));
            };
            const HeadToHead h = compare_objectives(cfg, load(theta_a), load(theta_b), n_states, eval_seed);
            std::cout << format_table(h, name_a, name_b);
            if (!eval_out.empty()) {
                auto j = to_json(h, name_a, name_b);
                j["seed"] = eval_seed;
                write_file(eval_out, j.dump(2) + "\n");
            }
            return 0;
        }
        if (*serve) {
            ExperimentConfig cfg = serve_flags.resolve();
            cfg.oracle = OracleKind::Human;
            cfg.port = serve_port;
            cfg.human_timeout_s = serve_timeout;
            if (!serve_strategy.empty()) cfg.strategy = parse_strategy(serve_strategy);
            return run_with_oracle(cfg, serve_out, serve_static);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
