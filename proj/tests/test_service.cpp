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

#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <thread>

using namespace prefmpc;
using namespace std::chrono_literals;

namespace {

nlohmann::json get_json(httplib::Client& c, const std::string& path, int expect_status = 200) {
    auto res = c.Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expect_status) << path;
    return nlohmann::json::parse(res->body);
}

int post_label(httplib::Client& c, const std::string& id, const std::string& body, const std::string& query = "") {
    auto res = c.Post("/api/query/" + id + "/label" + query, body, "application/json");
    return res ? res->status : -1;
}

struct Served {
    std::shared_ptr<QueryBroker> broker = std::make_shared<QueryBroker>("sess-1");
    PreferenceService service{broker};
    int port = service.start("127.0.0.1", 0);
    httplib::Client client{"127.0.0.1", port};
};

}  // namespace

TEST(Service, EmptyQueueAndStatus) {
    Served s;
    EXPECT_TRUE(get_json(s.client, "/api/query/next")["empty"].get<bool>());
    const auto st = get_json(s.client, "/api/status");
    EXPECT_EQ(st["session"], "sess-1");
    EXPECT_EQ(st["pending"], 0);
}

TEST(Service, ServesQueriesInArrivalOrder) {
    Served s;
    s.broker->enqueue("first", {{"id", "first"}});
    s.broker->enqueue("second", {{"id", "second"}});
    EXPECT_EQ(get_json(s.client, "/api/query/next")["id"], "first");
    EXPECT_EQ(post_label(s.client, "first", R"({"preference":1})"), 200);
    EXPECT_EQ(get_json(s.client, "/api/query/next?session=sess-1")["id"], "second");
}

TEST(Service, UnknownSessionIsNotFound) {
    Served s;
    s.broker->enqueue("q", {{"id", "q"}});
    get_json(s.client, "/api/query/next?session=other", 404);
    EXPECT_EQ(post_label(s.client, "q", R"({"preference":1})", "?session=other"), 404);
    EXPECT_EQ(s.broker->pending_count(), 1u);
}

TEST(Service, RejectsBadLabelsAndSecondSubmissions) {
    Served s;
    s.broker->enqueue("q", {{"id", "q"}});
    EXPECT_EQ(post_label(s.client, "q", R"({"preference":2})"), 400);
    EXPECT_EQ(post_label(s.client, "q", R"({"preference":"yes"})"), 400);
    EXPECT_EQ(post_label(s.client, "q", "not json"), 400);
    EXPECT_EQ(s.broker->pending_count(), 1u);
    EXPECT_EQ(post_label(s.client, "q", R"({"preference":0})"), 200);
    EXPECT_EQ(post_label(s.client, "q", R"({"preference":1})"), 409);
    EXPECT_EQ(s.broker->wait("q", 10ms), 0);
    EXPECT_EQ(post_label(s.client, "never-issued", R"({"preference":1})"), 409);
    const auto st = get_json(s.client, "/api/status");
    EXPECT_EQ(st["answered"], 1);
}

TEST(Service, HumanOracleReceivesPostedLabel) {
    Served s;
    HumanOracle oracle(s.broker, Matrix::Identity(1, 1), {}, 10s);
    Trajectory t{Matrix::Constant(1, 2, 0.1), Matrix::Zero(1, 1)};
    auto answer = std::async(std::launch::async, [&] { return oracle.ask({"h1", t, t}); });
    nlohmann::json q;
    for (int i = 0; i < 1000; ++i) {
        q = get_json(s.client, "/api/query/next");
        if (!q.contains("empty")) break;
        std::this_thread::sleep_for(2ms);
    }
    ASSERT_EQ(q["id"], "h1");
    EXPECT_EQ(q["T"]["y_norm"].size(), 2u);
    EXPECT_EQ(post_label(s.client, "h1", R"({"preference":0})"), 200);
    EXPECT_EQ(answer.get(), 0);
}

TEST(Service, ScriptedAnnotatorMatchesSyntheticRun) {
    ExperimentConfig cfg;
    cfg.n_initial = 3;
    cfg.pool_size = 6;
    cfg.iterations = 2;
    cfg.n_eval = 2;
    const auto C = make_oscillating_masses(cfg.system).C;

    SyntheticOracle synthetic(C, cfg.settling);
    const auto dir = std::filesystem::temp_directory_path() / "prefmpc_service_e2e";
    std::filesystem::remove_all(dir);
    const auto reference = run_experiment(cfg, dir / "synthetic", synthetic);

    Served s;
    HumanOracle human(s.broker, C, cfg.settling, 30s);
    std::atomic<bool> done{false};
    int answered = 0, conflicts = 0;
    std::thread annotator([&] {
        httplib::Client c("127.0.0.1", s.port);
        while (!done) {
            auto res = c.Get("/api/query/next");
            if (!res) continue;
            const auto q = nlohmann::json::parse(res->body);
            if (q.contains("empty")) {
                std::this_thread::sleep_for(1ms);
                continue;
            }
            const int label = synthetic_preference(trajectory_from_json(q["T"]), trajectory_from_json(q["S"]), C,
                                                   {q["epsilon"].get<double>()});
            const std::string id = q["id"];
            const std::string body = nlohmann::json{{"preference", label}}.dump();
            if (post_label(c, id, body) == 200) ++answered;
            // A double submit must not produce a second label.
            if (post_label(c, id, nlohmann::json{{"preference", 1 - label}}.dump()) == 409) ++conflicts;
        }
    });
    const auto served = run_experiment(cfg, dir / "human", human);
    done = true;
    annotator.join();

    EXPECT_EQ(answered, 5);
    EXPECT_EQ(conflicts, 5);
    ASSERT_EQ(served.dataset.size(), reference.dataset.size());
    for (std::size_t i = 0; i < served.dataset.size(); ++i) {
        EXPECT_EQ(served.dataset[i].label, reference.dataset[i].label);
        EXPECT_TRUE(served.dataset[i].T == reference.dataset[i].T);
    }
    EXPECT_TRUE(served.theta_final == reference.theta_final);
    EXPECT_EQ(to_json(served.theta_final).dump(), to_json(reference.theta_final).dump());
}
