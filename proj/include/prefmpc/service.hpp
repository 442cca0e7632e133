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
#ifndef PREFMPC_SERVICE_HPP
#define PREFMPC_SERVICE_HPP

#include "prefmpc/oracle.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

namespace prefmpc {

/**
 * @brief HTTP front of a QueryBroker for the labeling UI.
 *
 *   GET  /api/query/next[?session=ID]  oldest pending query or {"empty": true}
 *   POST /api/query/{id}/label         body {"preference": 0|1}
 *   GET  /api/status                   counters and current iteration
 *
 * Unknown session -> 404, unknown or already answered id -> 409,
 * malformed label -> 400.
 */
class PreferenceService {
public:
    explicit PreferenceService(std::shared_ptr<QueryBroker> broker, std::string static_dir = {})
        : broker_(std::move(broker)) {
        server_.Get("/api/query/next", [this](const httplib::Request& req, httplib::Response& res) {
            if (!session_ok(req, res)) return;
            auto next = broker_->next();
            reply(res, 200, next ? *next : nlohmann::json{{"empty", true}});
        });
        server_.Post(R"(/api/query/([^/]+)/label)", [this](const httplib::Request& req, httplib::Response& res) {
            if (!session_ok(req, res)) return;
            const std::string id = req.matches[1];
            int label = -1;
            try {
                const auto body = nlohmann::json::parse(req.body);
                const auto& p = body.at("preference");
                if (!p.is_number_integer()) throw std::invalid_argument("preference must be an integer");
                label = p.get<int>();
            } catch (const std::exception& e) {
                reply(res, 400, {{"error", std::string("invalid body: ") + e.what()}});
                return;
            }
            switch (broker_->post_label(id, label)) {
                case QueryBroker::PostResult::Accepted: reply(res, 200, {{"ok", true}, {"id", id}}); break;
                case QueryBroker::PostResult::Conflict:
                    reply(res, 409, {{"error", "query is not pending"}, {"id", id}});
                    break;
                case QueryBroker::PostResult::InvalidLabel:
                    reply(res, 400, {{"error", "preference must be 0 or 1"}, {"id", id}});
                    break;
            }
        });
        server_.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200,
                  {{"session", broker_->session()},
                   {"pending", broker_->pending_count()},
                   {"answered", broker_->answered_count()},
                   {"iteration", broker_->iteration()}});
        });
        if (!static_dir.empty()) server_.set_mount_point("/", static_dir);
    }

    PreferenceService(const PreferenceService&) = delete;
    PreferenceService& operator=(const PreferenceService&) = delete;
    ~PreferenceService() { stop(); }

    /// Starts listening on a background thread; port 0 picks a free port. Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 8700) {
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ < 0) throw std::runtime_error("PreferenceService: cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }

    int port() const { return port_; }
    QueryBroker& broker() { return *broker_; }

private:
    bool session_ok(const httplib::Request& req, httplib::Response& res) {
        if (req.has_param("session") && req.get_param_value("session") != broker_->session()) {
            reply(res, 404, {{"error", "unknown session"}});
            return false;
        }
        return true;
    }

    static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    std::shared_ptr<QueryBroker> broker_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace prefmpc

#endif  // PREFMPC_SERVICE_HPP
