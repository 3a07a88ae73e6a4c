#pragma once

// HTTP transport for BenchmarkService, and an Evaluator that calls a remote
// service's /v1/simulate endpoint.

#include "coilopt/evaluator.hpp"
#include "coilopt/io/campaign_json.hpp"
#include "coilopt/service/protocol.hpp"

#include <httplib.h>

#include <memory>
#include <string>

namespace coilopt::service {

inline constexpr const char* kJsonType = "application/json";

inline void route(httplib::Server& server, const BenchmarkService& svc) {
    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body, kJsonType);
    };
    server.Get("/v1/health", [&svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
    server.Get("/v1/spaces", [&svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc.spaces()); });
    server.Post("/v1/evaluate",
                [&svc, reply](const httplib::Request& req, httplib::Response& res) { reply(res, svc.evaluate(req.body)); });
    server.Post("/v1/simulate",
                [&svc, reply](const httplib::Request& req, httplib::Response& res) { reply(res, svc.simulate(req.body)); });
    server.set_error_handler([reply](const httplib::Request& req, httplib::Response& res) {
        if (res.status == 404) reply(res, error_response(404, "not_found", "no route for " + req.method + " " + req.path));
    });
}

/// Owns a server bound to a port and serves on a background thread.
class ServiceHost {
public:
    ServiceHost(const BenchmarkService& svc, const std::string& host = "127.0.0.1", int port = 0) : host_(host) {
        route(server_, svc);
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ <= 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~ServiceHost() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }
    ServiceHost(const ServiceHost&) = delete;
    ServiceHost& operator=(const ServiceHost&) = delete;

    int port() const { return port_; }
    const std::string& host() const { return host_; }

private:
    httplib::Server server_;
    std::string host_;
    int port_ = -1;
    std::thread thread_;
};

/// Blocking server loop for the CLI.
inline bool serve(const BenchmarkService& svc, const std::string& host, int port) {
    httplib::Server server;
    route(server, svc);
    return server.listen(host, port);
}

/// Remote evaluator. Sends the full design space with each request so the
/// service evaluates exactly the caller's geometry.
class HttpEvaluator : public Evaluator {
public:
    /// `endpoint` is scheme://host:port, e.g. http://127.0.0.1:8080.
    explicit HttpEvaluator(std::string endpoint, int timeout_seconds = 600)
        : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

    flow::SimulationResult evaluate(const DesignSpace& space, const Eigen::VectorXd& x, const flow::FidelityVector& z,
                                    std::uint64_t seed) const override {
        const io::OrderedJson body = {{"parameterisation", to_string(space.kind)},
                                      {"space", io::to_json(space)},
                                      {"x", io::detail::vec(x)},
                                      {"z", {z.axial, z.radial}},
                                      {"seed", seed}};
        httplib::Client client(endpoint_);
        client.set_read_timeout(timeout_seconds_, 0);
        const auto res = client.Post("/v1/simulate", body.dump(), kJsonType);
        if (!res) throw SolverFailure("evaluator endpoint " + endpoint_ + " unreachable: " + httplib::to_string(res.error()));
        std::string message = res->body;
        io::OrderedJson j;
        try {
            j = io::OrderedJson::parse(res->body);
            if (res->status != 200 && j.contains("message")) message = j["message"].get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw SolverFailure("evaluator endpoint returned invalid JSON (status " + std::to_string(res->status) + ")");
        }
        if (res->status == 400) throw InvalidArgument("evaluator rejected request: " + message);
        if (res->status == 422) throw GeometryInvalid(message, 0.0, 0.0);
        if (res->status != 200) throw SolverFailure("evaluator endpoint failed (" + std::to_string(res->status) + "): " + message);
        try {
            return simulation_from_json(j);
        } catch (const Error& e) {
            throw SolverFailure(std::string("evaluator response: ") + e.what());
        }
    }

private:
    std::string endpoint_;
    int timeout_seconds_;
};

}  // namespace coilopt::service
