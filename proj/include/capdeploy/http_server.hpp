#pragma once

// Binds QueryService to cpp-httplib. The table behind the service must
// outlive the server.

#include "capdeploy/service.hpp"

#include "httplib.h"

#include <string>

namespace capdeploy {

inline void mount(httplib::Server& server, const QueryService& service) {
    auto reply = [](httplib::Response& res, const ApiResponse& api) {
        res.status = api.status;
        res.set_content(api.text(), "application/json");
    };
    auto params_of = [](const httplib::Request& req) {
        QueryParams params;
        for (const auto& [k, v] : req.params) params.emplace(k, v);
        return params;
    };
    server.Get("/api/meta", [&service, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, service.meta());
    });
    server.Get("/api/threshold", [&service, reply, params_of](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.threshold(params_of(req)));
    });
    server.Post("/api/decide", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.decide(req.body));
    });
    server.Get("/api/surface", [&service, reply, params_of](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.surface(params_of(req)));
    });
    server.set_error_handler([reply](const httplib::Request& req, httplib::Response& res) {
        if (res.status != 404 || !res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
        auto api = error_response({ApiErrorCode::bad_request, "no endpoint " + req.method + " " + req.path, ""});
        api.status = 404;
        reply(res, api);
        return httplib::Server::HandlerResponse::Handled;
    });
}

/// Splits "host:port"; a bare port binds 127.0.0.1.
inline std::pair<std::string, int> parse_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    std::string host = colon == std::string::npos ? "127.0.0.1" : bind.substr(0, colon);
    const auto port = parse_integer(colon == std::string::npos ? bind : bind.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535) throw ConfigError("bind", 0, "bind: expected host:port, got " + bind);
    if (host.empty()) host = "127.0.0.1";
    return {host, static_cast<int>(*port)};
}

}  // namespace capdeploy
