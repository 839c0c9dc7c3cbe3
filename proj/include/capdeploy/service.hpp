#pragma once

// Query layer over a loaded value table. Handlers are pure functions of
// (table, request) returning a status code and a JSON body; the HTTP
// transport lives in http_server.hpp.
//
//   GET  /api/meta
//   GET  /api/threshold?f=&s=&t=
//   POST /api/decide        {"f", "t", "size", "irr_underwritten"}
//   GET  /api/surface?fractions=&n_times=
//
// Errors: {"error": {"code": bad_request | out_of_domain | not_ready,
//                    "message": ..., "parameter": ...}}

#include "capdeploy/error.hpp"
#include "capdeploy/format.hpp"
#include "capdeploy/policy.hpp"
#include "capdeploy/solver.hpp"

#include "json.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capdeploy {

enum class ApiErrorCode { bad_request, out_of_domain, not_ready };

constexpr std::string_view to_string(ApiErrorCode c) {
    switch (c) {
        case ApiErrorCode::bad_request: return "bad_request";
        case ApiErrorCode::out_of_domain: return "out_of_domain";
        case ApiErrorCode::not_ready: return "not_ready";
    }
    return "unknown";
}

constexpr int http_status(ApiErrorCode c) {
    switch (c) {
        case ApiErrorCode::bad_request: return 400;
        case ApiErrorCode::out_of_domain: return 422;
        case ApiErrorCode::not_ready: return 503;
    }
    return 500;
}

struct ApiError {
    ApiErrorCode code = ApiErrorCode::bad_request;
    std::string message;
    std::string parameter;
};

struct ApiResponse {
    int status = 200;
    nlohmann::json body;

    std::string text() const { return body.dump(); }
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

inline nlohmann::json to_json(const Decision& d) {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    return {{"verdict", std::string(to_string(d.verdict))},
            {"threshold_moic", num(d.threshold_moic)},
            {"threshold_irr", num(d.threshold_irr)},
            {"deal_value_excess", d.deal_value_excess}};
}

inline ApiResponse error_response(const ApiError& e) {
    nlohmann::json err{{"code", std::string(to_string(e.code))}, {"message", e.message}};
    if (!e.parameter.empty()) err["parameter"] = e.parameter;
    return {http_status(e.code), {{"error", err}}};
}

class QueryService {
public:
    QueryService() = default;
    explicit QueryService(const ValueTable* table) : table_(table) {}

    ApiResponse meta() const {
        if (!table_) return not_ready();
        return {200,
                {{"fund_size", table_->capital()},
                 {"horizon_years", table_->horizon()},
                 {"hurdle_irr", table_->hurdle_irr()},
                 {"hurdle_moic", table_->moic_hurdle},
                 {"exit_years", table_->exit_years},
                 {"n_capital", table_->n_capital()},
                 {"n_times", table_->n_times()}}};
    }

    ApiResponse threshold(const QueryParams& params) const {
        if (!table_) return not_ready();
        double f = 0, s = 0, t = 0;
        if (auto e = number(params, "f", f)) return error_response(*e);
        if (auto e = number(params, "s", s)) return error_response(*e);
        if (auto e = number(params, "t", t)) return error_response(*e);
        if (auto e = check_state(f, t)) return error_response(*e);
        if (auto e = check_size(f, s)) return error_response(*e);
        const double moic = threshold_moic(*table_, f, s, t);
        return {200, {{"threshold_moic", moic}, {"threshold_irr", moic_to_irr(moic, table_->exit_years)}}};
    }

    ApiResponse decide(std::string_view body) const {
        if (!table_) return not_ready();
        const auto doc = nlohmann::json::parse(body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
            return error_response({ApiErrorCode::bad_request, "body must be a JSON object", ""});
        double f = 0, t = 0, size = 0, irr = 0;
        for (auto [key, dst] : {std::pair<const char*, double*>{"f", &f}, {"t", &t}, {"size", &size},
                                {"irr_underwritten", &irr}}) {
            const auto it = doc.find(key);
            if (it == doc.end() || !it->is_number())
                return error_response({ApiErrorCode::bad_request, std::string(key) + " must be a number", key});
            *dst = it->get<double>();
            if (!std::isfinite(*dst))
                return error_response({ApiErrorCode::bad_request, std::string(key) + " must be finite", key});
        }
        if (auto e = check_state(f, t)) return error_response(*e);
        if (!(size > 0.0))
            return error_response({ApiErrorCode::out_of_domain, "size must be positive", "size"});
        if (!(irr > -1.0))
            return error_response(
                {ApiErrorCode::out_of_domain, "irr_underwritten must exceed -1", "irr_underwritten"});
        const DealSample deal{size, irr_to_moic(irr, table_->exit_years)};
        return {200, to_json(capdeploy::decide(*table_, FundState{f, t}, deal))};
    }

    ApiResponse surface(const QueryParams& params) const {
        if (!table_) return not_ready();
        std::vector<double> fractions{0.1, 0.25, 0.5};
        if (const auto it = params.find("fractions"); it != params.end()) {
            const auto xs = parse_double_list(it->second);
            if (!xs || xs->empty())
                return error_response(
                    {ApiErrorCode::bad_request, "fractions must be a comma-separated list", "fractions"});
            fractions = *xs;
        }
        for (double q : fractions)
            if (!(q > 0.0 && q <= 1.0))
                return error_response({ApiErrorCode::out_of_domain, "fractions must lie in (0, 1]", "fractions"});
        long long n_times = 50;
        if (const auto it = params.find("n_times"); it != params.end()) {
            const auto n = parse_integer(it->second);
            if (!n) return error_response({ApiErrorCode::bad_request, "n_times must be an integer", "n_times"});
            n_times = *n;
        }
        if (n_times < 2 || n_times > kMaxSurfaceTimes)
            return error_response({ApiErrorCode::out_of_domain,
                                   "n_times must lie in [2, " + std::to_string(kMaxSurfaceTimes) + "]",
                                   "n_times"});
        const auto times = evenly_spaced_times(*table_, static_cast<std::size_t>(n_times));
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : export_surface(*table_, fractions, times))
            rows.push_back({{"t_years", r.t_years}, {"size_fraction", r.size_fraction},
                            {"required_irr", r.required_irr}});
        return {200, {{"f", table_->capital()}, {"rows", std::move(rows)}}};
    }

    /// Routes a request by method and path.
    ApiResponse handle(std::string_view method, std::string_view path, const QueryParams& params,
                       std::string_view body) const {
        if (method == "GET" && path == "/api/meta") return meta();
        if (method == "GET" && path == "/api/threshold") return threshold(params);
        if (method == "POST" && path == "/api/decide") return decide(body);
        if (method == "GET" && path == "/api/surface") return surface(params);
        auto r = error_response({ApiErrorCode::bad_request,
                                 "no endpoint " + std::string(method) + " " + std::string(path), ""});
        r.status = 404;
        return r;
    }

    static constexpr long long kMaxSurfaceTimes = 100000;

private:
    static ApiResponse not_ready() {
        return error_response({ApiErrorCode::not_ready, "no value table loaded", ""});
    }

    static std::optional<ApiError> number(const QueryParams& params, const char* key, double& out) {
        const auto it = params.find(key);
        if (it == params.end())
            return ApiError{ApiErrorCode::bad_request, std::string("missing parameter ") + key, key};
        const auto x = parse_double(it->second);
        if (!x || !std::isfinite(*x))
            return ApiError{ApiErrorCode::bad_request, std::string(key) + " must be a finite number", key};
        out = *x;
        return std::nullopt;
    }

    std::optional<ApiError> check_state(double f, double t) const {
        if (!(f >= 0.0 && f <= table_->capital()))
            return ApiError{ApiErrorCode::out_of_domain, "f must lie in [0, " + format_double(table_->capital()) + "]",
                            "f"};
        if (!(t >= 0.0 && t <= table_->horizon()))
            return ApiError{ApiErrorCode::out_of_domain, "t must lie in [0, " + format_double(table_->horizon()) + "]",
                            "t"};
        return std::nullopt;
    }

    static std::optional<ApiError> check_size(double f, double s) {
        if (!(f > 0.0)) return ApiError{ApiErrorCode::out_of_domain, "no deal is affordable at f = 0", "f"};
        if (!(s > 0.0)) return ApiError{ApiErrorCode::out_of_domain, "s must be positive", "s"};
        if (s > f) return ApiError{ApiErrorCode::out_of_domain, "s exceeds remaining capital f", "s"};
        return std::nullopt;
    }

    const ValueTable* table_ = nullptr;
};

}  // namespace capdeploy
