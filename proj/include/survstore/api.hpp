#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "survstore/error.hpp"
#include "survstore/http.hpp"
#include "survstore/store.hpp"

namespace survstore {

/// One public module operation and the single endpoint and CLI subcommand
/// that expose it.
struct OperationRoute {
  std::string module;
  std::string operation;
  std::string method;
  std::string path;  // pattern, parameters as {name}
  std::string cli;   // subcommand path, e.g. "beacon add"
};

const std::vector<OperationRoute>& operation_manifest();

struct ApiConfig {
  std::string backup_url;            // SURVSTORE_BACKUP_URL
  std::filesystem::path backup_dir;  // default destination for POST /api/backup
};

/// JSON error body: {"error": {"code", "message", "details"}}.
nlohmann::json error_body(const Error& error);

/// Transport-independent request handler. The HTTP server and the CLI both
/// go through handle(), so every operation has one implementation.
class ApiService {
 public:
  explicit ApiService(Store& store, ApiConfig config = {});

  HttpResponse handle(const HttpRequest& request);
  /// Convenience for in-process callers. `target` is percent-decoded and may
  /// carry a ?query.
  HttpResponse handle(std::string method, std::string_view target, std::string body = {});

  struct RoutePattern {
    std::string method;
    std::string path;
  };
  std::vector<RoutePattern> routes() const;

 private:
  using Params = std::map<std::string, std::string>;
  using Handler = std::function<HttpResponse(const Params&, const HttpRequest&)>;
  struct Route {
    std::string method;
    std::string path;
    std::vector<std::string> segments;
    Handler handler;
  };

  void add(std::string method, std::string path, Handler handler);
  HttpResponse dispatch(const HttpRequest& request);

  Store& store_;
  ApiConfig config_;
  std::vector<Route> routes_;
};

}  // namespace survstore
