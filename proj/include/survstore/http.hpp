#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace survstore {

// Thin wrappers over the embedded HTTP library so that it is compiled in a
// single translation unit.

struct HttpResponse {
  int status = 0;
  std::string content_type;
  std::string body;
  std::multimap<std::string, std::string> headers;

  std::string header(std::string_view name) const;  // case-insensitive, "" if absent
};

/// PUT `body` to an absolute http:// or https:// URL. Throws
/// NetworkUnreachable when no response arrives and InvalidArgument for an
/// unusable URL. Any status is returned to the caller.
HttpResponse http_put(const std::string& url, const std::multimap<std::string, std::string>& headers,
                      const std::string& body, const std::string& content_type,
                      std::chrono::seconds timeout = std::chrono::seconds(30));

struct HttpRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::multimap<std::string, std::string> headers;
  std::string body;
};

using HttpHandler = std::function<HttpResponse(const HttpRequest&)>;

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8741;
  /// Served under "/" when it exists; requests under /api/ never fall
  /// through to it.
  std::filesystem::path static_dir;
};

class HttpServer {
 public:
  HttpServer(ServeOptions options, HttpHandler handler);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listener. Throws IoFailure when the address cannot be bound.
  /// Returns the bound port (useful with port 0).
  int bind();
  /// Blocks serving requests until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace survstore
