#include "survstore/http.hpp"

#include <regex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "survstore/error.hpp"
#include "survstore/text.hpp"

namespace survstore {

std::string HttpResponse::header(std::string_view name) const {
  for (const auto& [key, value] : headers) {
    if (iequals(key, name)) return value;
  }
  return {};
}

HttpResponse http_put(const std::string& url, const std::multimap<std::string, std::string>& headers,
                      const std::string& body, const std::string& content_type,
                      std::chrono::seconds timeout) {
  static const std::regex kUrl(R"(^(https?://[^/?#]+)([/?].*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::InvalidArgument, "upload URL must be an absolute http(s) URL",
                {{"url", url}});
  }
  std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(m[1].str());
  if (!client.is_valid()) {
    throw Error(ErrorCode::InvalidArgument, "unusable upload URL", {{"url", url}});
  }
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers request_headers(headers.begin(), headers.end());
  auto result = client.Put(path, request_headers, body, content_type);
  if (!result) {
    throw Error(ErrorCode::NetworkUnreachable,
                "no response from " + m[1].str() + ": " + httplib::to_string(result.error()),
                {{"url", url}});
  }
  HttpResponse out;
  out.status = result->status;
  out.body = result->body;
  out.content_type = result->get_header_value("Content-Type");
  out.headers.insert(result->headers.begin(), result->headers.end());
  return out;
}

struct HttpServer::Impl {
  ServeOptions options;
  HttpHandler handler;
  httplib::Server server;
};

HttpServer::HttpServer(ServeOptions options, HttpHandler handler)
    : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->handler = std::move(handler);

  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request{req.method, req.path, {}, {}, req.body};
    request.query.insert(req.params.begin(), req.params.end());
    request.headers.insert(req.headers.begin(), req.headers.end());
    HttpResponse response = impl_->handler(request);
    res.status = response.status;
    res.set_content(response.body, response.content_type);
    for (const auto& [key, value] : response.headers) res.set_header(key, value);
  };
  httplib::Server& server = impl_->server;
  server.Get(R"(/api/.*)", dispatch);
  server.Post(R"(/api/.*)", dispatch);
  server.Put(R"(/api/.*)", dispatch);
  server.Delete(R"(/api/.*)", dispatch);
  server.Patch(R"(/api/.*)", dispatch);
  if (!impl_->options.static_dir.empty() && std::filesystem::is_directory(impl_->options.static_dir)) {
    server.set_mount_point("/", impl_->options.static_dir.string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  const ServeOptions& o = impl_->options;
  int port = o.port;
  bool ok;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    ok = port > 0;
  } else {
    ok = impl_->server.bind_to_port(o.host, port);
  }
  if (!ok) {
    throw Error(ErrorCode::IoFailure,
                "cannot listen on " + o.host + ":" + std::to_string(o.port),
                {{"host", o.host}, {"port", o.port}});
  }
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace survstore
