#pragma once

// cpp-httplib binding for Service. Needs a thread library at link time.

#include <optional>
#include <string>
#include <utility>

#include <httplib.h>

#include "gacm/service.hpp"

namespace gacm {

struct HttpOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::string> cors_origin;
};

/// "host:port" or ":port" or "port".
inline std::pair<std::string, int> parse_address(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port = addr;
  if (auto colon = addr.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = addr.substr(0, colon);
    port = addr.substr(colon + 1);
  }
  if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos || port.size() > 5)
    throw std::invalid_argument("bad listen address '" + addr + "'");
  int p = std::stoi(port);
  if (p > 65535) throw std::invalid_argument("bad port in '" + addr + "'");
  return {host, p};
}

class HttpServer {
 public:
  HttpServer(const Service& service, HttpOptions options)
      : service_(service), options_(std::move(options)) {
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
      HttpResponse out = service_.handle(req.method, req.path, req.body);
      res.status = out.status;
      for (const auto& [k, v] : out.headers)
        if (k != "Content-Type") res.set_header(k, v);
      cors(res);
      auto ct = out.headers.find("Content-Type");
      res.set_content(out.body, ct == out.headers.end() ? "application/json" : ct->second.c_str());
    };
    server_.Get(".*", dispatch);
    server_.Post(".*", dispatch);
    server_.Put(".*", dispatch);
    server_.Delete(".*", dispatch);
    server_.Options(".*", [this](const httplib::Request&, httplib::Response& res) {
      cors(res);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }

  /// Binds the socket; returns the bound port.
  int bind() {
    if (options_.port == 0) {
      port_ = server_.bind_to_any_port(options_.host.c_str());
    } else if (server_.bind_to_port(options_.host.c_str(), options_.port)) {
      port_ = options_.port;
    } else {
      port_ = -1;
    }
    if (port_ < 0) throw std::runtime_error("cannot listen on " + options_.host + ":" +
                                            std::to_string(options_.port));
    return port_;
  }

  /// Blocks serving requests until stop() is called.
  bool listen() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const { return port_; }

 private:
  void cors(httplib::Response& res) const {
    if (options_.cors_origin) {
      res.set_header("Access-Control-Allow-Origin", *options_.cors_origin);
      res.set_header("Vary", "Origin");
    }
  }

  const Service& service_;
  HttpOptions options_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace gacm
