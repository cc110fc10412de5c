#pragma once

#include <string>

#include <httplib.h>

#include "socmab/service.hpp"

namespace socmab::api {

/// Routes every /v1 request of an httplib server through `service`.
inline void mount(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    Request r{req.method, req.path, req.body, req.get_header_value("Authorization")};
    const Response out = service.handle(r);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json; charset=utf-8");
  };
  server.Get(R"(/v1/.*)", forward);
  server.Post(R"(/v1/.*)", forward);
}

}  // namespace socmab::api
