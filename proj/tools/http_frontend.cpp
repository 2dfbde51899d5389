// Copyright 2026 The DISMOP Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "http_frontend.hpp"

#include "httplib.h"
#include "json.hpp"

namespace dismop_http {

Reply forward(dismop_service* service, const std::string& method, const std::string& path,
              const std::string& body) {
  Reply r;
  char* out = nullptr;
  const int rc = dismop_service_handle(service, method.c_str(), path.c_str(), body.c_str(),
                                       &r.status, &out);
  if (rc != DISMOP_OK) {
    r.status = 500;
    r.body = nlohmann::json{{"error", dismop_status_name(rc)}, {"message", dismop_last_error()}}
                 .dump();
    return r;
  }
  r.body = out;
  dismop_string_free(out);
  return r;
}

void mount(httplib::Server& server, dismop_service* service) {
  auto handler = [service](const httplib::Request& req, httplib::Response& res) {
    const Reply r = forward(service, req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get(R"(/api/.*)", handler);
  server.Post(R"(/api/.*)", handler);
  server.Put(R"(/api/.*)", handler);
  server.Delete(R"(/api/.*)", handler);
  // Lets a browser console served from another origin call the API.
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace dismop_http
