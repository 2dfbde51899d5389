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

#pragma once

#include <string>

#include "dismop.h"

namespace httplib {
class Server;
}

namespace dismop_http {

// Forwards every /api/* request on `server` to the service; the service owns
// routing, status codes and error bodies.
void mount(httplib::Server& server, dismop_service* service);

// Same forwarding without a socket, for in-process callers.
struct Reply {
  int status = 0;
  std::string body;
};
Reply forward(dismop_service* service, const std::string& method, const std::string& path,
              const std::string& body);

}  // namespace dismop_http
