/*
 * Copyright 2026 The prism Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "prism/chat_oracle.h"
#include "prism/error.h"

namespace prism {

struct HttpChatTransport::Impl {
  std::string origin;
  std::string path;
  std::string api_key;
  int timeout_seconds = 120;
};

HttpChatTransport::HttpChatTransport(const ChatEndpoint& endpoint)
    : impl_(std::make_unique<Impl>()) {
  const std::string& url = endpoint.url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  impl_->origin = url.substr(0, path_start);
  impl_->path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (const char* key = std::getenv(endpoint.api_key_env.c_str())) impl_->api_key = key;
  impl_->timeout_seconds = endpoint.timeout_seconds;
}

HttpChatTransport::~HttpChatTransport() = default;

HttpResult HttpChatTransport::post(const std::string& json_body) {
  httplib::Client client(impl_->origin);
  client.set_connection_timeout(impl_->timeout_seconds, 0);
  client.set_read_timeout(impl_->timeout_seconds, 0);
  httplib::Headers headers;
  if (!impl_->api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + impl_->api_key);
  }
  HttpResult out;
  auto res = client.Post(impl_->path, headers, json_body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace prism
