// Copyright 2026 The vegscan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <curl/curl.h>

#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <sstream>

#include "vegscan/geodata.hpp"

namespace vegscan::geo {
namespace {

std::once_flag g_curl_init;

std::size_t collect(char* data, std::size_t size, std::size_t count, void* user) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(user);
  out->insert(out->end(), data, data + size * count);
  return size * count;
}

struct CurlHandle {
  CURL* h = curl_easy_init();
  ~CurlHandle() {
    if (h) curl_easy_cleanup(h);
  }
};

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) throw ProviderConfigError("http provider: base_url is not configured");
  if (cfg_.api_key_env.empty()) throw ProviderConfigError("http provider: api_key_env is not configured");
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (!key || !*key) {
    throw ProviderConfigError("http provider: environment variable " + cfg_.api_key_env + " is not set");
  }
  key_ = key;
  std::call_once(g_curl_init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

HttpProvider::~HttpProvider() = default;

std::string HttpProvider::public_url(const ImageRequest& r) const {
  std::ostringstream os;
  os << cfg_.base_url << (cfg_.base_url.find('?') == std::string::npos ? '?' : '&') << "size=" << r.width << 'x'
     << r.height << std::fixed << std::setprecision(7) << "&location=" << r.lat << ',' << r.lon
     << std::setprecision(2) << "&heading=" << r.heading << "&pitch=" << r.pitch << "&fov=" << r.fov;
  return os.str();
}

std::vector<std::uint8_t> HttpProvider::fetch(const ImageRequest& request) const {
  request.validate();
  const std::string url = public_url(request);
  CurlHandle curl;
  if (!curl.h) throw ProviderError("http provider: cannot create a transfer handle");
  char* escaped = curl_easy_escape(curl.h, key_.c_str(), static_cast<int>(key_.size()));
  const std::string full = url + "&key=" + (escaped ? escaped : "");
  curl_free(escaped);

  std::vector<std::uint8_t> body;
  curl_easy_setopt(curl.h, CURLOPT_URL, full.c_str());
  curl_easy_setopt(curl.h, CURLOPT_WRITEFUNCTION, &collect);
  curl_easy_setopt(curl.h, CURLOPT_WRITEDATA, &body);
  curl_easy_setopt(curl.h, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.h, CURLOPT_TIMEOUT, cfg_.timeout_seconds);
  curl_easy_setopt(curl.h, CURLOPT_NOSIGNAL, 1L);
  const CURLcode rc = curl_easy_perform(curl.h);
  if (rc != CURLE_OK) {
    throw ProviderError("request " + request.id() + " to " + url + " failed: " + curl_easy_strerror(rc));
  }
  long status = 0;
  curl_easy_getinfo(curl.h, CURLINFO_RESPONSE_CODE, &status);
  if (status == 401 || status == 403) {
    throw ProviderConfigError("http provider rejected the credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status != 200) {
    throw ProviderError("request " + request.id() + " to " + url + " returned HTTP " + std::to_string(status));
  }
  return body;
}

}  // namespace vegscan::geo
