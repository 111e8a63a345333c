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

#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Root of every error raised by the library. Callers that only need to map
// failures to exit codes can switch on kind().
class Error : public std::runtime_error {
 public:
  enum class Kind {
    kInput,
    kSize,
    kQuery,
    kProtocol,
    kParse,
    kRange,
    kTransport,
    kMetric,
    kConfig,
    kIngestion,
    kLookup,
    kExtraction,
  };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

#define PRISM_DEFINE_ERROR(Name, KindValue)                   \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& message)                 \
        : Error(Kind::KindValue, message) {}                  \
  };

PRISM_DEFINE_ERROR(InputError, kInput)
PRISM_DEFINE_ERROR(SizeError, kSize)
PRISM_DEFINE_ERROR(ProtocolError, kProtocol)
PRISM_DEFINE_ERROR(RangeError, kRange)
PRISM_DEFINE_ERROR(MetricError, kMetric)
PRISM_DEFINE_ERROR(ConfigError, kConfig)
PRISM_DEFINE_ERROR(IngestionError, kIngestion)
PRISM_DEFINE_ERROR(LookupError, kLookup)
PRISM_DEFINE_ERROR(ExtractionError, kExtraction)

#undef PRISM_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw_text = {})
      : Error(Kind::kParse, message), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const noexcept { return raw_text_; }

 private:
  std::string raw_text_;
};

// The oracle gave up on a query: every retry produced an unusable answer.
class QueryError : public Error {
 public:
  QueryError(const std::string& message, std::string raw_text, int attempts)
      : Error(Kind::kQuery, message),
        raw_text_(std::move(raw_text)),
        attempts_(attempts) {}

  const std::string& raw_text() const noexcept { return raw_text_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string raw_text_;
  int attempts_;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, int attempts, int http_status = 0)
      : Error(Kind::kTransport, message),
        attempts_(attempts),
        http_status_(http_status) {}

  int attempts() const noexcept { return attempts_; }
  int http_status() const noexcept { return http_status_; }

 private:
  int attempts_;
  int http_status_;
};

}  // namespace prism
