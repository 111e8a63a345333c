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

// Minimal RFC 4180 reading and writing.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace prism::csv {

using Record = std::vector<std::string>;

// Parses a whole document. Quoted fields may hold commas, doubled quotes and
// line breaks; CRLF and LF line endings are both accepted and a trailing
// line break does not produce an empty record. Throws IngestionError on an
// unterminated quote.
std::vector<Record> parse(std::string_view text);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
std::string format_record(const Record& record);

}  // namespace prism::csv
