/*
 * Copyright 2026 The copg Authors.
 *
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

#ifndef COPG_CSV_HPP_
#define COPG_CSV_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace copg::csv {

// Comma delimiter, double-quote escaping, one header row.
std::string escape(const std::string& field);
void write_row(std::ostream& os, const std::vector<std::string>& fields);

// Parses one logical CSV record (may span lines when quoted). Returns false
// at EOF.
bool read_row(std::istream& is, std::vector<std::string>& out);

std::string join_list(const std::vector<std::string>& parts);       // '|'-joined
std::vector<std::string> split_list(const std::string& s);           // inverse

std::string format_double(double v);  // shortest round-trip formatting

}  // namespace copg::csv

#endif  // COPG_CSV_HPP_
