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

#ifndef COPG_ERRORS_HPP_
#define COPG_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace copg {

// Error taxonomy maps onto process exit codes:
//   UsageError    -> 1 (bad flags / malformed invocation)
//   ContractError -> 2 (validation or contract violation)
//   NumericError  -> 3 (runtime numerical failure)
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class MalformedRecord : public ContractError {
 public:
  MalformedRecord(const std::string& msg, std::size_t line)
      : ContractError("malformed record at line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TruncatedStream : public ContractError {
 public:
  explicit TruncatedStream(const std::string& msg) : ContractError("truncated stream: " + msg) {}
};

class DanglingReference : public ContractError {
 public:
  explicit DanglingReference(const std::string& msg)
      : ContractError("dangling reference: " + msg) {}
};

class ExhaustedComplement : public ContractError {
 public:
  explicit ExhaustedComplement(const std::string& msg)
      : ContractError("exhausted complement: " + msg) {}
};

class OverlapError : public ContractError {
 public:
  explicit OverlapError(const std::string& msg) : ContractError("edge overlap: " + msg) {}
};

class DimensionMismatch : public ContractError {
 public:
  explicit DimensionMismatch(const std::string& msg)
      : ContractError("dimension mismatch: " + msg) {}
};

class CorruptFile : public ContractError {
 public:
  explicit CorruptFile(const std::string& msg) : ContractError("corrupt file: " + msg) {}
};

class ShapeMismatch : public ContractError {
 public:
  explicit ShapeMismatch(const std::string& msg) : ContractError("shape mismatch: " + msg) {}
};

class NonScalarLoss : public ContractError {
 public:
  explicit NonScalarLoss(const std::string& msg) : ContractError("non-scalar loss: " + msg) {}
};

class DegenerateLabels : public ContractError {
 public:
  explicit DegenerateLabels(const std::string& msg)
      : ContractError("degenerate labels: " + msg) {}
};

class DegenerateInput : public ContractError {
 public:
  explicit DegenerateInput(const std::string& msg) : ContractError("degenerate input: " + msg) {}
};

class ConfigError : public ContractError {
 public:
  // `pointer` is the JSON-pointer path of the offending key.
  ConfigError(const std::string& pointer, const std::string& msg)
      : ContractError("config error at " + pointer + ": " + msg), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

class NonFiniteGradient : public NumericError {
 public:
  explicit NonFiniteGradient(const std::string& param_name)
      : NumericError("non-finite gradient in parameter '" + param_name + "'") {}
};

class NonFiniteLoss : public NumericError {
 public:
  NonFiniteLoss(std::size_t batch_index)
      : NumericError("non-finite loss at batch " + std::to_string(batch_index)) {}
};

}  // namespace copg

#endif  // COPG_ERRORS_HPP_
