// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace slr {

enum class Errc {
  io,
  bad_magic,
  truncated_payload,
  unsupported_version,
  narrowing_overflow,
  parse,
  invariant,
  shape,
  not_symmetric,
  not_converged,
  numerical,
  usage,
};

std::string_view errc_name(Errc code);

/// Every recoverable failure in the library is reported as an Error carrying a
/// machine-readable code; the CLI maps codes onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace slr
