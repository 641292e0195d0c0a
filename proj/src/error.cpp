// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include "slr/error.hpp"

namespace slr {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::io: return "io-failure";
    case Errc::bad_magic: return "bad-magic";
    case Errc::truncated_payload: return "truncated-payload";
    case Errc::unsupported_version: return "unsupported-version";
    case Errc::narrowing_overflow: return "dtype-narrowing-overflow";
    case Errc::parse: return "parse-error";
    case Errc::invariant: return "invariant-violation";
    case Errc::shape: return "shape-mismatch";
    case Errc::not_symmetric: return "non-symmetric-input";
    case Errc::not_converged: return "not-converged";
    case Errc::numerical: return "numerical-failure";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace slr
