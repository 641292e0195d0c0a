// Copyright 2026 The slr Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <string>

#include "slr/error.hpp"
#include "slr/kernels.hpp"

namespace slr::kernels {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(SLR_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(SLR_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const Table* best_available() {
  if (const char* env = std::getenv("SLR_KERNELS")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa) && cpu_has(isa)) return &table(isa);
    }
  }
  if (cpu_has(Isa::avx2)) return &table(Isa::avx2);
  if (cpu_has(Isa::neon)) return &table(Isa::neon);
  return &detail::kScalarTable;
}

std::atomic<const Table*>& slot() {
  static std::atomic<const Table*> current{best_available()};
  return current;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return cpu_has(isa); }

const Table& table(Isa isa) {
  if (!cpu_has(isa)) fail(Errc::usage, "kernel variant unavailable on this CPU: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(SLR_HAVE_AVX2)
    case Isa::avx2: return detail::kAvx2Table;
#endif
#if defined(SLR_HAVE_NEON)
    case Isa::neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

const Table& active() { return *slot().load(std::memory_order_relaxed); }

void select(Isa isa) { slot().store(&table(isa), std::memory_order_relaxed); }

}  // namespace slr::kernels
