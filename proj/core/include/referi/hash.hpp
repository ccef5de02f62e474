// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace referi {

/// Hex-encoded SHA-256 of arbitrary bytes. Used for cache keys, fixture
/// record names, candidate-set digests and config fingerprints.
std::string sha256_hex(std::string_view bytes);

/// FNV-1a 64-bit over bytes. Deterministic across platforms.
std::uint64_t fnv1a64(std::string_view bytes);

/// splitmix64 mixing step.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic uniform in (0, 1] derived from a mixed 64-bit state.
double unit_from_bits(std::uint64_t x);

}  // namespace referi
