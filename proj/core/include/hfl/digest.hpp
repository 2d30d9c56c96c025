#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace hfl {

// FNV-1a, 64-bit; chainable through the h argument.
constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = kFnvOffset);
std::uint64_t fnv1a(const std::string& text, std::uint64_t h = kFnvOffset);

std::string hex64(std::uint64_t v);

}  // namespace hfl
