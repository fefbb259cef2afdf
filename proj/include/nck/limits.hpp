#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>

namespace nck {

// Size caps. NCK_MAX_DIM, when set to a positive integer, replaces the
// default cap but never exceeds the hard cap.
inline std::size_t dimension_cap(std::size_t default_cap, std::size_t hard_cap) {
    const char* env = std::getenv("NCK_MAX_DIM");
    if (!env || !*env) return default_cap;
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) return default_cap;
    return std::min<std::size_t>(v, hard_cap);
}

inline std::size_t max_car_d() { return dimension_cap(10, 12); }
inline std::size_t max_rademacher_d() { return dimension_cap(16, 20); }

constexpr std::size_t max_space_atoms = std::size_t{1} << 20;

}  // namespace nck
