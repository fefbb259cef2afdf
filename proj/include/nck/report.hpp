#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "nck/error.hpp"

namespace nck {

struct IdentityEntry {
    std::string name;
    double deviation = 0.0;
    double threshold = 0.0;
    bool passed = true;
};

/// Named deviations from exact identities, each against its own threshold.
struct IdentityReport {
    std::vector<IdentityEntry> entries;

    void add(std::string name, double deviation, double threshold) {
        const bool ok = deviation <= threshold;  // NaN fails
        entries.push_back({std::move(name), deviation, threshold, ok});
    }

    void merge(const IdentityReport& other) {
        entries.insert(entries.end(), other.entries.begin(), other.entries.end());
    }

    bool passed() const {
        return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
    }

    double max_deviation() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.deviation);
        return m;
    }

    const IdentityEntry* first_failure() const {
        for (const auto& e : entries)
            if (!e.passed) return &e;
        return nullptr;
    }

    void throw_if_failed() const {
        if (const auto* f = first_failure())
            throw Error(ErrorCode::IdentityViolation,
                        f->name + " deviates by " + std::to_string(f->deviation) + " (threshold " +
                            std::to_string(f->threshold) + ")");
    }
};

}  // namespace nck
