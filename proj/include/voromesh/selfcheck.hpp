#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "voromesh/vec3.hpp"

namespace voromesh {

struct SelfCheckOptions {
    std::uint64_t seed = 0;
    int threads = 1;
    // Test hook: replaces the bisector-distance evaluation used by the
    // theorem-1 check, so a corrupted formula is provably caught.
    std::function<double(const Vec3&, const Vec3&, const Vec3&)> bisector_override;
};

struct SelfCheckReport {
    struct Entry {
        std::string name;
        bool pass = false;
        std::string detail;
    };
    std::vector<Entry> entries;

    bool all_pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return !entries.empty();
    }
};

// Randomized consistency suite: theorem-1 equivalence against fully
// constructed diagrams, finite-difference gradient checks, cell volume
// conservation, kNN truncation, and the extract+repair watertight property.
SelfCheckReport run_selfcheck(const SelfCheckOptions& options);

} // namespace voromesh
