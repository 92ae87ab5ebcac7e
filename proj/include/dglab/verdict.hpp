#pragma once

#include <string>
#include <vector>

namespace dglab {

/// A named scientific check with the quantity it was decided on.
struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

inline bool all_pass(const std::vector<Verdict>& vs)
{
    for (const auto& v : vs) {
        if (!v.pass) {
            return false;
        }
    }
    return true;
}

} // namespace dglab
