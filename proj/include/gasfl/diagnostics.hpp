#pragma once

#include <string>
#include <vector>

namespace gasfl {

// Collects non-fatal warnings raised by scoring and training routines.
// Functions accept a nullable pointer; passing nullptr discards warnings.
struct Diagnostics {
    std::vector<std::string> warnings;

    void warn(std::string message) { warnings.push_back(std::move(message)); }
};

inline void warn(Diagnostics* diag, std::string message) {
    if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace gasfl
