#pragma once

#include <stdexcept>
#include <string>

namespace radcine {

// Error taxonomy mirrored by the CLI exit codes: missing artifact (3),
// malformed file (4), numerical failure (5).
struct MissingArtifactError : std::runtime_error {
    explicit MissingArtifactError(const std::string& what) : std::runtime_error(what) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace radcine
