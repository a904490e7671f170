#pragma once

#include <stdexcept>
#include <string>

namespace melroi {

// Base class for all pipeline errors. Subcommands map these to exit code 2
// (runtime) or 1 (validation) depending on the phase that threw.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidSlide : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct ParseError : Error {
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line(line), column(column) {}
    int line;
    int column;
};
struct IdentityError : Error { using Error::Error; };
struct EmptySlideError : Error { using Error::Error; };
struct InsufficientTissue : Error { using Error::Error; };
struct DegenerateStains : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ClassCoverageError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };
struct JoinError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct StratificationError : Error { using Error::Error; };
struct GenerationError : Error { using Error::Error; };
struct MissingArtifact : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace melroi
