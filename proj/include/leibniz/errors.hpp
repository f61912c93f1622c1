#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace leibniz {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateDomain : Error { using Error::Error; };
struct RootHasNoParent : Error { using Error::Error; };
struct PointOutsideDomain : Error { using Error::Error; };
struct SchemeViolation : Error { using Error::Error; };
struct SchemeMismatch : Error { using Error::Error; };
struct NotShrinking : Error { using Error::Error; };
struct NotShrinkingScheme : Error { using Error::Error; };
struct NonMonotoneStieltjes : Error { using Error::Error; };
struct UnsupportedMeasureKind : Error { using Error::Error; };
struct ZeroDifferentialAtAtom : Error { using Error::Error; };
struct SelectorOutOfFraction : Error { using Error::Error; };
struct HypothesisNotMet : Error { using Error::Error; };
struct ToleranceNotReached : Error { using Error::Error; };

/// Evaluation hit a point outside a node's domain (log of a non-positive
/// box, sqrt of a negative number, ...). `node` is the offending subterm.
struct DomainError : Error {
    DomainError(const std::string& node, const std::string& detail)
        : Error("domain error in '" + node + "': " + detail), node(node) {}
    std::string node;
};

struct ParseError : Error {
    ParseError(std::size_t position, std::vector<std::string> expected, const std::string& found)
        : Error("parse error at position " + std::to_string(position) + ": expected " +
                join(expected) + ", found " + found),
          position(position),
          expected(std::move(expected)) {}

    std::size_t position;
    std::vector<std::string> expected;

private:
    static std::string join(const std::vector<std::string>& xs) {
        std::string out;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i) out += i + 1 == xs.size() ? " or " : ", ";
            out += xs[i];
        }
        return out.empty() ? "<nothing>" : out;
    }
};

/// Configuration errors carry the JSON path of the offending field.
struct ConfigError : Error {
    ConfigError(const std::string& path, const std::string& detail)
        : Error(path + ": " + detail), path(path) {}
    std::string path;
};

}  // namespace leibniz
