#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace radinv {

/// Violated precondition or failed numerical invariant in a solver call.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration text that failed validation. Carries every problem found,
/// not only the first one.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> problems_;
};

}  // namespace radinv
