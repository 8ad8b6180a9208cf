#pragma once

#include <stdexcept>
#include <string>

namespace torsionlab {

// Bad input: shapes, ranges, violated hypotheses. Maps to CLI exit code 2.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Something did not converge or a numerical check failed. Exit code 3.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg)
{
    if (!ok) throw validation_error(msg);
}

} // namespace torsionlab
