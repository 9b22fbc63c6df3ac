#pragma once

#include <stdexcept>
#include <string>

namespace frechet {

/// Malformed input: bad parameters, mismatched sizes, out-of-range probabilities.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Well-formed input for which the requested construction does not exist
/// (e.g. pairwise countermonotonicity without a compatible marginal tuple).
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace frechet
