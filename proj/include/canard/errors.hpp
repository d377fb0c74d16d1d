#pragma once

#include <stdexcept>

namespace canard {

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace canard
