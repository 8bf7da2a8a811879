#pragma once

#include <stdexcept>
#include <string>

namespace qrwave {

// Regularization assumptions (3 C1 T < 2, gamma >= e^{2/C1}, gamma^2 eps <= K) not met.
class AssumptionViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical oracle detected instability or divergence.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qrwave
