#pragma once

#include <stdexcept>
#include <string>

namespace lpsim {

// Non-finite numeric input (NaN/Inf) where a finite value is required.
class invalid_input_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Tensor shape or dimension mismatch.
class shape_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Number format parameters outside their legal ranges.
class format_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Operation does not support the requested format.
class unsupported_format_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Representable-set enumeration would exceed the configured cap.
class too_large_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid value produced during a tensor operation (e.g. division by zero)
// while validation is enabled.
class invalid_value_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Quantizer injection applied to a model that already has quantizers.
class injection_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Backward pass called with a cache that does not match the model.
class stale_cache_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace lpsim
