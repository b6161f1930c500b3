#ifndef DSTPROF_ERRORS_HPP
#define DSTPROF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dstprof {

// Exit-code mapping used by the CLI: DomainError and its siblings -> 2,
// PrecisionExhausted / NoConvergence -> 3, CapExceeded -> 4.

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct PrecisionExhausted : std::runtime_error {
    explicit PrecisionExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct CapExceeded : std::runtime_error {
    explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

struct BitExhausted : std::runtime_error {
    explicit BitExhausted(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateVariance : std::runtime_error {
    explicit DegenerateVariance(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dstprof

#endif
