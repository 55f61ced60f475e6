#ifndef MOUSTACHE_ERROR_HPP
#define MOUSTACHE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace moustache {

// Mirrors the msc_status codes of the C API one-to-one.
enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  io = 3,
  halving_exhausted = 4,
  non_finite = 5,
  drift_underflow = 6,
  phase_thrash = 7,
  empty_source = 8,
  too_few_samples = 9,
  internal = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace moustache

#endif
