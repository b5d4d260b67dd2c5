#pragma once

#include <stdexcept>
#include <string>

namespace gearopt {

// Failure categories. The CLI maps these onto process exit codes, the
// library throws them as gearopt::Error.
enum class errc {
  config,                    // malformed or inconsistent configuration/input file
  singular_system,           // linear solve pivot below threshold
  infeasible,                // data admits no valid model, candidate or operating point
  no_interior_maximum,       // requested peak of a curve that has none
  undefined_operating_point, // efficiency queried at zero mechanical power
  closed_form_degenerate,    // analytic root failed its residual validation
  numeric_validation,        // independent solvers disagree beyond tolerance
};

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace gearopt
