#pragma once

#include <stdexcept>
#include <string>

namespace dpobs {

// Error taxonomy mirrors the CLI exit-code contract:
//   domain/input problems -> 1, infeasible/unstable -> 2, solver failure -> 3.

/// Invalid input: bad dimensions, out-of-domain parameters, malformed files.
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix required to have full row rank does not.
class rank_error : public domain_error {
 public:
  explicit rank_error(const std::string& what) : domain_error(what) {}
};

/// A contraction hypothesis fails (e.g. the observer error dynamics are not
/// a contraction), so the requested quantity is undefined.
class stability_error : public std::runtime_error {
 public:
  explicit stability_error(const std::string& what) : std::runtime_error(what) {}
};

/// The constraint set is empty (or could not be reached by projection).
class infeasible_error : public std::runtime_error {
 public:
  explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative method hit its iteration cap without converging.
class convergence_error : public std::runtime_error {
 public:
  explicit convergence_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dpobs
