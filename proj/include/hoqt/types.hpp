// Shared aliases, error type, and tolerance ladder.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hoqt {

using cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Two-level tolerance ladder used throughout: kTolExact for identities that
// hold to machine precision (algebraic constructions), kTolNumeric for
// quantities that accumulate roundoff through compositions.
inline constexpr double kTolExact   = 1e-12;
inline constexpr double kTolNumeric = 1e-9;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) fail(msg);
}

}  // namespace hoqt
