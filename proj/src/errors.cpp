#include "gfbm/errors.hpp"

#include <sstream>

namespace gfbm {

namespace {

std::string describe(const std::vector<OutOfRange>& violations) {
  std::ostringstream out;
  out << "invalid parameters:";
  for (const auto& v : violations) {
    out << ' ' << v.field << '=' << v.value << " not in " << v.allowed << ';';
  }
  return out.str();
}

}  // namespace

ParamError::ParamError(std::vector<OutOfRange> violations)
    : Error(describe(violations)), violations_(std::move(violations)) {}

NoConvergence::NoConvergence(std::size_t evaluations, double best_estimate,
                             const std::string& what)
    : NumericalError(what), evaluations_(evaluations), best_estimate_(best_estimate) {}

}  // namespace gfbm
