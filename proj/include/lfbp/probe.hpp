#pragma once

#include <stdexcept>
#include <string>

#include "lfbp/typespace.hpp"

namespace lfbp {

class ProbeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A named test function w(y). y is the real type, or the state index for
/// the finite family.
struct Probe {
  std::string source;
  TestFunction fn;
  /// False for indicators, whose jumps defeat nested quadrature.
  bool smooth = true;
  double operator()(double y) const { return fn(TypePoint::real(y)); }
};

/// Probe forms:
///   const            w = 1
///   const:C          w = C
///   exp:THETA        w = exp(-THETA y)
///   ind:A:B          w = 1 on [A, B], 0 elsewhere
///   expr:FORMULA     arithmetic over y with + - * / ^, parentheses, the
///                    constants pi and e, and exp log sqrt abs sin cos tanh
///                    min max.
Probe parse_probe(const std::string& text);

/// Generation-n functionals of the exponential family are nested integrals;
/// an indicator there refines without end, so it is refused up front.
void require_nested_integrable(const Probe& probe, const Triplet& triplet);

/// The compiled formula alone, for reuse outside probes.
std::function<double(double)> compile_expression(const std::string& formula);

}  // namespace lfbp
