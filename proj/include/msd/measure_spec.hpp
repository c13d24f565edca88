#pragma once

#include <string>
#include <string_view>

#include "msd/measures.hpp"

namespace msd {

// Text form of a measure:
//   mix:w@mean@var[,w@mean@var...]   e.g. mix:0.5@-1@0,0.5@1@0
//   unif:a,b                         e.g. unif:-1,1
// Numbers are parsed locale-independently. Errors are std::invalid_argument
// naming the offending token and its character offset.
Measure parse_measure(std::string_view spec);

/// Inverse of parse_measure with round-trip exact numbers. ScaledNoised has
/// no text form and throws std::invalid_argument.
std::string format_measure(const Measure& m);

}  // namespace msd
