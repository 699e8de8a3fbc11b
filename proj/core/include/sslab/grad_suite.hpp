#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sslab {

/// One finite-difference check: an op or loss evaluated on random inputs
/// kept a safe margin away from kinks, thresholds and argmax ties.
struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

/// Central-difference validation of every tape op and every loss, including
/// compositions through the network.  All cases must come in under 1e-4.
std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed);

}  // namespace sslab
