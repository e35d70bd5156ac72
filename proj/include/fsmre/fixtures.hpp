#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fsmre/fsm.hpp"

namespace fsmre::fixtures {

/// Names of the embedded KISS2 benchmarks.
std::vector<std::string> names();

/// KISS2 text of an embedded benchmark; throws std::out_of_range if unknown.
std::string_view kiss2(std::string_view name);

/// Embedded benchmark loaded as a complete Moore machine.
MooreFsm load(std::string_view name);

/// Random Moore machine that is strongly connected and has no two
/// equivalent states. Deterministic in `seed`.
MooreFsm random_moore(std::size_t states, unsigned input_bits, unsigned output_bits, std::uint64_t seed);

/// Every state reaches every other state.
bool strongly_connected(const MooreFsm& m);

}  // namespace fsmre::fixtures
