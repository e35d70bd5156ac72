#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <vector>

#include "fsmre/fsm.hpp"
#include "fsmre/side_channel.hpp"

namespace fsmre {

/// A sequential circuit seen from the outside: it can be reset and clocked
/// with an input vector, and each clock yields an output vector and one
/// average-current sample. The state and its encoding stay hidden.
class BlackBoxDevice {
 public:
  struct Response {
    BitVec output;
    CurrentSample current;
  };

  BlackBoxDevice(std::shared_ptr<const EncodedFsm> machine, NoiseModel model, std::uint64_t noise_seed,
                 CalibrationTable calibration = default_calibration());

  /// Returns the device to its reset state and reports that state's output.
  BitVec reset();
  /// Throws FsmError if `input` does not fit in input_bits().
  Response clock(InputVector input);

  unsigned input_bits() const { return machine_->fsm.input_bits(); }
  unsigned output_bits() const { return machine_->fsm.output_bits(); }
  const NoiseModel& noise() const { return model_; }
  const CalibrationTable& calibration() const { return calibration_; }

 private:
  std::shared_ptr<const EncodedFsm> machine_;
  StateId state_;
  NoiseModel model_;
  Rng rng_;
  CalibrationTable calibration_;
};

/// One capture round: N inputs, N + 1 outputs (outputs[0] is the reset
/// state's), and one current sample plus its HD reading per clock.
struct Trace {
  unsigned input_bits = 0;
  unsigned output_bits = 0;
  std::uint64_t seed = 0;
  std::vector<InputVector> stimulus;
  std::vector<BitVec> outputs;
  std::vector<CurrentSample> currents;
  std::vector<InferredHd> inferred;

  std::size_t length() const { return stimulus.size(); }
};

/// ceil(multiplier * X * 2^I). Throws std::invalid_argument for X = 0,
/// I = 0, I > 24, or multiplier < 2.
std::size_t choose_vector_count(std::size_t states, unsigned input_bits, double multiplier = 2.0);

/// n uniform I-bit vectors from a generator seeded with `seed`.
std::vector<InputVector> gen_stimulus(std::size_t n, unsigned input_bits, std::uint64_t seed);

/// Resets the device, records outputs[0], then clocks once per input.
Trace run_trace(BlackBoxDevice& device, std::span<const InputVector> stimulus, std::uint64_t seed = 0);

/// Text form: header `N I O seed`, a `reset <O_0>` line, then one line per
/// step: `input output current inferred_center`.
void write_trace(std::ostream& os, const Trace& trace);
Trace read_trace(std::istream& is);

}  // namespace fsmre
