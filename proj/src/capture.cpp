#include "fsmre/capture.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fsmre {

BlackBoxDevice::BlackBoxDevice(std::shared_ptr<const EncodedFsm> machine, NoiseModel model,
                               std::uint64_t noise_seed, CalibrationTable calibration)
    : machine_(std::move(machine)),
      state_(0),
      model_(model),
      rng_(noise_seed),
      calibration_(std::move(calibration)) {
  if (!machine_) throw std::invalid_argument("device needs a machine");
  validate_encoding(*machine_);
  validate(model_);
  state_ = machine_->fsm.reset();
}

BitVec BlackBoxDevice::reset() {
  state_ = machine_->fsm.reset();
  return machine_->fsm.output(state_);
}

BlackBoxDevice::Response BlackBoxDevice::clock(InputVector input) {
  StepResult r = step(*machine_, state_, input);
  state_ = r.next;
  return {std::move(r.output),
          synthesize_current(static_cast<unsigned>(r.hd), model_, rng_, calibration_)};
}

std::size_t choose_vector_count(std::size_t states, unsigned input_bits, double multiplier) {
  if (states == 0) throw std::invalid_argument("state count must be at least 1");
  if (input_bits == 0) throw std::invalid_argument("input width must be at least 1");
  if (input_bits > kMaxInputBits) throw std::invalid_argument("input width above 24 bits overflows");
  if (!(multiplier >= 2.0)) throw std::invalid_argument("multiplier must be at least 2");
  double n = std::ceil(multiplier * static_cast<double>(states) * std::ldexp(1.0, input_bits));
  if (n > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    throw std::invalid_argument("vector count overflows");
  }
  return static_cast<std::size_t>(n);
}

std::vector<InputVector> gen_stimulus(std::size_t n, unsigned input_bits, std::uint64_t seed) {
  if (input_bits == 0 || input_bits > kMaxInputBits) throw std::invalid_argument("bad input width");
  Rng rng(seed);
  std::vector<InputVector> out(n);
  for (auto& v : out) v = static_cast<InputVector>(rng() >> (64 - input_bits));
  return out;
}

Trace run_trace(BlackBoxDevice& device, std::span<const InputVector> stimulus, std::uint64_t seed) {
  Trace t;
  t.input_bits = device.input_bits();
  t.output_bits = device.output_bits();
  t.seed = seed;
  t.stimulus.assign(stimulus.begin(), stimulus.end());
  t.outputs.reserve(stimulus.size() + 1);
  t.currents.reserve(stimulus.size());
  t.inferred.reserve(stimulus.size());
  t.outputs.push_back(device.reset());
  for (auto v : stimulus) {
    auto r = device.clock(v);
    t.outputs.push_back(std::move(r.output));
    t.currents.push_back(r.current);
    t.inferred.push_back(infer_hd(r.current, device.calibration()));
  }
  return t;
}

void write_trace(std::ostream& os, const Trace& trace) {
  os << trace.length() << ' ' << trace.input_bits << ' ' << trace.output_bits << ' ' << trace.seed << '\n';
  os << "reset " << trace.outputs.at(0).to_string() << '\n';
  auto old = os.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < trace.length(); ++i) {
    os << input_to_string(trace.stimulus[i], trace.input_bits) << ' ' << trace.outputs[i + 1].to_string()
       << ' ' << trace.currents[i].microamps << ' ' << trace.inferred[i].center << '\n';
  }
  os.precision(old);
}

Trace read_trace(std::istream& is) {
  Trace t;
  std::size_t n = 0;
  if (!(is >> n >> t.input_bits >> t.output_bits >> t.seed)) throw std::runtime_error("bad trace header");
  std::string tag;
  std::string bits;
  if (!(is >> tag >> bits) || tag != "reset") throw std::runtime_error("trace is missing the reset line");
  t.outputs.push_back(BitVec::parse(bits));
  for (std::size_t i = 0; i < n; ++i) {
    std::string in;
    std::string out;
    double current = 0;
    unsigned center = 0;
    if (!(is >> in >> out >> current >> center)) {
      throw std::runtime_error("trace truncated at step " + std::to_string(i + 1));
    }
    if (in.size() != t.input_bits || out.size() != t.output_bits) {
      throw std::runtime_error("trace step " + std::to_string(i + 1) + " has the wrong width");
    }
    t.stimulus.push_back(static_cast<InputVector>(BitVec::parse(in).to_uint()));
    t.outputs.push_back(BitVec::parse(out));
    t.currents.push_back({current});
    t.inferred.push_back(InferredHd::from_center(center));
  }
  return t;
}

}  // namespace fsmre
