#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sefdm {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using Bits = std::vector<std::uint8_t>;

/// QPSK symbols, one per subcarrier, unit average energy.
using SymbolVector = CVector;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a detector is asked to search a problem above its size guard.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FrameMeta {
  double alpha_effective = 1.0;
  int n_subcarriers = 0;
  int oversampling = 1;
  std::optional<double> es_n0_db;
  std::optional<int> class_label;
  std::uint64_t rng_seed = 0;
};

/// One multicarrier symbol of complex baseband samples (N * oversampling).
struct IqFrame {
  CVector samples;
  FrameMeta meta;
};

}  // namespace sefdm
