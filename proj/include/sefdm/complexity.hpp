#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <iosfwd>
#include <span>

namespace sefdm {

using BigInt = boost::multiprecision::cpp_int;

/// Real-valued multiplication and addition counts for one multicarrier symbol.
struct OpCount {
  BigInt multiplications;
  BigInt additions;

  bool operator==(const OpCount&) const = default;
};

/// Full-expansion sphere decoding bound over 2N real levels:
///   mults = sum_{n=1}^{2N} 2^n (2n + 1),  adds = sum_{n=1}^{2N} 2^n (2n - 1).
OpCount sd_upper_bound_ops(int n_subcarriers);

/// (N / N_B) times the single-block bound with N replaced by N_B.
OpCount multisd_upper_bound_ops(int n_subcarriers, int block_size);

/// Radix-2 FFT: (N/2) log2 N multiplications, N log2 N additions.
OpCount fft_ops(int n_points);

/// Number of QPSK candidate vectors, 4^N = 2^(2N).
BigInt candidate_count(int n_subcarriers);

double log2_big(const BigInt& value);
double log10_big(const BigInt& value);

struct ComplexityRow {
  int n_subcarriers = 0;
  OpCount sd;
  OpCount multisd;
  OpCount fft;  // evaluated at the smallest power of two >= N
};

std::vector<ComplexityRow> complexity_sweep(std::span<const int> n_list, int block_size);

/// CSV, header "N,sd_mults_log2,multisd_mults,fft_mults,sd_adds_log2,multisd_adds,fft_adds".
void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows);

}  // namespace sefdm
