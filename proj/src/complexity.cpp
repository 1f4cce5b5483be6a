#include "sefdm/complexity.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "sefdm/types.hpp"

namespace sefdm {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(int n) {
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  return bits;
}

}  // namespace

OpCount sd_upper_bound_ops(int n_subcarriers) {
  if (n_subcarriers < 1) throw InvalidInput("sd_upper_bound_ops needs N >= 1");
  // Closed forms of the two sums over n = 1..L, L = 2N:
  //   sum n 2^n = (L - 1) 2^{L+1} + 2,   sum 2^n = 2^{L+1} - 2.
  const int levels = 2 * n_subcarriers;
  const BigInt pow_next = BigInt(1) << (levels + 1);
  const BigInt weighted = BigInt(levels - 1) * pow_next + 2;
  const BigInt plain = pow_next - 2;
  return OpCount{2 * weighted + plain, 2 * weighted - plain};
}

OpCount multisd_upper_bound_ops(int n_subcarriers, int block_size) {
  if (block_size < 1 || n_subcarriers < 1) throw InvalidInput("multisd_upper_bound_ops needs positive sizes");
  if (n_subcarriers % block_size != 0) throw InvalidInput("N must be divisible by the block size");
  const OpCount block = sd_upper_bound_ops(block_size);
  const int blocks = n_subcarriers / block_size;
  return OpCount{block.multiplications * blocks, block.additions * blocks};
}

OpCount fft_ops(int n_points) {
  if (!is_power_of_two(n_points)) throw InvalidInput("fft_ops needs a power-of-two size");
  const int stages = log2_exact(n_points);
  return OpCount{BigInt(n_points / 2) * stages, BigInt(n_points) * stages};
}

BigInt candidate_count(int n_subcarriers) { return BigInt(1) << (2 * n_subcarriers); }

double log2_big(const BigInt& value) {
  if (value <= 0) return -INFINITY;
  const auto top = boost::multiprecision::msb(value);
  // Keep 53 significant bits for the mantissa.
  const unsigned shift = top > 52 ? static_cast<unsigned>(top - 52) : 0u;
  const BigInt head = value >> shift;
  return std::log2(head.convert_to<double>()) + static_cast<double>(shift);
}

double log10_big(const BigInt& value) { return log2_big(value) * std::log10(2.0); }

std::vector<ComplexityRow> complexity_sweep(std::span<const int> n_list, int block_size) {
  std::vector<ComplexityRow> rows;
  rows.reserve(n_list.size());
  for (int n : n_list) {
    int fft_size = 1;
    while (fft_size < n) fft_size <<= 1;
    rows.push_back(ComplexityRow{n, sd_upper_bound_ops(n), multisd_upper_bound_ops(n, block_size),
                                 fft_ops(std::max(fft_size, 2))});
  }
  return rows;
}

void write_complexity_csv(std::ostream& out, std::span<const ComplexityRow> rows) {
  out << "N,sd_mults_log2,multisd_mults,fft_mults,sd_adds_log2,multisd_adds,fft_adds\n";
  char buf[64];
  for (const auto& row : rows) {
    out << row.n_subcarriers << ',';
    std::snprintf(buf, sizeof buf, "%.6f", log2_big(row.sd.multiplications));
    out << buf << ',' << row.multisd.multiplications << ',' << row.fft.multiplications << ',';
    std::snprintf(buf, sizeof buf, "%.6f", log2_big(row.sd.additions));
    out << buf << ',' << row.multisd.additions << ',' << row.fft.additions << '\n';
  }
}

}  // namespace sefdm
