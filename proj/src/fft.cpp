#include "sefdm/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace sefdm {
namespace {

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// Plans are created once per (size, sign) and reused through the new-array
// interface. Buffers always come from fftw_alloc so alignment matches the plan.
class PlanCache {
 public:
  fftw_plan get(int n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    FftwBuffer in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(n, in.data, out.data, sign, FFTW_ESTIMATE);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

CVector run(std::span<const cplx> input, int sign) {
  const auto n = input.size();
  if (n == 0) return {};
  fftw_plan plan = plan_cache().get(static_cast<int>(n), sign);
  FftwBuffer in(n), out(n);
  std::copy(input.begin(), input.end(), reinterpret_cast<cplx*>(in.data));
  fftw_execute_dft(plan, in.data, out.data);
  const auto* result = reinterpret_cast<const cplx*>(out.data);
  return CVector(result, result + n);
}

}  // namespace

CVector fft_forward(std::span<const cplx> input) { return run(input, FFTW_FORWARD); }

CVector fft_inverse(std::span<const cplx> input) { return run(input, FFTW_BACKWARD); }

}  // namespace sefdm
