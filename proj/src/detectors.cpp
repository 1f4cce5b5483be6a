#include "sefdm/detectors.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "sefdm/fft.hpp"

namespace sefdm {
namespace {

constexpr double kQpskLevel = 0.70710678118654752440;

const std::array<cplx, 4> kQpskPoints = {cplx(kQpskLevel, kQpskLevel), cplx(-kQpskLevel, kQpskLevel),
                                         cplx(kQpskLevel, -kQpskLevel), cplx(-kQpskLevel, -kQpskLevel)};

void check_frame(const IqFrame& frame, const WaveformConfig& cfg) {
  if (static_cast<int>(frame.samples.size()) != cfg.frame_len()) {
    throw InvalidInput("frame has " + std::to_string(frame.samples.size()) + " samples, receiver expects " +
                       std::to_string(cfg.frame_len()));
  }
}

class SchnorrEuchner {
 public:
  SchnorrEuchner(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, double level)
      : r_(r), y_(y), level_(level), x_(Eigen::VectorXd::Zero(r.cols())) {}

  SearchResult run(RadiusPolicy policy) {
    const auto dim = r_.cols();
    best_metric_ = std::numeric_limits<double>::infinity();
    radius_ = best_metric_;
    if (dim == 0) return {Eigen::VectorXd(0), 0.0, 0};
    if (policy == RadiusPolicy::Babai) {
      best_ = babai_point();
      best_metric_ = (y_ - r_ * best_).squaredNorm();
      // Slack so the Babai leaf itself survives rounding in the partial sums.
      radius_ = best_metric_ + 1e-10 * (y_.squaredNorm() + best_metric_) + 1e-300;
    }
    descend(static_cast<int>(dim) - 1, 0.0);
    return {best_, best_metric_, visited_};
  }

 private:
  // Rounded zero-forcing solution: slice(R^{-1} y).
  Eigen::VectorXd babai_point() const {
    Eigen::VectorXd zf = r_.triangularView<Eigen::Upper>().solve(y_);
    for (Eigen::Index i = 0; i < zf.size(); ++i) zf[i] = zf[i] < 0.0 ? -level_ : level_;
    return zf;
  }

  void descend(int i, double ped) {
    double centre_num = y_[i];
    for (Eigen::Index j = i + 1; j < r_.cols(); ++j) centre_num -= r_(i, j) * x_[j];
    const double rii = r_(i, i);
    // Closest child first: the sign of the unconstrained estimate centre_num / rii.
    const double first = centre_num < 0.0 ? -level_ : level_;
    for (const double candidate : {first, -first}) {
      const double e = centre_num - rii * candidate;
      const double child_ped = ped + e * e;
      if (child_ped > radius_) break;
      ++visited_;
      x_[i] = candidate;
      if (i == 0) {
        if (child_ped < best_metric_) {
          best_metric_ = child_ped;
          best_ = x_;
          radius_ = child_ped;
        }
      } else {
        descend(i - 1, child_ped);
      }
    }
  }

  const Eigen::MatrixXd& r_;
  const Eigen::VectorXd& y_;
  double level_;
  Eigen::VectorXd x_;
  Eigen::VectorXd best_;
  double best_metric_ = 0.0;
  double radius_ = 0.0;
  std::uint64_t visited_ = 0;
};

SymbolVector symbols_from_real(const Eigen::VectorXd& x) {
  const auto n = x.size() / 2;
  SymbolVector s(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = cplx(x[i], x[i + n]);
  return s;
}

// Exhaustive search in sample space, independent of the QR path.
class Exhaustive {
 public:
  Exhaustive(const Eigen::MatrixXcd& carriers, std::span<const cplx> samples)
      : carriers_(carriers),
        residual_(Eigen::Map<const Eigen::VectorXcd>(samples.data(), static_cast<Eigen::Index>(samples.size()))),
        current_(static_cast<std::size_t>(carriers.cols())) {}

  SymbolVector run() {
    recurse(0);
    return best_;
  }

 private:
  void recurse(Eigen::Index n) {
    if (n == carriers_.cols()) {
      const double metric = residual_.squaredNorm();
      if (metric < best_metric_) {
        best_metric_ = metric;
        best_ = current_;
      }
      return;
    }
    for (const auto& point : kQpskPoints) {
      residual_ -= carriers_.col(n) * point;
      current_[static_cast<std::size_t>(n)] = point;
      recurse(n + 1);
      residual_ += carriers_.col(n) * point;
    }
  }

  const Eigen::MatrixXcd& carriers_;
  Eigen::VectorXcd residual_;
  SymbolVector current_;
  SymbolVector best_;
  double best_metric_ = std::numeric_limits<double>::infinity();
};

std::uint64_t pow4(int n) { return std::uint64_t{1} << (2 * n); }

}  // namespace

std::string_view to_string(DetectorId id) {
  switch (id) {
    case DetectorId::MF: return "MF";
    case DetectorId::ML: return "ML";
    case DetectorId::SD: return "SD";
    case DetectorId::MultiSD: return "MultiSD";
  }
  return "?";
}

DetectorId detector_from_string(std::string_view name) {
  if (name == "MF" || name == "mf") return DetectorId::MF;
  if (name == "ML" || name == "ml") return DetectorId::ML;
  if (name == "SD" || name == "sd") return DetectorId::SD;
  if (name == "MultiSD" || name == "multisd") return DetectorId::MultiSD;
  throw InvalidInput("unknown detector '" + std::string(name) + "'");
}

RadiusPolicy radius_policy_from_string(std::string_view name) {
  if (name == "babai") return RadiusPolicy::Babai;
  if (name == "unbounded") return RadiusPolicy::Unbounded;
  throw InvalidInput("unknown radius policy '" + std::string(name) + "'");
}

ObservationModel::ObservationModel(Eigen::MatrixXcd carriers) : carriers_(std::move(carriers)) {
  const auto rows = carriers_.rows();
  const auto cols = carriers_.cols();
  Eigen::MatrixXd h(2 * rows, 2 * cols);
  h.topLeftCorner(rows, cols) = carriers_.real();
  h.topRightCorner(rows, cols) = -carriers_.imag();
  h.bottomLeftCorner(rows, cols) = carriers_.imag();
  h.bottomRightCorner(rows, cols) = carriers_.real();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(h);
  r_ = qr.matrixQR().topRows(2 * cols).triangularView<Eigen::Upper>();
  q_ = qr.householderQ() * Eigen::MatrixXd::Identity(2 * rows, 2 * cols);
  for (Eigen::Index i = 0; i < r_.rows(); ++i) {
    if (r_(i, i) < 0.0) {
      r_.row(i) *= -1.0;
      q_.col(i) *= -1.0;
    }
  }
}

Eigen::VectorXd ObservationModel::project(std::span<const cplx> samples) const {
  const auto rows = carriers_.rows();
  if (static_cast<Eigen::Index>(samples.size()) != rows) throw InvalidInput("observation length mismatch");
  Eigen::VectorXd y(2 * rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    y[k] = samples[static_cast<std::size_t>(k)].real();
    y[k + rows] = samples[static_cast<std::size_t>(k)].imag();
  }
  return q_.transpose() * y;
}

SearchResult sphere_search(const Eigen::MatrixXd& r, const Eigen::VectorXd& y, double level, RadiusPolicy policy) {
  if (r.rows() != r.cols() || r.rows() != y.size()) throw InvalidInput("sphere_search dimension mismatch");
  return SchnorrEuchner(r, y, level).run(policy);
}

CVector matched_filter_demod(const IqFrame& frame, const WaveformConfig& cfg) {
  check_frame(frame, cfg);
  const double ifft_len = cfg.ifft_len();
  const double frame_len = cfg.frame_len();
  const auto n = static_cast<std::size_t>(cfg.n_subcarriers());

  if (!cfg.band_plan()) {
    // Phi^H y [n] = ifft_len^{-1/2} sum_k y_k e^{-j 2 pi n k / ifft_len}
    CVector padded(static_cast<std::size_t>(cfg.ifft_len()), cplx{});
    std::copy(frame.samples.begin(), frame.samples.end(), padded.begin());
    CVector spectrum = fft_forward(padded);
    spectrum.resize(n);
    const double scale = std::sqrt(ifft_len) / frame_len;
    for (auto& z : spectrum) z *= scale;
    return spectrum;
  }

  const Eigen::MatrixXcd phi = carrier_matrix(cfg);
  const Eigen::Map<const Eigen::VectorXcd> y(frame.samples.data(), static_cast<Eigen::Index>(frame.samples.size()));
  const Eigen::VectorXcd z = (ifft_len / frame_len) * (phi.adjoint() * y);
  return CVector(z.data(), z.data() + z.size());
}

Receiver::Receiver(const WaveformConfig& cfg, DetectorId id, RadiusPolicy policy, int cancellation_passes)
    : cfg_(cfg), id_(id), policy_(policy), cancellation_passes_(cancellation_passes) {
  const int n = cfg.n_subcarriers();
  if (cancellation_passes < 0) throw InvalidInput("cancellation_passes must be nonnegative");
  switch (id) {
    case DetectorId::MF:
      if (cfg.band_plan()) carriers_ = carrier_matrix(cfg);
      return;
    case DetectorId::ML:
      if (n > kMaxMlSubcarriers) {
        throw CapacityError("ML detection of " + std::to_string(n) + " subcarriers exceeds the limit of " +
                            std::to_string(kMaxMlSubcarriers) + " (4^N candidates)");
      }
      carriers_ = carrier_matrix(cfg);
      return;
    case DetectorId::SD:
      if (n > kMaxSdSubcarriers) {
        throw CapacityError("SD of " + std::to_string(n) + " subcarriers exceeds the limit of " +
                            std::to_string(kMaxSdSubcarriers));
      }
      break;
    case DetectorId::MultiSD:
      if (!cfg.band_plan()) throw InvalidInput("MultiSD requires a band plan");
      if (cfg.band_plan()->band_size > kMaxMultiSdBandSize) {
        throw CapacityError("MultiSD band size " + std::to_string(cfg.band_plan()->band_size) +
                            " exceeds the limit of " + std::to_string(kMaxMultiSdBandSize));
      }
      break;
  }
  carriers_ = carrier_matrix(cfg);
  blocks_ = build_blocks(carriers_);
}

std::vector<ObservationModel> Receiver::build_blocks(const Eigen::MatrixXcd& carriers) const {
  std::vector<ObservationModel> blocks;
  if (id_ == DetectorId::SD) {
    blocks.emplace_back(carriers);
  } else if (id_ == DetectorId::MultiSD) {
    const int size = cfg_.band_plan()->band_size;
    for (int b = 0; b < cfg_.band_plan()->n_bands; ++b) blocks.emplace_back(carriers.middleCols(b * size, size));
  }
  return blocks;
}

DetectionResult Receiver::detect(const IqFrame& frame) const { return detect_with(frame, carriers_, blocks_, {}); }

DetectionResult Receiver::detect(const IqFrame& frame, std::span<const cplx> carrier_gains) const {
  if (static_cast<int>(carrier_gains.size()) != cfg_.n_subcarriers()) {
    throw InvalidInput("one channel gain per subcarrier required");
  }
  if (id_ == DetectorId::MF) return detect_with(frame, carriers_, blocks_, carrier_gains);
  const Eigen::Map<const Eigen::VectorXcd> g(carrier_gains.data(), static_cast<Eigen::Index>(carrier_gains.size()));
  const Eigen::MatrixXcd scaled = carriers_ * g.asDiagonal();
  return detect_with(frame, scaled, build_blocks(scaled), carrier_gains);
}

DetectionResult Receiver::detect_with(const IqFrame& frame, const Eigen::MatrixXcd& carriers,
                                      const std::vector<ObservationModel>& blocks,
                                      std::span<const cplx> carrier_gains) const {
  check_frame(frame, cfg_);
  DetectionResult result;
  result.detector = id_;
  result.alpha_used = cfg_.alpha_effective();

  switch (id_) {
    case DetectorId::MF: {
      CVector z;
      if (cfg_.band_plan()) {
        const Eigen::Map<const Eigen::VectorXcd> y(frame.samples.data(),
                                                   static_cast<Eigen::Index>(frame.samples.size()));
        const double scale = static_cast<double>(cfg_.ifft_len()) / cfg_.frame_len();
        const Eigen::VectorXcd zz = scale * (carriers_.adjoint() * y);
        z.assign(zz.data(), zz.data() + zz.size());
      } else {
        z = matched_filter_demod(frame, cfg_);
      }
      for (std::size_t n = 0; n < carrier_gains.size(); ++n) z[n] /= carrier_gains[n];
      result.symbols = qpsk_slice(z);
      break;
    }
    case DetectorId::ML:
      result.symbols = Exhaustive(carriers, frame.samples).run();
      result.visited_nodes = pow4(cfg_.n_subcarriers());
      break;
    case DetectorId::SD:
      result.symbols = search_block(blocks.front(), frame.samples, result.visited_nodes);
      break;
    case DetectorId::MultiSD:
      result.symbols = detect_bands(carriers, blocks, frame.samples, result.visited_nodes);
      break;
  }
  result.bits = qpsk_demap_hard(result.symbols);
  return result;
}

SymbolVector Receiver::search_block(const ObservationModel& block, std::span<const cplx> samples,
                                    std::uint64_t& visited) const {
  const Eigen::VectorXd y = block.project(samples);
  const SearchResult found = sphere_search(block.r(), y, kQpskLevel, policy_);
  visited += found.visited_nodes;
  return symbols_from_real(found.x);
}

SymbolVector Receiver::detect_bands(const Eigen::MatrixXcd& carriers, const std::vector<ObservationModel>& blocks,
                                    std::span<const cplx> samples, std::uint64_t& visited) const {
  const auto size = static_cast<Eigen::Index>(cfg_.band_plan()->band_size);
  const Eigen::Map<const Eigen::VectorXcd> y(samples.data(), static_cast<Eigen::Index>(samples.size()));
  Eigen::VectorXcd s(carriers.cols());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const SymbolVector part = search_block(blocks[b], samples, visited);
    s.segment(static_cast<Eigen::Index>(b) * size, size) = Eigen::Map<const Eigen::VectorXcd>(part.data(), size);
  }

  for (int pass = 0; pass < cancellation_passes_ && blocks.size() > 1; ++pass) {
    // Every band sees the others' previous decisions, so band order does not matter.
    const Eigen::VectorXcd residual = y - carriers * s;
    Eigen::VectorXcd next(s.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const Eigen::Index first = static_cast<Eigen::Index>(b) * size;
      const Eigen::VectorXcd own = residual + carriers.middleCols(first, size) * s.segment(first, size);
      const SymbolVector part = search_block(blocks[b], std::span<const cplx>(own.data(), own.size()), visited);
      next.segment(first, size) = Eigen::Map<const Eigen::VectorXcd>(part.data(), size);
    }
    const bool settled = next == s;
    s = next;
    if (settled) break;
  }
  return SymbolVector(s.data(), s.data() + s.size());
}

DetectionResult mf_hard_detect(const IqFrame& frame, const WaveformConfig& cfg) {
  return Receiver(cfg, DetectorId::MF).detect(frame);
}

DetectionResult ml_detect(const IqFrame& frame, const WaveformConfig& cfg) {
  return Receiver(cfg, DetectorId::ML).detect(frame);
}

DetectionResult sphere_detect(const IqFrame& frame, const WaveformConfig& cfg, RadiusPolicy policy) {
  return Receiver(cfg, DetectorId::SD, policy).detect(frame);
}

DetectionResult multisd_detect(const IqFrame& frame, const WaveformConfig& cfg, RadiusPolicy policy,
                               int cancellation_passes) {
  return Receiver(cfg, DetectorId::MultiSD, policy, cancellation_passes).detect(frame);
}

}  // namespace sefdm
