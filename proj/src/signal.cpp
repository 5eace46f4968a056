#include "cssm/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace cssm {

ChirpParams::ChirpParams(int sf, int rate, double es) : sf_(sf), n_(0), rate_(rate), es_(es) {
  if (sf < kMinSf || sf > kMaxSf) {
    throw std::invalid_argument("spreading factor must be in [6, 12], got " + std::to_string(sf));
  }
  if (rate == 0) throw std::invalid_argument("chirp rate must be non-zero");
  if (!(es > 0.0) || !std::isfinite(es)) {
    throw std::invalid_argument("symbol energy must be positive and finite");
  }
  n_ = std::size_t{1} << sf;
}

double ChirpParams::amplitude() const noexcept {
  return std::sqrt(es_ / static_cast<double>(n_));
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

Waveform raw_chirp(std::size_t n, int rate) {
  if (!is_power_of_two(n)) throw std::invalid_argument("chirp length must be a power of two");
  if (rate == 0) throw std::invalid_argument("chirp rate must be non-zero");

  // exp(j*pi*q/n) with q = |rate|*k^2 mod 2n; a negative rate conjugates,
  // so c(n, -m) is bitwise conj(c(n, m)).
  const auto period = static_cast<std::int64_t>(2 * n);
  const auto m = static_cast<std::int64_t>(rate < 0 ? -static_cast<std::int64_t>(rate) : rate) % period;
  Waveform out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<std::int64_t>(k);
    const std::int64_t q = (m * ((kk * kk) % period)) % period;
    const double phase = std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
    const double im = std::sin(phase);
    out[k] = {std::cos(phase), rate < 0 ? -im : im};
  }
  return out;
}

const Waveform& cached_chirp(std::size_t n, int rate) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, int>, std::unique_ptr<const Waveform>> cache;
  std::scoped_lock lock(mu);
  auto& slot = cache[{n, rate}];
  if (!slot) slot = std::make_unique<const Waveform>(raw_chirp(n, rate));
  return *slot;
}

Waveform circular_shift(std::span<const cplx> c, std::size_t k) {
  const std::size_t n = c.size();
  if (k > n) throw std::out_of_range("circular shift out of range");
  Waveform out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = c[(i + k) % n];
  return out;
}

Waveform dechirp(std::span<const cplx> y, int rate) {
  const auto& c = cached_chirp(y.size(), rate);
  Waveform out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] * std::conj(c[i]);
  return out;
}

namespace {

// FFTW plans are created once per (size, direction) under a lock and then
// executed concurrently through the new-array interface, which is
// thread-safe.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::scoped_lock lock(mu_);
    auto it = plans_.find({n, sign});
    if (it != plans_.end()) return it->second;
    std::vector<cplx> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("FFTW plan creation failed");
    plans_.emplace(std::make_pair(n, sign), plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

std::vector<cplx> transform(std::span<const cplx> in, int sign) {
  std::vector<cplx> out(in.size());
  if (in.empty()) return out;
  // FFTW_ESTIMATE plans never touch the input, but the interface is non-const.
  std::vector<cplx> scratch(in.begin(), in.end());
  fftw_execute_dft(plan_cache().get(in.size(), sign), reinterpret_cast<fftw_complex*>(scratch.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

std::vector<cplx> spectrum(std::span<const cplx> r) { return transform(r, FFTW_FORWARD); }

std::vector<cplx> inverse_spectrum(std::span<const cplx> spec) {
  auto out = transform(spec, FFTW_BACKWARD);
  const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= scale;
  return out;
}

double cross_rate_inner_product(std::size_t n, int m1, int m2) {
  if (!is_power_of_two(n)) throw std::invalid_argument("chirp length must be a power of two");
  if (m1 == m2) return static_cast<double>(n);
  // The product of the two chirps is itself a chirp of rate m1 - m2.
  const auto residual = raw_chirp(n, m1 - m2);
  cplx acc{0.0, 0.0};
  for (const auto& v : residual) acc += v;
  return std::abs(acc);
}

double energy(std::span<const cplx> x) noexcept {
  double e = 0.0;
  double carry = 0.0;
  for (const auto& v : x) {
    const double term = std::norm(v) - carry;
    const double next = e + term;
    carry = (next - e) - term;
    e = next;
  }
  return e;
}

}  // namespace cssm
