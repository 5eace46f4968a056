#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cssm/channel.hpp"
#include "cssm/modems.hpp"
#include "oracle.hpp"

using namespace cssm;

namespace {

Waveform random_waveform(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Waveform x(n);
  for (auto& v : x) v = {g(rng), g(rng)};
  return x;
}

}  // namespace

TEST_CASE("awgn") {
  const auto x = random_waveform(1000, 1);
  Rng rng(2);
  CHECK(awgn(x, {0.0}, rng) == x);

  const std::size_t count = 1'000'000;
  const Waveform zero(count);
  Rng noise_rng(3);
  const auto w = awgn(zero, {0.37}, noise_rng);
  double re = 0.0;
  double im = 0.0;
  cplx mean = 0.0;
  for (const auto& v : w) {
    re += v.real() * v.real();
    im += v.imag() * v.imag();
    mean += v;
  }
  const double var = (re + im) / count;
  CHECK(std::abs(var - 0.37) < 0.01 * 0.37);
  CHECK(std::abs(re / count - 0.185) < 0.01 * 0.185);
  CHECK(std::abs(im / count - 0.185) < 0.01 * 0.185);
  CHECK(std::abs(mean / static_cast<double>(count)) < 5e-3);

  Rng a(99);
  Rng b(99);
  CHECK(awgn(x, {0.2}, a) == awgn(x, {0.2}, b));

  Waveform four(4);
  CHECK_THROWS_AS(add_awgn(four, {-1.0}, rng), std::invalid_argument);
}

TEST_CASE("noise injection preserves the signal component") {
  const auto x = random_waveform(4096, 4);
  Rng a(17);
  Rng b(17);
  const auto y = awgn(x, {0.5}, a);
  const auto w = awgn(Waveform(x.size()), {0.5}, b);
  for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == x[i] + w[i]);
}

TEST_CASE("doppler_from_mobility") {
  CHECK(doppler_from_mobility(0.0, 863e6) == 0.0);
  CHECK(doppler_from_mobility(3.0, 863e6) == doctest::Approx((3.0 / 3.6) * 863e6 / 2.99792458e8).epsilon(1e-12));
  CHECK(doppler_from_mobility(3.0, 863e6) == doctest::Approx(2.40).epsilon(0.005));
  CHECK(doppler_from_mobility(6.0, 863e6) == doctest::Approx(2.0 * doppler_from_mobility(3.0, 863e6)));
  CHECK_THROWS_AS(doppler_from_mobility(-1.0, 863e6), std::invalid_argument);
}

TEST_CASE("FadingSpec validation") {
  FadingSpec f;
  CHECK_NOTHROW(f.validate());
  CHECK(f.is_flat());
  f.profile = {};
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.profile = {{0, 0.0}, {0, -3.0}};
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.profile = {{2, 0.0}, {1, -3.0}};
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.profile = {{-1, 0.0}};
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.profile = {{0, 0.0}, {3, -3.0}};
  f.doppler_hz = -1.0;
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);
  f.doppler_hz = 1.0;
  f.normalize();
  const auto p = f.linear_powers();
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[0] / p[1] == doctest::Approx(std::pow(10.0, 0.3)));
  CHECK(f.impulse_length() == 4);
  CHECK_FALSE(f.is_flat());
  CHECK_THROWS_AS(realize_channel(f, 0, 1), std::invalid_argument);
}

TEST_CASE("static Rayleigh tap passes a Kolmogorov-Smirnov test") {
  FadingSpec f;  // single unit tap, zero Doppler
  const int draws = 10000;
  std::vector<double> mags;
  double power = 0.0;
  for (int s = 0; s < draws; ++s) {
    const auto h = realize_channel(f, 100, static_cast<std::uint64_t>(s));
    CHECK(h.time_invariant());
    const double m = std::abs(h.gain(0, 0));
    mags.push_back(m);
    power += m * m;
  }
  CHECK(power / draws == doctest::Approx(1.0).epsilon(0.02));
  std::sort(mags.begin(), mags.end());
  double d = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double cdf = 1.0 - std::exp(-mags[i] * mags[i]);  // Rayleigh with E|h|^2 = 1
    d = std::max({d, std::abs(cdf - static_cast<double>(i) / draws), std::abs(cdf - static_cast<double>(i + 1) / draws)});
  }
  // Asymptotic KS critical value at the 1% level.
  CHECK(d < 1.628 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("tap powers follow the profile") {
  FadingSpec f;
  f.profile = {{0, 0.0}, {2, -4.0}, {5, -9.0}};
  f.normalize();
  const auto expected = f.linear_powers();
  for (const auto mode : {FadingMode::Block, FadingMode::Continuous}) {
    f.doppler_hz = mode == FadingMode::Block ? 0.0 : 30.0;
    std::vector<double> acc(3, 0.0);
    const int runs = 10000;
    for (int s = 0; s < runs; ++s) {
      const auto h = realize_channel(f, 8, static_cast<std::uint64_t>(s) + 1000, mode);
      for (std::size_t t = 0; t < 3; ++t) acc[t] += std::norm(h.gain(t, 7));
    }
    for (std::size_t t = 0; t < 3; ++t) CHECK(acc[t] / runs == doctest::Approx(expected[t]).epsilon(0.02));
  }
}

TEST_CASE("continuous fading follows the Jakes autocorrelation") {
  FadingSpec f;
  f.doppler_hz = 10.0;
  f.sample_rate_hz = 1000.0;
  const std::size_t max_lag = 50;  // f_d * tau = 0.5
  const int runs = 3000;
  std::vector<cplx> corr(max_lag + 1);
  double power = 0.0;
  for (int s = 0; s < runs; ++s) {
    const auto h = realize_channel(f, 2 * max_lag + 1, static_cast<std::uint64_t>(s) + 77);
    for (std::size_t t0 : {std::size_t{0}, max_lag}) {
      const cplx ref = h.gain(0, t0);
      power += std::norm(ref);
      for (std::size_t lag = 0; lag <= max_lag; ++lag) corr[lag] += h.gain(0, t0 + lag) * std::conj(ref);
    }
  }
  double worst = 0.0;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    const cplx r = corr[lag] / power;
    const double expected = std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * f.doppler_hz * lag / f.sample_rate_hz);
    worst = std::max(worst, std::abs(r - expected));
  }
  CHECK(worst < 0.05);
}

TEST_CASE("long traces stay on the unit-power envelope") {
  FadingSpec f;
  f.doppler_hz = 2.4;
  const auto h = realize_channel(f, 200000, 5);
  CHECK_FALSE(h.time_invariant());
  double worst = 0.0;
  // A sum of 32 unit phasors scaled by 1/sqrt(32) never exceeds sqrt(32).
  for (std::size_t n = 0; n < h.length(); n += 997) worst = std::max(worst, std::abs(h.gain(0, n)));
  CHECK(worst <= std::sqrt(static_cast<double>(kScatterers)) + 1e-9);
}

TEST_CASE("channel realizations are seed-determined") {
  FadingSpec f;
  f.profile = {{0, 0.0}, {1, -3.0}};
  f.doppler_hz = 40.0;
  const auto a = realize_channel(f, 5000, 42);
  const auto b = realize_channel(f, 5000, 42);
  for (std::size_t t = 0; t < 2; ++t) {
    for (std::size_t n = 0; n < 5000; ++n) REQUIRE(a.gain(t, n) == b.gain(t, n));
  }
  CHECK(a.seed() == 42);

  FadingSpec flat;
  cplx cross = 0.0;
  double pa = 0.0;
  double pb = 0.0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const cplx ga = realize_channel(flat, 1, s).gain(0, 0);
    const cplx gb = realize_channel(flat, 1, s + 1).gain(0, 0);
    cross += ga * std::conj(gb);
    pa += std::norm(ga);
    pb += std::norm(gb);
  }
  CHECK(std::abs(cross) / std::sqrt(pa * pb) < 0.05);
}

TEST_CASE("apply_channel") {
  const auto x = random_waveform(300, 8);
  CHECK(apply_channel(x, ChannelRealization::fixed(std::vector<cplx>{1.0}, x.size())) == x);

  const cplx g{0.3, -0.4};
  const auto y = apply_channel(x, ChannelRealization::fixed(std::vector<cplx>{g}, x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - g * x[i]) < 1e-15);

  // Time-varying two-tap channel against the direct sum.
  FadingSpec f;
  f.profile = {{0, 0.0}, {3, -2.0}};
  f.doppler_hz = 500.0;
  const auto h = realize_channel(f, x.size(), 6);
  const auto out = apply_channel(x, h);
  for (std::size_t n = 0; n < x.size(); ++n) {
    cplx expected = h.gain(0, n) * x[n];
    if (n >= 3) expected += h.gain(1, n) * x[n - 3];
    CHECK(std::abs(out[n] - expected) < 1e-12);
  }
  const auto ir = h.impulse_response(17);
  REQUIRE(ir.size() == 4);
  CHECK(ir[0] == h.gain(0, 17));
  CHECK(ir[1] == cplx{});
  CHECK(ir[3] == h.gain(1, 17));

  CHECK_THROWS_AS(apply_channel(Waveform(301), h), std::invalid_argument);
}

TEST_CASE("cyclic prefix") {
  const auto x = random_waveform(64, 11);
  CHECK(add_cp(x, 0) == x);
  CHECK(remove_cp(x, 0) == x);
  const auto with = add_cp(x, 16);
  CHECK(with.size() == 80);
  for (std::size_t i = 0; i < 16; ++i) CHECK(with[i] == x[48 + i]);
  CHECK(remove_cp(with, 16) == x);
  CHECK_THROWS_AS(add_cp(x, 64), std::invalid_argument);
  CHECK_THROWS_AS(remove_cp(x, 64), std::invalid_argument);
}

TEST_CASE("CP turns a static channel into the circulant matrix model") {
  const std::size_t n = 64;
  const std::vector<cplx> h{{0.9, 0.1}, {0.0, -0.4}, {0.25, 0.2}};
  Eigen::MatrixXcd big_h = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < h.size(); ++l) big_h((i + l) % n, i) = h[l];
  }
  for (std::uint32_t k = 0; k < n; k += 5) {
    const auto x = css_modulate({k}, ChirpParams(6));
    const auto tx = add_cp(x, 16);
    const auto rx = remove_cp(apply_channel(tx, ChannelRealization::fixed(h, tx.size())), 16);
    const Eigen::VectorXcd expected = big_h * Eigen::Map<const Eigen::VectorXcd>(x.data(), static_cast<Eigen::Index>(n));
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(rx[i] - expected(static_cast<Eigen::Index>(i))));
    CHECK(worst < 1e-12);
    CHECK(oracle::max_abs_diff(rx, oracle::circular_convolve(x, h)) < 1e-12);
  }
}

TEST_CASE("profile loading") {
  std::istringstream text(
      "# delay_us power_db\n"
      "0.0 0.0   # direct\n"
      "\n"
      "1.9 -3.0\n"
      "4.1 -3.0\n"
      "9.0 -10.0\n");
  const auto spec = load_profile(text, 250e3, 2.4);
  REQUIRE(spec.profile.size() == 3);
  CHECK(spec.profile[0].delay_samples == 0);
  CHECK(spec.profile[1].delay_samples == 1);
  CHECK(spec.profile[2].delay_samples == 2);
  CHECK(spec.doppler_hz == 2.4);
  const double lin[] = {1.0 + std::pow(10.0, -0.3), std::pow(10.0, -0.3), 0.1};
  const double total = lin[0] + lin[1] + lin[2];
  const auto p = spec.linear_powers();
  for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(lin[i] / total).epsilon(1e-12));

  std::istringstream bad("0.0 0.0\nabc 1\n");
  CHECK_THROWS_AS(load_profile(bad, 250e3, 0.0), std::invalid_argument);
  std::istringstream extra("0.0 0.0 7\n");
  CHECK_THROWS_AS(load_profile(extra, 250e3, 0.0), std::invalid_argument);
  std::istringstream negative("-1.0 0.0\n");
  CHECK_THROWS_AS(load_profile(negative, 250e3, 0.0), std::invalid_argument);
  std::istringstream empty("# nothing\n\n");
  CHECK_THROWS_AS(load_profile(empty, 250e3, 0.0), std::invalid_argument);
  CHECK_THROWS(load_profile_file("/nonexistent/profile.txt", 250e3, 0.0));
}

TEST_CASE("TU-12 profile collapses to two taps at 250 kHz") {
  const auto spec = load_profile_file(std::string(CSSM_SOURCE_DIR) + "/data/profiles/tu12.txt", 250e3, 0.0);
  const double delays_us[] = {0.0, 0.1, 0.3, 0.5, 0.8, 1.1, 1.3, 1.7, 2.3, 3.1, 3.2, 5.0};
  const double powers_db[] = {-4.0, -3.0, 0.0, -2.6, -3.0, -5.0, -7.0, -5.0, -6.5, -8.6, -11.0, -10.0};
  double first = 0.0;
  double second = 0.0;
  for (int i = 0; i < 12; ++i) (delays_us[i] < 2.0 ? first : second) += std::pow(10.0, powers_db[i] / 10.0);
  REQUIRE(spec.profile.size() == 2);
  CHECK(spec.profile[1].delay_samples == 1);
  const auto p = spec.linear_powers();
  CHECK(p[0] == doctest::Approx(first / (first + second)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(second / (first + second)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.8748).epsilon(1e-3));

  const auto fine = load_profile_file(std::string(CSSM_SOURCE_DIR) + "/data/profiles/tu12.txt", 10e6, 0.0);
  CHECK(fine.profile.size() == 12);
}
