#include <doctest.h>

#include <cmath>
#include <complex>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stoq/adiabatic.hpp"
#include "stoq/signal.hpp"

using namespace stoq;
using namespace stoq::signal;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> sine(double f, double fs, double duration, double amp = 1.0, double phase = 0.0) {
    const auto n = static_cast<std::size_t>(std::llround(duration * fs));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = amp * std::sin(2.0 * pi * f * static_cast<double>(i) / fs + phase);
    return v;
}

// amplitude of the f component over samples [from, n), by least squares on sin and cos
double tone_amplitude(const std::vector<double>& v, double f, double fs, std::size_t from) {
    double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) {
        const double s = std::sin(2.0 * pi * f * static_cast<double>(i) / fs);
        const double c = std::cos(2.0 * pi * f * static_cast<double>(i) / fs);
        ss += s * s, sc += s * c, cc += c * c, ys += v[i] * s, yc += v[i] * c;
    }
    const double det = ss * cc - sc * sc;
    const double a = (ys * cc - yc * sc) / det;
    const double b = (yc * ss - ys * sc) / det;
    return std::hypot(a, b);
}

// bilinear-transformed second-order Butterworth magnitude
double butter2_magnitude(double f, double fc, double fs) {
    const double r = std::tan(pi * f / fs) / std::tan(pi * fc / fs);
    return 1.0 / std::sqrt(1.0 + r * r * r * r);
}

Signal raw(std::vector<double> v, double fs) {
    Signal s;
    s.fs = fs;
    s.samples = std::move(v);
    return s;
}

std::vector<double> white(std::size_t n, double sd, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, sd);
    std::vector<double> v(n);
    for (double& x : v) x = nd(gen);
    return v;
}

}  // namespace

TEST_CASE("ingest: real input is only mean-subtracted") {
    std::stringstream ss("value\n1\n2\n4\n5\n");
    const auto s = ingest_iq(ss, 2.0);
    CHECK(s.fs == 2.0);
    CHECK(s.samples == std::vector<double>{-2.0, -1.0, 1.0, 2.0});
    CHECK(s.iq.empty());
}

TEST_CASE("ingest: rotated IQ oscillation lands in the real quadrature") {
    const double f = 0.2, fs = 10.0, phi0 = 0.83;
    const auto s0 = sine(f, fs, 50.0, 1.0, 0.3);
    std::ostringstream csv;
    csv << "I,Q\n";
    for (double v : s0) {
        const auto z = std::polar(1.0, phi0) * v;
        csv << std::setprecision(17) << z.real() << ',' << z.imag() << '\n';
    }
    std::istringstream is(csv.str());
    const auto s = ingest_iq(is, fs);
    const double m = oracle::mean(s0);
    double plus = 0.0, minus = 0.0, resid = 0.0;
    for (std::size_t i = 0; i < s0.size(); ++i) {
        plus += std::pow(s.samples[i] - (s0[i] - m), 2);
        minus += std::pow(s.samples[i] + (s0[i] - m), 2);
        // |centered IQ|^2 minus the real part carried by the output
        resid += std::max(0.0, std::norm(std::polar(1.0, phi0) * (s0[i] - m)) - s.samples[i] * s.samples[i]);
    }
    const double n = static_cast<double>(s0.size());
    CHECK(std::sqrt(std::min(plus, minus) / n) < 1e-6);
    CHECK(std::sqrt(resid / n) < 1e-6);
    CHECK(s.warnings.empty());
    CHECK(s.iq.size() == s0.size());
}

TEST_CASE("ingest errors") {
    std::istringstream zeros("0,0\n0,0\n0,0\n");
    CHECK_THROWS_WITH_AS(ingest_iq(zeros, 1.0), "no spectral peak", Error);
    std::istringstream flat("3\n3\n3\n");
    CHECK_THROWS_WITH_AS(ingest_iq(flat, 1.0), "no spectral peak", Error);
    std::istringstream bad("I,Q\n1,2\n3,x\n");
    try {
        ingest_iq(bad, 1.0);
        FAIL("malformed row accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(ingest_iq(empty, 1.0), Error);
    std::istringstream three("1,2,3\n");
    CHECK_THROWS_AS(ingest_iq(three, 1.0), Error);
    CHECK_THROWS_AS(ingest_real({1.0, std::nan("")}, 1.0), Error);
    CHECK_THROWS_AS(ingest_real({1.0, 2.0}, 0.0), Error);
}

TEST_CASE("butter2 magnitude response") {
    const double fs = 100.0, fc = 1.0;
    SUBCASE("coefficients match the analytic response") {
        const auto c = butter2_coefficients(fc, fs);
        for (double f : {0.0, 0.3, 1.0, 4.0, 10.0, 30.0}) {
            CHECK(butter2_gain(c, f, fs) == doctest::Approx(butter2_magnitude(f, fc, fs)).epsilon(1e-9));
        }
    }
    SUBCASE("sine at fc") {
        const auto out = butter2_lowpass(raw(sine(fc, fs, 60.0), fs), fc);
        const double ratio = tone_amplitude(out.samples, fc, fs, 1000);
        CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.02));
    }
    SUBCASE("sine at 10 fc") {
        const auto out = butter2_lowpass(raw(sine(10.0 * fc, fs, 30.0), fs), fc);
        const double ratio = tone_amplitude(out.samples, 10.0 * fc, fs, 1000);
        CHECK(-20.0 * std::log10(ratio) >= 38.0);
    }
    SUBCASE("DC gain") {
        const auto out = butter2_lowpass(raw(std::vector<double>(5000, 2.5), fs), fc);
        CHECK(std::abs(out.samples.back() - 2.5) < 2.5e-9);
    }
    SUBCASE("cutoff range") {
        CHECK_THROWS_AS(butter2_lowpass(raw(std::vector<double>(10, 0.0), fs), 0.0), Error);
        CHECK_THROWS_AS(butter2_lowpass(raw(std::vector<double>(10, 0.0), fs), 50.0), Error);
    }
}

TEST_CASE("butter2 is linear and deterministic") {
    const double fs = 20.0;
    const auto x = white(4000, 1.0, 1);
    const auto y = white(4000, 2.0, 2);
    std::vector<double> mix(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) mix[i] = 0.7 * x[i] - 1.9 * y[i];
    const auto fx = butter2_lowpass(raw(x, fs), 0.8);
    const auto fy = butter2_lowpass(raw(y, fs), 0.8);
    const auto fm = butter2_lowpass(raw(mix, fs), 0.8);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        worst = std::max(worst, std::abs(fm.samples[i] - (0.7 * fx.samples[i] - 1.9 * fy.samples[i])));
    }
    CHECK(worst < 1e-9);
    CHECK(butter2_lowpass(raw(x, fs), 0.8).samples == fx.samples);
}

TEST_CASE("binarize_and_periods") {
    SUBCASE("clean sine") {
        const double fs = 100.0;
        const auto c = binarize_and_periods(raw(sine(0.2, fs, 50.0), fs));
        REQUIRE(c.periods.periods.size() >= 8);
        for (double p : c.periods.periods) CHECK(std::abs(p - 5.0) < 1.0 / fs);
        CHECK(c.binary.size() == 5000);
    }
    SUBCASE("constant signal") {
        const auto c = binarize_and_periods(raw(std::vector<double>(100, 1.0), 10.0));
        CHECK(c.periods.empty());
        CHECK(c.periods.warnings.size() == 1);
        // sign(0) := +1 after mean subtraction
        for (int b : c.binary) CHECK(b == 1);
    }
    SUBCASE("noisy sine after the low-pass") {
        const double f = 0.2, fs = 100.0, duration = 1000.0;
        auto v = sine(f, fs, duration);
        // unit amplitude sine has power 1/2; 10 dB SNR puts the noise at 0.05
        const auto noise = white(v.size(), std::sqrt(0.05), 3);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise[i];
        const auto c = binarize_and_periods(butter2_lowpass(raw(v, fs), f));
        REQUIRE(c.periods.periods.size() >= 100);
        CHECK(oracle::mean(c.periods.periods) == doctest::Approx(1.0 / f).epsilon(0.02));
    }
    SUBCASE("invariants on white noise") {
        const double fs = 10.0;
        const auto s = raw(white(20000, 1.0, 4), fs);
        const auto c = binarize_and_periods(s);
        double total = 0.0;
        for (double p : c.periods.periods) {
            CHECK(p > 1.0 / fs);
            total += p;
        }
        CHECK(total <= s.duration());
        for (std::size_t k = 1; k < c.rising_edges.size(); ++k) {
            CHECK(std::floor(c.rising_edges[k] * fs) - std::floor(c.rising_edges[k - 1] * fs) >= 2.0);
        }
        const auto again = binarize_and_periods(s);
        CHECK(again.periods.periods == c.periods.periods);
        CHECK(again.binary == c.binary);
    }
}

TEST_CASE("periodogram") {
    SUBCASE("unit sine gives one dominant bin") {
        const double fs = 10.0, f = 0.73;
        const auto psd = periodogram(raw(sine(f, fs, 409.6), fs), 1024);
        const auto k = static_cast<std::size_t>(std::max_element(psd.power.begin(), psd.power.end()) - psd.power.begin());
        CHECK(std::abs(psd.freqs[k] - f) <= psd.df());
        for (std::size_t i = 1; i < psd.freqs.size(); ++i) CHECK(psd.freqs[i] > psd.freqs[i - 1]);
        for (double p : psd.power) CHECK(p >= 0.0);
    }
    SUBCASE("white noise is flat") {
        const std::size_t seg = 512;
        const auto s = raw(white(seg * 101 / 2 + seg, 1.0, 5), 1.0);
        const auto psd = periodogram(s, seg, 0.5);
        CHECK(psd.segments >= 100);
        // 9-bin moving average, skipping the DC and Nyquist edges
        std::vector<double> smooth;
        for (std::size_t k = 5; k + 5 < psd.power.size(); ++k) {
            double acc = 0.0;
            for (std::size_t j = k - 4; j <= k + 4; ++j) acc += psd.power[j];
            smooth.push_back(acc / 9.0);
        }
        const auto [lo, hi] = std::minmax_element(smooth.begin(), smooth.end());
        CHECK(*hi / *lo < 3.0);
    }
    SUBCASE("Parseval against an independent Hann bookkeeping") {
        const std::size_t seg = 1000;
        const auto s = raw(white(7300, 1.3, 6), 4.0);
        const auto psd = periodogram(s, seg, 0.5);
        double sum = 0.0;
        for (double p : psd.power) sum += p;
        double acc = 0.0, w2 = 0.0;
        std::size_t segments = 0;
        for (std::size_t i = 0; i < seg; ++i) w2 += std::pow(0.5 - 0.5 * std::cos(2.0 * pi * i / seg), 2);
        for (std::size_t st = 0; st + seg <= s.samples.size(); st += seg / 2, ++segments) {
            double m = 0.0;
            for (std::size_t i = 0; i < seg; ++i) m += s.samples[st + i] / seg;
            for (std::size_t i = 0; i < seg; ++i) {
                acc += std::pow((s.samples[st + i] - m) * (0.5 - 0.5 * std::cos(2.0 * pi * i / seg)), 2);
            }
        }
        const double expected = acc / (w2 * static_cast<double>(segments));
        CHECK(sum * psd.df() == doctest::Approx(expected).epsilon(0.01));
        CHECK(windowed_variance(s, seg, 0.5) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK_THROWS_AS(periodogram(raw(std::vector<double>(10, 0.0), 1.0), 20), Error);
}

TEST_CASE("lorentzian_fit") {
    Psd psd;
    for (int k = 0; k < 200; ++k) psd.freqs.push_back(0.01 * k);
    SUBCASE("exact round trip") {
        LorentzFit truth;
        truth.f0 = 1.234;
        truth.half_width = 0.05;
        truth.amplitude = 3.0;
        truth.offset = 0.2;
        for (double f : psd.freqs) psd.power.push_back(truth(f));
        const auto fit = lorentzian_fit(psd);
        CHECK(fit.f0 == doctest::Approx(truth.f0).epsilon(1e-6));
        CHECK(fit.half_width == doctest::Approx(truth.half_width).epsilon(1e-6));
        CHECK(fit.amplitude == doctest::Approx(truth.amplitude).epsilon(1e-6));
        CHECK(fit.offset == doctest::Approx(truth.offset).epsilon(1e-6));
        CHECK(fit.width() == doctest::Approx(0.1).epsilon(1e-6));
        CHECK(fit.warnings.empty());
    }
    SUBCASE("flat data has no peak") {
        psd.power.assign(psd.freqs.size(), 1.0);
        CHECK_THROWS_WITH_AS(lorentzian_fit(psd), "no peak", Error);
    }
    SUBCASE("too few bins") {
        Psd small;
        small.freqs = {0, 1, 2};
        small.power = {0, 1, 0};
        CHECK_THROWS_AS(lorentzian_fit(small), Error);
    }
}

TEST_CASE("noise_floor_subtract") {
    Psd psd;
    for (int k = 0; k < 400; ++k) psd.freqs.push_back(0.005 * k);
    SUBCASE("flat floor plus a Lorentzian peak") {
        LorentzFit peak;
        peak.f0 = 0.8;
        peak.half_width = 0.02;
        peak.amplitude = 5.0;
        for (double f : psd.freqs) psd.power.push_back(2.0 + peak(f));
        const auto out = noise_floor_subtract(psd, 2);
        const auto fit = lorentzian_fit(out.subtracted);
        CHECK(fit.amplitude == doctest::Approx(peak.amplitude).epsilon(0.05));
        // subtraction never adds more than the floor's negative part
        double before = 0.0, after = 0.0, floor_at_peak = 0.0;
        for (std::size_t i = 0; i < psd.freqs.size(); ++i) {
            if (std::abs(psd.freqs[i] - peak.f0) > 3.0 * out.peak_half_width) continue;
            before += psd.power[i];
            after += out.subtracted.power[i];
            floor_at_peak = std::max(floor_at_peak, std::abs(out.floor[i]));
        }
        CHECK(after <= before + floor_at_peak);
    }
    SUBCASE("pure polynomial floor") {
        for (double f : psd.freqs) psd.power.push_back(3.0 - 0.8 * f + 0.3 * f * f);
        const auto out = noise_floor_subtract(psd, 2);
        double rms = 0.0;
        for (double p : out.subtracted.power) rms += p * p;
        rms = std::sqrt(rms / static_cast<double>(psd.freqs.size()));
        const double mid = 3.0 - 0.8 * 1.0 + 0.3;
        CHECK(rms < 0.01 * mid);
    }
    SUBCASE("zero PSD") {
        psd.power.assign(psd.freqs.size(), 0.0);
        const auto out = noise_floor_subtract(psd, 3);
        for (double p : out.subtracted.power) CHECK(p == 0.0);
    }
    SUBCASE("degree out of range") {
        psd.power.assign(psd.freqs.size(), 1.0);
        CHECK_THROWS_AS(noise_floor_subtract(psd, 7), Error);
    }
}

TEST_CASE("telegraph_stats") {
    SUBCASE("all ground") {
        const auto st = telegraph_stats(raw(std::vector<double>(100, -1.0), 1.0), 0.0);
        CHECK(st.ground_fraction == 1.0);
        CHECK_FALSE(st.up_rate.has_value());
        CHECK(st.warnings.size() == 1);
    }
    SUBCASE("symmetric generator") {
        const adiabatic::JumpRates r{1.0, 1.0};
        const auto tel = adiabatic::simulate_telegraph(r, 1e4, 21);
        const double dt = 0.01;
        const auto st = telegraph_stats(raw(tel.sample(dt), 1.0 / dt), 0.0);
        CHECK(st.ground_segments > 4000);
        // ground dwell lengths are Exp(mu): SE of 1/mean is mu / sqrt(N)
        const double se_rate = r.mu / std::sqrt(static_cast<double>(st.ground_segments));
        REQUIRE(st.up_rate.has_value());
        CHECK(std::abs(*st.up_rate - r.mu) < 3.0 * se_rate);
        // fraction SE from the alternating-renewal variance 2 mu nu / (mu + nu)^3 / T, with mu = nu
        const double se_frac = std::sqrt(2.0 * r.mu * r.nu / std::pow(r.mu + r.nu, 3) / tel.duration);
        CHECK(std::abs(st.ground_fraction - 0.5) < 3.0 * se_frac);
    }
    SUBCASE("ground fraction falls toward one half as the drive grows") {
        const double gamma_m = 2.0, gamma = 0.2;
        double previous = 1.0;
        for (double omega : {0.2, 0.4, 0.6, 0.8, 1.0, 1.4}) {
            const auto r = adiabatic::jump_rates(omega, gamma_m, gamma);
            const auto tel = adiabatic::simulate_telegraph(r, 2e4 / r.mu, 5);
            const auto st = telegraph_stats(raw(tel.sample(0.02 / r.nu), r.nu / 0.02), 0.0);
            CHECK(st.ground_fraction < previous);
            CHECK(st.ground_fraction > 0.5);
            previous = st.ground_fraction;
        }
        CHECK(previous < 0.56);
    }
}

TEST_CASE("otsu threshold splits a two-level record") {
    std::vector<double> v;
    std::mt19937_64 gen(8);
    std::normal_distribution<double> nd(0.0, 0.1);
    for (int i = 0; i < 3000; ++i) v.push_back((i % 3 == 0 ? 1.0 : -1.0) + nd(gen));
    const double t = otsu_threshold(v);
    CHECK(std::abs(t) < 0.1);
}

TEST_CASE("CSV writers") {
    Psd psd;
    psd.freqs = {0.0, 0.5};
    psd.power = {1.0, 0.25};
    std::ostringstream a;
    write_psd_csv(psd, a);
    CHECK(a.str() == "freq,power\n0,1\n0.5,0.25\n");
    PeriodSet p;
    p.periods = {5.0, 4.5};
    std::ostringstream b;
    write_periods_csv(p, b);
    CHECK(b.str() == "period\n5\n4.5\n");
}
