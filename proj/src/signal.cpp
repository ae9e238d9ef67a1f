#include "stoq/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>

#include <fftw3.h>
#include <Eigen/Dense>

#include "stoq/io.hpp"
#include "stoq/quantum.hpp"

namespace stoq::signal {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex mu;
    return mu;
}

std::vector<std::complex<double>> fft_complex(const std::vector<std::complex<double>>& in) {
    const int n = static_cast<int>(in.size());
    std::vector<std::complex<double>> out(in.size());
    std::vector<std::complex<double>> buf(in);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n), in_(n), out_(n / 2 + 1) {
        std::lock_guard lock(fftw_planner_mutex());
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.data(), reinterpret_cast<fftw_complex*>(out_.data()),
                                     FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::vector<double>& input() { return in_; }
    const std::vector<std::complex<double>>& execute() {
        fftw_execute(plan_);
        return out_;
    }

private:
    std::size_t n_;
    std::vector<double> in_;
    std::vector<std::complex<double>> out_;
    fftw_plan plan_;
};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
    }
    return w;
}

std::vector<std::size_t> segment_starts(std::size_t length, std::size_t seg, double overlap) {
    if (seg == 0) throw Error("periodogram: segment length must be > 0");
    if (seg > length) {
        throw Error("periodogram: segment length " + std::to_string(seg) + " exceeds signal length " +
                    std::to_string(length));
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) throw Error("periodogram: overlap must lie in [0, 1)");
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(seg * (1.0 - overlap))));
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + seg <= length; s += step) starts.push_back(s);
    return starts;
}

}  // namespace

void Signal::validate() const {
    if (!(fs > 0.0) || !std::isfinite(fs)) throw Error("signal sampling rate must be > 0");
    for (double v : samples) {
        if (!std::isfinite(v)) throw Error("signal contains non-finite samples");
    }
}

Signal ingest_real(const std::vector<double>& samples, double fs) {
    Signal s;
    s.fs = fs;
    s.samples = samples;
    s.validate();
    if (s.samples.empty()) throw Error("empty signal");
    const double m = mean_of(s.samples);
    for (double& v : s.samples) v -= m;
    return s;
}

Signal ingest_complex(const std::vector<std::complex<double>>& iq, double fs) {
    if (iq.empty()) throw Error("empty signal");
    if (!(fs > 0.0)) throw Error("signal sampling rate must be > 0");
    std::complex<double> m = 0.0;
    for (const auto& v : iq) m += v;
    m /= static_cast<double>(iq.size());
    std::vector<std::complex<double>> centered(iq.size());
    for (std::size_t i = 0; i < iq.size(); ++i) centered[i] = iq[i] - m;

    const auto spec = fft_complex(centered);
    const std::size_t n = spec.size();
    double best = 0.0;
    std::size_t k_best = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double pw = std::norm(spec[k]) + std::norm(spec[n - k]);
        if (pw > best) {
            best = pw;
            k_best = k;
        }
    }
    double total = 0.0;
    for (const auto& v : centered) total += std::norm(v);
    if (k_best == 0 || best <= 1e-24 * std::max(1.0, total * static_cast<double>(n))) {
        throw Error("no spectral peak");
    }
    // For z = e^{i phi0} s(t) with s real, Z_k Z_{-k} = e^{2 i phi0} |S_k|^2.
    const double phi0 = 0.5 * std::arg(spec[k_best] * spec[n - k_best]);
    const std::complex<double> rot = std::polar(1.0, -phi0);

    Signal s;
    s.fs = fs;
    s.iq = iq;
    s.samples.resize(iq.size());
    double residual = 0.0;
    for (std::size_t i = 0; i < iq.size(); ++i) {
        const auto r = centered[i] * rot;
        s.samples[i] = r.real();
        residual += r.imag() * r.imag();
    }
    const double m_re = mean_of(s.samples);
    for (double& v : s.samples) v -= m_re;
    if (total > 0.0 && residual / total > 0.2) {
        s.warnings.push_back("residual quadrature carries " + io::format_number(100.0 * residual / total) +
                             "% of the signal power");
    }
    return s;
}

Signal ingest_iq(std::istream& is, double fs) {
    const auto table = io::read_csv(is);
    const std::size_t width = table.rows.front().size();
    if (width == 1) {
        const auto v = table.column_values(0);
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        if (*lo == *hi) throw Error("no spectral peak");
        return ingest_real(v, fs);
    }
    if (width == 2) {
        std::vector<std::complex<double>> iq;
        iq.reserve(table.rows.size());
        for (const auto& r : table.rows) iq.emplace_back(r[0], r[1]);
        return ingest_complex(iq, fs);
    }
    throw Error("ingest_iq: expected one (value) or two (I,Q) columns, got " + std::to_string(width));
}

Signal ingest_iq_file(const std::string& path, double fs) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    return ingest_iq(f, fs);
}

Biquad butter2_coefficients(double fc, double fs) {
    if (!(fc > 0.0 && fc < fs / 2.0)) {
        throw Error("butter2_lowpass: cutoff " + io::format_number(fc) + " outside (0, fs/2 = " +
                    io::format_number(fs / 2.0) + ")");
    }
    // bilinear transform with the cutoff prewarped
    const double k = std::tan(std::numbers::pi * fc / fs);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    Biquad c{};
    c.b0 = k2 * norm;
    c.b1 = 2.0 * c.b0;
    c.b2 = c.b0;
    c.a1 = 2.0 * (k2 - 1.0) * norm;
    c.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
    return c;
}

double butter2_gain(const Biquad& c, double f, double fs) {
    const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
    const std::complex<double> num = c.b0 + c.b1 * z1 + c.b2 * z1 * z1;
    const std::complex<double> den = 1.0 + c.a1 * z1 + c.a2 * z1 * z1;
    return std::abs(num / den);
}

Signal butter2_lowpass(const Signal& sig, double fc) {
    sig.validate();
    const Biquad c = butter2_coefficients(fc, sig.fs);
    Signal out;
    out.fs = sig.fs;
    out.warnings = sig.warnings;
    out.samples.resize(sig.samples.size());
    // transposed direct form II, zero initial state
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < sig.samples.size(); ++i) {
        const double x = sig.samples[i];
        const double y = c.b0 * x + s1;
        s1 = c.b1 * x - c.a1 * y + s2;
        s2 = c.b2 * x - c.a2 * y;
        out.samples[i] = y;
    }
    return out;
}

ClockSignal binarize_and_periods(const Signal& sig) {
    sig.validate();
    ClockSignal out;
    const double m = mean_of(sig.samples);
    const std::size_t n = sig.samples.size();
    out.binary.resize(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        centered[i] = sig.samples[i] - m;
        out.binary[i] = centered[i] >= 0.0 ? 1 : -1;
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (centered[i - 1] < 0.0 && centered[i] >= 0.0) {
            const double frac = -centered[i - 1] / (centered[i] - centered[i - 1]);
            out.rising_edges.push_back((static_cast<double>(i - 1) + frac) / sig.fs);
        }
    }
    for (std::size_t i = 1; i < out.rising_edges.size(); ++i) {
        out.periods.periods.push_back(out.rising_edges[i] - out.rising_edges[i - 1]);
    }
    if (out.rising_edges.size() < 2) {
        out.periods.warnings.push_back("fewer than 2 rising edges; no periods extracted");
    }
    return out;
}

Psd periodogram(const Signal& sig, std::size_t segment_length, double overlap) {
    sig.validate();
    const auto starts = segment_starts(sig.samples.size(), segment_length, overlap);
    const auto w = hann(segment_length);
    double w2 = 0.0;
    for (double v : w) w2 += v * v;

    Psd psd;
    psd.segment_length = segment_length;
    psd.overlap = overlap;
    psd.segments = starts.size();
    const std::size_t nbins = segment_length / 2 + 1;
    psd.freqs.resize(nbins);
    psd.power.assign(nbins, 0.0);
    for (std::size_t k = 0; k < nbins; ++k) psd.freqs[k] = static_cast<double>(k) * sig.fs / segment_length;

    RealFft fft(segment_length);
    for (std::size_t s : starts) {
        double m = 0.0;
        for (std::size_t i = 0; i < segment_length; ++i) m += sig.samples[s + i];
        m /= static_cast<double>(segment_length);
        auto& in = fft.input();
        for (std::size_t i = 0; i < segment_length; ++i) in[i] = (sig.samples[s + i] - m) * w[i];
        const auto& spec = fft.execute();
        for (std::size_t k = 0; k < nbins; ++k) {
            double p = std::norm(spec[k]);
            const bool unpaired = k == 0 || (segment_length % 2 == 0 && k == nbins - 1);
            if (!unpaired) p *= 2.0;
            psd.power[k] += p;
        }
    }
    const double scale = 1.0 / (sig.fs * w2 * static_cast<double>(starts.size()));
    for (double& p : psd.power) p *= scale;
    return psd;
}

double windowed_variance(const Signal& sig, std::size_t segment_length, double overlap) {
    const auto starts = segment_starts(sig.samples.size(), segment_length, overlap);
    const auto w = hann(segment_length);
    double w2 = 0.0;
    for (double v : w) w2 += v * v;
    double acc = 0.0;
    for (std::size_t s : starts) {
        double m = 0.0;
        for (std::size_t i = 0; i < segment_length; ++i) m += sig.samples[s + i];
        m /= static_cast<double>(segment_length);
        for (std::size_t i = 0; i < segment_length; ++i) {
            const double v = (sig.samples[s + i] - m) * w[i];
            acc += v * v;
        }
    }
    return acc / (w2 * static_cast<double>(starts.size()));
}

double LorentzFit::operator()(double f) const {
    const double d = f - f0;
    return amplitude * half_width * half_width / (d * d + half_width * half_width) + offset;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct LmResult {
    Eigen::Vector4d params;
    Eigen::Matrix4d jtj;
    double ssr = 0.0;
    int iterations = 0;
    bool converged = false;
};

// params: f0, half width, amplitude, offset
double lorentz_residuals(const std::vector<double>& f, const std::vector<double>& y, const Eigen::Vector4d& p,
                         Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    const std::size_t n = f.size();
    r.resize(static_cast<Eigen::Index>(n));
    if (jac) jac->resize(static_cast<Eigen::Index>(n), 4);
    const double h = p(1);
    const double h2 = h * h;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = f[i] - p(0);
        const double den = d * d + h2;
        const double shape = h2 / den;
        const auto row = static_cast<Eigen::Index>(i);
        r(row) = p(2) * shape + p(3) - y[i];
        if (jac) {
            (*jac)(row, 0) = p(2) * h2 * 2.0 * d / (den * den);
            (*jac)(row, 1) = p(2) * 2.0 * h * d * d / (den * den);
            (*jac)(row, 2) = shape;
            (*jac)(row, 3) = 1.0;
        }
    }
    return r.squaredNorm();
}

LmResult levenberg_marquardt(const std::vector<double>& f, const std::vector<double>& y, Eigen::Vector4d p) {
    LmResult res;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    double ssr = lorentz_residuals(f, y, p, r, &jac);
    double lambda = 1e-3;
    for (int it = 1; it <= 200; ++it) {
        res.iterations = it;
        const Eigen::Matrix4d jtj = jac.transpose() * jac;
        const Eigen::Vector4d jtr = jac.transpose() * r;
        bool accepted = false;
        Eigen::Vector4d step = Eigen::Vector4d::Zero();
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::Matrix4d a = jtj;
            for (int k = 0; k < 4; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
            step = a.ldlt().solve(-jtr);
            Eigen::Vector4d trial = p + step;
            trial(1) = std::abs(trial(1));
            Eigen::VectorXd rt;
            const double ssr_t = lorentz_residuals(f, y, trial, rt, nullptr);
            if (std::isfinite(ssr_t) && ssr_t <= ssr) {
                p = trial;
                ssr = ssr_t;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        ssr = lorentz_residuals(f, y, p, r, &jac);
        // no downhill step left means a stationary point
        if (!accepted || step.norm() < 1e-8 * std::max(p.norm(), 1e-300)) {
            res.converged = true;
            break;
        }
    }
    res.params = p;
    res.ssr = ssr;
    res.jtj = jac.transpose() * jac;
    return res;
}

}  // namespace

LorentzFit lorentzian_fit(const Psd& psd) {
    const std::size_t n = psd.freqs.size();
    if (n < 8 || psd.power.size() != n) throw Error("lorentzian_fit: need at least 8 bins");
    const auto max_it = std::max_element(psd.power.begin(), psd.power.end());
    const auto k = static_cast<std::size_t>(max_it - psd.power.begin());
    const double peak = *max_it;
    const double base = median_of(psd.power);
    const double lo = *std::min_element(psd.power.begin(), psd.power.end());
    if (!(peak - lo > 1e-12 * std::max(std::abs(peak), 1e-300)) || !(peak > base)) throw Error("no peak");

    const double df = psd.freqs[1] - psd.freqs[0];
    Eigen::Vector4d p0(psd.freqs[k], 2.5 * df, peak - base, base);
    const LmResult lm = levenberg_marquardt(psd.freqs, psd.power, p0);
    if (!lm.converged) throw Error("lorentzian_fit: no convergence after 200 iterations");

    LorentzFit fit;
    fit.f0 = lm.params(0);
    fit.half_width = std::abs(lm.params(1));
    fit.amplitude = lm.params(2);
    fit.offset = lm.params(3);
    fit.iterations = lm.iterations;
    fit.residual = std::sqrt(lm.ssr / static_cast<double>(n));
    const double dof = static_cast<double>(n) - 4.0;
    const double s2 = lm.ssr / dof;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(lm.jtj);
    if (lu.isInvertible()) {
        const Eigen::Matrix4d cov = s2 * lu.inverse();
        fit.amplitude_sigma = std::sqrt(std::max(cov(2, 2), 0.0));
    } else {
        fit.amplitude_sigma = INFINITY;
    }
    if (!(fit.half_width > 0.0) || !(fit.amplitude > 0.0) || std::abs(fit.amplitude) <= 2.0 * fit.amplitude_sigma) {
        throw Error("no peak");
    }
    if (fit.f0 <= psd.freqs[std::min<std::size_t>(2, n - 1)] || fit.f0 >= psd.freqs[n - 3]) {
        fit.warnings.push_back("peak at the edge of the band (f0 = " + io::format_number(fit.f0) + ")");
    }
    return fit;
}

namespace {

std::vector<double> polyfit_normalized(const std::vector<double>& u, const std::vector<double>& y,
                                       const std::vector<bool>& use, int degree) {
    std::size_t rows = 0;
    for (bool b : use) rows += b ? 1 : 0;
    if (rows < static_cast<std::size_t>(degree + 1)) {
        throw Error("noise_floor_subtract: degenerate fit (" + std::to_string(rows) + " unmasked bins for degree " +
                    std::to_string(degree) + ")");
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows), degree + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!use[i]) continue;
        double pw = 1.0;
        for (int d = 0; d <= degree; ++d) {
            a(r, d) = pw;
            pw *= u[i];
        }
        b(r) = y[i];
        ++r;
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    return {c.data(), c.data() + c.size()};
}

double polyval(const std::vector<double>& c, double u) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
    return acc;
}

// Half width from the half-maximum crossing above `floor`, at least one bin.
double half_width_estimate(const std::vector<double>& f, const std::vector<double>& y, std::size_t k) {
    const double floor = median_of(y);
    const double half = floor + 0.5 * (y[k] - floor);
    std::size_t lo = k;
    while (lo > 0 && y[lo] > half) --lo;
    std::size_t hi = k;
    while (hi + 1 < y.size() && y[hi] > half) ++hi;
    const double df = f.size() > 1 ? f[1] - f[0] : 1.0;
    return std::max(df, 0.5 * (f[hi] - f[lo]));
}

}  // namespace

FloorFit noise_floor_subtract(const Psd& psd, int poly_degree) {
    if (poly_degree < 0 || poly_degree > 6) throw Error("noise_floor_subtract: degree must lie in [0, 6]");
    const std::size_t n = psd.freqs.size();
    if (n == 0 || psd.power.size() != n) throw Error("noise_floor_subtract: empty PSD");
    const double f_mid = 0.5 * (psd.freqs.front() + psd.freqs.back());
    const double span = std::max(0.5 * (psd.freqs.back() - psd.freqs.front()), 1e-300);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = (psd.freqs[i] - f_mid) / span;

    std::size_t k = static_cast<std::size_t>(std::max_element(psd.power.begin(), psd.power.end()) - psd.power.begin());
    double center = psd.freqs[k];
    double hw = half_width_estimate(psd.freqs, psd.power, k);
    std::vector<double> coeffs;
    std::vector<double> residual(n);
    std::vector<bool> use(n);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < n; ++i) use[i] = std::abs(psd.freqs[i] - center) > 3.0 * hw;
        coeffs = polyfit_normalized(u, psd.power, use, poly_degree);
        for (std::size_t i = 0; i < n; ++i) residual[i] = psd.power[i] - polyval(coeffs, u[i]);
        Psd res_psd = psd;
        res_psd.power = residual;
        try {
            const LorentzFit lf = lorentzian_fit(res_psd);
            if (lf.f0 >= psd.freqs.front() && lf.f0 <= psd.freqs.back()) {
                center = lf.f0;
                hw = std::max(lf.half_width, psd.df());
            }
        } catch (const Error&) {
            k = static_cast<std::size_t>(std::max_element(residual.begin(), residual.end()) - residual.begin());
            center = psd.freqs[k];
        }
    }

    FloorFit out;
    out.subtracted = psd;
    out.floor.resize(n);
    out.coefficients = coeffs;
    out.peak_half_width = hw;
    for (std::size_t i = 0; i < n; ++i) {
        out.floor[i] = polyval(coeffs, u[i]);
        out.subtracted.power[i] = std::max(0.0, psd.power[i] - out.floor[i]);
    }
    return out;
}

TelegraphStats telegraph_stats(const Signal& sig, double threshold, bool ground_below) {
    sig.validate();
    TelegraphStats st;
    st.threshold = threshold;
    const std::size_t n = sig.samples.size();
    if (n == 0) throw Error("telegraph_stats: empty signal");
    std::vector<bool> ground(n);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ground[i] = ground_below ? sig.samples[i] < threshold : sig.samples[i] > threshold;
        count += ground[i] ? 1 : 0;
    }
    st.ground_fraction = static_cast<double>(count) / static_cast<double>(n);

    // run-length segments; the first and last runs touch the record edges
    std::vector<std::size_t> lengths;
    std::size_t run_start = 0;
    for (std::size_t i = 1; i <= n; ++i) {
        if (i == n || ground[i] != ground[run_start]) {
            const bool interior = run_start > 0 && i < n;
            if (ground[run_start] && interior) lengths.push_back(i - run_start);
            run_start = i;
        }
    }
    st.ground_segments = lengths.size();
    if (lengths.empty()) {
        st.warnings.push_back("no complete ground segment; up rate undefined");
        return st;
    }
    const double mean_len = static_cast<double>(std::accumulate(lengths.begin(), lengths.end(), std::size_t{0})) /
                            static_cast<double>(lengths.size());
    st.up_rate = sig.fs / mean_len;
    return st;
}

double otsu_threshold(const std::vector<double>& samples, int bins) {
    if (samples.empty()) throw Error("otsu_threshold: empty input");
    const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn_it;
    const double hi = *mx_it;
    if (!(hi > lo)) return lo;
    std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    for (double v : samples) {
        auto b = static_cast<int>((v - lo) / width);
        hist[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1.0;
    }
    const double total = static_cast<double>(samples.size());
    double sum_all = 0.0;
    for (int b = 0; b < bins; ++b) sum_all += b * hist[static_cast<std::size_t>(b)];
    double w0 = 0.0;
    double sum0 = 0.0;
    double best = -1.0;
    int best_b = 0;
    for (int b = 0; b < bins - 1; ++b) {
        w0 += hist[static_cast<std::size_t>(b)];
        sum0 += b * hist[static_cast<std::size_t>(b)];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_b = b;
        }
    }
    // midpoint of the two class means of the best split
    const double split = lo + (best_b + 1) * width;
    double s_lo = 0.0, s_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (double v : samples) {
        if (v < split) {
            s_lo += v;
            ++n_lo;
        } else {
            s_hi += v;
            ++n_hi;
        }
    }
    if (n_lo == 0 || n_hi == 0) return split;
    return 0.5 * (s_lo / static_cast<double>(n_lo) + s_hi / static_cast<double>(n_hi));
}

void write_psd_csv(const Psd& psd, std::ostream& os) {
    io::write_columns(os, {"freq", "power"}, {&psd.freqs, &psd.power});
}

void write_periods_csv(const PeriodSet& p, std::ostream& os) {
    io::write_columns(os, {"period"}, {&p.periods});
}

}  // namespace stoq::signal
