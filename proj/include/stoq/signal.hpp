#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stoq::signal {

struct Signal {
    double fs = 1.0;  // samples per us
    std::vector<double> samples;
    std::vector<std::complex<double>> iq;  // raw IQ when ingested from two columns
    std::vector<std::string> warnings;

    double duration() const { return static_cast<double>(samples.size()) / fs; }
    void validate() const;
};

struct PeriodSet {
    std::vector<double> periods;
    double cutoff = 0.0;
    double threshold = 0.0;
    std::vector<std::string> warnings;

    bool empty() const { return periods.empty(); }
};

struct Psd {
    std::vector<double> freqs;  // cycles per us
    std::vector<double> power;
    std::size_t segment_length = 0;
    double overlap = 0.0;
    std::size_t segments = 0;
    std::string window = "hann";

    double df() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

struct LorentzFit {
    double f0 = 0.0;
    double half_width = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double residual = 0.0;  // RMS of the residuals
    double amplitude_sigma = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;

    double width() const { return 2.0 * half_width; }
    double operator()(double f) const;
};

// Real signal from a single-column stream, or the rotated real quadrature of
// a two-column I,Q stream. The result is mean-subtracted.
Signal ingest_iq(std::istream& is, double fs);
Signal ingest_iq_file(const std::string& path, double fs);
Signal ingest_complex(const std::vector<std::complex<double>>& iq, double fs);
Signal ingest_real(const std::vector<double>& samples, double fs);

Signal butter2_lowpass(const Signal& sig, double fc);

struct Biquad {
    double b0, b1, b2, a1, a2;
};
Biquad butter2_coefficients(double fc, double fs);
double butter2_gain(const Biquad& c, double f, double fs);

struct ClockSignal {
    std::vector<int> binary;
    PeriodSet periods;
    std::vector<double> rising_edges;  // us
};

ClockSignal binarize_and_periods(const Signal& sig);

Psd periodogram(const Signal& sig, std::size_t segment_length, double overlap = 0.5);
// Hann-weighted mean square of the segments, i.e. what sum(power) * df equals.
double windowed_variance(const Signal& sig, std::size_t segment_length, double overlap = 0.5);

struct FloorFit {
    Psd subtracted;
    std::vector<double> floor;
    std::vector<double> coefficients;  // in the normalized frequency variable
    double peak_half_width = 0.0;
};

FloorFit noise_floor_subtract(const Psd& psd, int poly_degree);

LorentzFit lorentzian_fit(const Psd& psd);

struct TelegraphStats {
    double ground_fraction = 0.0;
    std::optional<double> up_rate;  // 1/us
    std::size_t ground_segments = 0;
    double threshold = 0.0;
    std::vector<std::string> warnings;
};

TelegraphStats telegraph_stats(const Signal& sig, double threshold, bool ground_below = true);
// Otsu split of the sample histogram; returns the midpoint of the two class means.
double otsu_threshold(const std::vector<double>& samples, int bins = 256);

void write_psd_csv(const Psd& psd, std::ostream& os);
void write_periods_csv(const PeriodSet& p, std::ostream& os);

}  // namespace stoq::signal
