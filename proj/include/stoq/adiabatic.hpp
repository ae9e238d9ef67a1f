#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stoq/sme.hpp"

namespace stoq::adiabatic {

// Qubit-only model after eliminating the cavity. All rates in rad/us.
struct AdiabaticParams {
    double omega = 0.0;
    double delta = 0.0;     // Stark shift
    double gamma_m = 0.0;   // measurement dephasing rate Gamma
    double gamma = 0.0;     // amplitude damping
    double gamma2 = 0.0;    // transverse rate gamma/2 + 2 Gamma
    double g = 0.0;         // chi |alpha0|
    double eta = 1.0;
    double kappa = 0.0;     // 0 when the rates were given directly
    double omega_eff = 0.0; // sqrt(Omega^2 + Delta^2)

    // Fills gamma2 and omega_eff from the primary rates.
    static AdiabaticParams from_rates(double omega, double delta, double gamma_m, double gamma, double eta = 1.0);
    void validate() const;
};

// Rates from the displaced coherent amplitude alpha0 = -2iE/kappa:
// n0 = |alpha0|^2, g = chi sqrt(n0), Delta = chi n0, Gamma = 4 g^2 / kappa.
AdiabaticParams derive_adiabatic(const sme::FullSystemParams& full);

// Same quantities from the qubit-conditioned cavity amplitudes
// alpha_{e,g} = -iE / (kappa/2 +- i chi), without assuming chi << kappa:
// Gamma = chi |Im(alpha_e alpha_g*)|, Delta = chi Re(alpha_e alpha_g*).
// Reduces to derive_adiabatic when chi << kappa.
AdiabaticParams derive_dispersive(const sme::FullSystemParams& full);

// Gamma and Delta from the cavity photon number directly.
AdiabaticParams from_photon_number(double omega, double chi, double kappa, double n0, double gamma, double eta = 1.0);

enum class Regime { UnderDamped, OverDamped };
std::string to_string(Regime r);
Regime regime_classify(double omega, double gamma_m);

struct BlochState {
    double x = 0.0;
    double y = 0.0;
    double z = -1.0;

    double radius_squared() const { return x * x + y * y + z * z; }
};

enum class NoiseMode {
    // noise only on Z, as in the printed Bloch equations
    PaperLiteral,
    // Ito expansion of the H[sz] term; keeps pure states on the sphere
    Full,
};

std::string to_string(NoiseMode m);
NoiseMode noise_mode_from_string(const std::string& s);

struct BlochOptions {
    double dt = 1e-3;
    double duration = 100.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    NoiseMode noise = NoiseMode::Full;
    bool efficiency_scaled_noise = false;
    // Euler-Maruyama plus the (dW^2 - dt) Milstein term; off gives plain EM.
    bool milstein = true;
    int record_every = 1;
    BlochState initial{};
};

struct BlochSeries {
    std::vector<double> times;
    std::vector<BlochState> states;
    // max | |r|^2 - 1 | over all steps, before states outside the ball are
    // projected back onto the sphere
    double max_radius_deviation = 0.0;
};

BlochSeries simulate_bloch(const AdiabaticParams& p, const BlochOptions& opts);

struct PolarState {
    double theta = 0.0;
    double phi = 0.0;
};

struct PolarOptions {
    double dt = 1e-3;
    double duration = 10.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int record_every = 1;
    PolarState initial{1.5707963267948966, 1.5707963267948966};
};

struct PolarSeries {
    std::vector<double> times;
    std::vector<PolarState> states;
};

PolarSeries simulate_polar(const AdiabaticParams& p, const PolarOptions& opts);

// First passage of d theta = -2 Omega dt + 2 sqrt(Gamma pi) dW through 2 pi.
std::vector<double> sample_first_passage(double omega, double gamma_m, double dt, std::size_t n_samples,
                                         std::uint64_t seed);

struct JumpRates {
    double mu = 0.0;  // ground -> excited
    double nu = 0.0;  // excited -> ground
};

JumpRates jump_rates(double omega, double gamma_m, double gamma);

struct TelegraphSeries {
    double duration = 0.0;
    int initial_state = -1;
    std::vector<double> jump_times;
    std::vector<int> states;  // state entered at each jump time

    int state_at(double t) const;
    // Piecewise-constant state sampled at t = k dt.
    std::vector<double> sample(double dt) const;
    std::size_t up_jumps() const;
    // Dwell durations in `state`, excluding the two record-edge segments.
    std::vector<double> dwell_times(int state) const;
    // Intervals between successive up-jumps.
    std::vector<double> periods() const;
};

TelegraphSeries simulate_telegraph(const JumpRates& rates, double duration, std::uint64_t seed,
                                   std::uint64_t stream = 0);

void write_bloch_csv(const BlochSeries& s, std::ostream& os);
void write_polar_csv(const PolarSeries& s, std::ostream& os);
void write_telegraph_csv(const TelegraphSeries& s, double dt, std::ostream& os);

}  // namespace stoq::adiabatic
