#include "stoq/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "stoq/io.hpp"
#include "stoq/rng.hpp"

namespace stoq::adiabatic {

AdiabaticParams AdiabaticParams::from_rates(double omega, double delta, double gamma_m, double gamma, double eta) {
    AdiabaticParams p;
    p.omega = omega;
    p.delta = delta;
    p.gamma_m = gamma_m;
    p.gamma = gamma;
    p.eta = eta;
    p.gamma2 = gamma / 2.0 + 2.0 * gamma_m;
    p.omega_eff = std::hypot(omega, delta);
    p.validate();
    return p;
}

void AdiabaticParams::validate() const {
    if (!(omega >= 0.0 && gamma_m >= 0.0 && gamma >= 0.0 && gamma2 >= 0.0)) {
        throw Error("adiabatic rates must be >= 0");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) throw Error("eta must lie in [0, 1]");
}

AdiabaticParams derive_adiabatic(const sme::FullSystemParams& full) {
    const Complex alpha0 = sme::steady_alpha(full.E, full.kappa);
    const double n0 = std::norm(alpha0);
    AdiabaticParams p = AdiabaticParams::from_rates(full.omega, full.chi * n0, 0.0, full.gamma, full.eta);
    p.g = full.chi * std::sqrt(n0);
    p.gamma_m = 4.0 * p.g * p.g / full.kappa;
    p.gamma2 = full.gamma / 2.0 + 2.0 * p.gamma_m;
    p.kappa = full.kappa;
    return p;
}

AdiabaticParams derive_dispersive(const sme::FullSystemParams& full) {
    if (!(full.kappa > 0.0)) throw Error("derive_dispersive: kappa must be > 0");
    const Complex half_kappa(full.kappa / 2.0, 0.0);
    const Complex ie(0.0, full.E);
    const Complex alpha_e = -ie / (half_kappa + Complex(0.0, full.chi));
    const Complex alpha_g = -ie / (half_kappa - Complex(0.0, full.chi));
    const Complex overlap = alpha_e * std::conj(alpha_g);
    AdiabaticParams p = AdiabaticParams::from_rates(full.omega, full.chi * overlap.real(),
                                                    full.chi * std::abs(overlap.imag()), full.gamma, full.eta);
    p.g = std::sqrt(p.gamma_m * full.kappa / 4.0);
    p.kappa = full.kappa;
    return p;
}

AdiabaticParams from_photon_number(double omega, double chi, double kappa, double n0, double gamma, double eta) {
    if (!(kappa > 0.0)) throw Error("kappa must be > 0");
    if (!(n0 >= 0.0)) throw Error("n0 must be >= 0");
    AdiabaticParams p = AdiabaticParams::from_rates(omega, chi * n0, 4.0 * chi * chi * n0 / kappa, gamma, eta);
    p.g = chi * std::sqrt(n0);
    p.kappa = kappa;
    return p;
}

std::string to_string(Regime r) { return r == Regime::UnderDamped ? "under_damped" : "over_damped"; }

Regime regime_classify(double omega, double gamma_m) {
    if (!(omega >= 0.0 && gamma_m >= 0.0)) throw Error("regime_classify: rates must be >= 0");
    // the boundary Omega == Gamma/2 counts as over-damped
    return omega > gamma_m / 2.0 ? Regime::UnderDamped : Regime::OverDamped;
}

std::string to_string(NoiseMode m) { return m == NoiseMode::Full ? "full" : "paper_literal"; }

NoiseMode noise_mode_from_string(const std::string& s) {
    if (s == "full") return NoiseMode::Full;
    if (s == "paper_literal") return NoiseMode::PaperLiteral;
    throw Error("unknown noise_mode '" + s + "' (expected full or paper_literal)");
}

BlochSeries simulate_bloch(const AdiabaticParams& p, const BlochOptions& opts) {
    p.validate();
    if (!(opts.dt > 0.0) || !(opts.duration > 0.0)) throw Error("simulate_bloch: dt and duration must be > 0");
    if (opts.record_every < 1) throw Error("simulate_bloch: record_every must be >= 1");
    const double fastest = std::max(2.0 * std::hypot(p.omega, p.delta), p.gamma2);
    if (opts.dt * fastest > 0.05) {
        throw Error("simulate_bloch: dt * max(2 Omega_eff, gamma2) = " + io::format_number(opts.dt * fastest) +
                    " exceeds 0.05");
    }

    const double noise_rate = opts.efficiency_scaled_noise ? p.eta * p.gamma_m : p.gamma_m;
    const double s = std::sqrt(noise_rate);
    const NoiseStream noise(opts.seed, opts.stream, opts.dt);
    const auto steps = static_cast<std::int64_t>(std::llround(opts.duration / opts.dt));
    const double dt = opts.dt;

    BlochSeries out;
    out.times.reserve(static_cast<std::size_t>(steps / opts.record_every + 1));
    out.states.reserve(out.times.capacity());
    BlochState r = opts.initial;
    for (std::int64_t k = 0; k < steps; ++k) {
        if (k % opts.record_every == 0) {
            out.times.push_back(static_cast<double>(k) * dt);
            out.states.push_back(r);
        }
        const double dW = noise.increment(static_cast<std::uint64_t>(k));
        // Milstein correction weight (dW^2 - dt) / 2
        const double m = opts.milstein ? 0.5 * (dW * dW - dt) : 0.0;

        double ax = -2.0 * p.delta * r.y - p.gamma2 * r.x;
        double ay = 2.0 * p.delta * r.x - 2.0 * p.omega * r.z - p.gamma2 * r.y;
        double az = 2.0 * p.omega * r.y - p.gamma * (1.0 + r.z);

        BlochState next;
        if (opts.noise == NoiseMode::Full) {
            const double bx = -2.0 * s * r.x * r.z;
            const double by = -2.0 * s * r.y * r.z;
            const double bz = 2.0 * s * (1.0 - r.z * r.z);
            // (b . grad) b
            const double c = 4.0 * s * s;
            const double lx = c * r.x * (2.0 * r.z * r.z - 1.0);
            const double ly = c * r.y * (2.0 * r.z * r.z - 1.0);
            const double lz = -2.0 * c * r.z * (1.0 - r.z * r.z);
            next.x = r.x + ax * dt + bx * dW + lx * m;
            next.y = r.y + ay * dt + by * dW + ly * m;
            next.z = r.z + az * dt + bz * dW + lz * m;
        } else {
            const double bz = -2.0 * s * (1.0 - r.z * r.z);
            const double lz = bz * (4.0 * s * r.z);
            next.x = r.x + ax * dt;
            next.y = r.y + ay * dt;
            next.z = r.z + az * dt + bz * dW + lz * m;
        }
        r = next;
        if (!std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.z)) {
            throw Error("simulate_bloch: non-finite state at step " + std::to_string(k));
        }
        // deviation is measured before the state is projected back into the ball
        const double r2 = r.radius_squared();
        out.max_radius_deviation = std::max(out.max_radius_deviation, std::abs(r2 - 1.0));
        if (r2 > 1.0) {
            const double shrink = 1.0 / std::sqrt(r2);
            r.x *= shrink;
            r.y *= shrink;
            r.z *= shrink;
        }
    }
    return out;
}

PolarSeries simulate_polar(const AdiabaticParams& p, const PolarOptions& opts) {
    p.validate();
    if (!(opts.dt > 0.0) || !(opts.duration > 0.0)) throw Error("simulate_polar: dt and duration must be > 0");
    const double fastest = std::max(2.0 * std::hypot(p.omega, p.delta), p.gamma2);
    if (opts.dt * fastest > 0.05) throw Error("simulate_polar: step size too large");
    if (opts.initial.theta < 0.1 || opts.initial.theta > std::numbers::pi - 0.1) {
        throw Error("simulate_polar: initial theta must lie in [0.1, pi - 0.1]");
    }

    const NoiseStream noise(opts.seed, opts.stream, opts.dt);
    const auto steps = static_cast<std::int64_t>(std::llround(opts.duration / opts.dt));
    const double s = 2.0 * std::sqrt(p.gamma_m);
    PolarSeries out;
    PolarState st = opts.initial;
    for (std::int64_t k = 0; k < steps; ++k) {
        if (k % opts.record_every == 0) {
            out.times.push_back(static_cast<double>(k) * opts.dt);
            out.states.push_back(st);
        }
        const double dW = noise.increment(static_cast<std::uint64_t>(k));
        double sin_t = std::sin(st.theta);
        // pole guard for the cot(theta) drift
        const double guarded = std::copysign(std::max(std::abs(sin_t), 1e-6), sin_t == 0.0 ? 1.0 : sin_t);
        const double cot = std::cos(st.theta) / guarded;
        const double dphi = (2.0 * p.delta - 2.0 * p.omega * cot * std::cos(st.phi)) * opts.dt;
        const double dtheta = -2.0 * p.omega * std::sin(st.phi) * opts.dt + s * sin_t * dW;
        st.phi += dphi;
        st.theta += dtheta;
    }
    return out;
}

std::vector<double> sample_first_passage(double omega, double gamma_m, double dt, std::size_t n_samples,
                                         std::uint64_t seed) {
    if (!(omega > 0.0)) throw Error("sample_first_passage: Omega must be > 0");
    if (!(gamma_m >= 0.0)) throw Error("sample_first_passage: Gamma must be >= 0");
    if (!(dt > 0.0)) throw Error("sample_first_passage: dt must be > 0");
    const double target = 2.0 * std::numbers::pi;
    const double drift = 2.0 * omega * dt;
    const double sigma = 2.0 * std::sqrt(gamma_m * std::numbers::pi) * std::sqrt(dt);
    const auto max_steps = static_cast<std::int64_t>(1e4 * target / drift) + 1000;

    std::vector<double> out;
    out.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        CounterRng rng(seed, i);
        // progress = theta0 - theta, increasing on average
        double progress = 0.0;
        std::int64_t k = 0;
        for (;; ++k) {
            if (k > max_steps) throw Error("sample_first_passage: no passage within step budget");
            const double next = progress + drift - sigma * (sigma > 0.0 ? rng.normal() : 0.0);
            if (next >= target) {
                const double frac = (target - progress) / (next - progress);
                out.push_back((static_cast<double>(k) + frac) * dt);
                break;
            }
            progress = next;
        }
    }
    return out;
}

JumpRates jump_rates(double omega, double gamma_m, double gamma) {
    if (!(gamma_m >= 0.0 && gamma >= 0.0)) throw Error("jump_rates: rates must be >= 0");
    const double denom = gamma + 2.0 * gamma_m;
    if (!(denom > 0.0)) throw Error("jump_rates: gamma + 2 Gamma must be > 0");
    JumpRates r;
    r.mu = 4.0 * omega * omega / denom;
    r.nu = gamma + r.mu;
    return r;
}

int TelegraphSeries::state_at(double t) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    if (it == jump_times.begin()) return initial_state;
    return states[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

std::vector<double> TelegraphSeries::sample(double dt) const {
    if (!(dt > 0.0)) throw Error("TelegraphSeries::sample: dt must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(duration / dt));
    std::vector<double> out(n);
    std::size_t j = 0;
    int state = initial_state;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (j < jump_times.size() && jump_times[j] <= t) state = states[j++];
        out[k] = state;
    }
    return out;
}

std::size_t TelegraphSeries::up_jumps() const {
    return static_cast<std::size_t>(std::count(states.begin(), states.end(), 1));
}

std::vector<double> TelegraphSeries::dwell_times(int state) const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < jump_times.size(); ++i) {
        if (states[i] == state) out.push_back(jump_times[i + 1] - jump_times[i]);
    }
    return out;
}

std::vector<double> TelegraphSeries::periods() const {
    std::vector<double> out;
    double last = -1.0;
    for (std::size_t i = 0; i < jump_times.size(); ++i) {
        if (states[i] != 1) continue;
        if (last >= 0.0) out.push_back(jump_times[i] - last);
        last = jump_times[i];
    }
    return out;
}

TelegraphSeries simulate_telegraph(const JumpRates& rates, double duration, std::uint64_t seed,
                                   std::uint64_t stream) {
    if (!(duration > 0.0)) throw Error("simulate_telegraph: duration must be > 0");
    if (!(rates.mu >= 0.0 && rates.nu >= 0.0)) throw Error("simulate_telegraph: rates must be >= 0");
    TelegraphSeries out;
    out.duration = duration;
    CounterRng rng(seed, stream);
    double t = 0.0;
    int state = -1;
    for (;;) {
        const double rate = state < 0 ? rates.mu : rates.nu;
        if (rate <= 0.0) break;
        t += rng.exponential(rate);
        if (t >= duration) break;
        state = -state;
        out.jump_times.push_back(t);
        out.states.push_back(state);
    }
    return out;
}

void write_bloch_csv(const BlochSeries& s, std::ostream& os) {
    os << "t,X,Y,Z\n";
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const auto& r = s.states[i];
        os << io::format_number(s.times[i]) << ',' << io::format_number(r.x) << ',' << io::format_number(r.y) << ','
           << io::format_number(r.z) << '\n';
    }
}

void write_polar_csv(const PolarSeries& s, std::ostream& os) {
    os << "t,theta,phi\n";
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        os << io::format_number(s.times[i]) << ',' << io::format_number(s.states[i].theta) << ','
           << io::format_number(s.states[i].phi) << '\n';
    }
}

void write_telegraph_csv(const TelegraphSeries& s, double dt, std::ostream& os) {
    os << "t,state\n";
    const auto v = s.sample(dt);
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << io::format_number(static_cast<double>(i) * dt) << ',' << io::format_number(v[i]) << '\n';
    }
}

}  // namespace stoq::adiabatic
