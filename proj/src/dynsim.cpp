#include "sysid/dynsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "sysid/atmosphere.hpp"
#include "sysid/errors.hpp"
#include "sysid/units.hpp"

namespace sysid {

double SimState::alpha() const { return std::atan2(w, u); }
double SimState::airspeed() const { return std::hypot(u, w); }
double SimState::rho() const { return isa::at_altitude(h).density; }
double SimState::qbar() const { return 0.5 * rho() * airspeed() * airspeed(); }
double SimState::mach() const { return airspeed() / isa::speed_of_sound(isa::at_altitude(h).temperature); }

TruthAircraft TruthAircraft::from_prior(const PriorCatalogEntry& e) {
    if (!e.cm || !e.cz) throw ConfigError("truth model '" + e.name + "' must define both Cm and Cz");
    return {*e.cm, *e.cz, e.geometry, e.drag.value_or(DragClosure{})};
}

namespace {

struct Air {
    double V, alpha, rho, qbar, qtilde;
};

Air air_data(const TruthAircraft& ac, const SimState& s) {
    const double V = s.airspeed();
    const double rho = isa::at_altitude(s.h).density;
    return {V, std::atan2(s.w, s.u), rho, 0.5 * rho * V * V, s.q * ac.geom.cbar / (2.0 * V)};
}

// checked: evaluate through the hull guard; unchecked during trim iterations.
StateRate rates(const TruthAircraft& ac, const SimState& s, double de, double thrust, bool checked) {
    const auto& g = ac.geom;
    const Air a = air_data(ac, s);
    const AeroPoint p{a.alpha, a.qtilde, de};
    const double cz = checked ? evaluate(ac.cz, p) : ac.cz.value(p);
    const double cm = checked ? evaluate(ac.cm, p) : ac.cm.value(p);
    const double X = a.qbar * g.S * ac.drag.cx(a.alpha) + thrust;
    const double Z = a.qbar * g.S * cz;
    const double M = a.qbar * g.S * g.cbar * cm;
    const double st = std::sin(s.theta), ct = std::cos(s.theta);
    return {X / g.mass - s.q * s.w - isa::kG0 * st, Z / g.mass + s.q * s.u + isa::kG0 * ct, M / g.Iy, s.q,
            s.u * st - s.w * ct};
}

template <std::size_t N, class F>
std::array<double, N> rk4_step(const F& f, double t, const std::array<double, N>& y, double dt) {
    auto axpy = [](const std::array<double, N>& a, double c, const std::array<double, N>& b) {
        std::array<double, N> r;
        for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    const auto k1 = f(t, y);
    const auto k2 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k1));
    const auto k3 = f(t + 0.5 * dt, axpy(y, 0.5 * dt, k2));
    const auto k4 = f(t + dt, axpy(y, dt, k3));
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

SimState to_sim(const double* y) { return {y[0], y[1], y[2], y[3], y[4]}; }

// Collects one sample per time step into the truth record.
struct Recorder {
    const TruthAircraft& ac;
    double thrust;
    SimRecord out;

    void push(double t, const SimState& s, double de) {
        if (!(s.u > 0.0) || !std::isfinite(s.w) || !std::isfinite(s.q) || !std::isfinite(s.h))
            throw HullError("state is non-finite or has u <= 0");
        const Air a = air_data(ac, s);
        auto& r = out.truth;
        r.t.push_back(t);
        FlightState fs;
        fs.mach = a.V / isa::speed_of_sound(isa::at_altitude(s.h).temperature);
        fs.rho = a.rho;
        fs.qbar = a.qbar;
        fs.q = s.q;
        fs.alpha = a.alpha;
        fs.delta_e = de;
        r.states.push_back(fs);
        r.u_body.push_back(s.u);
        r.w_body.push_back(s.w);
        r.theta.push_back(s.theta);
        r.nz.push_back(load_factor(ac, s, de));
        const auto d = rates(ac, s, de, thrust, true);
        out.qdot.push_back(d[2]);
        out.wdot.push_back(d[1]);
        out.altitude.push_back(s.h);
    }
};

// Runs one integration step, reporting envelope violations with their time.
template <class F>
void guarded(double t, F&& step) {
    try {
        step();
    } catch (const HullError& e) {
        throw DivergenceError("state left the model envelope at t = " + std::to_string(t) + " s: " + e.what(), t);
    }
}

std::size_t step_count(double dt, double duration) {
    if (!(dt > 0.0) || !(duration >= dt)) throw UsageError("integrate: need dt > 0 and duration >= dt");
    return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

StateRate dynamics(const TruthAircraft& ac, const SimState& s, double delta_e, double thrust) {
    return rates(ac, s, delta_e, thrust, true);
}

double load_factor(const TruthAircraft& ac, const SimState& s, double delta_e) {
    const Air a = air_data(ac, s);
    const double cz = evaluate(ac.cz, AeroPoint{a.alpha, a.qtilde, delta_e});
    return -a.qbar * ac.geom.S * cz / (ac.geom.mass * isa::kG0);
}

TrimResult solve_trim(const TruthAircraft& ac, double mach, double altitude) {
    const auto atm = isa::at_altitude(altitude);
    const double V = mach * isa::speed_of_sound(atm.temperature);
    auto state_of = [&](double alpha) { return SimState{V * std::cos(alpha), V * std::sin(alpha), 0.0, alpha, altitude}; };
    auto residual = [&](const std::array<double, 3>& x) {
        const auto d = rates(ac, state_of(x[0]), x[1], x[2], false);
        return std::array<double, 3>{d[0], d[1], d[2]};
    };
    auto norm = [](const std::array<double, 3>& r) {
        return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
    };

    std::array<double, 3> x{0.05, 0.0, 0.0};
    auto f = residual(x);
    int it = 0;
    for (; it < 100 && norm(f) > 1e-12; ++it) {
        // Central-difference Jacobian; thrust enters linearly.
        Eigen::Matrix3d J;
        const std::array<double, 3> h{1e-7, 1e-7, 1.0};
        for (int j = 0; j < 3; ++j) {
            auto xp = x, xm = x;
            xp[j] += h[j];
            xm[j] -= h[j];
            const auto fp = residual(xp), fm = residual(xm);
            for (int i = 0; i < 3; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h[j]);
        }
        const Eigen::Vector3d step = J.fullPivLu().solve(-Eigen::Vector3d(f[0], f[1], f[2]));
        double lambda = 1.0;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            std::array<double, 3> xn{x[0] + lambda * step[0], x[1] + lambda * step[1], x[2] + lambda * step[2]};
            const auto fn = residual(xn);
            if (norm(fn) < norm(f) || k == 29) {
                x = xn;
                f = fn;
                break;
            }
        }
        if (lambda * step.cwiseAbs().maxCoeff() < 1e-16) break;
    }
    if (!ac.cm.in_hull(AeroPoint{x[0], 0.0, x[1]}))
        throw NoTrimError("trim solution at alpha " + std::to_string(x[0]) + ", delta_e " + std::to_string(x[1]) +
                              " lies outside the model hull",
                          norm(f));
    if (!(norm(f) <= 1e-8)) throw NoTrimError("no trim found at mach " + std::to_string(mach) + ", altitude " +
                                                  std::to_string(altitude), norm(f));

    TrimResult r;
    r.state = state_of(x[0]);
    r.alpha = x[0];
    r.delta_e = x[1];
    r.thrust = x[2];
    r.mach = mach;
    r.rho = atm.density;
    r.qbar = 0.5 * atm.density * V * V;
    const auto d = rates(ac, r.state, r.delta_e, r.thrust, true);
    r.residual = norm({d[0], d[1], d[2]});
    r.iterations = it;
    return r;
}

bool NoiseSpec::is_zero() const {
    return sigma_rates == 0.0 && sigma_alpha == 0.0 && sigma_delta_e == 0.0 && sigma_qbar == 0.0;
}

void ManeuverSpec::validate() const {
    if (!(duration > 0.0)) throw ConfigError("maneuver duration must be positive");
    if (!(dt > 0.0) || dt > duration) throw ConfigError("maneuver dt must be in (0, duration]");
    if (kind == ManeuverKind::Rollercoaster) {
        if (!(g_low <= g_high)) throw ConfigError("maneuver needs g_low < g_high");
        if (!(g_rate > 0.0)) throw ConfigError("maneuver needs g_rate > 0");
    }
}

SimRecord integrate(const TruthAircraft& ac, const SimState& initial, const ElevatorSchedule& elevator,
                    double thrust, double dt, double duration) {
    const std::size_t n = step_count(dt, duration);
    Recorder rec{ac, thrust, {}};
    std::array<double, 5> y{initial.u, initial.w, initial.q, initial.theta, initial.h};
    auto f = [&](double t, const std::array<double, 5>& s) { return rates(ac, to_sim(s.data()), elevator(t), thrust, true); };
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * dt;
        guarded(t, [&] {
            rec.push(t, to_sim(y.data()), elevator(t));
            if (k < n) y = rk4_step(f, t, y, dt);
        });
    }
    rec.out.measured = rec.out.truth;
    return std::move(rec.out);
}

namespace {

// Load-factor tracking law. Gains are scaled by 16 kPa / qbar so the loop
// behaves similarly across the envelope.
constexpr double kKp = 0.03;
constexpr double kKi = 0.10;
constexpr double kKq = 0.15;
constexpr double kGainQbar = 16000.0;
constexpr double kSensorLag = 0.05;  // s
constexpr double kCornerSharpness = 0.95;
constexpr double kFadeIn = 2.0;  // s

SimRecord finish(SimRecord rec, const NoiseSpec& noise, const TrimResult& trim) {
    rec.trim = trim;
    rec.measured = noise.is_zero() ? rec.truth : apply_noise(rec.truth, noise);
    return rec;
}

}  // namespace

double rollercoaster_command(const ManeuverSpec& spec, double t) {
    const double amp = 0.5 * (spec.g_high - spec.g_low);
    const double mid = 0.5 * (spec.g_high + spec.g_low);
    const double fade = t < kFadeIn ? 0.5 * (1.0 - std::cos(units::kPi * t / kFadeIn)) : 1.0;
    if (amp <= 0.0) return 1.0 + fade * (mid - 1.0);
    const double k = kCornerSharpness;
    const double omega = spec.g_rate * std::asin(k) / (amp * k);
    // Cosine phase keeps the flight-path oscillation centred on level flight.
    const double shape = std::asin(k * std::sin(omega * t + 0.5 * units::kPi)) / std::asin(k);
    return 1.0 + fade * (mid - 1.0 + amp * shape);
}

SimRecord fly_rollercoaster(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise) {
    spec.validate();
    if (spec.g_low == spec.g_high && spec.g_low == 1.0) return fly_trim_hold(ac, spec, noise);
    const TrimResult trim = solve_trim(ac, spec.mach_target, spec.altitude_target);
    const double n0 = load_factor(ac, trim.state, trim.delta_e);

    // Augmented state: airframe (5), integral of tracking error, filtered nz.
    using Y = std::array<double, 7>;
    auto command = [&](double t) { return n0 + (rollercoaster_command(spec, t) - 1.0); };
    auto elevator = [&](double t, const Y& y) {
        const SimState s = to_sim(y.data());
        const double sched = kGainQbar / s.qbar();
        return trim.delta_e - sched * (kKp * (command(t) - y[6]) + kKi * y[5] - kKq * s.q);
    };
    auto f = [&](double t, const Y& y) {
        const SimState s = to_sim(y.data());
        const double de = elevator(t, y);
        const auto d = rates(ac, s, de, trim.thrust, true);
        return Y{d[0], d[1], d[2], d[3], d[4], command(t) - y[6], (load_factor(ac, s, de) - y[6]) / kSensorLag};
    };

    const std::size_t n = step_count(spec.dt, spec.duration);
    Recorder rec{ac, trim.thrust, {}};
    Y y{trim.state.u, trim.state.w, trim.state.q, trim.state.theta, trim.state.h, 0.0, n0};
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * spec.dt;
        guarded(t, [&] {
            rec.push(t, to_sim(y.data()), elevator(t, y));
            if (k < n) y = rk4_step(f, t, y, spec.dt);
        });
    }
    return finish(std::move(rec.out), noise, trim);
}

SimRecord fly_doublet(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise) {
    spec.validate();
    const TrimResult trim = solve_trim(ac, spec.mach_target, spec.altitude_target);
    const double t0 = spec.doublet_start, w = spec.doublet_width, a = spec.doublet_amplitude;
    auto elevator = [&](double t) {
        if (t >= t0 && t < t0 + w) return trim.delta_e + a;
        if (t >= t0 + w && t < t0 + 2.0 * w) return trim.delta_e - a;
        return trim.delta_e;
    };
    return finish(integrate(ac, trim.state, elevator, trim.thrust, spec.dt, spec.duration), noise, trim);
}

SimRecord fly_trim_hold(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise) {
    spec.validate();
    const TrimResult trim = solve_trim(ac, spec.mach_target, spec.altitude_target);
    const double de = trim.delta_e;
    return finish(integrate(ac, trim.state, [de](double) { return de; }, trim.thrust, spec.dt, spec.duration),
                  noise, trim);
}

SimRecord fly(const TruthAircraft& ac, const ManeuverSpec& spec, const NoiseSpec& noise) {
    switch (spec.kind) {
        case ManeuverKind::Rollercoaster: return fly_rollercoaster(ac, spec, noise);
        case ManeuverKind::Doublet: return fly_doublet(ac, spec, noise);
        case ManeuverKind::TrimShot: return fly_trim_hold(ac, spec, noise);
    }
    throw UsageError("unknown maneuver kind");
}

std::vector<TrimShot> fly_trim_shots(const TruthAircraft& ac,
                                     const std::vector<std::pair<double, double>>& mach_altitude,
                                     const NoiseSpec& noise) {
    std::mt19937_64 gen(noise.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<TrimShot> shots;
    for (const auto& [mach, alt] : mach_altitude) {
        const TrimResult tr = solve_trim(ac, mach, alt);
        TrimShot s;
        s.state.mach = mach;
        s.state.rho = tr.rho;
        s.state.qbar = tr.qbar;
        s.alpha_trim = tr.alpha;
        s.delta_e_trim = tr.delta_e;
        if (!noise.is_zero()) {
            s.alpha_trim += noise.sigma_alpha * unit(gen);
            s.delta_e_trim += noise.sigma_delta_e * unit(gen);
            s.state.qbar += noise.sigma_qbar * unit(gen);
        }
        s.state.alpha = s.alpha_trim;
        s.state.delta_e = s.delta_e_trim;
        shots.push_back(s);
    }
    return shots;
}

ManeuverRecord apply_noise(const ManeuverRecord& rec, const NoiseSpec& noise) {
    ManeuverRecord out = rec;
    if (noise.is_zero()) return out;
    // One stream per channel so a zero sigma on one channel leaves the others unchanged.
    auto stream = [&](std::uint64_t channel) {
        std::seed_seq seq{static_cast<std::uint32_t>(noise.seed), static_cast<std::uint32_t>(noise.seed >> 32),
                          static_cast<std::uint32_t>(channel)};
        return std::mt19937_64(seq);
    };
    auto perturb = [&](std::uint64_t channel, double sigma, double FlightState::*field) {
        if (sigma == 0.0) return;
        auto gen = stream(channel);
        std::normal_distribution<double> dist(0.0, sigma);
        for (auto& s : out.states) s.*field += dist(gen);
    };
    perturb(1, noise.sigma_rates, &FlightState::p);
    perturb(2, noise.sigma_rates, &FlightState::q);
    perturb(3, noise.sigma_rates, &FlightState::r);
    perturb(4, noise.sigma_alpha, &FlightState::alpha);
    perturb(5, noise.sigma_delta_e, &FlightState::delta_e);
    perturb(6, noise.sigma_qbar, &FlightState::qbar);
    return out;
}

NoiseSpec noise_from_fraction(const ManeuverRecord& rec, double fraction, std::uint64_t seed) {
    auto ptp = [&](double FlightState::*field) {
        double lo = INFINITY, hi = -INFINITY;
        for (const auto& s : rec.states) {
            lo = std::min(lo, s.*field);
            hi = std::max(hi, s.*field);
        }
        return rec.states.empty() ? 0.0 : hi - lo;
    };
    NoiseSpec n;
    n.sigma_rates = fraction * ptp(&FlightState::q);
    n.sigma_alpha = fraction * ptp(&FlightState::alpha);
    n.sigma_delta_e = fraction * ptp(&FlightState::delta_e);
    n.sigma_qbar = fraction * ptp(&FlightState::qbar);
    n.seed = seed;
    return n;
}

}  // namespace sysid
