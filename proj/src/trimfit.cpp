#include "sysid/trimfit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "sysid/atmosphere.hpp"
#include "sysid/errors.hpp"

namespace sysid {

using nlohmann::json;

std::vector<MachBucket> default_mach_buckets() {
    return {{0.4, 0.6}, {0.6, 0.8}, {0.8, 1.0}, {0.98, 1.18}};
}

double TrimFunctions::alpha(double qbar) const { return a * std::exp(-b * qbar); }
double TrimFunctions::delta_e(double qbar) const { return c + d * std::log(qbar); }

namespace {

TrimFunctions fit_bucket(const std::vector<const TrimShot*>& shots, const MachBucket& bucket) {
    const auto n = static_cast<Eigen::Index>(shots.size());
    Eigen::MatrixXd Xa(n, 2), Xd(n, 2);
    Eigen::VectorXd la(n), de(n), qb(n), al(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const TrimShot& s = *shots[static_cast<std::size_t>(i)];
        if (!(s.alpha_trim > 0.0)) throw DataError("trim regression: alpha <= 0 cannot enter the log fit");
        if (!(s.state.qbar > 0.0)) throw DataError("trim regression: qbar must be positive");
        qb[i] = s.state.qbar;
        al[i] = s.alpha_trim;
        la[i] = std::log(s.alpha_trim);
        de[i] = s.delta_e_trim;
        Xa(i, 0) = 1.0;
        Xa(i, 1) = -qb[i];
        Xd(i, 0) = 1.0;
        Xd(i, 1) = std::log(qb[i]);
    }
    const double span = qb.maxCoeff() - qb.minCoeff();
    if (!(span > 1e-9 * qb.maxCoeff())) throw DataError("trim regression: degenerate design, all qbar equal");

    TrimFunctions tf;
    tf.bucket = bucket;
    tf.shots = shots.size();
    tf.qbar_min = qb.minCoeff();
    tf.qbar_max = qb.maxCoeff();

    // Log-linear start, then one Gauss-Newton pass on alpha - a exp(-b qbar).
    const Eigen::Vector2d ab = Xa.colPivHouseholderQr().solve(la);
    double a = std::exp(ab[0]), b = ab[1];
    Eigen::MatrixXd J(n, 2);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double e = std::exp(-b * qb[i]);
        r[i] = al[i] - a * e;
        J(i, 0) = -e;
        J(i, 1) = a * qb[i] * e;
    }
    const Eigen::Vector2d step = J.colPivHouseholderQr().solve(-r);
    a += step[0];
    b += step[1];
    tf.a = a;
    tf.b = b;

    const Eigen::Vector2d cd = Xd.colPivHouseholderQr().solve(de);
    tf.c = cd[0];
    tf.d = cd[1];

    double sa = 0.0, sd = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sa += std::pow(al[i] - tf.alpha(qb[i]), 2);
        sd += std::pow(de[i] - tf.delta_e(qb[i]), 2);
    }
    tf.rms_alpha = std::sqrt(sa / static_cast<double>(n));
    tf.rms_delta_e = std::sqrt(sd / static_cast<double>(n));
    if (!(tf.a > 0.0)) throw NumericError("trim regression produced a non-positive alpha scale");
    return tf;
}

}  // namespace

std::vector<TrimFunctions> fit_trim_functions(const std::vector<TrimShot>& shots,
                                              const std::vector<MachBucket>& buckets) {
    std::vector<TrimFunctions> out;
    for (const auto& bucket : buckets) {
        std::vector<const TrimShot*> members;
        for (const auto& s : shots)
            if (bucket.contains(s.state.mach)) members.push_back(&s);
        if (members.empty()) continue;
        if (members.size() < 3) {
            std::ostringstream os;
            os << "trim regression: Mach bucket [" << bucket.lo << ", " << bucket.hi << ") has "
               << members.size() << " shots, need at least 3";
            throw InsufficientDataError(os.str());
        }
        out.push_back(fit_bucket(members, bucket));
    }
    if (out.empty()) throw InsufficientDataError("trim regression: no Mach bucket contains trim shots");
    return out;
}

TrimPoint trim_state(const TrimFunctions& tf, double qbar, double rho) {
    if (!(rho > 0.0)) throw DataError("trim state: rho must be positive");
    if (!(qbar >= 0.8 * tf.qbar_min && qbar <= 1.2 * tf.qbar_max)) {
        std::ostringstream os;
        os << "trim state: qbar " << qbar << " Pa outside fitted domain [" << tf.qbar_min << ", " << tf.qbar_max
           << "] +- 20%";
        throw ExtrapolationError(os.str());
    }
    TrimPoint p;
    p.U1 = std::sqrt(2.0 * qbar / rho);
    const double T = isa::at_altitude(isa::altitude_from_density(rho)).temperature;
    p.state.mach = p.U1 / isa::speed_of_sound(T);
    p.state.rho = rho;
    p.state.qbar = qbar;
    p.state.alpha = tf.alpha(qbar);
    p.state.delta_e = tf.delta_e(qbar);
    if (!(tf.b > 0.0)) throw NumericError("trim functions: alpha_trim must decrease with qbar (b > 0)");
    return p;
}

const TrimFunctions& select_trim_functions(const std::vector<TrimFunctions>& tfs, double mach) {
    const TrimFunctions* best = nullptr;
    double best_dist = INFINITY;
    for (const auto& tf : tfs) {
        const double centre = 0.5 * (tf.bucket.lo + tf.bucket.hi);
        const double dist = std::abs(mach - centre);
        if (tf.bucket.contains(mach) && dist < best_dist) {
            best = &tf;
            best_dist = dist;
        }
    }
    if (!best) throw ExtrapolationError("no trim functions cover Mach " + std::to_string(mach));
    return *best;
}

std::vector<TrimShot> read_trim_shots_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trim-shot file '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("mach,rho,qbar,alpha_trim,delta_e_trim", 0) != 0)
        throw SchemaError("trim-shot file needs header mach,rho,qbar,alpha_trim,delta_e_trim");
    std::vector<TrimShot> shots;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        TrimShot s;
        char comma;
        std::istringstream ss(line);
        if (!(ss >> s.state.mach >> comma >> s.state.rho >> comma >> s.state.qbar >> comma >> s.alpha_trim >> comma >>
              s.delta_e_trim))
            throw FormatError("trim-shot file: cannot parse '" + line + "'");
        s.state.alpha = s.alpha_trim;
        s.state.delta_e = s.delta_e_trim;
        shots.push_back(s);
    }
    return shots;
}

void write_trim_shots_csv(const std::vector<TrimShot>& shots, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write '" + path + "'");
    std::fputs("mach,rho,qbar,alpha_trim,delta_e_trim\n", f);
    for (const auto& s : shots)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.state.mach, s.state.rho, s.state.qbar, s.alpha_trim,
                     s.delta_e_trim);
    std::fclose(f);
}

std::vector<TrimShot> detect_trim_shots(const ManeuverRecord& rec, double window_s, double rate_tol) {
    std::vector<TrimShot> shots;
    const std::size_t n = rec.size();
    auto steady = [&](std::size_t i) {
        const auto& s = rec.states[i];
        return std::abs(s.p) < rate_tol && std::abs(s.q) < rate_tol && std::abs(s.r) < rate_tol;
    };
    std::size_t i = 0;
    while (i < n) {
        if (!steady(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && steady(j + 1)) ++j;
        if (rec.t[j] - rec.t[i] >= window_s) {
            TrimShot shot;
            const double m = static_cast<double>(j - i + 1);
            for (std::size_t k = i; k <= j; ++k) {
                const auto& s = rec.states[k];
                shot.state.mach += s.mach / m;
                shot.state.rho += s.rho / m;
                shot.state.qbar += s.qbar / m;
                shot.alpha_trim += s.alpha / m;
                shot.delta_e_trim += s.delta_e / m;
            }
            shot.state.alpha = shot.alpha_trim;
            shot.state.delta_e = shot.delta_e_trim;
            shots.push_back(shot);
        }
        i = j + 1;
    }
    return shots;
}

std::string trim_functions_to_json(const std::vector<TrimFunctions>& tfs) {
    json arr = json::array();
    for (const auto& t : tfs)
        arr.push_back({{"a", t.a},
                       {"b", t.b},
                       {"c", t.c},
                       {"d", t.d},
                       {"mach_bucket", {t.bucket.lo, t.bucket.hi}},
                       {"qbar_min", t.qbar_min},
                       {"qbar_max", t.qbar_max},
                       {"rms_alpha", t.rms_alpha},
                       {"rms_delta_e", t.rms_delta_e},
                       {"shots", t.shots},
                       {"qbar_unit", t.qbar_unit}});
    return arr.dump(2) + "\n";
}

std::vector<TrimFunctions> trim_functions_from_json(const std::string& text) {
    try {
        std::vector<TrimFunctions> out;
        for (const auto& j : json::parse(text)) {
            TrimFunctions t;
            t.a = j.at("a");
            t.b = j.at("b");
            t.c = j.at("c");
            t.d = j.at("d");
            t.bucket = {j.at("mach_bucket")[0], j.at("mach_bucket")[1]};
            t.qbar_min = j.at("qbar_min");
            t.qbar_max = j.at("qbar_max");
            t.rms_alpha = j.value("rms_alpha", 0.0);
            t.rms_delta_e = j.value("rms_delta_e", 0.0);
            t.shots = j.value("shots", std::size_t{0});
            t.qbar_unit = j.value("qbar_unit", std::string("Pa"));
            if (t.qbar_unit != "Pa") throw FormatError("trim functions must use qbar in Pa");
            out.push_back(t);
        }
        return out;
    } catch (const json::exception& ex) {
        throw FormatError(std::string("trim functions: ") + ex.what());
    }
}

}  // namespace sysid
