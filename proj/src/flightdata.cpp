#include "sysid/flightdata.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "sysid/atmosphere.hpp"
#include "sysid/errors.hpp"
#include "sysid/units.hpp"

namespace sysid {

std::array<double, kStateDim> FlightState::to_array() const {
    return {mach, rho, qbar, p, q, r, alpha, delta_e};
}

FlightState FlightState::from_array(const std::array<double, kStateDim>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
}

double FlightState::true_airspeed() const { return std::sqrt(2.0 * qbar / rho); }

void FlightState::validate() const {
    if (!(rho > 0.0)) throw DataError("flight state: rho must be positive");
    if (!(qbar >= 0.0)) throw DataError("flight state: qbar must be non-negative");
    if (!(mach >= 0.0)) throw DataError("flight state: mach must be non-negative");
    if (!(std::abs(alpha) < units::kPi / 2)) throw DataError("flight state: |alpha| must be below pi/2");
}

void AircraftGeometry::validate() const {
    if (!(S > 0 && cbar > 0 && mass > 0 && Iy > 0))
        throw ConfigError("geometry: S, cbar, mass and Iy must be positive");
}

const char* to_string(Channel c) { return c == Channel::Cm ? "Cm" : "Cz"; }

Channel channel_from_string(const std::string& s) {
    if (s == "Cm") return Channel::Cm;
    if (s == "Cz") return Channel::Cz;
    throw SchemaError("unknown coefficient channel '" + s + "'");
}

double ManeuverRecord::median_dt() const {
    if (t.size() < 2) return 0.0;
    std::vector<double> d(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    return d[d.size() / 2];
}

void ManeuverRecord::validate() const {
    const std::size_t n = t.size();
    if (states.size() != n) throw FormatError("record: state channel length differs from time");
    for (const auto* ch : {&u_body, &w_body, &theta, &nz, &cm_target, &cz_target})
        if (!ch->empty() && ch->size() != n) throw FormatError("record: channel length differs from time");
    for (std::size_t i = 1; i < n; ++i)
        if (!(t[i] > t[i - 1])) throw FormatError("record: timestamps must be strictly increasing");
    if (n >= 3) {
        const double h = median_dt();
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs((t[i] - t[i - 1]) - h) > 0.1 * h)
                throw FormatError("record: timestamp spacing deviates more than 10% from median");
    }
}

ColumnMap default_column_map() {
    return {
        {"time", {"time", "s"}},       {"mach", {"mach", "1"}},         {"rho", {"rho", "kg/m3"}},
        {"qbar", {"qbar", "Pa"}},      {"p", {"p", "rad/s"}},           {"q", {"q", "rad/s"}},
        {"r", {"r", "rad/s"}},         {"alpha", {"alpha", "rad"}},     {"delta_e", {"delta_e", "rad"}},
        {"u_body", {"u_body", "m/s"}}, {"w_body", {"w_body", "m/s"}},   {"theta", {"theta", "rad"}},
        {"nz", {"nz", "g"}},           {"cm_target", {"cm_target", "1"}}, {"cz_target", {"cz_target", "1"}},
    };
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
        throw FormatError("line " + std::to_string(line) + ": cannot parse '" + s + "' as a number");
    return v;
}

}  // namespace

ManeuverRecord ingest_csv(const std::string& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open telemetry file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw FormatError("telemetry file '" + path + "' is empty");
    const auto header = split(line);

    // Resolve the canonical channels present in this file.
    std::map<std::string, std::pair<std::size_t, units::Conversion>> idx;
    for (const auto& [name, spec] : columns) {
        const auto it = std::find(header.begin(), header.end(), spec.column);
        if (it == header.end()) continue;
        idx[name] = {static_cast<std::size_t>(it - header.begin()), units::lookup(spec.unit)};
    }
    for (const char* req : {"time", "mach", "qbar", "p", "q", "r", "alpha", "delta_e"})
        if (!idx.count(req)) throw SchemaError(std::string("missing mandatory channel '") + req + "'");
    const bool have_rho = idx.count("rho") > 0;
    if (!have_rho && !idx.count("altitude"))
        throw SchemaError("missing channel: need 'rho' or 'altitude' (with optional 'oat')");

    std::map<std::string, std::vector<double>> cols;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw FormatError("line " + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields");
        for (const auto& [name, ic] : idx)
            cols[name].push_back(parse_number(cells[ic.first], lineno) * ic.second.scale + ic.second.offset);
    }

    ManeuverRecord rec;
    rec.t = cols["time"];
    const std::size_t n = rec.t.size();
    rec.states.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        FlightState& s = rec.states[i];
        s.mach = cols["mach"][i];
        s.qbar = cols["qbar"][i];
        s.p = cols["p"][i];
        s.q = cols["q"][i];
        s.r = cols["r"][i];
        s.alpha = cols["alpha"][i];
        s.delta_e = cols["delta_e"][i];
        if (have_rho) {
            s.rho = cols["rho"][i];
        } else {
            const auto atm = isa::at_altitude(cols["altitude"][i]);
            const double T = idx.count("oat") ? cols["oat"][i] : atm.temperature;
            s.rho = atm.pressure / (isa::kGasConstant * T);
        }
        try {
            s.validate();
        } catch (const DataError& e) {
            throw DataError("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    for (auto [name, dst] : {std::pair{"u_body", &rec.u_body}, {"w_body", &rec.w_body},
                             {"theta", &rec.theta}, {"nz", &rec.nz},
                             {"cm_target", &rec.cm_target}, {"cz_target", &rec.cz_target}})
        if (idx.count(name)) *dst = cols[name];
    rec.validate();
    return rec;
}

void export_csv(const ManeuverRecord& rec, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write '" + path + "'");
    std::vector<std::pair<const char*, const std::vector<double>*>> extra;
    for (auto [name, ch] : {std::pair{"u_body", &rec.u_body}, {"w_body", &rec.w_body},
                            {"theta", &rec.theta}, {"nz", &rec.nz},
                            {"cm_target", &rec.cm_target}, {"cz_target", &rec.cz_target}})
        if (!ch->empty()) extra.emplace_back(name, ch);

    std::fputs("time,mach,rho,qbar,p,q,r,alpha,delta_e", f);
    for (const auto& [name, _] : extra) std::fprintf(f, ",%s", name);
    std::fputc('\n', f);
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& s = rec.states[i];
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", rec.t[i], s.mach, s.rho,
                     s.qbar, s.p, s.q, s.r, s.alpha, s.delta_e);
        for (const auto& [_, ch] : extra) std::fprintf(f, ",%.17g", (*ch)[i]);
        std::fputc('\n', f);
    }
    std::fclose(f);
}

namespace {

// Derivative weights of a least-squares polynomial over x = -2..2, evaluated at x.
std::array<double, 5> local_poly_weights(int degree, double x) {
    const int m = degree + 1;
    Eigen::MatrixXd V(5, m);
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < m; ++j) V(k, j) = std::pow(k - 2.0, j);
    const Eigen::MatrixXd P = (V.transpose() * V).ldlt().solve(V.transpose());
    Eigen::RowVectorXd dbasis = Eigen::RowVectorXd::Zero(m);
    for (int j = 1; j < m; ++j) dbasis[j] = j * std::pow(x, j - 1);
    const Eigen::RowVectorXd w = dbasis * P;
    return {w[0], w[1], w[2], w[3], w[4]};
}

struct StencilSet {
    std::array<std::array<double, 5>, 5> w;  // evaluated at x = -2..2
};

const StencilSet& stencils(int degree) {
    static const auto make = [](int d) {
        StencilSet s;
        for (int k = 0; k < 5; ++k) s.w[static_cast<std::size_t>(k)] = local_poly_weights(d, k - 2.0);
        return s;
    };
    static const StencilSet quad = make(2), cubic = make(3);
    if (degree == 2) return quad;
    if (degree == 3) return cubic;
    throw UsageError("differentiation stencil degree must be 2 or 3");
}

}  // namespace

std::vector<double> sg_derivative(const std::vector<double>& t, const std::vector<double>& y, int degree) {
    const std::size_t n = y.size();
    if (n < 5) throw InsufficientDataError("differentiation needs at least 5 samples");
    if (t.size() != n) throw UsageError("differentiation: time and value lengths differ");
    const StencilSet& st = stencils(degree);
    auto apply = [&](std::size_t first, int at) {
        const double h = (t[first + 4] - t[first]) / 4.0;
        const auto& w = st.w[static_cast<std::size_t>(at + 2)];
        double s = 0.0;
        for (std::size_t k = 0; k < 5; ++k) s += w[k] * y[first + k];
        return s / h;
    };
    std::vector<double> d(n);
    for (std::size_t i = 2; i + 2 < n; ++i) d[i] = apply(i - 2, 0);
    d[0] = apply(0, -2);
    d[1] = apply(0, -1);
    d[n - 2] = apply(n - 5, 1);
    d[n - 1] = apply(n - 5, 2);
    return d;
}

namespace {

void require_qbar(const ManeuverRecord& rec) {
    if (rec.size() < 5) throw InsufficientDataError("extraction needs at least 5 samples");
    for (std::size_t i = 0; i < rec.size(); ++i)
        if (!(rec.states[i].qbar > 0.0))
            throw DataError("degenerate sample " + std::to_string(i) + ": qbar <= 0");
}

std::vector<double> compute_cm(const ManeuverRecord& rec, const AircraftGeometry& g) {
    require_qbar(rec);
    std::vector<double> q(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) q[i] = rec.states[i].q;
    const auto qdot = sg_derivative(rec.t, q, kStencilDegree);
    std::vector<double> cm(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& s = rec.states[i];
        const double moment = g.Iy * qdot[i] + (g.Ix - g.Iz) * s.p * s.r + g.Ixz * (s.p * s.p - s.r * s.r);
        cm[i] = moment / (s.qbar * g.S * g.cbar);
    }
    return cm;
}

std::vector<double> compute_cz(const ManeuverRecord& rec, const AircraftGeometry& g) {
    require_qbar(rec);
    if (rec.u_body.empty() || rec.w_body.empty() || rec.theta.empty())
        throw SchemaError("C_z extraction needs u_body, w_body and theta channels");
    const auto wdot = sg_derivative(rec.t, rec.w_body, kStencilDegree);
    std::vector<double> cz(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto& s = rec.states[i];
        // Lateral velocity and bank are zero in the symmetric case.
        const double az = wdot[i] - s.q * rec.u_body[i] - isa::kG0 * std::cos(rec.theta[i]);
        cz[i] = g.mass * az / (s.qbar * g.S);
    }
    return cz;
}

std::vector<CoefficientSample> to_samples(const ManeuverRecord& rec, const std::vector<double>& y, Channel c) {
    std::vector<CoefficientSample> out(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        if (!std::isfinite(y[i])) throw DataError("non-finite coefficient at sample " + std::to_string(i));
        out[i] = {rec.states[i], y[i], c};
    }
    return out;
}

}  // namespace

void attach_targets(ManeuverRecord& rec, const AircraftGeometry& geom) {
    rec.cm_target = compute_cm(rec, geom);
    if (!rec.u_body.empty() && !rec.w_body.empty() && !rec.theta.empty()) rec.cz_target = compute_cz(rec, geom);
}

std::vector<CoefficientSample> extract_cm(const ManeuverRecord& rec, const AircraftGeometry& geom) {
    if (!rec.cm_target.empty()) return to_samples(rec, rec.cm_target, Channel::Cm);
    return to_samples(rec, compute_cm(rec, geom), Channel::Cm);
}

std::vector<CoefficientSample> extract_cz(const ManeuverRecord& rec, const AircraftGeometry& geom) {
    if (!rec.cz_target.empty()) return to_samples(rec, rec.cz_target, Channel::Cz);
    return to_samples(rec, compute_cz(rec, geom), Channel::Cz);
}

ManeuverRecord decimate(const ManeuverRecord& rec, std::size_t max_points) {
    if (max_points < 2) throw UsageError("decimate: max_points must be at least 2");
    const std::size_t n = rec.size();
    if (n <= max_points) return rec;
    const std::size_t stride = (n + max_points - 1) / max_points;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n; i += stride) keep.push_back(i);
    if (keep.back() != n - 1) keep.push_back(n - 1);

    auto pick = [&](const std::vector<double>& v) {
        std::vector<double> out;
        if (v.empty()) return out;
        out.reserve(keep.size());
        for (auto i : keep) out.push_back(v[i]);
        return out;
    };
    ManeuverRecord d;
    d.t = pick(rec.t);
    for (auto i : keep) d.states.push_back(rec.states[i]);
    d.u_body = pick(rec.u_body);
    d.w_body = pick(rec.w_body);
    d.theta = pick(rec.theta);
    d.nz = pick(rec.nz);
    d.cm_target = pick(rec.cm_target);
    d.cz_target = pick(rec.cz_target);
    return d;
}

namespace {

// Value weights of a cubic least-squares fit over x = -h..h, one row per evaluation offset.
std::vector<std::vector<double>> smoothing_weights(std::size_t window) {
    const auto n = static_cast<Eigen::Index>(window);
    const double half = static_cast<double>(window / 2);
    Eigen::MatrixXd V(n, 4);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index j = 0; j < 4; ++j) V(k, j) = std::pow((static_cast<double>(k) - half) / half, static_cast<double>(j));
    const Eigen::MatrixXd P = (V.transpose() * V).ldlt().solve(V.transpose());
    std::vector<std::vector<double>> w(window);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::RowVectorXd row = V.row(k) * P;
        w[static_cast<std::size_t>(k)].assign(row.data(), row.data() + n);
    }
    return w;
}

std::vector<double> smooth_series(const std::vector<double>& y, const std::vector<std::vector<double>>& w) {
    const std::size_t n = y.size(), m = w.size(), half = m / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        // Centered window in the interior, the first or last full window near the ends.
        const std::size_t first = i < half ? 0 : (i + half >= n ? n - m : i - half);
        const auto& row = w[i - first];
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += row[k] * y[first + k];
        out[i] = s;
    }
    return out;
}

}  // namespace

ManeuverRecord smooth_inputs(const ManeuverRecord& rec, std::size_t window) {
    if (window <= 1) return rec;
    if (window % 2 == 0 || window < 5) throw UsageError("smoothing window must be odd and at least 5");
    if (rec.size() < window) throw InsufficientDataError("record shorter than the smoothing window");
    const auto w = smoothing_weights(window);
    ManeuverRecord out = rec;
    std::array<std::vector<double>, kStateDim> ch;
    for (auto& c : ch) c.resize(rec.size());
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const auto a = rec.states[i].to_array();
        for (std::size_t d = 0; d < kStateDim; ++d) ch[d][i] = a[d];
    }
    for (auto& c : ch) c = smooth_series(c, w);
    for (std::size_t i = 0; i < rec.size(); ++i) {
        std::array<double, kStateDim> a;
        for (std::size_t d = 0; d < kStateDim; ++d) a[d] = ch[d][i];
        out.states[i] = FlightState::from_array(a);
    }
    return out;
}

}  // namespace sysid
