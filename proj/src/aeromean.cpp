#include "sysid/aeromean.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sysid/errors.hpp"

namespace sysid {

using nlohmann::json;

AeroPoint project(const FlightState& x, double cbar) {
    return {x.alpha, x.q * cbar / (2.0 * x.true_airspeed()), x.delta_e};
}

void GenericAeroModel::validate() const {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& e = terms[i].e;
        if (e.alpha < 0 || e.qtilde < 0 || e.delta_e < 0)
            throw ConfigError("model term exponents must be non-negative");
        for (std::size_t j = 0; j < i; ++j)
            if (terms[j].e == e)
                throw ConfigError("duplicate model term (" + std::to_string(e.alpha) + "," +
                                  std::to_string(e.qtilde) + "," + std::to_string(e.delta_e) + ")");
        if (!std::isfinite(terms[i].theta)) throw ConfigError("model coefficient is not finite");
    }
    for (const Range* r : {&hull.alpha, &hull.qtilde, &hull.delta_e})
        if (!(r->min < r->max)) throw ConfigError("hull min must be below max");
}

bool GenericAeroModel::in_hull(const AeroPoint& p) const {
    return hull.alpha.contains(p.alpha) && hull.qtilde.contains(p.qtilde) && hull.delta_e.contains(p.delta_e);
}

namespace {

double ipow(double x, int n) {
    double r = 1.0;
    for (int k = 0; k < n; ++k) r *= x;
    return r;
}

}  // namespace

double GenericAeroModel::value(const AeroPoint& p) const {
    double s = 0.0;
    for (const auto& t : terms)
        s += t.theta * ipow(p.alpha, t.e.alpha) * ipow(p.qtilde, t.e.qtilde) * ipow(p.delta_e, t.e.delta_e);
    return s;
}

std::array<double, 3> GenericAeroModel::partials(const AeroPoint& p) const {
    std::array<double, 3> g{0, 0, 0};
    for (const auto& t : terms) {
        const double a = ipow(p.alpha, t.e.alpha), q = ipow(p.qtilde, t.e.qtilde), d = ipow(p.delta_e, t.e.delta_e);
        if (t.e.alpha) g[0] += t.theta * t.e.alpha * ipow(p.alpha, t.e.alpha - 1) * q * d;
        if (t.e.qtilde) g[1] += t.theta * t.e.qtilde * a * ipow(p.qtilde, t.e.qtilde - 1) * d;
        if (t.e.delta_e) g[2] += t.theta * t.e.delta_e * a * q * ipow(p.delta_e, t.e.delta_e - 1);
    }
    return g;
}

namespace {

void check_hull(const GenericAeroModel& m, const AeroPoint& p) {
    if (!m.in_hull(p)) {
        std::ostringstream os;
        os << to_string(m.channel) << " model queried outside its hull at (alpha=" << p.alpha
           << ", qtilde=" << p.qtilde << ", delta_e=" << p.delta_e << ")";
        throw HullError(os.str());
    }
}

}  // namespace

double evaluate(const GenericAeroModel& m, const AeroPoint& p) {
    check_hull(m, p);
    return m.value(p);
}

double evaluate(const GenericAeroModel& m, const FlightState& x, double cbar) {
    return evaluate(m, project(x, cbar));
}

std::array<double, 3> gradient(const GenericAeroModel& m, const AeroPoint& p) {
    check_hull(m, p);
    return m.partials(p);
}

std::array<double, 3> gradient(const GenericAeroModel& m, const FlightState& x, double cbar) {
    return gradient(m, project(x, cbar));
}

std::vector<Exponents> canonical_cm_terms() {
    return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
            {2, 1, 0}, {2, 0, 1}, {3, 1, 0}, {3, 0, 1}, {4, 0, 0}};
}

std::vector<Exponents> canonical_cz_terms() {
    return {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {2, 0, 0}, {3, 0, 0}};
}

GenericAeroModel make_model(Channel c, const std::vector<Exponents>& e, const std::vector<double>& theta,
                            const Hull& hull) {
    if (e.size() != theta.size()) throw ConfigError("term and coefficient counts differ");
    GenericAeroModel m;
    m.channel = c;
    m.hull = hull;
    for (std::size_t i = 0; i < e.size(); ++i) m.terms.push_back({theta[i], e[i]});
    m.validate();
    return m;
}

// ---- JSON ----

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(std::string("unknown field '") + it.key() + "' in " + where);
    }
}

json range_to_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ConfigError("hull ranges must be [min, max]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json model_to_json(const GenericAeroModel& m) {
    json terms = json::array();
    for (const auto& t : m.terms)
        terms.push_back({{"theta", t.theta}, {"exp_alpha", t.e.alpha}, {"exp_qtilde", t.e.qtilde},
                         {"exp_deltae", t.e.delta_e}});
    return {{"channel", to_string(m.channel)},
            {"terms", terms},
            {"hull",
             {{"alpha", range_to_json(m.hull.alpha)},
              {"qtilde", range_to_json(m.hull.qtilde)},
              {"delta_e", range_to_json(m.hull.delta_e)}}}};
}

GenericAeroModel model_from_json(const json& j) {
    reject_unknown(j, {"channel", "terms", "hull"}, "model");
    GenericAeroModel m;
    m.channel = channel_from_string(j.at("channel").get<std::string>());
    for (const auto& t : j.at("terms")) {
        reject_unknown(t, {"theta", "exp_alpha", "exp_qtilde", "exp_deltae"}, "term");
        m.terms.push_back({t.at("theta").get<double>(),
                           {t.value("exp_alpha", 0), t.value("exp_qtilde", 0), t.value("exp_deltae", 0)}});
    }
    if (j.contains("hull")) {
        const auto& h = j["hull"];
        reject_unknown(h, {"alpha", "qtilde", "delta_e"}, "hull");
        if (h.contains("alpha")) m.hull.alpha = range_from_json(h["alpha"]);
        if (h.contains("qtilde")) m.hull.qtilde = range_from_json(h["qtilde"]);
        if (h.contains("delta_e")) m.hull.delta_e = range_from_json(h["delta_e"]);
    }
    m.validate();
    return m;
}

}  // namespace

std::string model_to_json_text(const GenericAeroModel& m) { return model_to_json(m).dump(); }

GenericAeroModel model_from_json_text(const std::string& text) {
    try {
        return model_from_json(json::parse(text));
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("model: ") + ex.what());
    }
}

std::string prior_to_json(const PriorCatalogEntry& e) {
    json models = json::array();
    if (e.cm) models.push_back(model_to_json(*e.cm));
    if (e.cz) models.push_back(model_to_json(*e.cz));
    const auto& g = e.geometry;
    json j = {{"name", e.name},
              {"models", models},
              {"geometry",
               {{"S", g.S}, {"cbar", g.cbar}, {"mass", g.mass}, {"Iy", g.Iy}, {"Ix", g.Ix}, {"Iz", g.Iz},
                {"Ixz", g.Ixz}, {"cg", g.cg}}}};
    if (e.drag) j["drag"] = {{"cx0", e.drag->cx0}, {"cx_alpha2", e.drag->cx_alpha2}};
    return j.dump(2) + "\n";
}

PriorCatalogEntry prior_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("prior file does not parse: ") + ex.what());
    }
    try {
        reject_unknown(j, {"name", "models", "geometry", "drag"}, "prior");
        PriorCatalogEntry e;
        e.name = j.at("name").get<std::string>();
        for (const auto& mj : j.at("models")) {
            auto m = model_from_json(mj);
            auto& slot = m.channel == Channel::Cm ? e.cm : e.cz;
            if (slot) throw ConfigError("prior defines a channel twice");
            slot = std::move(m);
        }
        const auto& g = j.at("geometry");
        reject_unknown(g, {"S", "cbar", "mass", "Iy", "Ix", "Iz", "Ixz", "cg"}, "geometry");
        e.geometry = {g.at("S").get<double>(), g.at("cbar").get<double>(), g.at("mass").get<double>(),
                      g.at("Iy").get<double>(), g.value("Ix", 0.0), g.value("Iz", 0.0),
                      g.value("Ixz", 0.0), g.value("cg", 0.25)};
        e.geometry.validate();
        if (j.contains("drag")) {
            reject_unknown(j["drag"], {"cx0", "cx_alpha2"}, "drag");
            e.drag = DragClosure{j["drag"].at("cx0").get<double>(), j["drag"].at("cx_alpha2").get<double>()};
        }
        if (e.cm && e.cz) {
            const auto& a = e.cm->hull;
            const auto& b = e.cz->hull;
            if (a.alpha.min != b.alpha.min || a.alpha.max != b.alpha.max || a.qtilde.min != b.qtilde.min ||
                a.qtilde.max != b.qtilde.max || a.delta_e.min != b.delta_e.min || a.delta_e.max != b.delta_e.max)
                throw ConfigError("Cm and Cz models must share a hull");
        }
        return e;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("prior file: ") + ex.what());
    }
}

PriorCatalogEntry load_prior(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prior file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return prior_from_json(ss.str());
}

void save_prior(const PriorCatalogEntry& entry, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << prior_to_json(entry);
}

// ---- fixtures ----
// Synthetic trainer-class aircraft. The wrong prior scales each truth term
// by a factor between 0.6 and 1.5.

AircraftGeometry fixture_geometry() { return {15.8, 2.36, 5000.0, 40000.0, 0.0, 0.0, 0.0, 0.25}; }

namespace {

const std::vector<double> kTruthCm{0.02, -0.55, -16.0, -1.05, -2.0, 3.0, 0.4, -2.0, -0.5, 1.0};
const std::vector<double> kTruthCz{-0.02, -4.6, -4.0, -0.45, 1.5, -2.0};
const std::vector<double> kWrongCmScale{1.5, 0.64, 0.63, 1.33, 0.7, 1.3, 0.6, 1.4, 0.7, 1.3};
const std::vector<double> kWrongCzScale{1.5, 0.76, 1.37, 0.67, 0.7, 1.3};

}  // namespace

PriorCatalogEntry fixture_truth_like() {
    PriorCatalogEntry e;
    e.name = "truth-like";
    e.cm = make_model(Channel::Cm, canonical_cm_terms(), kTruthCm);
    e.cz = make_model(Channel::Cz, canonical_cz_terms(), kTruthCz);
    e.geometry = fixture_geometry();
    e.drag = DragClosure{};
    return e;
}

PriorCatalogEntry fixture_wrong_prior() {
    auto scaled = [](const std::vector<double>& v, const std::vector<double>& s) {
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s[i];
        return out;
    };
    PriorCatalogEntry e;
    e.name = "wrong-prior";
    e.cm = make_model(Channel::Cm, canonical_cm_terms(), scaled(kTruthCm, kWrongCmScale));
    e.cz = make_model(Channel::Cz, canonical_cz_terms(), scaled(kTruthCz, kWrongCzScale));
    e.geometry = fixture_geometry();
    return e;
}

}  // namespace sysid
