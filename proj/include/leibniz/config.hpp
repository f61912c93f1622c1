#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "leibniz/distribution.hpp"
#include "leibniz/errors.hpp"
#include "leibniz/expr.hpp"
#include "leibniz/integrate.hpp"
#include "leibniz/measure.hpp"
#include "leibniz/partition.hpp"
#include "leibniz/rational.hpp"

namespace leibniz {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace cfg {

inline Rational rational_field(const json& j, const std::string& path) {
    if (j.is_string()) {
        auto q = parse_rational(j.get<std::string>());
        if (!q) throw ConfigError(path, "not a rational ('p/q', integer or decimal)");
        return *q;
    }
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_number_unsigned()) return Rational(j.get<std::uint64_t>());
    if (j.is_number_float()) return rational_from_double(j.get<double>());
    throw ConfigError(path, "expected a number or rational string");
}

inline const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(path + "." + key, "missing required field");
    return j.at(key);
}

inline TieRule tie_field(const json& j, const std::string& path) {
    std::string s = j.get<std::string>();
    if (s == "left" || s == "leftmost") return TieRule::Leftmost;
    if (s == "right" || s == "rightmost") return TieRule::Rightmost;
    throw ConfigError(path, "tie must be 'left' or 'right'");
}

inline CompareMode mode_field(const json& j, const std::string& path) {
    std::string s = j.get<std::string>();
    if (s == "total") return CompareMode::Total;
    if (s == "eventual") return CompareMode::Eventual;
    if (s == "ultra") return CompareMode::Ultra;
    throw ConfigError(path, "mode must be 'total', 'eventual' or 'ultra'");
}

inline FinAddMeasure measure_from_json(const json& j, const std::string& path, const Rational& a,
                                       const Rational& b) {
    if (!j.is_object()) throw ConfigError(path, "measure descriptor must be an object");
    std::string kind = field(j, "kind", path).get<std::string>();
    if (kind == "length") return FinAddMeasure::length();
    if (kind == "stieltjes") {
        RealFn g;
        try {
            g = parse_fn(field(j, "g", path).get<std::string>());
        } catch (const ParseError& e) {
            throw ConfigError(path + ".g", e.what());
        }
        return FinAddMeasure::stieltjes(g, a, b);
    }
    if (kind == "atom") {
        Rational x0 = rational_field(field(j, "x0", path), path + ".x0");
        Rational mass = j.contains("mass") ? rational_field(j.at("mass"), path + ".mass") : Rational(1);
        TieRule tie = j.contains("tie") ? tie_field(j.at("tie"), path + ".tie") : TieRule::Leftmost;
        return FinAddMeasure::atom(x0, mass, tie, a, b);
    }
    if (kind == "scaled") {
        Rational c = rational_field(field(j, "factor", path), path + ".factor");
        return FinAddMeasure::scaled(c, measure_from_json(field(j, "base", path), path + ".base", a, b));
    }
    if (kind == "sum") {
        const json& terms = field(j, "terms", path);
        if (!terms.is_array() || terms.size() < 2)
            throw ConfigError(path + ".terms", "expected an array of at least two measures");
        FinAddMeasure acc = measure_from_json(terms[0], path + ".terms[0]", a, b);
        for (std::size_t i = 1; i < terms.size(); ++i)
            acc = FinAddMeasure::sum(acc,
                                     measure_from_json(terms[i], path + ".terms[" + std::to_string(i) + "]", a, b));
        return acc;
    }
    throw ConfigError(path + ".kind", "unknown measure kind '" + kind + "'");
}

inline ClosedSet closed_set_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array of [lo, hi] pairs");
    std::vector<std::pair<Rational, Rational>> parts;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& p = j[i];
        std::string ppath = path + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2) throw ConfigError(ppath, "expected [lo, hi]");
        parts.emplace_back(rational_field(p[0], ppath + "[0]"), rational_field(p[1], ppath + "[1]"));
    }
    return ClosedSet::of(std::move(parts));
}

inline MonadicDistribution dist_from_json(const json& j, const std::string& path,
                                          const PartitionScheme& scheme) {
    if (!j.is_object()) throw ConfigError(path, "distribution descriptor must be an object");
    std::string kind = field(j, "kind", path).get<std::string>();
    const Rational &a = scheme.lo(), &b = scheme.hi();
    auto fn_of = [&](const char* key) {
        try {
            return parse_fn(field(j, key, path).get<std::string>());
        } catch (const ParseError& e) {
            throw ConfigError(path + "." + key, e.what());
        }
    };
    auto measure_of = [&] {
        return measure_from_json(field(j, "measure", path), path + ".measure", a, b);
    };
    if (kind == "measure_diff") return measure_diff(measure_of(), scheme);
    if (kind == "f_dmu") return form_f_dmu(fn_of("f"), measure_of(), scheme);
    if (kind == "indicator")
        return indicator_dist(closed_set_from_json(field(j, "Y", path), path + ".Y"), measure_of(),
                              scheme);
    if (kind == "delta") {
        Rational x0 = rational_field(field(j, "x0", path), path + ".x0");
        TieRule tie = j.contains("tie") ? tie_field(j.at("tie"), path + ".tie") : TieRule::Leftmost;
        return delta_times_dmu(x0, measure_of(), tie, scheme);
    }
    if (kind == "df") return df_dist(fn_of("f"), scheme);
    if (kind == "tagged") {
        std::string sel = j.contains("selector") ? j.at("selector").get<std::string>() : "left";
        TagSelector ts;
        if (sel == "left") ts = TagSelector::LeftEndpoint;
        else if (sel == "right") ts = TagSelector::RightEndpoint;
        else if (sel == "mid" || sel == "midpoint") ts = TagSelector::Midpoint;
        else throw ConfigError(path + ".selector", "expected 'left', 'right' or 'mid'");
        return tagged_dist(fn_of("f"), ts, measure_of(), scheme);
    }
    if (kind == "add" || kind == "mul") {
        const json& terms = field(j, "terms", path);
        if (!terms.is_array() || terms.size() != 2)
            throw ConfigError(path + ".terms", "expected exactly two distributions");
        return dist_combine(dist_from_json(terms[0], path + ".terms[0]", scheme),
                            dist_from_json(terms[1], path + ".terms[1]", scheme),
                            kind == "add" ? DistOp::Add : DistOp::Mul);
    }
    if (kind == "scale") {
        Rational c = rational_field(field(j, "factor", path), path + ".factor");
        return dist_scale(to_double(c), dist_from_json(field(j, "of", path), path + ".of", scheme));
    }
    throw ConfigError(path + ".kind", "unknown distribution kind '" + kind + "'");
}

struct Problem {
    PartitionScheme scheme;
    MonadicDistribution dist;
    double epsilon = 1e-6;
    std::size_t max_depth = 24;
    CompareMode mode = CompareMode::Eventual;
};

inline PartitionScheme scheme_from_json(const json& cfg) {
    const json& dom = field(cfg, "domain", "$");
    if (!dom.is_array() || dom.size() != 2) throw ConfigError("$.domain", "expected [a, b]");
    Rational a = rational_field(dom[0], "$.domain[0]");
    Rational b = rational_field(dom[1], "$.domain[1]");
    if (!(a < b)) throw ConfigError("$.domain", "needs a < b");
    if (cfg.contains("scheme")) {
        std::string kind = field(cfg.at("scheme"), "kind", "$.scheme").get<std::string>();
        if (kind != "dyadic")
            throw ConfigError("$.scheme.kind",
                              "only 'dyadic' schemes are configurable; custom schemes are "
                              "programmatic");
    }
    return PartitionScheme::dyadic(a, b);
}

inline Problem problem_from_json(const json& cfg) {
    PartitionScheme scheme = scheme_from_json(cfg);
    Problem p{scheme, dist_from_json(field(cfg, "dist", "$"), "$.dist", scheme)};
    if (cfg.contains("epsilon")) p.epsilon = cfg.at("epsilon").get<double>();
    if (cfg.contains("maxDepth")) p.max_depth = cfg.at("maxDepth").get<std::size_t>();
    if (cfg.contains("mode")) p.mode = mode_field(cfg.at("mode"), "$.mode");
    if (!(p.epsilon > 0)) throw ConfigError("$.epsilon", "must be positive");
    return p;
}

}  // namespace cfg

/// Certificate serialization: fixed field order, shortest round-trip
/// number rendering; identical inputs give byte-identical output.
inline ordered_json certificate_json(const IntegralCertificate& cert) {
    ordered_json out;
    out["value"] = cert.value;
    out["epsilon"] = cert.epsilon;
    out["certifiedDepth"] = cert.certified_depth;
    out["mode"] = to_string(cert.mode);
    out["gapByLevel"] = cert.gap_by_level();
    out["caveats"] = cert.caveats;
    out["lowerTotal"] = cert.lower_total;
    out["upperTotal"] = cert.upper_total;
    return out;
}

inline ordered_json failure_json(const IntegrationFailure& f) {
    ordered_json out;
    out["certified"] = false;
    out["reason"] = f.reason;
    out["maxDepth"] = f.max_depth;
    out["residualGap"] = f.residual_gap;
    std::vector<double> gaps;
    gaps.reserve(f.sums_by_level.size());
    for (const auto& s : f.sums_by_level) gaps.push_back(s.gap());
    out["gapByLevel"] = gaps;
    return out;
}

inline std::string sums_csv(const std::vector<LevelSums>& sums) {
    std::ostringstream os;
    os << "level,lowerSum,upperSum,gap\n";
    for (const auto& s : sums) {
        os << s.level << ',' << ordered_json(s.lower).dump() << ','
           << ordered_json(s.upper).dump() << ',' << ordered_json(s.gap()).dump() << '\n';
    }
    return os.str();
}

}  // namespace leibniz
