#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cvec.hpp"
#include "domain.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "fields.hpp"
#include "flows.hpp"
#include "herglotz.hpp"

namespace holoflow {

struct BuiltinEntry {
    std::string name;
    std::string note;
};

inline std::vector<BuiltinEntry> builtin_field_catalog() {
    return {
        {"minus-z", "H(z) = -z, the radial contraction (any dimension)"},
        {"rotation", "H(z) = i z, a neutral rotation field (any dimension)"},
        {"tanh-field", "H(z) = 1 - z^2 on the disc; its flow tends to 1"},
        {"constant-one", "H(z) = 1 on the disc; not a generator"},
        {"bp-cayley", "(1-z)^2 (1+z)/(1-z) in factored form; equals 1 - z^2"},
        {"spiral", "diagonal linear field diag(-1, -2+i) in dimension 2"},
        {"damped-tanh-mix", "0.3 (-z) + 0.7 (1 - z^2), a cone combination"},
    };
}

inline std::vector<BuiltinEntry> builtin_herglotz_catalog() {
    return {
        {"steady-tanh", "time-independent 1 - z^2"},
        {"aging-contraction", "G(z,t) = -(1+t) z, declared order 2"},
        {"piecewise-demo", "-z for t < 1, then i z; switching time t = 1"},
    };
}

inline std::vector<BuiltinEntry> builtin_ef_catalog() {
    return {
        {"ef-identity", "phi_{s,t}(z) = z"},
        {"ef-exp", "phi_{s,t}(z) = exp(-(t-s)) z"},
        {"ef-aging", "phi_{s,t}(z) = z exp(-(t-s) - (t^2-s^2)/2); driven by -(1+t) z"},
        {"ef-tanh", "the Moebius flow of 1 - z^2"},
    };
}

inline std::vector<BuiltinEntry> builtin_family_catalog() {
    return {
        {"shrink", "f_t(z) = (1-t) z, valid for t < 1"},
        {"euler", "f_t(z) = z + t H(z) for a supplied field H"},
    };
}

inline HolomorphicField make_builtin_field(const std::string& name, int dim = 0) {
    auto fixed_dim = [&](int want) {
        if (dim != 0 && dim != want)
            throw InvalidFieldError("builtin field '" + name + "' has fixed dimension " +
                                    std::to_string(want));
        return want;
    };
    if (name == "minus-z") return linear_field(CMat::scaled_identity(dim == 0 ? 1 : dim, -1.0));
    if (name == "rotation")
        return linear_field(CMat::scaled_identity(dim == 0 ? 1 : dim, cplx(0.0, 1.0)));
    if (name == "tanh-field") {
        fixed_dim(1);
        return poly1({1.0, 0.0, -1.0});
    }
    if (name == "constant-one") {
        fixed_dim(1);
        return poly1({1.0});
    }
    if (name == "bp-cayley") {
        fixed_dim(1);
        RationalPoly p;
        p.num = {cplx(1.0, 0.0), cplx(1.0, 0.0)};
        p.den = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
        return berkson_porta(cplx(1.0, 0.0), p);
    }
    if (name == "spiral") {
        fixed_dim(2);
        return linear_field(CMat::diagonal({cplx(-1.0, 0.0), cplx(-2.0, 1.0)}));
    }
    if (name == "damped-tanh-mix") {
        fixed_dim(1);
        return cone_combine({make_builtin_field("minus-z"), make_builtin_field("tanh-field")},
                            {0.3, 0.7});
    }
    throw InvalidFieldError("unknown builtin field '" + name + "'");
}

inline HerglotzField make_builtin_herglotz(const std::string& name) {
    if (name == "steady-tanh") return autonomous_herglotz(make_builtin_field("tanh-field"));
    if (name == "aging-contraction") {
        HerglotzField g;
        g.pieces.push_back(HerglotzPiece{0.0, make_builtin_field("minus-z"), {1.0, 1.0}});
        g.order_d = 2.0;
        g.validate();
        return g;
    }
    if (name == "piecewise-demo") {
        HerglotzField g;
        g.pieces.push_back(HerglotzPiece{0.0, make_builtin_field("minus-z"), {1.0}});
        g.pieces.push_back(HerglotzPiece{1.0, make_builtin_field("rotation"), {1.0}});
        g.validate();
        return g;
    }
    throw InvalidFieldError("unknown builtin time-dependent field '" + name + "'");
}

inline EvolutionFamily make_builtin_ef(const std::string& name) {
    const DomainModel disc = DomainModel::disc();
    if (name == "ef-identity")
        return EvolutionFamily::closed(disc, name,
                                       [](double, double, const cvec& z) { return z; });
    if (name == "ef-exp")
        return EvolutionFamily::closed(disc, name, [](double s, double t, const cvec& z) {
            return std::exp(-(t - s)) * z;
        });
    if (name == "ef-aging")
        return EvolutionFamily::closed(
            disc, name,
            [](double s, double t, const cvec& z) {
                return std::exp(-(t - s) - 0.5 * (t * t - s * s)) * z;
            },
            2.0);
    if (name == "ef-tanh")
        return EvolutionFamily::closed(disc, name, [](double s, double t, const cvec& z) {
            const double T = std::tanh(t - s);
            return cvec1((z[0] + T) / (1.0 + z[0] * T));
        });
    throw InvalidFieldError("unknown builtin evolution family '" + name + "'");
}

inline DiscreteFamily make_builtin_family(const std::string& name) {
    if (name == "shrink")
        return closed_form_family("shrink",
                                  [](double t, const cvec& z) { return (1.0 - t) * z; }, 1.0);
    throw InvalidFieldError("unknown builtin discrete family '" + name + "'");
}

}  // namespace holoflow
