#include "sem/basis.hpp"

#include <cmath>
#include <stdexcept>

#include "sem/errors.hpp"

namespace sem {

static std::string var_label(int v, int p) {
    return v == p ? std::string("t") : "x" + std::to_string(v + 1);
}

static std::string monomial_label(const std::vector<int>& e, int p) {
    std::string out;
    for (size_t v = 0; v < e.size(); ++v) {
        if (e[v] == 0) continue;
        if (!out.empty()) out += "*";
        out += var_label(static_cast<int>(v), p);
        if (e[v] > 1) out += "^" + std::to_string(e[v]);
    }
    return out;
}

// exponent vectors of total degree d over nv variables, lexicographically
// descending, so degree 2 over (x1, x2) lists x1^2, x1*x2, x2^2
static void gen_monomials(int nv, int d, std::vector<int>& current, int at,
                          std::vector<std::vector<int>>& out) {
    if (at == nv - 1) {
        current[at] = d;
        out.push_back(current);
        current[at] = 0;
        return;
    }
    for (int e = d; e >= 0; --e) {
        current[at] = e;
        gen_monomials(nv, d - e, current, at + 1, out);
    }
    current[at] = 0;
}

BasisLibrary poly_trig_library(int p, int degree, bool trig, bool include_time) {
    if (p < 1) throw std::invalid_argument("library needs p >= 1");
    if (degree < 0) throw std::invalid_argument("library degree must be >= 0");
    BasisLibrary lib;
    lib.p = p;
    lib.degree = degree;
    lib.trig = trig;
    lib.include_time = include_time;
    const int nv = lib.variables();

    FeatureDescriptor constant;
    constant.kind = FeatureKind::Constant;
    constant.label = "1";
    lib.features.push_back(constant);

    if (trig) {
        for (int v = 0; v < nv; ++v) {
            FeatureDescriptor f;
            f.kind = FeatureKind::Sine;
            f.variable = v;
            f.label = "sin(" + var_label(v, p) + ")";
            lib.features.push_back(f);
        }
        for (int v = 0; v < nv; ++v) {
            FeatureDescriptor f;
            f.kind = FeatureKind::Cosine;
            f.variable = v;
            f.label = "cos(" + var_label(v, p) + ")";
            lib.features.push_back(f);
        }
    }

    std::vector<std::vector<int>> exps;
    std::vector<int> current(nv, 0);
    for (int d = 1; d <= degree; ++d) gen_monomials(nv, d, current, 0, exps);
    for (auto& e : exps) {
        FeatureDescriptor f;
        f.kind = FeatureKind::Monomial;
        f.exponents = e;
        f.label = monomial_label(e, p);
        lib.features.push_back(f);
    }
    return lib;
}

Eigen::VectorXd evaluate(const BasisLibrary& lib, const Eigen::VectorXd& x, double t) {
    if (static_cast<int>(x.size()) != lib.p)
        throw std::invalid_argument("state size does not match library p");
    const int nv = lib.variables();
    Eigen::VectorXd vars(nv);
    vars.head(lib.p) = x;
    if (lib.include_time) vars[lib.p] = t;

    Eigen::VectorXd h(lib.size());
    for (int d = 0; d < lib.size(); ++d) {
        const FeatureDescriptor& f = lib.features[d];
        switch (f.kind) {
            case FeatureKind::Constant: h[d] = 1.0; break;
            case FeatureKind::Sine: h[d] = std::sin(vars[f.variable]); break;
            case FeatureKind::Cosine: h[d] = std::cos(vars[f.variable]); break;
            case FeatureKind::Monomial: {
                double v = 1.0;
                for (int j = 0; j < nv; ++j)
                    for (int e = 0; e < f.exponents[j]; ++e) v *= vars[j];
                h[d] = v;
                break;
            }
        }
    }
    return h;
}

Eigen::MatrixXd evaluate_all(const BasisLibrary& lib, const Eigen::MatrixXd& states,
                             const Eigen::VectorXd& times) {
    const int n = static_cast<int>(states.cols());
    if (times.size() != 0 && times.size() != n)
        throw std::invalid_argument("times must be empty or match the state count");
    Eigen::MatrixXd H(n, lib.size());
    for (int j = 0; j < n; ++j)
        H.row(j) = evaluate(lib, states.col(j), times.size() ? times[j] : 0.0).transpose();
    return H;
}

bool depends_on(const FeatureDescriptor& f, int variable) {
    switch (f.kind) {
        case FeatureKind::Constant: return false;
        case FeatureKind::Sine:
        case FeatureKind::Cosine: return f.variable == variable;
        case FeatureKind::Monomial:
            return variable < static_cast<int>(f.exponents.size()) && f.exponents[variable] > 0;
    }
    return false;
}

nlohmann::json library_to_json(const BasisLibrary& lib) {
    nlohmann::json j;
    j["p"] = lib.p;
    j["degree"] = lib.degree;
    j["trig"] = lib.trig;
    j["include_time"] = lib.include_time;
    std::vector<std::string> labels;
    for (const auto& f : lib.features) labels.push_back(f.label);
    j["labels"] = labels;
    return j;
}

BasisLibrary library_from_json(const nlohmann::json& j) {
    BasisLibrary lib = poly_trig_library(j.at("p").get<int>(), j.at("degree").get<int>(),
                                         j.at("trig").get<bool>(), j.at("include_time").get<bool>());
    const auto labels = j.at("labels").get<std::vector<std::string>>();
    if (static_cast<int>(labels.size()) != lib.size())
        throw config_error("library description does not match its feature count");
    for (int d = 0; d < lib.size(); ++d)
        if (labels[d] != lib.features[d].label)
            throw config_error("library label mismatch at feature " + std::to_string(d));
    return lib;
}

}  // namespace sem
