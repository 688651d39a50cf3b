#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

namespace sem {

enum class FeatureKind { Constant, Sine, Cosine, Monomial };

/// One scalar feature of the state (optionally including time as an extra
/// variable).  Monomials store one exponent per variable.
struct FeatureDescriptor {
    FeatureKind kind = FeatureKind::Constant;
    int variable = -1;           ///< sine/cosine argument index
    std::vector<int> exponents;  ///< monomial exponents, length = variable count
    std::string label;
};

/// Ordered feature library: constant, then sin/cos per variable (when trig is
/// on), then monomials of total degree 1..degree in graded lexicographic
/// order.  include_time appends t as variable index p.
struct BasisLibrary {
    int p = 0;
    int degree = 0;
    bool trig = false;
    bool include_time = false;
    std::vector<FeatureDescriptor> features;

    int size() const { return static_cast<int>(features.size()); }
    int variables() const { return p + (include_time ? 1 : 0); }
};

BasisLibrary poly_trig_library(int p, int degree, bool trig, bool include_time = false);

/// Feature vector H(x, t), length D.
Eigen::VectorXd evaluate(const BasisLibrary& lib, const Eigen::VectorXd& x, double t = 0.0);

/// Feature matrix for many states: n x D with row j = H(states.col(j), times(j)).
Eigen::MatrixXd evaluate_all(const BasisLibrary& lib, const Eigen::MatrixXd& states,
                             const Eigen::VectorXd& times);

/// Whether the feature's value depends on state variable j (0-based).
bool depends_on(const FeatureDescriptor& f, int variable);

nlohmann::json library_to_json(const BasisLibrary& lib);
BasisLibrary library_from_json(const nlohmann::json& j);

}  // namespace sem
