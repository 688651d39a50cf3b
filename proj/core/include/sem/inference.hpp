#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <json.hpp>

namespace sem {

/// Exact binomial tail P[Bin(n, p0) >= s].
double binomial_tail(int n, int s, double p0);

/// One-sided Fisher exact test on the 2x2 table (a b; c d) with fixed
/// margins, against the alternative that row 1 is enriched in column 1:
/// the hypergeometric tail P[X >= a].
double fisher_exact_greater(int a, int b, int c, int d);

struct BhResult {
    std::vector<bool> reject;
    double threshold = 0.0;  ///< largest p-value rejected (0 when none)
};

/// Benjamini-Hochberg step-up at level alpha over m = pvalues.size() tests.
BhResult bh_adjust(const std::vector<double>& pvalues, double alpha);

/// Directed-graph centralities; adjacency(u, v) != 0 means edge u -> v.
/// Self-loops are ignored throughout.  Betweenness counts shortest-path
/// fractions through each node; closeness normalizes reachable count by total
/// distance (0 for nodes that reach nothing).
struct Centralities {
    Eigen::VectorXd out_degree;
    Eigen::VectorXd in_degree;
    Eigen::VectorXd betweenness;
    Eigen::VectorXd closeness;
};

Centralities centralities(const Eigen::MatrixXi& adjacency);

/// Edge screening across subjects.  Each subject contributes a dependence
/// adjacency a(i, j) = 1 when variable j enters equation i (edge j -> i).
/// Candidate edges (seen in any task subject) get an exact binomial test of
/// prevalence exceeding 1/2; with baseline subjects a one-sided Fisher exact
/// test of task enrichment is added.  Each screen is BH-corrected over the
/// candidate set; the refined network keeps edges rejected in both screens.
struct EdgeTest {
    int src = 0, dst = 0;
    int task_count = 0, baseline_count = 0;
    double binomial_p = 1.0, fisher_p = 1.0;
    bool binomial_reject = false, fisher_reject = false, refined = false;
};

struct NetworkInference {
    int p = 0;
    int n_task = 0, n_baseline = 0;
    double alpha = 0.05;
    std::vector<EdgeTest> edges;            ///< candidate edges
    Eigen::MatrixXi network;                ///< binomial-screened adjacency (i, j)
    Eigen::MatrixXi refined;                ///< both screens (empty without baseline)
    Centralities network_centralities;
};

NetworkInference infer_network(const std::vector<Eigen::MatrixXi>& task,
                               const std::vector<Eigen::MatrixXi>& baseline, double alpha);

nlohmann::json inference_to_json(const NetworkInference& inf);
void write_edge_csv(const std::string& path, const NetworkInference& inf);
void write_centrality_csv(const std::string& path, const Centralities& c);

}  // namespace sem
