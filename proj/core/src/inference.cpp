#include "sem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sem/csv.hpp"
#include "sem/errors.hpp"

namespace sem {

namespace {

double lchoose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double binomial_tail(int n, int s, double p0) {
    if (n < 0) throw std::invalid_argument("binomial_tail: n must be >= 0");
    if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("binomial_tail: p0 must be in [0,1]");
    if (s <= 0) return 1.0;
    if (s > n) return 0.0;
    if (p0 == 0.0) return 0.0;
    if (p0 == 1.0) return 1.0;
    const double lp = std::log(p0), lq = std::log1p(-p0);
    double tail = 0.0;
    for (int x = s; x <= n; ++x) tail += std::exp(lchoose(n, x) + x * lp + (n - x) * lq);
    return std::min(tail, 1.0);
}

double fisher_exact_greater(int a, int b, int c, int d) {
    if (a < 0 || b < 0 || c < 0 || d < 0)
        throw std::invalid_argument("fisher_exact_greater: counts must be >= 0");
    const int row1 = a + b, row2 = c + d, col1 = a + c, n = a + b + c + d;
    if (n == 0) return 1.0;
    const double lden = lchoose(n, col1);
    const int hi = std::min(row1, col1);
    double tail = 0.0;
    for (int x = a; x <= hi; ++x) {
        if (col1 - x > row2) continue;
        tail += std::exp(lchoose(row1, x) + lchoose(row2, col1 - x) - lden);
    }
    return std::min(tail, 1.0);
}

BhResult bh_adjust(const std::vector<double>& pvalues, double alpha) {
    const int m = static_cast<int>(pvalues.size());
    BhResult res;
    res.reject.assign(m, false);
    if (m == 0) return res;
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int u, int v) { return pvalues[u] < pvalues[v]; });
    int cut = 0;  // largest rank r with p_(r) <= alpha r / m
    for (int r = m; r >= 1; --r) {
        if (pvalues[order[r - 1]] <= alpha * r / m) {
            cut = r;
            break;
        }
    }
    if (cut > 0) {
        res.threshold = pvalues[order[cut - 1]];
        for (int i = 0; i < m; ++i) res.reject[i] = pvalues[i] <= res.threshold;
    }
    return res;
}

Centralities centralities(const Eigen::MatrixXi& adjacency) {
    const int p = static_cast<int>(adjacency.rows());
    if (adjacency.cols() != p) throw std::invalid_argument("centralities: adjacency must be square");
    Centralities c;
    c.out_degree = Eigen::VectorXd::Zero(p);
    c.in_degree = Eigen::VectorXd::Zero(p);
    c.betweenness = Eigen::VectorXd::Zero(p);
    c.closeness = Eigen::VectorXd::Zero(p);

    std::vector<std::vector<int>> succ(p);
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v)
            if (u != v && adjacency(u, v) != 0) {
                succ[u].push_back(v);
                c.out_degree[u] += 1.0;
                c.in_degree[v] += 1.0;
            }

    // Brandes accumulation over BFS shortest paths
    for (int s = 0; s < p; ++s) {
        std::vector<int> dist(p, -1), sigma(p, 0);
        std::vector<std::vector<int>> pred(p);
        std::vector<int> stack;
        std::deque<int> queue;
        dist[s] = 0;
        sigma[s] = 1;
        queue.push_back(s);
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            stack.push_back(u);
            for (int v : succ[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if (dist[v] == dist[u] + 1) {
                    sigma[v] += sigma[u];
                    pred[v].push_back(u);
                }
            }
        }
        std::vector<double> delta(p, 0.0);
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            const int w = *it;
            for (int u : pred[w])
                delta[u] += static_cast<double>(sigma[u]) / sigma[w] * (1.0 + delta[w]);
            if (w != s) c.betweenness[w] += delta[w];
        }
        double total_dist = 0.0;
        int reachable = 0;
        for (int v = 0; v < p; ++v)
            if (v != s && dist[v] > 0) {
                total_dist += dist[v];
                ++reachable;
            }
        if (reachable > 0) c.closeness[s] = reachable / total_dist;
    }
    return c;
}

NetworkInference infer_network(const std::vector<Eigen::MatrixXi>& task,
                               const std::vector<Eigen::MatrixXi>& baseline, double alpha) {
    if (task.empty()) throw std::invalid_argument("network inference needs task subjects");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("significance level must be in (0,1)");
    const int p = static_cast<int>(task[0].rows());
    for (const auto& a : task)
        if (a.rows() != p || a.cols() != p)
            throw std::invalid_argument("task adjacencies must all be p x p");
    for (const auto& a : baseline)
        if (a.rows() != p || a.cols() != p)
            throw std::invalid_argument("baseline adjacencies must all be p x p");

    NetworkInference inf;
    inf.p = p;
    inf.n_task = static_cast<int>(task.size());
    inf.n_baseline = static_cast<int>(baseline.size());
    inf.alpha = alpha;

    Eigen::MatrixXi task_counts = Eigen::MatrixXi::Zero(p, p);
    Eigen::MatrixXi base_counts = Eigen::MatrixXi::Zero(p, p);
    for (const auto& a : task) task_counts += (a.array() != 0).cast<int>().matrix();
    for (const auto& a : baseline) base_counts += (a.array() != 0).cast<int>().matrix();

    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            if (task_counts(i, j) == 0) continue;  // only edges seen in some subject
            EdgeTest e;
            e.src = j;
            e.dst = i;
            e.task_count = task_counts(i, j);
            e.baseline_count = base_counts(i, j);
            e.binomial_p = binomial_tail(inf.n_task, e.task_count, 0.5);
            if (inf.n_baseline > 0)
                e.fisher_p = fisher_exact_greater(e.task_count, inf.n_task - e.task_count,
                                                  e.baseline_count,
                                                  inf.n_baseline - e.baseline_count);
            inf.edges.push_back(e);
        }

    std::vector<double> binom_p(inf.edges.size());
    for (size_t e = 0; e < inf.edges.size(); ++e) binom_p[e] = inf.edges[e].binomial_p;
    const BhResult binom_bh = bh_adjust(binom_p, alpha);
    inf.network = Eigen::MatrixXi::Zero(p, p);
    for (size_t e = 0; e < inf.edges.size(); ++e) {
        inf.edges[e].binomial_reject = binom_bh.reject[e];
        if (binom_bh.reject[e]) inf.network(inf.edges[e].dst, inf.edges[e].src) = 1;
    }

    if (inf.n_baseline > 0) {
        std::vector<double> fisher_p(inf.edges.size());
        for (size_t e = 0; e < inf.edges.size(); ++e) fisher_p[e] = inf.edges[e].fisher_p;
        const BhResult fisher_bh = bh_adjust(fisher_p, alpha);
        inf.refined = Eigen::MatrixXi::Zero(p, p);
        for (size_t e = 0; e < inf.edges.size(); ++e) {
            inf.edges[e].fisher_reject = fisher_bh.reject[e];
            inf.edges[e].refined = inf.edges[e].binomial_reject && inf.edges[e].fisher_reject;
            if (inf.edges[e].refined) inf.refined(inf.edges[e].dst, inf.edges[e].src) = 1;
        }
    }

    inf.network_centralities = centralities(inf.network);
    return inf;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXi& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

nlohmann::json inference_to_json(const NetworkInference& inf) {
    nlohmann::json j;
    j["p"] = inf.p;
    j["n_task"] = inf.n_task;
    j["n_baseline"] = inf.n_baseline;
    j["alpha"] = inf.alpha;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : inf.edges) {
        edges.push_back({{"src", e.src + 1},
                         {"dst", e.dst + 1},
                         {"task_count", e.task_count},
                         {"baseline_count", e.baseline_count},
                         {"binomial_p", e.binomial_p},
                         {"fisher_p", e.fisher_p},
                         {"binomial_reject", e.binomial_reject},
                         {"fisher_reject", e.fisher_reject},
                         {"refined", e.refined}});
    }
    j["edges"] = edges;
    j["network"] = matrix_to_json(inf.network);
    if (inf.refined.size() > 0) j["refined"] = matrix_to_json(inf.refined);
    j["centralities"] = {{"out_degree", vector_to_json(inf.network_centralities.out_degree)},
                         {"in_degree", vector_to_json(inf.network_centralities.in_degree)},
                         {"betweenness", vector_to_json(inf.network_centralities.betweenness)},
                         {"closeness", vector_to_json(inf.network_centralities.closeness)}};
    return j;
}

void write_edge_csv(const std::string& path, const NetworkInference& inf) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "src,dst,task_count,baseline_count,binomial_p,fisher_p,binomial_reject,"
           "fisher_reject,refined\n";
    for (const auto& e : inf.edges)
        out << e.src + 1 << ',' << e.dst + 1 << ',' << e.task_count << ',' << e.baseline_count
            << ',' << format_double(e.binomial_p) << ',' << format_double(e.fisher_p) << ','
            << (e.binomial_reject ? 1 : 0) << ',' << (e.fisher_reject ? 1 : 0) << ','
            << (e.refined ? 1 : 0) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_centrality_csv(const std::string& path, const Centralities& c) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "node,out_degree,in_degree,betweenness,closeness\n";
    for (int v = 0; v < c.out_degree.size(); ++v)
        out << v + 1 << ',' << format_double(c.out_degree[v]) << ','
            << format_double(c.in_degree[v]) << ',' << format_double(c.betweenness[v]) << ','
            << format_double(c.closeness[v]) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace sem
