#include "bidforge/wmd.hpp"

#include "bidforge/error.hpp"
#include "bidforge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <unordered_map>

namespace bidforge {

NBowDocument to_nbow(std::string_view text, const EmbeddingStore& store, const StopwordSet& stopwords) {
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::size_t> counts;
    NBowDocument doc;
    std::size_t total = 0;
    for (auto& token : alpha_tokens(text)) {
        if (stopwords.count(token) || !store.contains(token)) continue;
        auto [it, inserted] = slot.emplace(token, doc.tokens.size());
        if (inserted) {
            if (doc.tokens.size() == kMaxDocumentTokens) {
                throw Error(ErrorKind::DocumentTooLarge,
                            "document has more than " + std::to_string(kMaxDocumentTokens) + " unique tokens");
            }
            doc.tokens.push_back(std::move(token));
            counts.push_back(0);
        }
        ++counts[it->second];
        ++total;
    }
    if (total == 0) throw Error(ErrorKind::DocumentEmpty, "no in-vocabulary tokens remain after preprocessing");
    doc.weights.reserve(counts.size());
    for (auto c : counts) doc.weights.push_back(static_cast<double>(c) / static_cast<double>(total));
    return doc;
}

namespace {

struct TreeArc {
    std::size_t to;
    std::size_t cell;
};

// Spanning-tree bookkeeping for one pivot: potentials plus parent links
// rooted at row 0. Nodes 0..m-1 are rows, m..m+n-1 are columns.
struct Tree {
    std::vector<double> potential;
    std::vector<std::size_t> parent;
    std::vector<std::size_t> parent_cell;
    std::vector<std::size_t> depth;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

Tree build_tree(std::size_t m, std::size_t n, const std::vector<std::size_t>& basis, std::span<const double> cost) {
    const std::size_t nodes = m + n;
    std::vector<std::vector<TreeArc>> adjacency(nodes);
    for (auto cell : basis) {
        const auto row = cell / n;
        const auto col = m + cell % n;
        adjacency[row].push_back({col, cell});
        adjacency[col].push_back({row, cell});
    }
    Tree tree{std::vector<double>(nodes, 0.0), std::vector<std::size_t>(nodes, kNone),
              std::vector<std::size_t>(nodes, kNone), std::vector<std::size_t>(nodes, 0)};
    std::vector<bool> seen(nodes, false);
    std::vector<std::size_t> queue{0};
    seen[0] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto node = queue[head];
        for (const auto& arc : adjacency[node]) {
            if (seen[arc.to]) continue;
            seen[arc.to] = true;
            // u_row + v_col = c(row, col) on every basic cell.
            tree.potential[arc.to] = cost[arc.cell] - tree.potential[node];
            tree.parent[arc.to] = node;
            tree.parent_cell[arc.to] = arc.cell;
            tree.depth[arc.to] = tree.depth[node] + 1;
            queue.push_back(arc.to);
        }
    }
    if (queue.size() != nodes) throw Error(ErrorKind::SolverFailure, "basis is not a spanning tree");
    return tree;
}

// Cells on the tree path from column node `from` to row node `to`, in walk order.
std::vector<std::size_t> tree_path(const Tree& tree, std::size_t from, std::size_t to) {
    std::vector<std::size_t> head;
    std::vector<std::size_t> tail;
    while (tree.depth[from] > tree.depth[to]) {
        head.push_back(tree.parent_cell[from]);
        from = tree.parent[from];
    }
    while (tree.depth[to] > tree.depth[from]) {
        tail.push_back(tree.parent_cell[to]);
        to = tree.parent[to];
    }
    while (from != to) {
        head.push_back(tree.parent_cell[from]);
        from = tree.parent[from];
        tail.push_back(tree.parent_cell[to]);
        to = tree.parent[to];
    }
    head.insert(head.end(), tail.rbegin(), tail.rend());
    return head;
}

void check_marginal(std::span<const double> values, const char* name) {
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::Precondition, std::string(name) + " must be finite and non-negative");
    }
}

}  // namespace

TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost, std::size_t iteration_cap) {
    const std::size_t m = supply.size();
    const std::size_t n = demand.size();
    if (m == 0 || n == 0) throw Error(ErrorKind::Precondition, "transport problem needs at least one row and column");
    if (cost.size() != m * n) throw Error(ErrorKind::Precondition, "cost matrix does not match marginals");
    check_marginal(supply, "supply");
    check_marginal(demand, "demand");
    double supply_total = 0.0;
    double demand_total = 0.0;
    for (double v : supply) supply_total += v;
    for (double v : demand) demand_total += v;
    if (std::abs(supply_total - demand_total) > 1e-9 * std::max(1.0, supply_total))
        throw Error(ErrorKind::Precondition, "supply and demand totals differ");
    double max_cost = 0.0;
    for (double c : cost) {
        if (!std::isfinite(c)) throw Error(ErrorKind::Precondition, "cost matrix has a non-finite entry");
        max_cost = std::max(max_cost, std::abs(c));
    }

    TransportSolution solution;
    auto& plan = solution.plan;
    plan.rows = m;
    plan.cols = n;
    plan.flow.assign(m * n, 0.0);

    // North-west corner start: m + n - 1 basic cells, degenerate zeros included.
    std::vector<std::size_t> basis;
    basis.reserve(m + n - 1);
    std::vector<bool> basic(m * n, false);
    {
        std::vector<double> s(supply.begin(), supply.end());
        std::vector<double> d(demand.begin(), demand.end());
        std::size_t i = 0;
        std::size_t j = 0;
        while (true) {
            const auto cell = i * n + j;
            const double x = std::min(s[i], d[j]);
            plan.flow[cell] = x;
            basis.push_back(cell);
            basic[cell] = true;
            s[i] -= x;
            d[j] -= x;
            if (i == m - 1 && j == n - 1) break;
            if (i == m - 1) {
                ++j;
            } else if (j == n - 1 || s[i] <= d[j]) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    const double tolerance = 1e-11 * max_cost;
    while (true) {
        const Tree tree = build_tree(m, n, basis, cost);

        std::size_t entering = kNone;
        for (std::size_t cell = 0; cell < m * n && entering == kNone; ++cell) {
            if (basic[cell]) continue;
            const double reduced = cost[cell] - tree.potential[cell / n] - tree.potential[m + cell % n];
            if (reduced < -tolerance) entering = cell;
        }
        if (entering == kNone) break;
        if (solution.iterations == iteration_cap)
            throw Error(ErrorKind::SolverFailure, "no convergence within " + std::to_string(iteration_cap) + " pivots");
        ++solution.iterations;

        // The entering cell closes a cycle with the tree path from its column
        // back to its row; flow alternates -, +, -, ... along that path.
        const auto path = tree_path(tree, m + entering % n, entering / n);
        double theta = plan.flow[path[0]];
        std::size_t leaving = path[0];
        for (std::size_t k = 0; k < path.size(); k += 2) {
            const auto cell = path[k];
            if (plan.flow[cell] < theta || (plan.flow[cell] == theta && cell < leaving)) {
                theta = plan.flow[cell];
                leaving = cell;
            }
        }
        plan.flow[entering] = theta;
        for (std::size_t k = 0; k < path.size(); ++k) {
            if (k % 2 == 0) {
                plan.flow[path[k]] -= theta;
            } else {
                plan.flow[path[k]] += theta;
            }
        }
        plan.flow[leaving] = 0.0;
        basic[leaving] = false;
        basic[entering] = true;
        *std::find(basis.begin(), basis.end(), leaving) = entering;
    }

    double objective = 0.0;
    for (std::size_t cell = 0; cell < m * n; ++cell) objective += plan.flow[cell] * cost[cell];
    plan.objective = objective;
    return solution;
}

std::string_view ground_metric_name(GroundMetric metric) noexcept {
    return metric == GroundMetric::Euclidean ? "euclidean" : "cosine";
}

GroundMetric parse_ground_metric(std::string_view name) {
    if (name == "euclidean") return GroundMetric::Euclidean;
    if (name == "cosine") return GroundMetric::Cosine;
    throw Error(ErrorKind::Config, "unknown ground metric '" + std::string(name) + "'");
}

namespace {

std::span<const double> lookup(const EmbeddingStore& store, const std::string& token) {
    auto v = store.vector(token);
    if (v.empty()) throw Error(ErrorKind::Precondition, "token '" + token + "' is not in the embedding vocabulary");
    return v;
}

double euclidean(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double diff = x[k] - y[k];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

double cosine_distance(std::span<const double> x, std::span<const double> y) {
    double dot = 0.0;
    double xx = 0.0;
    double yy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        dot += x[k] * y[k];
        xx += x[k] * x[k];
        yy += y[k] * y[k];
    }
    if (xx == 0.0 || yy == 0.0) return 1.0;
    return std::max(0.0, 1.0 - dot / (std::sqrt(xx) * std::sqrt(yy)));
}

void check_document(const NBowDocument& doc) {
    if (doc.tokens.empty()) throw Error(ErrorKind::DocumentEmpty, "empty document");
    if (doc.tokens.size() != doc.weights.size())
        throw Error(ErrorKind::Precondition, "document tokens and weights differ in length");
}

}  // namespace

std::vector<double> ground_costs(const NBowDocument& a, const NBowDocument& b, const EmbeddingStore& store,
                                 GroundMetric metric) {
    std::vector<std::span<const double>> va;
    std::vector<std::span<const double>> vb;
    for (const auto& t : a.tokens) va.push_back(lookup(store, t));
    for (const auto& t : b.tokens) vb.push_back(lookup(store, t));
    std::vector<double> costs(va.size() * vb.size());
    for (std::size_t i = 0; i < va.size(); ++i) {
        for (std::size_t j = 0; j < vb.size(); ++j) {
            costs[i * vb.size() + j] =
                metric == GroundMetric::Euclidean ? euclidean(va[i], vb[j]) : cosine_distance(va[i], vb[j]);
        }
    }
    return costs;
}

WmdResult wmd(const NBowDocument& a, const NBowDocument& b, const EmbeddingStore& store, GroundMetric metric) {
    check_document(a);
    check_document(b);
    WmdResult result;
    if (a == b) {
        for (const auto& t : a.tokens) lookup(store, t);
        auto& plan = result.plan;
        plan.rows = plan.cols = a.tokens.size();
        plan.flow.assign(plan.rows * plan.cols, 0.0);
        for (std::size_t i = 0; i < plan.rows; ++i) plan.flow[i * plan.cols + i] = a.weights[i];
        return result;
    }
    const auto costs = ground_costs(a, b, store, metric);
    auto solution = solve_transport(a.weights, b.weights, costs);
    result.plan = std::move(solution.plan);
    result.distance = std::max(0.0, result.plan.objective);
    return result;
}

std::vector<std::vector<double>> wmd_matrix(const std::vector<NBowDocument>& docs_a,
                                            const std::vector<NBowDocument>& docs_b, const EmbeddingStore& store,
                                            GroundMetric metric, std::size_t workers) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t cols = docs_b.size();
    const auto flat = parallel_map(docs_a.size() * cols, workers, [&](std::size_t k) {
        const auto i = k / cols;
        const auto j = k % cols;
        try {
            return wmd(docs_a[i], docs_b[j], store, metric).distance;
        } catch (const Error& e) {
            throw Error(e.kind(), "pair (" + std::to_string(i) + ", " + std::to_string(j) + "): " + e.what());
        }
    });
    std::vector<std::vector<double>> matrix(docs_a.size(), std::vector<double>(cols));
    for (std::size_t k = 0; k < flat.size(); ++k) matrix[k / cols][k % cols] = flat[k];
    return matrix;
}

}  // namespace bidforge
