#pragma once

#include "bidforge/embeddings.hpp"
#include "bidforge/text.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bidforge {

inline constexpr std::size_t kMaxDocumentTokens = 500;
inline constexpr std::size_t kTransportIterationCap = 1'000'000;

// Normalized bag of words. Tokens are unique and in first-occurrence order.
struct NBowDocument {
    std::vector<std::string> tokens;
    std::vector<double> weights;

    bool operator==(const NBowDocument&) const = default;
};

// Lowercase alphabetic tokens; stopwords and out-of-vocabulary words dropped;
// weights are counts over the surviving total. Throws DocumentEmpty or
// DocumentTooLarge (more than kMaxDocumentTokens unique tokens).
NBowDocument to_nbow(std::string_view text, const EmbeddingStore& store, const StopwordSet& stopwords);

// Row-major |A| x |B| flow matrix.
struct TransportPlan {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> flow;
    double objective = 0.0;

    double at(std::size_t i, std::size_t j) const { return flow[i * cols + j]; }
};

struct TransportSolution {
    TransportPlan plan;
    std::size_t iterations = 0;
};

// Exact minimum-cost transportation by network simplex on the bipartite
// graph. supply and demand must be non-negative with equal totals (1e-9);
// cost is row-major supply.size() x demand.size(). Entering arcs and leaving
// arcs are both chosen by smallest index, so results are deterministic.
// Throws SolverFailure once iteration_cap pivots are exceeded.
TransportSolution solve_transport(std::span<const double> supply, std::span<const double> demand,
                                  std::span<const double> cost, std::size_t iteration_cap = kTransportIterationCap);

enum class GroundMetric { Euclidean, Cosine };

std::string_view ground_metric_name(GroundMetric metric) noexcept;
GroundMetric parse_ground_metric(std::string_view name);

// Pairwise token distances, row-major |a| x |b|.
std::vector<double> ground_costs(const NBowDocument& a, const NBowDocument& b, const EmbeddingStore& store,
                                 GroundMetric metric = GroundMetric::Euclidean);

struct WmdResult {
    double distance = 0.0;
    TransportPlan plan;
};

WmdResult wmd(const NBowDocument& a, const NBowDocument& b, const EmbeddingStore& store,
              GroundMetric metric = GroundMetric::Euclidean);

// result[i][j] = wmd(docs_a[i], docs_b[j]).distance. Pairs are solved in
// parallel; a failing pair is reported with its indices.
std::vector<std::vector<double>> wmd_matrix(const std::vector<NBowDocument>& docs_a,
                                            const std::vector<NBowDocument>& docs_b, const EmbeddingStore& store,
                                            GroundMetric metric = GroundMetric::Euclidean, std::size_t workers = 0);

}  // namespace bidforge
