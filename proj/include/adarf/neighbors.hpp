#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "adarf/matrix.hpp"

namespace adarf {

struct Neighbor {
    std::size_t row = 0;
    double distance = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Euclidean k-NN request. When candidate_mask is set, only rows whose entry
// is true are eligible; the query row itself is never eligible.
struct NeighborQuery {
    std::size_t k = 5;
    std::optional<std::vector<bool>> candidate_mask;
};

// Exact brute-force search. Returns min(k, pool) neighbors by ascending
// distance, ties by ascending row index. Throws DataError on an empty pool.
std::vector<Neighbor> knn(const Matrix& points, std::size_t query_row, const NeighborQuery& query);

}  // namespace adarf
