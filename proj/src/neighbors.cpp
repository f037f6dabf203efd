#include "adarf/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "adarf/error.hpp"

namespace adarf {

std::vector<Neighbor> knn(const Matrix& points, std::size_t query_row, const NeighborQuery& query) {
    if (query.k == 0) throw DataError("knn: k must be at least 1");
    if (query_row >= points.rows()) throw DataError("knn: query row out of range");
    if (query.candidate_mask && query.candidate_mask->size() != points.rows())
        throw DataError("knn: candidate mask size mismatch");

    const auto q = points.row(query_row);
    std::vector<std::pair<double, std::size_t>> pool;
    pool.reserve(points.rows());
    for (std::size_t r = 0; r < points.rows(); ++r) {
        if (r == query_row) continue;
        if (query.candidate_mask && !(*query.candidate_mask)[r]) continue;
        const auto p = points.row(r);
        double d2 = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c) {
            const double diff = p[c] - q[c];
            d2 += diff * diff;
        }
        pool.emplace_back(d2, r);
    }
    if (pool.empty()) throw DataError("knn: empty candidate pool");

    const std::size_t k = std::min(query.k, pool.size());
    std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k), pool.end());
    std::vector<Neighbor> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back({pool[i].second, std::sqrt(pool[i].first)});
    return out;
}

}  // namespace adarf
