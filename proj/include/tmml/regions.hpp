#pragma once

#include <tmml/error.hpp>
#include <tmml/rng.hpp>

#include <limits>
#include <vector>

namespace tmml {

/// Labels every cell of a rows x cols grid with the nearest of `k` random
/// seed points, giving spatially contiguous blobs. Every label is used.
inline std::vector<int> voronoi_regions(int rows, int cols, int k, Rng& rng)
{
    detail::require(rows > 0 && cols > 0, "voronoi_regions: grid must be non-empty");
    detail::require(k >= 1 && k <= rows * cols, "voronoi_regions: region count must be in 1..cells");
    std::vector<int> sites;
    std::vector<char> taken(static_cast<std::size_t>(rows * cols), 0);
    while (static_cast<int>(sites.size()) < k) {
        const int cell = static_cast<int>(rng.index(static_cast<std::size_t>(rows * cols)));
        if (!taken[static_cast<std::size_t>(cell)]) {
            taken[static_cast<std::size_t>(cell)] = 1;
            sites.push_back(cell);
        }
    }
    std::vector<int> labels(static_cast<std::size_t>(rows * cols));
    for (int cell = 0; cell < rows * cols; ++cell) {
        const int r = cell / cols;
        const int c = cell % cols;
        int best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (int s = 0; s < k; ++s) {
            const int dr = r - sites[static_cast<std::size_t>(s)] / cols;
            const int dc = c - sites[static_cast<std::size_t>(s)] % cols;
            const int d = dr * dr + dc * dc;
            if (d < best_d) {
                best_d = d;
                best = s;
            }
        }
        labels[static_cast<std::size_t>(cell)] = best;
    }
    return labels;
}

} // namespace tmml
