#pragma once
// Small graphs shared by the tests and the acceptance suite.

#include <cstddef>
#include <vector>

#include "rwspatial/graph.hpp"

namespace fixture {

// rows x cols rook lattice, unit distances, both directions.
inline rwspatial::SpatialGraph lattice(std::size_t rows, std::size_t cols) {
  std::vector<rwspatial::Edge> edges;
  auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        edges.push_back({id(r, c), id(r, c + 1), {}});
        edges.push_back({id(r, c + 1), id(r, c), {}});
      }
      if (r + 1 < rows) {
        edges.push_back({id(r, c), id(r + 1, c), {}});
        edges.push_back({id(r + 1, c), id(r, c), {}});
      }
    }
  }
  return rwspatial::SpatialGraph::from_edges(rows * cols, std::move(edges));
}

}  // namespace fixture
