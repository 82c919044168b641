#pragma once

#include <cstddef>
#include <cstdint>

#include "evfusion/matrix.hpp"

namespace evfusion {

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // stop once no center moves further than this
};

// Lloyd's algorithm on the rows of `sample`. Initial centers are distinct
// sample rows drawn with the given seed; ties in assignment go to the lowest
// center index and empty clusters keep their previous center.
Matrix kmeans_init(const Matrix& sample, std::size_t count, std::uint64_t seed,
                   const KMeansOptions& options = {});

}  // namespace evfusion
