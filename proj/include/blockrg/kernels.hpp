#pragma once

#include <cstdint>
#include <vector>

#include <omp.h>

#include "blockrg/lattice.hpp"
#include "blockrg/quadrature.hpp"

// Hot loops with a serial reference and an OpenMP version. The parallel
// versions split the work into a fixed number of chunks and add the chunk
// results in chunk order, so the result does not depend on the thread count.
namespace blockrg::kernels {

inline constexpr int kChunks = 64;

std::int64_t grid_size(const std::vector<Rule1D>& rules);

// Odometer over a tensor grid, starting at a flat index.
class GridCursor {
 public:
  GridCursor(const std::vector<Rule1D>& rules, std::int64_t start);
  const double* point() const { return point_.data(); }
  double weight() const { return weight_; }
  void next();

 private:
  void refresh();
  const std::vector<Rule1D>& rules_;
  std::vector<std::size_t> digit_;
  std::vector<double> point_;
  double weight_ = 1.0;
};

// sum over the grid of (product of weights) * f(point). make() returns a fresh
// callable double(const double*) so each thread owns its scratch state.
template <class MakeEval>
double tensor_sum_serial(const std::vector<Rule1D>& rules, MakeEval make) {
  auto f = make();
  const std::int64_t n = grid_size(rules);
  GridCursor c(rules, 0);
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i, c.next()) s += c.weight() * f(c.point());
  return s;
}

template <class MakeEval>
double tensor_sum_parallel(const std::vector<Rule1D>& rules, MakeEval make) {
  const std::int64_t n = grid_size(rules);
  std::vector<double> partial(kChunks, 0.0);
#pragma omp parallel
  {
    auto f = make();
#pragma omp for schedule(static)
    for (int ch = 0; ch < kChunks; ++ch) {
      std::int64_t lo = n * ch / kChunks, hi = n * (ch + 1) / kChunks;
      if (lo >= hi) continue;
      GridCursor c(rules, lo);
      double s = 0.0;
      for (std::int64_t i = lo; i < hi; ++i, c.next()) s += c.weight() * f(c.point());
      partial[static_cast<std::size_t>(ch)] = s;
    }
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

template <class MakeEval>
double tensor_sum(const std::vector<Rule1D>& rules, MakeEval make) {
  if (grid_size(rules) < 4096) return tensor_sum_serial(rules, make);
  return tensor_sum_parallel(rules, make);
}

// Table of operator 2-norms ||1_{rows[a]} G 1_{cols[b]}||.
Matrix block_norm_table_serial(const Matrix& G, const std::vector<std::vector<Index>>& rows,
                               const std::vector<std::vector<Index>>& cols);
Matrix block_norm_table_parallel(const Matrix& G, const std::vector<std::vector<Index>>& rows,
                                 const std::vector<std::vector<Index>>& cols);

}  // namespace blockrg::kernels
