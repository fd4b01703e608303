#include "blockrg/kernels.hpp"

#include "blockrg/error.hpp"
#include "blockrg/linalg.hpp"

namespace blockrg::kernels {

std::int64_t grid_size(const std::vector<Rule1D>& rules) {
  std::int64_t n = 1;
  for (const auto& r : rules) {
    if (r.size() == 0) return 0;
    if (n > (std::int64_t{1} << 40) / static_cast<std::int64_t>(r.size())) throw CapExceeded("tensor grid too large");
    n *= static_cast<std::int64_t>(r.size());
  }
  return n;
}

GridCursor::GridCursor(const std::vector<Rule1D>& rules, std::int64_t start)
    : rules_(rules), digit_(rules.size(), 0), point_(rules.size(), 0.0) {
  for (std::size_t k = 0; k < rules.size(); ++k) {
    auto m = static_cast<std::int64_t>(rules[k].size());
    digit_[k] = static_cast<std::size_t>(start % m);
    start /= m;
  }
  refresh();
}

void GridCursor::refresh() {
  weight_ = 1.0;
  for (std::size_t k = 0; k < rules_.size(); ++k) {
    point_[k] = rules_[k].nodes[digit_[k]];
    weight_ *= rules_[k].weights[digit_[k]];
  }
}

void GridCursor::next() {
  for (std::size_t k = 0; k < rules_.size(); ++k) {
    if (++digit_[k] < rules_[k].size()) {
      refresh();
      return;
    }
    digit_[k] = 0;
  }
  refresh();
}

namespace {
double block_norm(const Matrix& G, const std::vector<Index>& r, const std::vector<Index>& c) {
  Matrix B(static_cast<Index>(r.size()), static_cast<Index>(c.size()));
  for (std::size_t a = 0; a < r.size(); ++a)
    for (std::size_t b = 0; b < c.size(); ++b) B(static_cast<Index>(a), static_cast<Index>(b)) = G(r[a], c[b]);
  return operator_norm(B);
}
}  // namespace

Matrix block_norm_table_serial(const Matrix& G, const std::vector<std::vector<Index>>& rows,
                               const std::vector<std::vector<Index>>& cols) {
  Matrix T(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < cols.size(); ++b)
      T(static_cast<Index>(a), static_cast<Index>(b)) = block_norm(G, rows[a], cols[b]);
  return T;
}

Matrix block_norm_table_parallel(const Matrix& G, const std::vector<std::vector<Index>>& rows,
                                 const std::vector<std::vector<Index>>& cols) {
  const auto nr = static_cast<std::int64_t>(rows.size()), nc = static_cast<std::int64_t>(cols.size());
  Matrix T(nr, nc);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t p = 0; p < nr * nc; ++p) {
    std::int64_t a = p / nc, b = p % nc;
    T(a, b) = block_norm(G, rows[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
  }
  return T;
}

}  // namespace blockrg::kernels
