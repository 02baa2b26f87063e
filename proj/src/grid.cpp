#include "crn/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace crn {

RectGrid::RectGrid(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells)
    : lo_(std::move(lo)), hi_(std::move(hi)), cells_(std::move(cells)) {
  if (lo_.size() != hi_.size() || lo_.size() != cells_.size() || lo_.empty())
    throw std::invalid_argument("RectGrid: inconsistent axis data");
  const std::size_t d = lo_.size();
  h_.resize(d);
  stride_.resize(d);
  size_ = 1;
  volume_ = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(hi_[a] > lo_[a]) || cells_[a] < 1) throw std::invalid_argument("RectGrid: empty axis");
    h_[a] = (hi_[a] - lo_[a]) / cells_[a];
    volume_ *= h_[a];
  }
  for (std::size_t a = d; a-- > 0;) {
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(cells_[a]);
  }
}

std::vector<int> RectGrid::multi(std::size_t k) const {
  std::vector<int> idx(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(k / stride_[a]);
    k %= stride_[a];
  }
  return idx;
}

std::size_t RectGrid::flat(const std::vector<int>& idx) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < dim(); ++a) k += stride_[a] * static_cast<std::size_t>(idx[a]);
  return k;
}

bool RectGrid::contains(const std::vector<int>& idx) const {
  if (idx.size() != dim()) return false;
  for (std::size_t a = 0; a < dim(); ++a)
    if (idx[a] < 0 || idx[a] >= cells_[a]) return false;
  return true;
}

Eigen::VectorXd RectGrid::center(std::size_t k) const {
  const auto idx = multi(k);
  Eigen::VectorXd c(dim());
  for (std::size_t a = 0; a < dim(); ++a) c(a) = lo_[a] + (idx[a] + 0.5) * h_[a];
  return c;
}

long RectGrid::locate(const Eigen::VectorXd& c) const {
  std::vector<int> idx(dim());
  for (std::size_t a = 0; a < dim(); ++a) {
    const double s = (c(a) - lo_[a]) / h_[a];
    if (s < 0.0 || s >= cells_[a]) return -1;
    idx[a] = static_cast<int>(std::floor(s));
  }
  return static_cast<long>(flat(idx));
}

Eigen::VectorXd GridDensity::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) m += values(k) * grid.center(k);
  return m * grid.cell_volume() / mass();
}

Eigen::MatrixXd GridDensity::covariance() const {
  // Exact second moment of the piecewise-constant density: cell centers plus
  // the within-cell variance h^2/12 on the diagonal.
  const Eigen::VectorXd mu = mean();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(grid.dim(), grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Eigen::VectorXd d = grid.center(k) - mu;
    C += values(k) * d * d.transpose();
  }
  C *= grid.cell_volume() / mass();
  for (std::size_t a = 0; a < grid.dim(); ++a) C(a, a) += grid.h(a) * grid.h(a) / 12.0;
  return C;
}

double GridDensity::integrate(const std::function<double(const Eigen::VectorXd&)>& f) const {
  double s = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (values(k) != 0.0) s += values(k) * f(grid.center(k));
  return s * grid.cell_volume();
}

void GridDensity::normalize() {
  const double m = mass();
  if (!(m > 0.0)) throw std::runtime_error("GridDensity: cannot normalize zero mass");
  values /= m;
}

}  // namespace crn
