#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace crn {

// Tensor grid of cells over a box [lo, hi] in concentration space. Flat
// indices run with the last axis fastest.
class RectGrid {
 public:
  RectGrid() = default;
  RectGrid(std::vector<double> lo, std::vector<double> hi, std::vector<int> cells);

  std::size_t dim() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  double lo(std::size_t axis) const { return lo_[axis]; }
  double hi(std::size_t axis) const { return hi_[axis]; }
  int cells(std::size_t axis) const { return cells_[axis]; }
  double h(std::size_t axis) const { return h_[axis]; }
  double cell_volume() const { return volume_; }

  std::vector<int> multi(std::size_t k) const;
  std::size_t flat(const std::vector<int>& idx) const;
  bool contains(const std::vector<int>& idx) const;
  Eigen::VectorXd center(std::size_t k) const;
  // Cell containing c, or -1 when c lies outside the window.
  long locate(const Eigen::VectorXd& c) const;

 private:
  std::vector<double> lo_, hi_, h_;
  std::vector<int> cells_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
  double volume_ = 0.0;
};

// Piecewise-constant density rho on a RectGrid; mass of a cell is rho * vol.
struct GridDensity {
  RectGrid grid;
  Eigen::VectorXd values;

  double mass() const { return values.sum() * grid.cell_volume(); }
  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
  // Integral of f against the density, midpoint rule per cell.
  double integrate(const std::function<double(const Eigen::VectorXd&)>& f) const;
  void normalize();
};

}  // namespace crn
