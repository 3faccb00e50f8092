#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wq/types.hpp"

namespace wq {

/// Bucket-grid nearest-center lookup. Ties go to the lowest center index.
class NearestCenter {
 public:
  NearestCenter(std::span<const Point> centers, int dim);

  struct Hit {
    std::uint32_t index;
    double squared_distance;
  };

  Hit query(const Point& x) const;

 private:
  void bucket_coords(const Point& x, std::array<long, kMaxDim>& out) const;
  std::size_t flat(const std::array<long, kMaxDim>& c) const;

  std::span<const Point> centers_;
  int dim_;
  Point origin_{};
  std::array<double, kMaxDim> side_{};
  std::array<long, kMaxDim> count_{};
  double min_side_ = 0.0;
  std::vector<std::uint32_t> start_;  // CSR offsets into members_
  std::vector<std::uint32_t> members_;
};

}  // namespace wq
