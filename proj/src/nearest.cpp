#include "wq/nearest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wq {

NearestCenter::NearestCenter(std::span<const Point> centers, int dim) : centers_(centers), dim_(dim) {
  if (centers.empty()) throw std::invalid_argument("nearest-center index needs at least one center");
  Point lo = centers.front();
  Point hi = centers.front();
  for (const auto& c : centers)
    for (int k = 0; k < dim_; ++k) {
      lo[k] = std::min(lo[k], c[k]);
      hi[k] = std::max(hi[k], c[k]);
    }
  origin_ = lo;

  const double n = static_cast<double>(centers.size());
  double volume = 1.0;
  int live = 0;
  double widest = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double e = hi[k] - lo[k];
    widest = std::max(widest, e);
    if (e > 0.0) {
      volume *= e;
      ++live;
    }
  }
  const double side = live == 0 ? 1.0 : std::pow(volume / n, 1.0 / live);
  std::size_t buckets = 1;
  for (int k = 0; k < kMaxDim; ++k) {
    const double e = k < dim_ ? hi[k] - lo[k] : 0.0;
    if (e > 0.0 && side > 0.0) {
      count_[k] = std::clamp<long>(static_cast<long>(std::ceil(e / side)), 1, 4 * static_cast<long>(n) + 1);
      side_[k] = e / static_cast<double>(count_[k]);
    } else {
      count_[k] = 1;
      side_[k] = widest > 0.0 ? widest : 1.0;
    }
    buckets *= static_cast<std::size_t>(count_[k]);
  }
  min_side_ = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim_; ++k)
    if (count_[k] > 1) min_side_ = std::min(min_side_, side_[k]);

  std::vector<std::uint32_t> bucket_of(centers.size());
  start_.assign(buckets + 1, 0);
  std::array<long, kMaxDim> c{};
  for (std::size_t i = 0; i < centers.size(); ++i) {
    bucket_coords(centers[i], c);
    bucket_of[i] = static_cast<std::uint32_t>(flat(c));
    ++start_[bucket_of[i] + 1];
  }
  for (std::size_t b = 0; b < buckets; ++b) start_[b + 1] += start_[b];
  members_.resize(centers.size());
  std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < centers.size(); ++i) members_[fill[bucket_of[i]]++] = static_cast<std::uint32_t>(i);
}

void NearestCenter::bucket_coords(const Point& x, std::array<long, kMaxDim>& out) const {
  for (int k = 0; k < kMaxDim; ++k) {
    if (count_[k] == 1) {
      out[k] = 0;
      continue;
    }
    const auto idx = static_cast<long>(std::floor((x[k] - origin_[k]) / side_[k]));
    out[k] = std::clamp<long>(idx, 0, count_[k] - 1);
  }
}

std::size_t NearestCenter::flat(const std::array<long, kMaxDim>& c) const {
  return static_cast<std::size_t>(c[0] + count_[0] * (c[1] + count_[1] * c[2]));
}

NearestCenter::Hit NearestCenter::query(const Point& x) const {
  std::array<long, kMaxDim> base{};
  bucket_coords(x, base);
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_index = 0;

  auto scan = [&](const std::array<long, kMaxDim>& cell) {
    const std::size_t b = flat(cell);
    for (std::uint32_t m = start_[b]; m < start_[b + 1]; ++m) {
      const std::uint32_t i = members_[m];
      const double d2 = squared_distance(x, centers_[i]);
      if (d2 < best || (d2 == best && i < best_index)) {
        best = d2;
        best_index = i;
      }
    }
  };

  const long max_ring = std::max({count_[0], count_[1], count_[2]});
  for (long r = 0; r <= max_ring; ++r) {
    if (r >= 1) {
      const double bound = static_cast<double>(r - 1) * min_side_;
      if (bound * bound > best) break;
    }
    std::array<long, kMaxDim> lo{}, hi{};
    for (int k = 0; k < kMaxDim; ++k) {
      lo[k] = std::max<long>(0, base[k] - r);
      hi[k] = std::min<long>(count_[k] - 1, base[k] + r);
    }
    bool any = false;
    std::array<long, kMaxDim> cell{};
    for (cell[2] = lo[2]; cell[2] <= hi[2]; ++cell[2])
      for (cell[1] = lo[1]; cell[1] <= hi[1]; ++cell[1])
        for (cell[0] = lo[0]; cell[0] <= hi[0]; ++cell[0]) {
          long cheb = 0;
          for (int k = 0; k < kMaxDim; ++k) cheb = std::max(cheb, std::labs(cell[k] - base[k]));
          if (cheb != r) {
            // Jump over the already-visited interior along the fastest axis.
            if (r > 0 && cell[0] == base[0] - r + 1 && std::labs(cell[1] - base[1]) < r &&
                std::labs(cell[2] - base[2]) < r)
              cell[0] = std::min(hi[0], base[0] + r - 1);
            continue;
          }
          any = true;
          scan(cell);
        }
    if (!any && r > 0) {
      bool exhausted = true;
      for (int k = 0; k < kMaxDim; ++k)
        if (base[k] - r > 0 || base[k] + r < count_[k] - 1) exhausted = false;
      if (exhausted) break;
    }
  }
  return {best_index, best};
}

}  // namespace wq
