#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rigidcal/geometry.hpp"

namespace rigidcal {

struct Neighbor {
  std::size_t index = 0;
  double sq_distance = 0.0;
};

/// Static 3-d tree over a point set. The point storage must outlive the tree.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  /// k nearest points, closest first; ties broken by index.
  [[nodiscard]] std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;
  /// Nearest point; empty tree throws InvalidArgument.
  [[nodiscard]] Neighbor nearest(const Vec3& query) const;
  /// All points within radius, sorted by index.
  [[nodiscard]] std::vector<std::size_t> radius(const Vec3& query, double radius) const;

  [[nodiscard]] std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t point = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end);
  void knn_rec(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const;
  void radius_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;

  std::span<const Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace rigidcal
