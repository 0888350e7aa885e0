#include "rigidcal/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "rigidcal/error.hpp"

namespace rigidcal {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points) {
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points.size());
  root_ = build(idx, 0, idx.size());
}

int KdTree::build(std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
  if (begin >= end) {
    return -1;
  }
  // Split on the widest axis of the subset.
  Vec3 lo = points_[idx[begin]], hi = lo;
  for (std::size_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[idx[i]]);
    hi = hi.cwiseMax(points_[idx[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                   idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a](axis), pb = points_[b](axis);
                     return pa < pb || (pa == pb && a < b);
                   });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, begin, mid);
  const int right = build(idx, mid + 1, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::knn_rec(int node, const Vec3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  if (node < 0) {
    return;
  }
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const Vec3& p = points_[n.point];
  const Neighbor cand{n.point, (p - q).squaredNorm()};
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), closer);
  } else if (closer(cand, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), closer);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), closer);
  }
  const double diff = q(n.axis) - p(n.axis);
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  knn_rec(near, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().sq_distance) {
    knn_rec(far, q, k, heap);
  }
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0) {
    return heap;
  }
  heap.reserve(k + 1);
  knn_rec(root_, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  if (root_ < 0) {
    throw Error(ErrorCode::kInvalidArgument, "nearest neighbour query on an empty tree");
  }
  return knn(query, 1).front();
}

void KdTree::radius_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
  if (node < 0) {
    return;
  }
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const Vec3& p = points_[n.point];
  if ((p - q).squaredNorm() <= r2) {
    out.push_back(n.point);
  }
  const double diff = q(n.axis) - p(n.axis);
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  radius_rec(near, q, r2, out);
  if (diff * diff <= r2) {
    radius_rec(far, q, r2, out);
  }
}

std::vector<std::size_t> KdTree::radius(const Vec3& query, double r) const {
  std::vector<std::size_t> out;
  radius_rec(root_, query, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rigidcal
