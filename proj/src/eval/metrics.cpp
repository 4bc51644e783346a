#include "drivestyle/eval/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace drivestyle::eval {

namespace {

void check_cloud_pair(const PointCloud& real, const PointCloud& fake, int k, const char* op) {
  if (k < 1) throw std::invalid_argument(std::string(op) + ": k must be >= 1");
  if (real.rows() <= k) {
    throw std::invalid_argument(std::string(op) + ": real cloud needs more than k points");
  }
  if (fake.rows() < 1) throw std::invalid_argument(std::string(op) + ": fake cloud is empty");
  if (real.cols() != fake.cols()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch");
  }
}

std::vector<double> all_radii(const PointCloud& cloud, int k) {
  std::vector<double> radii(static_cast<std::size_t>(cloud.rows()));
  for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
    radii[static_cast<std::size_t>(i)] = knn_radius(cloud, i, k);
  }
  return radii;
}

}  // namespace

double knn_radius(const PointCloud& cloud, Eigen::Index i, int k) {
  if (k < 1 || cloud.rows() <= k) {
    throw std::invalid_argument("knn_radius: need cloud size > k >= 1");
  }
  if (i < 0 || i >= cloud.rows()) throw std::invalid_argument("knn_radius: index out of range");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(cloud.rows()) - 1);
  for (Eigen::Index j = 0; j < cloud.rows(); ++j) {
    if (j == i) continue;
    dist.push_back((cloud.row(i) - cloud.row(j)).norm());
  }
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  return dist[static_cast<std::size_t>(k - 1)];
}

double density(const PointCloud& real, const PointCloud& fake, int k) {
  check_cloud_pair(real, fake, k, "density");
  const std::vector<double> radii = all_radii(real, k);
  long hits = 0;
  for (Eigen::Index j = 0; j < fake.rows(); ++j) {
    for (Eigen::Index i = 0; i < real.rows(); ++i) {
      if ((fake.row(j) - real.row(i)).norm() <= radii[static_cast<std::size_t>(i)]) ++hits;
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(k) * static_cast<double>(fake.rows()));
}

double coverage(const PointCloud& real, const PointCloud& fake, int k) {
  check_cloud_pair(real, fake, k, "coverage");
  const std::vector<double> radii = all_radii(real, k);
  long covered = 0;
  for (Eigen::Index i = 0; i < real.rows(); ++i) {
    for (Eigen::Index j = 0; j < fake.rows(); ++j) {
      if ((fake.row(j) - real.row(i)).norm() <= radii[static_cast<std::size_t>(i)]) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(real.rows());
}

double f1_score(double density_value, double coverage_value) {
  if (density_value < 0.0 || coverage_value < 0.0) {
    throw std::invalid_argument("f1_score: inputs must be non-negative");
  }
  const double d = std::min(density_value, 1.0);
  const double c = coverage_value;
  if (d + c == 0.0) return 0.0;
  return 2.0 * d * c / (d + c);
}

}  // namespace drivestyle::eval
