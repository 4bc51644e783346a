#pragma once

#include <Eigen/Dense>

namespace drivestyle::eval {

/// Point cloud: one row per point, uniform dimension.
using PointCloud = Eigen::MatrixXd;

/// Euclidean distance from point i to its k-th nearest other point.
/// Requires cloud.rows() > k.
double knn_radius(const PointCloud& cloud, Eigen::Index i, int k);

/// Fraction-weighted count of fake points inside real k-NN balls:
/// (1/(k |fake|)) * sum_j sum_i 1[d(fake_j, real_i) <= radius_i].
double density(const PointCloud& real, const PointCloud& fake, int k);

/// Fraction of real points whose k-NN ball contains at least one fake point.
double coverage(const PointCloud& real, const PointCloud& fake, int k);

/// Harmonic mean after clipping density to 1; zero when both terms are zero.
double f1_score(double density_value, double coverage_value);

}  // namespace drivestyle::eval
