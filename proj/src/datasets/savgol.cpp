#include "drivestyle/datasets/savgol.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace drivestyle::datasets {

namespace {

/// Least-squares polynomial coefficients for `window` samples at integer
/// abscissae 0..window-1.
Eigen::VectorXd fit_poly(const std::vector<double>& series, std::size_t start, int window,
                         int polyorder) {
  Eigen::MatrixXd A(window, polyorder + 1);
  Eigen::VectorXd y(window);
  for (int r = 0; r < window; ++r) {
    double t = 1.0;
    for (int c = 0; c <= polyorder; ++c) {
      A(r, c) = t;
      t *= static_cast<double>(r);
    }
    y(r) = series[start + static_cast<std::size_t>(r)];
  }
  return A.colPivHouseholderQr().solve(y);
}

double eval_poly(const Eigen::VectorXd& coef, double t) {
  double acc = 0.0, p = 1.0;
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    acc += coef(i) * p;
    p *= t;
  }
  return acc;
}

}  // namespace

std::vector<double> savgol(const std::vector<double>& series, int window, int polyorder) {
  if (window < 1 || window % 2 == 0) {
    throw std::invalid_argument("savgol: window must be odd and positive, got " +
                                std::to_string(window));
  }
  if (polyorder < 0 || polyorder >= window) {
    throw std::invalid_argument("savgol: need 0 <= polyorder < window");
  }
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(window)) {
    throw std::invalid_argument("savgol: series shorter than window");
  }
  const int half = window / 2;
  std::vector<double> out(n);

  // Interior: centered fits evaluated at the window midpoint.
  for (std::size_t i = static_cast<std::size_t>(half); i + static_cast<std::size_t>(half) < n;
       ++i) {
    const Eigen::VectorXd coef = fit_poly(series, i - static_cast<std::size_t>(half), window,
                                          polyorder);
    out[i] = eval_poly(coef, static_cast<double>(half));
  }
  // Edges: one fit per end, evaluated inside the fitted span.
  const Eigen::VectorXd head = fit_poly(series, 0, window, polyorder);
  for (int i = 0; i < half; ++i) out[static_cast<std::size_t>(i)] = eval_poly(head, i);
  const Eigen::VectorXd tail = fit_poly(series, n - static_cast<std::size_t>(window), window,
                                        polyorder);
  for (int i = 0; i < half; ++i) {
    const std::size_t idx = n - 1 - static_cast<std::size_t>(i);
    out[idx] = eval_poly(tail, static_cast<double>(window - 1 - i));
  }
  return out;
}

}  // namespace drivestyle::datasets
