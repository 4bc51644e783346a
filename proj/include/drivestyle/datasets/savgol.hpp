#pragma once

#include <vector>

namespace drivestyle::datasets {

/// Savitzky-Golay smoothing: least-squares local polynomial fit of order
/// `polyorder` over an odd `window`. Interior points use the centered fit;
/// the first/last half-window values come from the polynomial fitted to the
/// first/last full window, evaluated at their positions.
/// Throws unless window is odd, polyorder < window, and the series spans the
/// window.
std::vector<double> savgol(const std::vector<double>& series, int window, int polyorder);

}  // namespace drivestyle::datasets
