#pragma once

namespace medaudit {

double normal_cdf(double x);
// Inverse standard normal CDF; absolute error well below 1e-9 on (0, 1).
double normal_quantile(double p);

}  // namespace medaudit
