// Sweep the measurement rate and watch the reference qubit's purification
// statistics flip between the two phases: at small p most circuits never
// purify within the time horizon, at large p almost all purify within a few
// layers.
#include <cstdio>

#include "mipt/trajectory.hpp"

using namespace mipt;

int main() {
  const size_t L = 12;
  const size_t T = 24;
  const size_t circuits = 400;

  std::printf("L=%zu  T=%zu  circuits=%zu\n", L, T, circuits);
  std::printf("%6s  %12s  %10s  %10s\n", "p", "unpurified", "median t_p", "mean t_p");
  for (double p : {0.05, 0.10, 0.16, 0.20, 0.30, 0.50}) {
    CircuitSpec family = CircuitSpec::make(L, T, p, 0);
    PurificationHistogram h = purification_histogram(family, circuits, uint64_t{1});

    double cum = 0.0;
    size_t median = 0;
    double mean = 0.0;
    double purified = 0.0;
    for (size_t t = 1; t <= T; ++t) {
      double m = h.mass[t - 1];
      cum += m;
      if (median == 0 && cum >= 0.5) {
        median = t;
      }
      mean += static_cast<double>(t) * m;
      purified += m;
    }
    if (purified > 0.0) {
      mean /= purified;
    }
    if (median == 0) {
      std::printf("%6.2f  %12.3f  %10s  %10.2f\n", p, h.unpurified, ">T", mean);
    } else {
      std::printf("%6.2f  %12.3f  %10zu  %10.2f\n", p, h.unpurified, median, mean);
    }
  }
  return 0;
}
