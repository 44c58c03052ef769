#pragma once

#include <vector>

namespace bdlp {

/// Observation grid: 0, dt, 2 dt, ... up to t_end, with t_end appended if
/// off-grid. observe_every = 0 gives {0, t_end}.
std::vector<double> observation_times(double t_end, double observe_every);

}  // namespace bdlp
