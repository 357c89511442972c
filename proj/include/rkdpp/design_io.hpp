#pragma once

// Design CSV files and experiment log lines.

#include <cstddef>
#include <ostream>
#include <string>

#include "rkdpp/designs.hpp"
#include "rkdpp/spectral_model.hpp"

namespace rkdpp {

/// `node_index,x` on intervals, `node_index,x,y,z` on the sphere; one-based.
inline void write_design_csv(std::ostream& os, const Design& d, const Domain& domain) {
  const int dims = domain.coordinates();
  os << "node_index" << (dims == 1 ? ",x" : ",x,y,z") << '\n';
  os.precision(17);
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    os << i + 1;
    for (int c = 0; c < dims; ++c) os << ',' << d.nodes[i](c);
    os << '\n';
  }
}

/// One log line carrying the tag, the seed and the sampling counters.
inline std::string design_log_line(const Design& d, std::size_t N, std::size_t replicate) {
  return "design=" + describe(d.tag) + " N=" + std::to_string(N) + " replicate=" + std::to_string(replicate) +
         " seed=" + std::to_string(d.seed) + " proposals=" + std::to_string(d.attempts.proposals) +
         " density_rejections=" + std::to_string(d.attempts.density_rejections) +
         " conditional_rejections=" + std::to_string(d.attempts.conditional_rejections) +
         " resamples=" + std::to_string(d.attempts.resamples);
}

}  // namespace rkdpp
