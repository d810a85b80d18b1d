#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "redopt/network.hpp"

namespace redopt::test {

inline std::string read_data_file(const std::string& name) {
  std::ifstream in(std::string(REDOPT_DATA_DIR) + "/" + name, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 2-bus network: one generator at bus 1, one demand at bus 2, single line.
inline Network two_bus(double limit, double demand = 100.0) {
  Network net;
  net.buses = {1, 2};
  net.branches = {{1, 2, 0.1, limit}};
  net.generators = {{1, demand, 1000.0, 1000.0, 1000.0, 1.0, 2.0, 1.0, 2.0}};
  net.demands = {{2, demand}};
  net.slack_bus = 1;
  net.validate();
  return net;
}

// 3-bus ring with equal reactances, branches (1,2), (2,3), (1,3).
inline Network three_bus_ring(double limit = 1000.0) {
  Network net;
  net.buses = {1, 2, 3};
  net.branches = {{1, 2, 0.1, limit}, {2, 3, 0.1, limit}, {1, 3, 0.1, limit}};
  net.generators = {{2, 200.0, 400.0, 200.0, 200.0, 0.5, 1.0, 0.5, 1.0}};
  net.demands = {{1, 100.0}};
  net.slack_bus = 1;
  net.validate();
  return net;
}

}  // namespace redopt::test
