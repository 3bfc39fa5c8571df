#include "fedphd/comm.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fedphd {

double comm_cost_client_edge(double d_e, double volume) {
  if (d_e < 0.0 || volume < 0.0) {
    throw std::invalid_argument("comm_cost_client_edge: negative input");
  }
  return 0.002 * d_e * volume;
}

double comm_cost_edge_cloud(double d_c, double volume) {
  if (d_c < 0.0 || volume < 0.0) {
    throw std::invalid_argument("comm_cost_edge_cloud: negative input");
  }
  return 0.02 * d_c * volume;
}

std::uint64_t model_volume(const ParamSet& params) {
  return 4ull * static_cast<std::uint64_t>(count_params(params));
}

std::uint64_t distribution_volume(int cardinality) {
  return 8ull * static_cast<std::uint64_t>(cardinality);
}

double CommLedger::total_cost() const {
  double total = 0.0;
  for (const CommEntry& e : entries_) total += e.cost;
  return total;
}

std::uint64_t CommLedger::total_bytes() const {
  std::uint64_t total = 0;
  for (const CommEntry& e : entries_) total += e.bytes;
  return total;
}

namespace {

bool involves_client(const CommEntry& e) {
  return e.src.rfind("client", 0) == 0 || e.dst.rfind("client", 0) == 0;
}

bool involves_cloud(const CommEntry& e) {
  return e.src == "cloud" || e.dst == "cloud";
}

}  // namespace

double CommLedger::client_edge_cost() const {
  double total = 0.0;
  for (const CommEntry& e : entries_) {
    if (involves_client(e)) total += e.cost;
  }
  return total;
}

double CommLedger::edge_cloud_cost() const {
  double total = 0.0;
  for (const CommEntry& e : entries_) {
    if (involves_cloud(e)) total += e.cost;
  }
  return total;
}

std::uint64_t CommLedger::client_edge_bytes(int round) const {
  std::uint64_t total = 0;
  for (const CommEntry& e : entries_) {
    if (!involves_client(e)) continue;
    if (round >= 0 && e.round != round) continue;
    total += e.bytes;
  }
  return total;
}

void CommLedger::write_csv(std::ostream& out) const {
  out << "round,event,src,dst,bytes,cost\n";
  char cost_buf[40];
  for (const CommEntry& e : entries_) {
    std::snprintf(cost_buf, sizeof(cost_buf), "%.17g", e.cost);
    out << e.round << "," << e.event << "," << e.src << "," << e.dst << ","
        << e.bytes << "," << cost_buf << "\n";
  }
}

}  // namespace fedphd
