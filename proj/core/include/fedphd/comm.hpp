#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedphd/params.hpp"

namespace fedphd {

/// Cost of one client<->edge transfer: 0.002 * d_e * volume.
double comm_cost_client_edge(double d_e, double volume);

/// Cost of one edge<->cloud transfer: 0.02 * d_c * volume.
double comm_cost_edge_cloud(double d_c, double volume);

/// Transmitted model volume at 4 bytes per parameter.
std::uint64_t model_volume(const ParamSet& params);

/// Bytes of a transmitted label distribution (8 bytes per class).
std::uint64_t distribution_volume(int cardinality);

struct CommEntry {
  int round = 0;
  std::string event;
  std::string src;
  std::string dst;
  std::uint64_t bytes = 0;
  double cost = 0.0;
};

/// Append-only log of every transfer the protocol performs. Appends funnel
/// through the single collector owning this ledger, in event order.
class CommLedger {
 public:
  void record(CommEntry entry) { entries_.push_back(std::move(entry)); }

  const std::vector<CommEntry>& entries() const { return entries_; }

  double total_cost() const;
  std::uint64_t total_bytes() const;

  /// Totals restricted to entries whose src or dst is a client (client-edge
  /// links) or involves the cloud (edge-cloud links).
  double client_edge_cost() const;
  double edge_cloud_cost() const;
  std::uint64_t client_edge_bytes(int round = -1) const;

  /// CSV with header: round,event,src,dst,bytes,cost.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<CommEntry> entries_;
};

}  // namespace fedphd
