#pragma once

#include <cstddef>
#include <vector>

#include "viewguard/query.hpp"
#include "viewguard/value.hpp"

namespace viewguard {

/// One observed row: t ∈ Q(D).
struct TraceEntry {
  BasicQuery query;
  Tuple tuple;
  std::size_t origin = 0;  // ordinal of the query that produced the row
  bool limit_dropped = false;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using Trace = std::vector<TraceEntry>;

/// A whole query result as returned to the application.  Empty results
/// are kept so that the exact-result reading of a trace is available.
struct Observation {
  BasicQuery query;
  std::vector<Tuple> rows;
  bool limit_dropped = false;
};

/// One entry per row, origins numbered by position.
Trace expand(const std::vector<Observation>& obs);

}  // namespace viewguard
