#pragma once

// A tiny fixed dataset (3 users, 5 domain-A items, 3 domain-B items) used by
// the gradcheck command and by tests that need a deterministic batch small
// enough for finite differences.

#include <vector>

#include "eagcl/dataio.hpp"

namespace eagcl {

inline Dataset toy_dataset() {
  auto A = [](int item) { return Event{item, Domain::A}; };
  auto B = [](int item) { return Event{item, Domain::B}; };
  Dataset ds;
  ds.m = 5;
  ds.n = 3;
  ds.p = 3;
  ds.sequences = {
      {0, {A(0), B(0), A(1), A(2), B(1)}},
      {1, {A(1), A(3), B(2), A(0)}},
      {2, {B(0), A(4), B(2), A(3)}},
  };
  return ds;
}

inline std::vector<HybridSequence> toy_batch() { return toy_dataset().sequences; }

}  // namespace eagcl
