#pragma once

#include <string>
#include <vector>

#include "w2s/store.hpp"

namespace w2s {

// One appearance of a sealed (w2s-half) gold answer where it must never be:
// a prompt, a supervision target, or a teacher corpus.
struct TaintHit {
  std::string file;  // relative artifact path
  std::string qid;   // whose gold leaked
  std::string needle;

  bool operator==(const TaintHit&) const = default;
};

// Scans the run's prompt and corpus artifacts for every sealed gold answer.
// A clean run reports zero hits. Throws UsageError when the store has no
// split step (there is nothing sealed to check against).
std::vector<TaintHit> taint_scan(const RunStore& store);

}  // namespace w2s
