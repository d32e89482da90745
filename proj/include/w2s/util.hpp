#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "w2s/errors.hpp"

namespace w2s {

// --- stable hashing (used for mock embeddings and per-question seeds; must
// --- not depend on std::hash, which is implementation-defined) ---

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) from a 64-bit word.
inline double to_unit_double(std::uint64_t word) {
  return static_cast<double>(word >> 11) * 0x1.0p-53;
}

// Unbiased draw from [0, n). Hand-rolled (rejection sampling over the raw
// engine) because std::uniform_int_distribution's output is not pinned by
// the standard and would break cross-platform reproducibility.
inline std::size_t bounded_draw(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw UsageError("bounded_draw needs a non-empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t word = rng();
  while (word >= limit) word = rng();
  return static_cast<std::size_t>(word % bound);
}

// --- text helpers ---

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
// Lowercase + collapse every whitespace run to a single space + trim.
std::string normalize_for_containment(std::string_view s);
bool contains_normalized(std::string_view haystack, std::string_view needle);

// --- file helpers ---

std::string read_file(const std::filesystem::path& path);
// Write via temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::vector<std::string> read_lines(const std::filesystem::path& path);

// --- logging ---

void log_warn(const std::string& msg);
void log_info(const std::string& msg);

// --- bounded fan-out ---

// Applies fn(i) for i in [0, n) on up to `workers` threads and returns results
// in index order. Exceptions are captured per item; the first one (by index)
// is rethrown after all workers join.
template <typename F>
auto parallel_map(std::size_t n, int workers, F&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Out = decltype(fn(std::size_t{}));
  std::vector<std::optional<Out>> slots(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) slots[i] = fn(i);
  } else {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          slots[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const std::size_t count = std::min(static_cast<std::size_t>(workers), n);
    pool.reserve(count);
    for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
  }
  std::vector<Out> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace w2s
