#include "gelato/common.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

#include "gelato/random.hpp"

namespace gelato {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kDimension: return "dimension";
    case ErrorCode::kParameter: return "parameter";
    case ErrorCode::kDegree: return "degree";
    case ErrorCode::kAttributeRequired: return "attribute_required";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

NodePair make_pair(NodeId a, NodeId b) {
  if (a == b) {
    throw Error(ErrorCode::kParameter,
                "self-pair (" + std::to_string(a) + ", " + std::to_string(b) +
                    ") is not a valid node pair");
  }
  return canonical_pair(a, b);
}

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s;
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) {
    sink()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

// ---------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label) {
  // FNV-1a over the label, then mixed with the root.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(root ^ mix64(h));
}

std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t index) {
  return mix64(derive_seed(root, label) + mix64(index + 1));
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Lemire's nearly-divisionless method.
  unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    std::uint64_t threshold = -bound % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(engine_()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double x, y, s;
  do {
    x = uniform(-1.0, 1.0);
    y = uniform(-1.0, 1.0);
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = y * f;
  has_spare_ = true;
  return x * f;
}

}  // namespace gelato
