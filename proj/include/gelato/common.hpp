#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gelato {

using NodeId = std::int32_t;

enum class ErrorCode {
  kParse,
  kConflict,
  kRange,
  kDimension,
  kParameter,
  kDegree,
  kAttributeRequired,
  kUndefined,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Unordered node pair. Use make_pair() to obtain the canonical u < v form.
struct NodePair {
  NodeId u = 0;
  NodeId v = 0;

  auto operator<=>(const NodePair&) const = default;
};

inline NodePair canonical_pair(NodeId a, NodeId b) {
  return a < b ? NodePair{a, b} : NodePair{b, a};
}

// Throws kParameter for self-pairs.
NodePair make_pair(NodeId a, NodeId b);

inline std::uint64_t pair_key(NodePair p) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.u)) << 32) |
         static_cast<std::uint32_t>(p.v);
}

inline NodePair pair_from_key(std::uint64_t key) {
  return {static_cast<NodeId>(key >> 32),
          static_cast<NodeId>(key & 0xffffffffu)};
}

// Number of unordered pairs among `count` items.
inline std::int64_t choose2(std::int64_t count) {
  return count < 2 ? 0 : count * (count - 1) / 2;
}

// Warnings go through a replaceable sink (stderr by default).
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

}  // namespace gelato
