#ifndef DCMT_IDS_HPP
#define DCMT_IDS_HPP

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>

namespace dcmt {

/// Dense index wrapper so node, edge, path and commodity indices cannot be mixed up.
template <class Tag>
struct Id {
  std::int32_t value = -1;

  constexpr Id() = default;
  constexpr explicit Id(std::int32_t v) : value(v) {}
  constexpr explicit Id(std::size_t v) : value(static_cast<std::int32_t>(v)) {}

  [[nodiscard]] constexpr std::size_t index() const { return static_cast<std::size_t>(value); }
  [[nodiscard]] constexpr bool valid() const { return value >= 0; }

  constexpr auto operator<=>(const Id&) const = default;
};

template <class Tag>
std::ostream& operator<<(std::ostream& os, Id<Tag> id) {
  return os << id.value;
}

using NodeId = Id<struct NodeTag>;
using EdgeId = Id<struct EdgeTag>;
using PathId = Id<struct PathTag>;
using CommodityId = Id<struct CommodityTag>;

/// Packet counts. Queues hold nonnegative integers only.
using Count = std::int64_t;
/// Residual lifetime in slots.
using Lifetime = std::int32_t;

}  // namespace dcmt

template <class Tag>
struct std::hash<dcmt::Id<Tag>> {
  std::size_t operator()(dcmt::Id<Tag> id) const noexcept { return std::hash<std::int32_t>{}(id.value); }
};

#endif  // DCMT_IDS_HPP
