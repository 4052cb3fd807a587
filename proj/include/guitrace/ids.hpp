#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace guitrace {

/// Global statement line index. Lines are dense over the whole program.
using LineIndex = std::uint32_t;

/// Event sequence number; 0 is the startup pseudo-event.
using Seq = std::uint64_t;

template <class Tag>
struct StrongIndex {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(StrongIndex, StrongIndex) = default;
};

struct MethodTag;
struct ClassTag;

/// Position in ProgramModel::methods().
using MethodIndex = StrongIndex<MethodTag>;
/// Position in ProgramModel::classes().
using ClassIndex = StrongIndex<ClassTag>;

}  // namespace guitrace

template <class Tag>
struct std::hash<guitrace::StrongIndex<Tag>> {
  std::size_t operator()(guitrace::StrongIndex<Tag> i) const noexcept {
    return std::hash<std::uint32_t>{}(i.value);
  }
};
