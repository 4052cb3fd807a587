#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "guitrace/ids.hpp"

namespace guitrace {

/// Inclusive range of line indices.
struct LineRange {
  LineIndex first = 0;
  LineIndex last = 0;

  friend bool operator==(const LineRange&, const LineRange&) = default;
};

/// Fixed-capacity bitmap over global line indices with a cached population
/// count. Bits are never cleared.
class LineBitmap {
 public:
  LineBitmap() = default;
  explicit LineBitmap(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  std::size_t count() const noexcept { return count_; }

  bool test(LineIndex line) const;
  /// Sets the bit; returns true if it was previously clear.
  bool set(LineIndex line);
  void set_range(LineRange range);

  /// Number of set bits in [range.first, range.last].
  std::size_t count_in(LineRange range) const;
  std::size_t count_intersection(const LineBitmap& other) const;

  void merge(const LineBitmap& other);
  bool intersects(std::span<const LineIndex> lines) const;

  std::vector<LineIndex> to_lines() const;
  std::vector<LineRange> to_ranges() const;
  static LineBitmap from_ranges(std::size_t size, std::span<const LineRange> ranges);

  friend bool operator==(const LineBitmap& a, const LineBitmap& b) {
    return a.size_ == b.size_ && a.words_ == b.words_;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::size_t count_ = 0;
};

}  // namespace guitrace
