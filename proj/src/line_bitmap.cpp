#include "guitrace/line_bitmap.hpp"

#include <bit>
#include <stdexcept>

namespace guitrace {

namespace {
constexpr std::size_t kWordBits = 64;

std::uint64_t mask_from(std::size_t bit) { return ~std::uint64_t{0} << bit; }
std::uint64_t mask_upto(std::size_t bit) {
  return bit == kWordBits - 1 ? ~std::uint64_t{0} : (std::uint64_t{1} << (bit + 1)) - 1;
}
}  // namespace

LineBitmap::LineBitmap(std::size_t size)
    : words_((size + kWordBits - 1) / kWordBits, 0), size_(size) {}

bool LineBitmap::test(LineIndex line) const {
  if (line >= size_) throw std::out_of_range("line index outside bitmap");
  return (words_[line / kWordBits] >> (line % kWordBits)) & 1U;
}

bool LineBitmap::set(LineIndex line) {
  if (line >= size_) throw std::out_of_range("line index outside bitmap");
  auto& w = words_[line / kWordBits];
  const std::uint64_t bit = std::uint64_t{1} << (line % kWordBits);
  if (w & bit) return false;
  w |= bit;
  ++count_;
  return true;
}

void LineBitmap::set_range(LineRange range) {
  for (LineIndex l = range.first; l <= range.last; ++l) set(l);
}

std::size_t LineBitmap::count_in(LineRange range) const {
  if (range.first > range.last) return 0;
  if (range.last >= size_) throw std::out_of_range("range outside bitmap");
  const std::size_t fw = range.first / kWordBits;
  const std::size_t lw = range.last / kWordBits;
  if (fw == lw) {
    const auto m = mask_from(range.first % kWordBits) & mask_upto(range.last % kWordBits);
    return static_cast<std::size_t>(std::popcount(words_[fw] & m));
  }
  std::size_t n = static_cast<std::size_t>(std::popcount(words_[fw] & mask_from(range.first % kWordBits)));
  for (std::size_t w = fw + 1; w < lw; ++w) n += static_cast<std::size_t>(std::popcount(words_[w]));
  n += static_cast<std::size_t>(std::popcount(words_[lw] & mask_upto(range.last % kWordBits)));
  return n;
}

std::size_t LineBitmap::count_intersection(const LineBitmap& other) const {
  if (other.size_ != size_) throw std::invalid_argument("bitmap size mismatch");
  std::size_t n = 0;
  for (std::size_t i = 0; i < words_.size(); ++i)
    n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
  return n;
}

void LineBitmap::merge(const LineBitmap& other) {
  if (other.size_ != size_) throw std::invalid_argument("bitmap size mismatch");
  count_ = 0;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    words_[i] |= other.words_[i];
    count_ += static_cast<std::size_t>(std::popcount(words_[i]));
  }
}

bool LineBitmap::intersects(std::span<const LineIndex> lines) const {
  for (LineIndex l : lines)
    if (l < size_ && test(l)) return true;
  return false;
}

std::vector<LineIndex> LineBitmap::to_lines() const {
  std::vector<LineIndex> out;
  out.reserve(count_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits) {
      const int b = std::countr_zero(bits);
      out.push_back(static_cast<LineIndex>(w * kWordBits + static_cast<std::size_t>(b)));
      bits &= bits - 1;
    }
  }
  return out;
}

std::vector<LineRange> LineBitmap::to_ranges() const {
  std::vector<LineRange> out;
  for (LineIndex l : to_lines()) {
    if (!out.empty() && out.back().last + 1 == l) out.back().last = l;
    else out.push_back({l, l});
  }
  return out;
}

LineBitmap LineBitmap::from_ranges(std::size_t size, std::span<const LineRange> ranges) {
  LineBitmap b(size);
  for (const auto& r : ranges) {
    if (r.first > r.last) throw std::invalid_argument("inverted line range");
    b.set_range(r);
  }
  return b;
}

}  // namespace guitrace
