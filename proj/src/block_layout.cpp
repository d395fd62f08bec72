#include "adasecant/block_layout.hpp"

#include <stdexcept>

namespace adasecant {

BlockLayout BlockLayout::single(std::size_t dimension) {
  BlockLayout layout;
  layout.blocks.push_back({0, dimension});
  return layout;
}

BlockLayout BlockLayout::from_sizes(const std::vector<std::size_t>& sizes) {
  BlockLayout layout;
  std::size_t at = 0;
  for (const std::size_t n : sizes) {
    layout.blocks.push_back({at, at + n});
    at += n;
  }
  return layout;
}

void BlockLayout::validate(std::size_t dimension) const {
  if (blocks.empty()) {
    throw std::invalid_argument("BlockLayout: no blocks");
  }
  std::size_t at = 0;
  for (const Range& r : blocks) {
    if (r.begin != at || r.end <= r.begin) {
      throw std::invalid_argument(
          "BlockLayout: blocks must be nonempty, contiguous and ordered");
    }
    at = r.end;
  }
  if (at != dimension) {
    throw std::invalid_argument("BlockLayout: blocks do not cover [0, dim)");
  }
}

}  // namespace adasecant
