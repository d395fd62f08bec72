#pragma once

#include <cstddef>
#include <vector>

namespace adasecant {

// Partition of the parameter indices [0, dimension) into ordered contiguous
// blocks, one per weight matrix / bias vector. Gradient normalization is
// applied per block.
struct BlockLayout {
  struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;  // half-open
    std::size_t size() const { return end - begin; }
  };

  std::vector<Range> blocks;

  static BlockLayout single(std::size_t dimension);
  static BlockLayout from_sizes(const std::vector<std::size_t>& sizes);

  std::size_t dimension() const {
    return blocks.empty() ? 0 : blocks.back().end;
  }

  // Throws std::invalid_argument unless the blocks are nonempty, contiguous,
  // and cover [0, dimension) exactly.
  void validate(std::size_t dimension) const;
};

}  // namespace adasecant
