#include "fitted/class_spaces.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "fitted/errors.hpp"
#include "fitted/random.hpp"

namespace fitted {

namespace {

std::vector<Block> canonicalize(std::vector<Block> blocks) {
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::sort(blocks.begin(), blocks.end(),
            [](const Block& a, const Block& b) { return a.front() < b.front(); });
  return blocks;
}

}  // namespace

ClassSet::ClassSet(std::size_t num_classes, std::vector<std::string> names)
    : num_classes_(num_classes), names_(std::move(names)) {
  if (num_classes_ < 2) {
    throw ConfigError("class set needs at least 2 classes, got " +
                      std::to_string(num_classes_));
  }
  if (!names_.empty()) {
    if (names_.size() != num_classes_) {
      throw ConfigError("class set: " + std::to_string(names_.size()) + " names for " +
                        std::to_string(num_classes_) + " classes");
    }
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) throw ConfigError("class set: duplicate class name");
  }
}

void validate_space(const std::vector<Block>& blocks, std::size_t num_classes) {
  std::vector<int> owner(num_classes, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) {
      throw EmptyBlockError("superclass block " + std::to_string(b) + " is empty");
    }
    for (ClassIndex c : blocks[b]) {
      if (c >= num_classes) {
        throw UnknownClassError("class " + std::to_string(c) + " is outside 0.." +
                                std::to_string(num_classes - 1));
      }
      if (owner[c] >= 0) {
        throw OverlapError("class " + std::to_string(c) + " appears in blocks " +
                           std::to_string(owner[c]) + " and " + std::to_string(b));
      }
      owner[c] = static_cast<int>(b);
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (owner[c] < 0) {
      throw CoverageError("class " + std::to_string(c) + " is in no block");
    }
  }
}

SuperclassSpace::SuperclassSpace(std::vector<Block> blocks, std::size_t num_classes)
    : num_classes_(num_classes) {
  validate_space(blocks, num_classes);
  blocks_ = canonicalize(std::move(blocks));
  block_of_.assign(num_classes_, 0);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    for (ClassIndex c : blocks_[b]) block_of_[c] = b;
  }
}

std::size_t SuperclassSpace::block_of(ClassIndex c) const {
  if (c >= num_classes_) {
    throw UnknownClassError("label " + std::to_string(c) + " is outside a space over " +
                            std::to_string(num_classes_) + " classes");
  }
  return block_of_[c];
}

Sequel::Sequel(std::vector<SuperclassSpace> spaces) : spaces_(std::move(spaces)) {
  if (spaces_.empty()) throw ConfigError("a sequel needs at least one superclass space");
  for (const auto& s : spaces_) {
    if (s.num_classes() != spaces_.front().num_classes()) {
      throw ShapeMismatchError("sequel mixes spaces over " +
                               std::to_string(spaces_.front().num_classes()) + " and " +
                               std::to_string(s.num_classes()) + " classes");
    }
  }
}

FittedEnsembleSpec::FittedEnsembleSpec(ClassSet class_set_, std::vector<Sequel> sequels_,
                                       bool include_identity_)
    : class_set(std::move(class_set_)),
      sequels(std::move(sequels_)),
      include_identity(include_identity_) {
  if (sequels.empty()) throw ConfigError("a fitted ensemble needs at least one sequel");
  for (std::size_t i = 0; i < sequels.size(); ++i) {
    if (sequels[i].num_classes() != class_set.size()) {
      throw ShapeMismatchError("sequel " + std::to_string(i) + " is over " +
                               std::to_string(sequels[i].num_classes()) +
                               " classes, expected " + std::to_string(class_set.size()));
    }
  }
}

std::size_t FittedEnsembleSpec::member_count() const noexcept {
  std::size_t n = include_identity ? 1 : 0;
  for (const auto& s : sequels) n += s.size();
  return n;
}

std::vector<SuperclassSpace> FittedEnsembleSpec::member_spaces() const {
  std::vector<SuperclassSpace> out;
  out.reserve(member_count());
  for (const auto& seq : sequels) {
    out.insert(out.end(), seq.spaces().begin(), seq.spaces().end());
  }
  if (include_identity) out.push_back(identity_space(num_classes()));
  return out;
}

bool is_resolving(std::span<const SuperclassSpace> spaces) {
  if (spaces.empty()) return false;
  const std::size_t n = spaces.front().num_classes();
  // Two classes stay confused iff they share a block in every space, i.e.
  // they have the same signature of block indices.
  std::set<std::vector<std::size_t>> signatures;
  for (ClassIndex c = 0; c < n; ++c) {
    std::vector<std::size_t> sig;
    sig.reserve(spaces.size());
    for (const auto& s : spaces) sig.push_back(s.block_of(c));
    if (!signatures.insert(std::move(sig)).second) return false;
  }
  return true;
}

bool is_resolving(const Sequel& sequel) { return is_resolving(std::span(sequel.spaces())); }

SuperclassSpace identity_space(std::size_t n) {
  std::vector<Block> blocks(n);
  for (ClassIndex c = 0; c < n; ++c) blocks[c] = {c};
  return SuperclassSpace(std::move(blocks), n);
}

SuperclassSpace gen_consecutive_pairs(std::size_t n, std::size_t offset, UnevenPolicy uneven) {
  if (n < 2) throw ConfigError("pair generator needs n >= 2");
  if (n % 2 == 1 && uneven == UnevenPolicy::kError) {
    throw OddClassCountError("consecutive pairs need an even class count, got " +
                             std::to_string(n));
  }
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < n / 2; ++i) {
    blocks.push_back({(offset + 2 * i) % n, (offset + 2 * i + 1) % n});
  }
  if (n % 2 == 1) blocks.back().push_back((offset + n - 1) % n);
  return SuperclassSpace(std::move(blocks), n);
}

SuperclassSpace gen_strided_pairs(std::size_t n, std::size_t stride, std::size_t offset,
                                  UnevenPolicy uneven) {
  if (n < 2) throw ConfigError("pair generator needs n >= 2");
  if (n % 2 == 1 && uneven == UnevenPolicy::kError) {
    throw OddClassCountError("strided pairs need an even class count, got " +
                             std::to_string(n));
  }
  if (stride % n == 0) throw PairingError("stride " + std::to_string(stride) +
                                          " pairs every class with itself");
  std::vector<bool> taken(n, false);
  std::vector<Block> blocks;
  std::optional<ClassIndex> leftover;
  for (std::size_t step = 0; step < n; ++step) {
    const ClassIndex k = (offset + step) % n;
    if (taken[k]) continue;
    const ClassIndex partner = (k + stride) % n;
    if (taken[partner]) {
      if (n % 2 == 1 && !leftover) {
        leftover = k;
        taken[k] = true;
        continue;
      }
      throw PairingError("stride " + std::to_string(stride) + " from offset " +
                         std::to_string(offset) + " leaves class " + std::to_string(k) +
                         " without a partner over " + std::to_string(n) + " classes");
    }
    taken[k] = taken[partner] = true;
    blocks.push_back({k, partner});
  }
  if (leftover) {
    if (blocks.empty()) throw PairingError("no pair formed");
    blocks.back().push_back(*leftover);
  }
  return SuperclassSpace(std::move(blocks), n);
}

SuperclassSpace gen_random_partition(std::size_t n, std::size_t block_size, std::uint64_t seed) {
  if (n < 2) throw ConfigError("random partition needs n >= 2");
  if (block_size < 1 || block_size > n) {
    throw ConfigError("block size " + std::to_string(block_size) + " outside 1.." +
                      std::to_string(n));
  }
  std::vector<ClassIndex> order(n);
  std::iota(order.begin(), order.end(), ClassIndex{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Block> blocks;
  for (std::size_t start = 0; start < n; start += block_size) {
    const std::size_t stop = std::min(n, start + block_size);
    blocks.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return SuperclassSpace(std::move(blocks), n);
}

Sequel gen_random_sequel(std::size_t n, std::size_t block_size, std::size_t num_spaces,
                         std::uint64_t seed, std::size_t max_attempts) {
  if (num_spaces == 0) throw ConfigError("random sequel needs at least one space");
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t attempt_seed = derive_seed(seed, attempt);
    std::vector<SuperclassSpace> spaces;
    for (std::size_t j = 0; j < num_spaces; ++j) {
      spaces.push_back(gen_random_partition(n, block_size, derive_seed(attempt_seed, j)));
    }
    if (is_resolving(std::span<const SuperclassSpace>(spaces))) {
      return Sequel(std::move(spaces));
    }
  }
  throw InfeasibleConstraintError("no resolving sequel of " + std::to_string(num_spaces) +
                                  " spaces with block size " + std::to_string(block_size) +
                                  " found in " + std::to_string(max_attempts) + " draws");
}

SuperclassSpace explicit_space(std::vector<Block> blocks, std::size_t n) {
  return SuperclassSpace(std::move(blocks), n);
}

std::vector<std::size_t> relabel(std::span<const ClassIndex> labels,
                                 const SuperclassSpace& space) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (ClassIndex y : labels) out.push_back(space.block_of(y));
  return out;
}

}  // namespace fitted
