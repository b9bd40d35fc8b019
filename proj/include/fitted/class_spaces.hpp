#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fitted {

using ClassIndex = std::size_t;
using Block = std::vector<ClassIndex>;

// The original label set Y: `num_classes` classes with optional unique names.
class ClassSet {
 public:
  explicit ClassSet(std::size_t num_classes, std::vector<std::string> names = {});

  std::size_t size() const noexcept { return num_classes_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const ClassSet&) const = default;

 private:
  std::size_t num_classes_;
  std::vector<std::string> names_;
};

// A partition of {0..n-1} into superclass blocks.
//
// Stored canonically: class indices ascending inside each block, blocks
// ordered by their smallest member. Construction validates the partition, so
// every SuperclassSpace in existence is a valid one.
class SuperclassSpace {
 public:
  SuperclassSpace(std::vector<Block> blocks, std::size_t num_classes);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }
  const Block& block(std::size_t i) const { return blocks_.at(i); }

  // Index of the block holding `c`. Throws UnknownClassError when c >= n.
  std::size_t block_of(ClassIndex c) const;

  // True when every block is a singleton.
  bool is_discrete() const noexcept { return blocks_.size() == num_classes_; }

  bool operator==(const SuperclassSpace&) const = default;

 private:
  std::vector<Block> blocks_;
  std::size_t num_classes_;
  std::vector<std::size_t> block_of_;
};

// An ordered collection of spaces over the same class set.
class Sequel {
 public:
  explicit Sequel(std::vector<SuperclassSpace> spaces);

  std::size_t num_classes() const noexcept { return spaces_.front().num_classes(); }
  const std::vector<SuperclassSpace>& spaces() const noexcept { return spaces_; }
  std::size_t size() const noexcept { return spaces_.size(); }

  bool operator==(const Sequel&) const = default;

 private:
  std::vector<SuperclassSpace> spaces_;
};

// What to build: a non-empty list of sequels, plus optionally the original
// per-class problem as one more member.
struct FittedEnsembleSpec {
  FittedEnsembleSpec(ClassSet class_set, std::vector<Sequel> sequels, bool include_identity);

  ClassSet class_set;
  std::vector<Sequel> sequels;
  bool include_identity;

  std::size_t num_classes() const noexcept { return class_set.size(); }
  // Spaces across all sequels, plus one for the identity space when included.
  std::size_t member_count() const noexcept;
  // Member spaces in build order: sequel-major, space-minor, identity last.
  std::vector<SuperclassSpace> member_spaces() const;

  bool operator==(const FittedEnsembleSpec&) const = default;
};

// Throws OverlapError, CoverageError, EmptyBlockError or UnknownClassError if
// `blocks` is not a partition of {0..num_classes-1}.
void validate_space(const std::vector<Block>& blocks, std::size_t num_classes);

// True iff every pair of distinct classes is split by at least one space.
bool is_resolving(const Sequel& sequel);
bool is_resolving(std::span<const SuperclassSpace> spaces);

enum class UnevenPolicy { kError, kAllow };

// Each class alone in its own block.
SuperclassSpace identity_space(std::size_t n);

// Pairs {(offset+2i) mod n, (offset+2i+1) mod n}. With an odd n and
// UnevenPolicy::kAllow the left-over class joins the last pair.
SuperclassSpace gen_consecutive_pairs(std::size_t n, std::size_t offset,
                                      UnevenPolicy uneven = UnevenPolicy::kError);

// Walks classes in ascending order starting at `offset` (wrapping), pairing
// each unpaired class k with (k + stride) mod n. Throws PairingError when the
// partner is already taken. With an odd n and UnevenPolicy::kAllow, the one
// class left without a partner joins the last pair formed.
SuperclassSpace gen_strided_pairs(std::size_t n, std::size_t stride, std::size_t offset,
                                  UnevenPolicy uneven = UnevenPolicy::kError);

// Seeded shuffle of {0..n-1} cut into consecutive runs of `block_size`; the
// last block keeps the remainder when block_size does not divide n.
SuperclassSpace gen_random_partition(std::size_t n, std::size_t block_size,
                                     std::uint64_t seed);

// `num_spaces` random partitions that jointly resolve the class set. Draws
// are retried with derived seeds until the collection resolves; throws
// InfeasibleConstraintError if `max_attempts` draws all fail.
Sequel gen_random_sequel(std::size_t n, std::size_t block_size, std::size_t num_spaces,
                         std::uint64_t seed, std::size_t max_attempts = 1000);

SuperclassSpace explicit_space(std::vector<Block> blocks, std::size_t n);

// Maps each class label to the index of its block in `space`.
std::vector<std::size_t> relabel(std::span<const ClassIndex> labels,
                                 const SuperclassSpace& space);

}  // namespace fitted
