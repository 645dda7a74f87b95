#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace toptag {

/// k x k payload bits packed row-major from the top-left cell, which is the
/// most significant of the k*k bits. A set bit is a dark cell.
using TagCode = std::uint64_t;

/// Payload rotated by 90 degrees clockwise (as seen in the image).
TagCode rotate_code_cw(TagCode code, int k);
int hamming_distance(TagCode a, TagCode b);
bool code_bit(TagCode code, int k, int row, int col);

struct CodebookEntry {
  int tag_id = 0;
  TagCode code = 0;
};

struct CodeMatch {
  int tag_id = -1;
  int hamming = 0;
  int rotation = 0;  // quarter turns clockwise from the entry to the observation
};

/// Known tag codes. Construction checks that every pair of entries (and every
/// entry against its own non-trivial rotations) differs by more than
/// 2 * max_hamming bits, so a decode within max_hamming is unique.
class TagCodebook {
 public:
  TagCodebook(int cell_count, std::vector<CodebookEntry> entries, int max_hamming = 1);

  /// Text format: one `tag_id hex_code k` per line; '#' starts a comment.
  static TagCodebook parse(std::istream& in, int max_hamming = 1);
  static TagCodebook load(const std::filesystem::path& path, int max_hamming = 1);
  void write(std::ostream& out) const;

  /// Deterministic greedy code search: random candidates are accepted when
  /// they keep `min_distance` to every accepted code under all rotations,
  /// to their own rotations and to the all-dark and all-light payloads.
  static TagCodebook generate(int cell_count, int count, int min_distance, std::uint64_t seed,
                              int max_hamming = 1);

  /// 6x6 family of 32 codes with minimum rotational distance 11.
  static const TagCodebook& builtin();

  int cell_count() const { return k_; }
  int max_hamming() const { return max_hamming_; }
  const std::vector<CodebookEntry>& entries() const { return entries_; }
  const CodebookEntry* find(int tag_id) const;

  /// Closest entry over all four rotations (ties: lower tag id, then fewer turns).
  CodeMatch best_match(TagCode observed) const;

  /// Smallest distance between distinct (entry, rotation) pairs.
  int min_rotational_distance() const;

 private:
  int k_;
  std::vector<CodebookEntry> entries_;
  int max_hamming_;
};

}  // namespace toptag
