#include "toptag/codebook.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "toptag/error.hpp"

namespace toptag {

namespace {

TagCode payload_mask(int k) {
  const int bits = k * k;
  return bits >= 64 ? ~TagCode{0} : ((TagCode{1} << bits) - 1);
}

int bit_index(int k, int row, int col) { return k * k - 1 - (row * k + col); }

}  // namespace

bool code_bit(TagCode code, int k, int row, int col) {
  return ((code >> bit_index(k, row, col)) & 1U) != 0;
}

TagCode rotate_code_cw(TagCode code, int k) {
  // rotated[r][c] = original[k-1-c][r]
  TagCode out = 0;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c)
      if (code_bit(code, k, k - 1 - c, r)) out |= TagCode{1} << bit_index(k, r, c);
  return out;
}

int hamming_distance(TagCode a, TagCode b) { return std::popcount(a ^ b); }

TagCodebook::TagCodebook(int cell_count, std::vector<CodebookEntry> entries, int max_hamming)
    : k_(cell_count), entries_(std::move(entries)), max_hamming_(max_hamming) {
  if (k_ < 2 || k_ > 8) throw Error(ErrorCode::InvalidArgument, "cell count must be in [2, 8]");
  if (max_hamming_ < 0) throw Error(ErrorCode::InvalidArgument, "max_hamming must be non-negative");
  for (const auto& e : entries_) {
    if ((e.code & ~payload_mask(k_)) != 0) {
      throw Error(ErrorCode::InvalidArgument, "tag code has bits outside the k x k payload");
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i)
    for (std::size_t j = i + 1; j < entries_.size(); ++j)
      if (entries_[i].tag_id == entries_[j].tag_id) {
        throw Error(ErrorCode::InvalidArgument, "duplicate tag id in codebook");
      }
  if (!entries_.empty() && min_rotational_distance() <= 2 * max_hamming_) {
    throw Error(ErrorCode::InvalidArgument,
                "codebook codes are too close for unique decoding at max_hamming " +
                    std::to_string(max_hamming_));
  }
}

int TagCodebook::min_rotational_distance() const {
  int best = k_ * k_ + 1;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    TagCode rotated = entries_[i].code;
    for (int r = 0; r < 4; ++r) {
      if (r > 0) best = std::min(best, hamming_distance(entries_[i].code, rotated));
      for (std::size_t j = i + 1; j < entries_.size(); ++j) {
        best = std::min(best, hamming_distance(rotated, entries_[j].code));
      }
      rotated = rotate_code_cw(rotated, k_);
    }
  }
  return best;
}

const CodebookEntry* TagCodebook::find(int tag_id) const {
  for (const auto& e : entries_)
    if (e.tag_id == tag_id) return &e;
  return nullptr;
}

CodeMatch TagCodebook::best_match(TagCode observed) const {
  CodeMatch best;
  best.hamming = k_ * k_ + 1;
  for (const auto& e : entries_) {
    TagCode rotated = e.code;
    for (int r = 0; r < 4; ++r) {
      const int d = hamming_distance(observed, rotated);
      const bool better = d < best.hamming ||
                          (d == best.hamming && (e.tag_id < best.tag_id ||
                                                 (e.tag_id == best.tag_id && r < best.rotation)));
      if (better) best = {e.tag_id, d, r};
      rotated = rotate_code_cw(rotated, k_);
    }
  }
  return best;
}

TagCodebook TagCodebook::parse(std::istream& in, int max_hamming) {
  std::vector<CodebookEntry> entries;
  int k = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string id_tok, hex_tok, k_tok, extra;
    if (!(ls >> id_tok)) continue;
    if (!(ls >> hex_tok >> k_tok) || (ls >> extra)) {
      throw Error(ErrorCode::ConfigError, "codebook line " + std::to_string(line_no) +
                                              ": expected `tag_id hex_code k`");
    }
    CodebookEntry e;
    int line_k = 0;
    try {
      std::size_t used = 0;
      e.tag_id = std::stoi(id_tok, &used);
      if (used != id_tok.size()) throw std::invalid_argument("id");
      e.code = std::stoull(hex_tok, &used, 16);
      if (used != hex_tok.size()) throw std::invalid_argument("code");
      line_k = std::stoi(k_tok, &used);
      if (used != k_tok.size()) throw std::invalid_argument("k");
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, "codebook line " + std::to_string(line_no) + ": malformed field");
    }
    if (k >= 0 && line_k != k) {
      throw Error(ErrorCode::ConfigError, "codebook mixes cell counts");
    }
    k = line_k;
    entries.push_back(e);
  }
  if (entries.empty()) throw Error(ErrorCode::ConfigError, "codebook is empty");
  try {
    return TagCodebook(k, std::move(entries), max_hamming);
  } catch (const Error& err) {
    throw Error(ErrorCode::ConfigError, err.what());
  }
}

TagCodebook TagCodebook::load(const std::filesystem::path& path, int max_hamming) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open codebook " + path.string());
  return parse(in, max_hamming);
}

void TagCodebook::write(std::ostream& out) const {
  const int hex_digits = (k_ * k_ + 3) / 4;
  for (const auto& e : entries_) {
    out << e.tag_id << ' ' << std::hex << std::setw(hex_digits) << std::setfill('0') << e.code
        << std::dec << std::setfill(' ') << ' ' << k_ << '\n';
  }
}

TagCodebook TagCodebook::generate(int cell_count, int count, int min_distance, std::uint64_t seed,
                                  int max_hamming) {
  const int k = cell_count;
  const TagCode mask = payload_mask(k);
  std::mt19937_64 rng(seed);
  std::vector<CodebookEntry> accepted;
  std::vector<TagCode> taken = {0, mask};  // every rotation of accepted codes, plus blank payloads

  for (std::size_t attempt = 0; attempt < 10'000'000 && static_cast<int>(accepted.size()) < count;
       ++attempt) {
    const TagCode candidate = rng() & mask;
    std::array<TagCode, 4> rots{};
    rots[0] = candidate;
    for (int r = 1; r < 4; ++r) rots[r] = rotate_code_cw(rots[r - 1], k);
    bool ok = true;
    for (int r = 1; r < 4 && ok; ++r) ok = hamming_distance(candidate, rots[r]) >= min_distance;
    for (std::size_t i = 0; i < taken.size() && ok; ++i)
      for (int r = 0; r < 4 && ok; ++r) ok = hamming_distance(taken[i], rots[r]) >= min_distance;
    if (!ok) continue;
    accepted.push_back({static_cast<int>(accepted.size()), candidate});
    taken.insert(taken.end(), rots.begin(), rots.end());
  }
  if (static_cast<int>(accepted.size()) < count) {
    throw Error(ErrorCode::InvalidArgument, "could not generate the requested number of codes");
  }
  return TagCodebook(k, std::move(accepted), max_hamming);
}

const TagCodebook& TagCodebook::builtin() {
  static const TagCodebook book = generate(6, 32, 11, 0x746f707461673336ULL);
  return book;
}

}  // namespace toptag
