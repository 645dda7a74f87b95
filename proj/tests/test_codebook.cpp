#include <doctest.h>

#include <Eigen/Core>
#include <functional>
#include <random>
#include <sstream>

#include "toptag/codebook.hpp"
#include "toptag/error.hpp"

using namespace toptag;

namespace {

using BitGrid = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

BitGrid to_grid(TagCode code, int k) {
  BitGrid g(k, k);
  int shift = k * k - 1;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) g(r, c) = static_cast<int>((code >> shift--) & 1U);
  return g;
}

// Clockwise quarter turn: transpose, then mirror left-right.
BitGrid rotate_grid_cw(const BitGrid& g) { return g.transpose().rowwise().reverse(); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("rotate_code_cw matches a grid rotation") {
  std::mt19937_64 rng(7);
  for (int k : {2, 3, 6, 8}) {
    for (int i = 0; i < 50; ++i) {
      const TagCode mask = k * k == 64 ? ~TagCode{0} : (TagCode{1} << (k * k)) - 1;
      const TagCode code = rng() & mask;
      CHECK(to_grid(rotate_code_cw(code, k), k) == rotate_grid_cw(to_grid(code, k)));
      TagCode r = code;
      for (int t = 0; t < 4; ++t) r = rotate_code_cw(r, k);
      CHECK(r == code);
    }
  }
  // Top-left dark cell moves to the top-right.
  CHECK(rotate_code_cw(TagCode{1} << 35, 6) == (TagCode{1} << 30));
}

TEST_CASE("code_bit is row-major from the most significant bit") {
  const TagCode code = (TagCode{1} << 35) | TagCode{1};
  CHECK(code_bit(code, 6, 0, 0));
  CHECK(code_bit(code, 6, 5, 5));
  CHECK_FALSE(code_bit(code, 6, 0, 1));
  CHECK(hamming_distance(0b1011, 0b0110) == 3);
}

TEST_CASE("builtin family") {
  const TagCodebook& book = TagCodebook::builtin();
  CHECK(book.cell_count() == 6);
  CHECK(book.entries().size() == 32);
  CHECK(book.max_hamming() == 1);
  CHECK(book.min_rotational_distance() >= 11);

  // Brute-force minimum distance over distinct (entry, rotation) pairs.
  int best = 100;
  const auto& e = book.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    BitGrid gi = to_grid(e[i].code, 6);
    for (int ri = 0; ri < 4; ++ri, gi = rotate_grid_cw(gi)) {
      for (std::size_t j = i; j < e.size(); ++j) {
        BitGrid gj = to_grid(e[j].code, 6);
        for (int rj = 0; rj < 4; ++rj, gj = rotate_grid_cw(gj)) {
          if (i == j && ri == rj) continue;
          best = std::min(best, static_cast<int>((gi - gj).cwiseAbs().sum()));
        }
      }
    }
  }
  CHECK(best == book.min_rotational_distance());
}

TEST_CASE("data file matches the builtin family") {
  const TagCodebook loaded = TagCodebook::load(std::string(TOPTAG_DATA_DIR) + "/codebook_6x6.txt");
  std::ostringstream a, b;
  loaded.write(a);
  TagCodebook::builtin().write(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("best_match over rotations and bit flips") {
  const TagCodebook& book = TagCodebook::builtin();
  for (const auto& e : book.entries()) {
    TagCode r = e.code;
    for (int t = 0; t < 4; ++t) {
      const CodeMatch m = book.best_match(r);
      CHECK(m.tag_id == e.tag_id);
      CHECK(m.hamming == 0);
      CHECK(m.rotation == t);
      const CodeMatch flipped = book.best_match(r ^ (TagCode{1} << (3 * t + 2)));
      CHECK(flipped.tag_id == e.tag_id);
      CHECK(flipped.hamming == 1);
      r = rotate_code_cw(r, 6);
    }
  }
}

TEST_CASE("best_match ties go to the lower id") {
  // 2x2 payloads: 0b1000 is the top-left cell alone, 0b1110 all but the
  // bottom-right one. 0b1100 is one bit from both at rotation 0 and from the
  // single-cell code again after one turn.
  const TagCodebook book(2, {{5, 0b1000}, {3, 0b1110}}, 0);
  CodeMatch m = book.best_match(0b1100);
  CHECK(m.tag_id == 3);
  CHECK(m.hamming == 1);
  CHECK(m.rotation == 0);
  const TagCodebook swapped(2, {{3, 0b1000}, {5, 0b1110}}, 0);
  m = swapped.best_match(0b1100);
  CHECK(m.tag_id == 3);
  CHECK(m.rotation == 0);
  m = swapped.best_match(0b0100);
  CHECK(m.hamming == 0);
  CHECK(m.rotation == 1);
}

TEST_CASE("parse and write round trip") {
  std::istringstream in("# comment\n7 8 2\n\n 9 e 2  # trailing\n");
  const TagCodebook book = TagCodebook::parse(in, 0);
  REQUIRE(book.entries().size() == 2);
  CHECK(book.entries()[0].tag_id == 7);
  CHECK(book.entries()[0].code == 0x8);
  CHECK(book.find(9)->code == 0xe);
  CHECK(book.find(1) == nullptr);
  std::ostringstream out;
  book.write(out);
  CHECK(out.str() == "7 8 2\n9 e 2\n");
  std::istringstream again(out.str());
  std::ostringstream out2;
  TagCodebook::parse(again, 0).write(out2);
  CHECK(out2.str() == out.str());
}

TEST_CASE("malformed codebooks") {
  const auto parse = [](const std::string& text) {
    return [text] {
      std::istringstream in(text);
      TagCodebook::parse(in);
    };
  };
  CHECK(code_of(parse("")) == ErrorCode::ConfigError);
  CHECK(code_of(parse("1 ff\n")) == ErrorCode::ConfigError);
  CHECK(code_of(parse("1 zz 6\n")) == ErrorCode::ConfigError);
  CHECK(code_of(parse("1 ff 6 extra\n")) == ErrorCode::ConfigError);
  CHECK(code_of(parse("1 0 2\n2 f 3\n")) == ErrorCode::ConfigError);
  CHECK(code_of(parse("1 8 2\n2 4 2\n")) == ErrorCode::ConfigError);  // rotations of each other
  CHECK(code_of(parse("1 f 2\n")) == ErrorCode::ConfigError);      // rotation symmetric
  CHECK(code_of([] { TagCodebook::load("/nonexistent/book.txt"); }) == ErrorCode::IoFailure);
  CHECK(code_of([] { TagCodebook(2, {{0, 0x10}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { TagCodebook(2, {{0, 0x0}, {0, 0xf}}, 0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { TagCodebook(1, {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("generate is deterministic and keeps its distance") {
  const TagCodebook a = TagCodebook::generate(5, 10, 7, 42);
  const TagCodebook b = TagCodebook::generate(5, 10, 7, 42);
  std::ostringstream sa, sb;
  a.write(sa);
  b.write(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.entries().size() == 10);
  CHECK(a.min_rotational_distance() >= 7);
  for (const auto& e : a.entries()) {
    CHECK(hamming_distance(e.code, 0) >= 7);
    CHECK(hamming_distance(e.code, (TagCode{1} << 25) - 1) >= 7);
  }
  CHECK_THROWS_AS(TagCodebook::generate(3, 50, 5, 1), Error);
}
