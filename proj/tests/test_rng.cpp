#include <set>

#include "doctest.h"

#include "cirseq/rng.hpp"

using cirseq::Philox4x32;

TEST_CASE("philox known-answer vectors") {
  using B = Philox4x32::Block;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::bijection(B{0, 0, 0, 0}, K{0, 0}) ==
        B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::bijection(B{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              K{0xffffffffu, 0xffffffffu}) ==
        B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::bijection(B{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              K{0xa4093822u, 0x299f31d0u}) ==
        B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("first draw packs the zero block") {
  Philox4x32 g(0, 0);
  CHECK(g() == ((0xe169c58dull << 32) | 0x6627e8d5ull));
  CHECK(g() == ((0x9b00dbd8ull << 32) | 0xbc57ac4cull));
  CHECK(g.draws() == 2);
}

TEST_CASE("streams repeat and separate") {
  Philox4x32 a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    seen.insert(x);
    seen.insert(c());
    seen.insert(d());
  }
  CHECK(seen.size() == 3000);
  CHECK(a.draws() == 1000);
}

TEST_CASE("replicate stream is keyed by seed and index only") {
  auto s1 = cirseq::replicate_stream(9, 3);
  auto s2 = cirseq::replicate_stream(9, 3);
  for (int i = 0; i < 5; ++i) s1();
  for (int i = 0; i < 5; ++i) s2();
  CHECK(s1() == s2());
}
