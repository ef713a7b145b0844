#include <gtest/gtest.h>

#include "attitude/text.hpp"

using namespace attitude::text;

TEST(Utf8, RoundTrip) {
  const std::string s = "Путин и NATO — ок";
  EXPECT_EQ(encode_utf8(decode_utf8(s)), s);
  EXPECT_EQ(decode_utf8("я").size(), 1u);
}

TEST(Utf8, InvalidBytesBecomeReplacement) {
  const auto d = decode_utf8(std::string("a\xff", 2));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[1], U'�');
}

TEST(Lowercase, LatinAndCyrillic) {
  EXPECT_EQ(to_lower("NATO"), "nato");
  EXPECT_EQ(to_lower("ЁЛКА Москва"), "ёлка москва");
  EXPECT_EQ(to_lower("ÄÖÜ"), "äöü");
  EXPECT_EQ(to_lower("123,."), "123,.");
}

TEST(Punctuation, Basic) {
  EXPECT_TRUE(is_punctuation(U','));
  EXPECT_TRUE(is_punctuation(U'«'));
  EXPECT_TRUE(is_punctuation(U'—'));
  EXPECT_FALSE(is_punctuation(U'a'));
  EXPECT_FALSE(is_punctuation(U'ж'));
}

TEST(Split, FieldsAndWhitespace) {
  EXPECT_EQ(split("a\tb\t", '\t'), (std::vector<std::string>{"a", "b", ""}));
  EXPECT_EQ(split_whitespace("  a  b\tc "), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(trim("  x y \n"), "x y");
  EXPECT_EQ(join({"a", "b"}, ", "), "a, b");
}
