#include <gtest/gtest.h>

#include "citehist/text.hpp"

using namespace citehist;

TEST(Text, SplitKeepsEmptyPieces) {
    auto p = text::split("a, , b", ", ");
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[1], "");
    EXPECT_EQ(text::split("", ",").size(), 1u);
}

TEST(Text, ParseInt) {
    EXPECT_EQ(text::parse_int(" 42 "), 42);
    EXPECT_EQ(text::parse_int("-3"), -3);
    EXPECT_FALSE(text::parse_int("198X"));
    EXPECT_FALSE(text::parse_int(""));
}

TEST(Text, Utf8Validation) {
    EXPECT_TRUE(text::is_valid_utf8("Gl\xC3\xA4nzel"));
    EXPECT_FALSE(text::is_valid_utf8("Gl\xE4nzel"));
    EXPECT_FALSE(text::is_valid_utf8("\xC0\x80"));
    EXPECT_EQ(text::latin1_to_utf8("\xE4"), "\xC3\xA4");
}

TEST(Text, Folding) {
    EXPECT_EQ(text::fold_to_ascii(0x00E4), "a");
    EXPECT_EQ(text::fold_to_ascii(0x00DF), "ss");
    EXPECT_EQ(text::fold_to_ascii(0x0141), "L");
}

TEST(Text, NumberFormatting) {
    EXPECT_EQ(text::format_number(0.5), "0.5");
    EXPECT_EQ(text::format_number(4.0), "4");
    EXPECT_EQ(text::format_number(1.0 / 3.0), "0.333333");
    EXPECT_EQ(text::format_number(1234567.0), "1.23457e+06");
    EXPECT_EQ(text::format_number(-0.0), "0");
    EXPECT_EQ(text::format_fixed(2.0 / 3.0, 6), "0.666667");
}

TEST(Text, Fnv1aKnownValues) {
    EXPECT_EQ(text::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(text::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(text::hex64(0xabcULL), "0000000000000abc");
}
