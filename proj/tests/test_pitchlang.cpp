#include <gtest/gtest.h>

#include "lilytk/pitchlang.hpp"
#include "lilytk/synth.hpp"

using namespace lilytk;
using namespace lilytk::pitchlang;

TEST(PitchTable, ThirtyFiveBijectiveEntries) {
  const auto& t = default_table();
  EXPECT_EQ(t.forward().size(), 35u);
  EXPECT_EQ(t.inverse().size(), 35u);
  for (const auto& [it, nl] : t.forward()) EXPECT_EQ(t.to_italiano(nl), it);
}

TEST(PitchTable, Examples) {
  EXPECT_EQ(map_pitch_name("do"), "c");
  EXPECT_EQ(map_pitch_name("sol"), "g");
  EXPECT_EQ(map_pitch_name("fad"), "fis");
  EXPECT_EQ(map_pitch_name("sib"), "bes");
  EXPECT_EQ(map_pitch_name("mib"), "es");
  EXPECT_EQ(map_pitch_name("labb"), "ases");
  EXPECT_EQ(map_pitch_name("redd"), "disis");
  try {
    map_pitch_name("xyz");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotAPitchName);
  }
}

TEST(Convert, MusicWordsOnly) {
  EXPECT_EQ(convert_pitch_language("{ do'4 re mi, sold }"), "{ c'4 d e, gis }");
  EXPECT_EQ(convert_pitch_language("\\relative do'' { la4 sib }"), "\\relative c'' { a4 bes }");
  EXPECT_EQ(convert_pitch_language("\\transpose do re { mi }"), "\\transpose c d { e }");
  EXPECT_EQ(convert_pitch_language("{ \\key sol \\major }"), "{ \\key g \\major }");
}

TEST(Convert, ExcludedContexts) {
  EXPECT_EQ(convert_pitch_language("{ do4^\\markup { la mi } }"), "{ c4^\\markup { la mi } }");
  EXPECT_EQ(convert_pitch_language("\\lyricmode { la re mi }"), "\\lyricmode { la re mi }");
  EXPECT_EQ(convert_pitch_language("\\header { title = \"do\" la = \"x\" }"), "\\header { title = \"do\" la = \"x\" }");
  EXPECT_EQ(convert_pitch_language("\\new Staff \\with { instrumentName = la } { la }"),
            "\\new Staff \\with { instrumentName = la } { a }");
  EXPECT_EQ(convert_pitch_language("{ do } \\addlyrics { do re mi }"), "{ c } \\addlyrics { do re mi }");
}

TEST(Convert, AssignmentNeighboursUntouched) {
  EXPECT_EQ(convert_pitch_language("la = { la }"), "la = { a }");
  EXPECT_EQ(convert_pitch_language("x = re"), "x = re");
}

TEST(Convert, LanguageDirective) {
  EXPECT_EQ(convert_pitch_language("\\language \"italiano\"\n{ do }"), "\\language \"nederlands\"\n{ c }");
  EXPECT_EQ(convert_pitch_language("\\language \"english\"\n{ c }"), "\\language \"english\"\n{ c }");
}

TEST(Convert, PreservesEverythingElse) {
  const std::string src = "% do re mi\n{ do4-. \"re\" #'mi r8 }\n";
  EXPECT_EQ(convert_pitch_language(src), "% do re mi\n{ c4-. \"re\" #'mi r8 }\n");
}

TEST(Convert, PropertiesOnGeneratedScores) {
  for (std::uint64_t s = 0; s < 80; ++s) {
    synth::ScoreOptions it;
    it.italiano = true;
    synth::ScoreOptions nl;
    auto italian = synth::generate_score(s, it).text;
    auto dutch = synth::generate_score(s, nl).text;
    auto converted = convert_pitch_language(italian);
    // the two renderings differ only in pitch names and the language line
    const std::string lang = "\\language \"nederlands\"\n";
    auto pos = converted.find(lang);
    ASSERT_NE(pos, std::string::npos);
    converted.erase(pos, lang.size());
    EXPECT_EQ(converted, dutch) << "seed " << s;
    // nederlands input is a fixed point
    EXPECT_EQ(convert_pitch_language(dutch), dutch);
    EXPECT_EQ(convert_pitch_language(converted), converted);
  }
}
