#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "lilytk/taxonomy.hpp"

using namespace lilytk;
using namespace lilytk::taxonomy;

namespace {

const fs::path kData = LILYTK_DATA_DIR;

const TaxonomyDag& dag() {
  static const TaxonomyDag d = build_taxonomy(read_file(kData / "taxonomy.txt"));
  return d;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::InvalidArgument;
}

// Independent floating-point reference: duration in whole notes, times bpm, over a quarter.
double reference_qbpm(int unit, int dots, double bpm) {
  double dur = 1.0 / unit, add = dur;
  for (int d = 0; d < dots; ++d) dur += (add /= 2.0);
  return bpm * dur / 0.25;
}

}  // namespace

TEST(Taxonomy, LoadsAndHasRoots) {
  for (const auto& r : root_categories()) EXPECT_TRUE(dag().contains(r));
  for (const auto& l : speed_leaves()) EXPECT_EQ(dag().parents(l), (std::set<std::string>{"speed"}));
}

TEST(Taxonomy, MultiParentMembership) {
  EXPECT_EQ(dag().parents("giga"), (std::set<std::string>{"suite", "fast"}));
  EXPECT_EQ(classify_section_name("Giga", dag()), (std::set<std::string>{"suite", "fast", "speed"}));
  EXPECT_EQ(classify_section_name("Gigue", dag()), (std::set<std::string>{"suite", "fast", "speed"}));
}

TEST(Taxonomy, Classification) {
  EXPECT_EQ(classify_section_name("Grave", dag()), (std::set<std::string>{"slow", "speed"}));
  EXPECT_EQ(classify_section_name("Allegro assai", dag()), (std::set<std::string>{"very_fast", "speed"}));
  EXPECT_EQ(classify_section_name("Largo e affettuoso", dag()),
            (std::set<std::string>{"slow", "speed", "intention"}));
  EXPECT_EQ(classify_section_name("Aria", dag()), (std::set<std::string>{"non_descriptive"}));
  EXPECT_EQ(classify_section_name("formaIII", dag()), (std::set<std::string>{std::string(kUnclassified)}));
}

TEST(Taxonomy, NormalisesDiacriticsAndSeparators) {
  EXPECT_EQ(classify_section_name("Tempo giusto", dag()), (std::set<std::string>{"mid", "speed"}));
  EXPECT_EQ(normalize_name("  Bourrée "), "bourree");
  EXPECT_EQ(normalize_name("Tempo_giusto"), "tempo_giusto");
  EXPECT_EQ(normalize_name("ALLEGRO  ASSAI"), "allegro_assai");
  EXPECT_EQ(classify_section_name("Bourrée", dag()), (std::set<std::string>{"suite", "fast", "speed"}));
}

TEST(Taxonomy, CycleIsReportedWithPath) {
  try {
    build_taxonomy("a -> b\nb -> c\nc -> a\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CycleDetected);
    std::string msg = e.what();
    EXPECT_NE(msg.find("a -> b -> c -> a"), std::string::npos) << msg;
  }
}

TEST(Taxonomy, Errors) {
  EXPECT_EQ(code_of([] { build_taxonomy("a -> nowhere\n"); }), Errc::DanglingEdge);
  EXPECT_EQ(code_of([] { build_taxonomy("alias x = nowhere\n"); }), Errc::DanglingEdge);
  EXPECT_EQ(code_of([] { build_taxonomy("just a line\n"); }), Errc::MalformedSpec);
  EXPECT_EQ(code_of([] { build_taxonomy("alias x\n"); }), Errc::MalformedSpec);
  EXPECT_NO_THROW(build_taxonomy("# empty\n"));
}

TEST(QuarterBpm, Examples) {
  EXPECT_EQ(quarter_bpm({2, 0, 60}), Rational(120));
  EXPECT_EQ(quarter_bpm({8, 1, 80}), Rational(60));
  EXPECT_EQ(quarter_bpm({4, 0, 72}), Rational(72));
  EXPECT_EQ(quarter_bpm({4, 1, 80}), Rational(120));
  EXPECT_EQ(quarter_bpm({8, 0, 132}), Rational(66));
  EXPECT_EQ(quarter_bpm({16, 0, 1}), Rational(1, 4));
}

TEST(QuarterBpm, AgreesWithFloatingReference) {
  for (int unit : {1, 2, 4, 8, 16, 32})
    for (int dots = 0; dots <= 3; ++dots)
      for (std::int64_t bpm : {1, 7, 40, 60, 63, 100, 240}) {
        auto q = quarter_bpm({unit, dots, bpm});
        EXPECT_NEAR(q.to_double(), reference_qbpm(unit, dots, static_cast<double>(bpm)), 1e-9);
      }
}

TEST(QuarterBpm, Errors) {
  EXPECT_EQ(code_of([] { quarter_bpm({3, 0, 60}); }), Errc::InvalidDuration);
  EXPECT_EQ(code_of([] { quarter_bpm({4, 9, 60}); }), Errc::InvalidDuration);
  EXPECT_EQ(code_of([] { tempo_category(quarter_bpm({4, 0, 0}), TempoCategoryTable::defaults()); }),
            Errc::NonPositiveBpm);
  EXPECT_EQ(parse_duration("8."), (std::pair{8, 1}));
  EXPECT_EQ(parse_duration("2.."), (std::pair{2, 2}));
  EXPECT_FALSE(parse_duration("x"));
  EXPECT_FALSE(parse_duration("."));
}

TEST(TempoCategory, LeftClosedBoundaries) {
  auto t = TempoCategoryTable::parse(read_file(kData / "tempo_categories.txt"));
  EXPECT_EQ(tempo_category(Rational(1), t), "slow");
  EXPECT_EQ(tempo_category(Rational(65), t), "slow");
  EXPECT_EQ(tempo_category(Rational(131, 2), t), "slow");
  EXPECT_EQ(tempo_category(Rational(66), t), "mid");
  EXPECT_EQ(tempo_category(Rational(107), t), "mid");
  EXPECT_EQ(tempo_category(Rational(108), t), "fast");
  EXPECT_EQ(tempo_category(Rational(167), t), "fast");
  EXPECT_EQ(tempo_category(Rational(168), t), "very_fast");
  EXPECT_EQ(tempo_category(Rational(400), t), "very_fast");
  EXPECT_EQ(tempo_category(quarter_bpm({8, 0, 132}), t), "mid");
}

TEST(TempoCategory, TableValidation) {
  EXPECT_EQ(code_of([] { TempoCategoryTable::parse("mid 66\n"); }), Errc::MalformedSpec);
  EXPECT_EQ(code_of([] { TempoCategoryTable::parse("slow 0\nmid 66\nfast 66\n"); }), Errc::MalformedSpec);
  EXPECT_EQ(code_of([] { TempoCategoryTable::parse("slow zero\n"); }), Errc::MalformedSpec);
}
