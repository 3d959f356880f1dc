// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>

#include "lilytk/metadata.hpp"
#include "lilytk/pitchlang.hpp"
#include "lilytk/probe.hpp"
#include "lilytk/synth.hpp"
#include "lilytk/syntax.hpp"
#include "lilytk/taxonomy.hpp"
#include "lilytk/tokenizer.hpp"
#include "lilytk/validate.hpp"
#include "oracles.hpp"
#include "probe_data.hpp"

using namespace lilytk;

namespace {

const fs::path kData = LILYTK_DATA_DIR;
const fs::path kFixtures = LILYTK_FIXTURES;

// time limits in seconds
constexpr double kAtomicityLimit = 1.0;
constexpr double kRoundTripLimit = 30.0;
constexpr double kChunkLimit = 10.0;
constexpr double kOracleLimit = 60.0;
constexpr double kProbeLimit = 60.0;
constexpr double kSmokeLimit = 300.0;

// tolerances
constexpr int kCorruptionSlack = 1;           // 80/10/10 counts within ±1
constexpr double kGradientRelError = 1e-4;
constexpr double kChanceSlack = 0.10;         // shuffled labels: |acc - 1/C| <= 0.10
constexpr int kFoldBalance = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, double limit, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit > 0 && secs >= limit) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  char t[32];
  std::snprintf(t, sizeof t, "%.2fs", secs);
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << t << "] " << o.detail << std::endl;
}

void skip(const std::string& name, const std::string& why) { std::cout << "SKIP " << name << " " << why << std::endl; }

const tok::Vocabulary& vocab() {
  static const auto v = tok::Vocabulary::load(kData / "vocab/tiny-vocab.tsv", kData / "vocab/tiny-merges.txt",
                                              kData / "added_tokens.tsv");
  return v;
}

std::string fuzz_lily(Rng& rng) {
  static const std::vector<std::string> atoms = {
      "c'4", " d8.", " <c e g>2", " r4", " \\time 3/4", " \\times 2/3 {", "}", " \\timesig", " \\key d \\major",
      " \\relative c''", " \\pppp", "\n", "\t", " \"Allegro\"", " % comment\n", " é", " \xe2\x99\xaf", " #'(1 . 2)",
      " ~", " \\override Staff.Clef #'x = ##f", " \\trillSpanStart", " \\", "\\\\", " \r\n", " \\mf\\>"};
  std::string s;
  for (auto n = rng.below(40); n > 0; --n) s += atoms[rng.below(atoms.size())];
  if (rng.below(4) == 0) s.push_back(static_cast<char>(rng.below(256)));
  return s;
}

Outcome atomicity() {
  std::size_t bad = 0;
  for (const auto& t : vocab().added_tokens()) {
    auto d = tok::tokenize(t, vocab());
    if (d.ids.size() != 1 || d.ids[0] != vocab().added_id(t)) ++bad;
  }
  const auto time_id = *vocab().added_id("\\time");
  for (const char* s : {"\\times 2/3 { c d e }", "\\times", "\\timesig", "x\\times"}) {
    auto d = tok::tokenize(s, vocab());
    if (std::count(d.ids.begin(), d.ids.end(), time_id)) ++bad;
  }
  return {bad == 0 && vocab().added_size() == 115,
          std::to_string(vocab().added_size()) + " added tokens, " + std::to_string(bad) + " failures"};
}

Outcome round_trip() {
  Rng rng(3);
  std::vector<std::string> texts;
  for (int i = 0; i < 1000; ++i) texts.push_back(fuzz_lily(rng));
  for (const char* dir : {"project", "engrave"})
    for (const auto& f : list_files(kFixtures / dir, ".ly")) texts.push_back(read_file(f));
  texts.push_back(read_file(kFixtures / "project_flat.golden.ly"));
  std::size_t bad = 0;
  for (const auto& t : texts)
    if (tok::detokenize(tok::tokenize(t, vocab()).ids, vocab()) != t) ++bad;
  return {bad == 0, std::to_string(texts.size()) + " strings, " + std::to_string(bad) + " failures"};
}

Outcome vocab_arithmetic() {
  auto added = tok::parse_added_tokens(read_file(kData / "added_tokens.tsv"));
  std::unordered_map<std::string, tok::TokenId> base;
  for (const char* s : {"<s>", "<pad>", "</s>", "<unk>"}) base.emplace(s, static_cast<tok::TokenId>(base.size()));
  for (int b = 0; b < 256; ++b)
    base.emplace(tok::byte_alphabet().symbol(static_cast<std::uint8_t>(b)), static_cast<tok::TokenId>(base.size()));
  while (base.size() + 1 < 50265) base.emplace("t" + std::to_string(base.size()), static_cast<tok::TokenId>(base.size()));
  base.emplace("<mask>", static_cast<tok::TokenId>(base.size()));
  tok::Vocabulary big(base, {}, added);
  const bool ok = vocab().size() == vocab().base_size() + 115 && big.size() == 50380;
  return {ok, "tiny " + std::to_string(vocab().base_size()) + "+115=" + std::to_string(vocab().size()) + ", full " +
                  std::to_string(big.base_size()) + "+115=" + std::to_string(big.size())};
}

Outcome chunking() {
  const auto& sp = vocab().special();
  Rng rng(5);
  std::size_t bad = 0, trials = 0;
  for (int t = 0; t < 300; ++t, ++trials) {
    const std::size_t n = t < 4 ? std::vector<std::size_t>{0, 1, 510, 5000}[t] : rng.below(5001);
    std::vector<tok::TokenId> ids(n);
    for (auto& id : ids) id = static_cast<tok::TokenId>(4 + rng.below(400));
    auto chunks = tok::chunk(ids, sp);
    std::vector<tok::TokenId> joined;
    bool ok = chunks.size() == (n + 509) / 510;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
      const auto& ch = chunks[c].ids;
      ok = ok && ch.size() <= 512 && (c + 1 == chunks.size() || ch.size() == 512) && ch.front() == sp.cls &&
           ch.back() == sp.sep;
      joined.insert(joined.end(), ch.begin() + 1, ch.end() - 1);
    }
    if (!ok || joined != ids) ++bad;
  }
  return {bad == 0, std::to_string(trials) + " documents, " + std::to_string(bad) + " failures"};
}

Outcome masking() {
  const auto& sp = vocab().special();
  Rng rng(9);
  std::vector<tok::TokenId> content(100);
  for (auto& id : content) id = static_cast<tok::TokenId>(4 + rng.below(290));
  const auto ch = tok::chunk(content, sp).front();
  std::size_t bad = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto ex = tok::sample_mlm_masks(ch, vocab(), 0.15, seed);
    bool ok = ex.masked_positions.size() == 15 && std::abs(static_cast<int>(ex.n_mask_token) - 12) <= kCorruptionSlack &&
              std::abs(static_cast<int>(ex.n_random) - 2) <= kCorruptionSlack &&
              std::abs(static_cast<int>(ex.n_kept) - 1) <= kCorruptionSlack;
    for (auto p : ex.masked_positions) ok = ok && !sp.is_special(ch.ids[p]);
    if (!ok) ++bad;
  }
  return {bad == 0, "100 runs, " + std::to_string(bad) + " failures"};
}

Outcome note_oracle() {
  std::size_t bad = 0;
  const std::size_t n = 240;
  for (std::uint64_t s = 0; s < n; ++s) {
    synth::ScoreOptions opt;
    opt.italiano = s % 2 == 1;
    auto sc = synth::generate_score(1000 + s, opt);
    if (validate::count_note_events(sc.text).count != oracle::brute_force_notes(sc.text)) ++bad;
  }
  return {bad == 0, std::to_string(n) + " scores, " + std::to_string(n - bad) + " agree"};
}

Outcome ps_counter() {
  std::size_t bad = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto ps = synth::synthetic_ps(s * 13 % 120, s);
    if (validate::count_ps_noteheads(ps) != oracle::regex_noteheads(ps)) ++bad;
  }
  return {bad == 0, "50 fixtures, " + std::to_string(50 - bad) + " agree"};
}

Outcome taxonomy_check() {
  auto dag = taxonomy::build_taxonomy(read_file(kData / "taxonomy.txt"));
  auto giga = taxonomy::classify_section_name("giga", dag);
  const bool both = giga.count("suite") && giga.count("fast");
  const bool half = taxonomy::quarter_bpm({2, 0, 60}) == taxonomy::Rational(120);
  const bool dotted = taxonomy::quarter_bpm({8, 1, 80}) == taxonomy::Rational(60);
  return {both && half && dotted, std::string("acyclic; giga suite+fast ") + (both ? "yes" : "no") + "; 2=60 -> " +
                                      std::to_string(taxonomy::quarter_bpm({2, 0, 60}).to_double()) + "; 8.=80 -> " +
                                      std::to_string(taxonomy::quarter_bpm({8, 1, 80}).to_double())};
}

Outcome period_check() {
  using metadata::Period;
  const bool ok = metadata::bin_period(1649) == Period::EarlyBaroque && metadata::bin_period(1650) == Period::HighBaroque &&
                  metadata::bin_period(1700) == Period::LateBaroque &&
                  metadata::bin_period(1751) == Period::TransitionalClassical;
  return {ok, "1649/1650/1700/1751"};
}

Outcome probe_check() {
  std::string detail;
  double grad = 0;
  for (std::uint64_t s = 0; s < 5; ++s) grad = std::max(grad, probe_data::gradient_check(s));
  const bool a = grad < kGradientRelError;
  auto sep = probe::cross_validate(probe_data::blobs(3, 20, 5, 9), 5, 1);
  const bool b = sep.accuracy.mean == 1.0;
  auto noise = probe::cross_validate(probe_data::noise_labels(3, 60, 8, 12), 5, 1);
  const bool c = std::fabs(noise.accuracy.mean - 1.0 / 3.0) <= kChanceSlack;
  std::vector<int> y;
  for (int i = 0; i < 37; ++i) y.push_back(i % 3);
  for (int i = 0; i < 11; ++i) y.push_back(3);
  int worst = 0;
  for (std::uint64_t s = 0; s < 20; ++s) worst = std::max(worst, probe_data::fold_imbalance(y, probe::stratified_folds(y, 5, s), 5));
  const bool d = worst <= kFoldBalance;
  const bool e = probe_data::no_leakage(probe_data::blobs(3, 15, 4, 2), 5, 7) &&
                 probe_data::no_leakage(probe_data::noise_labels(2, 20, 3, 5), 4, 1);
  char buf[256];
  std::snprintf(buf, sizeof buf, "(a) grad rel err %.2e %s (b) separable acc %.3f %s (c) shuffled acc %.3f %s (d) fold spread %d %s (e) leakage %s",
                grad, a ? "ok" : "bad", sep.accuracy.mean, b ? "ok" : "bad", noise.accuracy.mean, c ? "ok" : "bad", worst,
                d ? "ok" : "bad", e ? "none" : "DETECTED");
  return {a && b && c && d && e, buf};
}

/// Generate, flatten, convert, strip, tokenize, chunk, embed and probe; returns the report files.
std::vector<std::string> smoke_run(const fs::path& dir, std::string& summary) {
  fs::remove_all(dir);
  const std::uint64_t seed = 20240917;
  std::string labels_csv = "file_id,task,label\n";
  std::string emb;
  for (std::size_t i = 0; i < 60; ++i) {
    auto p = synth::generate_project(i, 3, seed);
    const auto pdir = dir / "projects" / p.file_id;
    synth::write_project(p, pdir);
    labels_csv += p.file_id + ",composer," + p.label + "\n";
    auto ws = syntax::Workspace::scan(pdir);
    auto names = syntax::discover_layout_names(ws, p.file_id + ".ly");
    auto flat = syntax::flatten_project(syntax::resolve_includes(read_file(pdir / names.header), ws, names));
    auto prepared = syntax::strip_headers(pitchlang::convert_pitch_language(flat.text));
    write_file(dir / "prepared" / (p.file_id + ".ly"), prepared);
    auto chunks = tok::chunk(tok::tokenize(prepared, vocab()).ids, vocab().special());
    for (const auto& r : probe::baseline_embed(p.file_id, chunks, vocab().special(), 64, seed))
      emb += probe::to_jsonl(r) + "\n";
  }
  write_file(dir / "labels.csv", labels_csv);
  write_file(dir / "emb.jsonl", emb);
  probe::ProbeOptions opt;
  opt.seed = seed;
  auto rep = probe::run_probe(probe::load_embeddings(dir / "emb.jsonl"), probe::load_labels(dir / "labels.csv"), opt);
  bool complete = rep.cells.size() == rep.layers.size() * rep.tasks.size() && rep.layers.size() == 4;
  for (const auto& c : rep.cells)
    for (double v : {c.cv.accuracy.mean, c.cv.accuracy.std, c.cv.macro_precision.mean, c.cv.macro_recall.mean})
      complete = complete && std::isfinite(v) && v >= 0 && v <= 1;
  summary = std::string(complete ? "complete" : "INCOMPLETE") + " report, " + std::to_string(rep.cells.size()) +
            " cells, layer-6 composer acc " + probe::fixed3(rep.cells.empty() ? 0 : rep.cells[1].cv.accuracy.mean);
  if (!complete) return {};
  return {emb, probe::report_csv(rep), probe::report_json(rep, opt).dump(2), probe::report_table(rep),
          probe::layer_accuracy_table(rep)};
}

Outcome smoke() {
  const auto base = fs::temp_directory_path() / "lilytk_acceptance";
  std::string s1, s2;
  auto a = smoke_run(base / "run1", s1);
  auto b = smoke_run(base / "run2", s2);
  fs::remove_all(base);
  const bool ok = !a.empty() && a == b;
  return {ok, s1 + (a == b ? "; runs byte-identical" : "; runs DIFFER")};
}

Outcome engraver_fixtures(const std::string& engraver) {
  const auto out = fs::temp_directory_path() / "lilytk_acceptance_engrave";
  fs::remove_all(out);
  fs::create_directories(out);
  validate::ValidateOptions opt;
  opt.engraver = engraver;
  opt.compile.output_dir = out;
  auto res = validate::batch_validate(kFixtures / "engrave", opt, 1);
  fs::remove_all(out);
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu files, %zu rendered, perfect_ratio %.3f", res.summary.n_files, res.summary.n_rendered,
                res.summary.perfect_ratio);
  return {res.summary.n_rendered == res.summary.n_files && res.summary.perfect_ratio == 1.0, buf};
}

}  // namespace

int main() {
  report("tokenizer-atomicity", kAtomicityLimit, atomicity);
  report("tokenizer-round-trip", kRoundTripLimit, round_trip);
  report("vocabulary-arithmetic", 0, vocab_arithmetic);
  report("chunking", kChunkLimit, chunking);
  report("mlm-masking", 0, masking);
  report("note-count-oracle", kOracleLimit, note_oracle);
  report("postscript-glyph-counter", 0, ps_counter);
  report("taxonomy", 0, taxonomy_check);
  report("period-binning", 0, period_check);
  report("probe-correctness", kProbeLimit, probe_check);
  report("end-to-end-smoke", kSmokeLimit, smoke);

  std::string engraver;
  if (const char* env = std::getenv("LILYPOND_BIN"); env && *env) engraver = env;
  if (engraver.empty() && validate::find_executable("lilypond")) engraver = "lilypond";
  if (engraver.empty() || !validate::find_executable(engraver))
    skip("engraver-integration", "(no engraver found; set LILYPOND_BIN)");
  else
    report("engraver-integration", 0, [&] { return engraver_fixtures(engraver); });

  std::cout << (failures ? "FAILED " : "ALL PASSED ") << failures << " failing" << std::endl;
  return failures ? 1 : 0;
}
