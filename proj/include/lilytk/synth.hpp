#pragma once

// Synthetic LilyPond scores, PostScript fixtures and labelled project corpora
// with known ground truth.

#include <array>
#include <cstdio>
#include <cstdint>
#include <string>
#include <vector>

#include "lilytk/pitchlang.hpp"
#include "lilytk/util.hpp"

namespace lilytk::synth {

struct ScoreOptions {
  bool italiano = false;  // write pitch names in solmization
  int max_depth = 2;
  int min_events = 4;
  int max_events = 10;
};

struct SyntheticScore {
  std::string text;
  std::size_t expected_notes = 0;   // notes reachable from \score
  std::size_t unused_notes = 0;     // notes in variables never referenced
  std::size_t incipit_notes = 0;
};

namespace detail {

inline constexpr std::array<const char*, 7> kDutch = {"c", "d", "e", "f", "g", "a", "b"};
inline constexpr std::array<const char*, 12> kDutchAltered = {"cis", "des", "dis", "es", "fis", "ges",
                                                             "gis", "as", "ais", "bes", "eis", "ces"};
inline constexpr std::array<const char*, 5> kDurations = {"1", "2", "4", "8", "16"};
inline constexpr std::array<const char*, 6> kArticulations = {"-.", "->", "-^", "--", "\\fermata", "\\trill"};
inline constexpr std::array<const char*, 6> kDynamics = {"\\p", "\\f", "\\mf", "\\pp", "\\sfz", "\\ff"};

class Writer {
 public:
  Writer(Rng& rng, const ScoreOptions& opt) : rng_(rng), opt_(opt) {}

  std::string pitch() {
    std::string name = rng_.below(4) == 0 ? kDutchAltered[rng_.below(kDutchAltered.size())] : kDutch[rng_.below(kDutch.size())];
    if (opt_.italiano) name = *pitchlang::default_table().to_italiano(name);
    switch (rng_.below(4)) {
      case 0: name += "'"; break;
      case 1: name += ","; break;
      case 2: name += "''"; break;
      default: break;
    }
    return name;
  }

  std::string key_name() {
    std::string name = kDutch[rng_.below(kDutch.size())];
    return opt_.italiano ? *pitchlang::default_table().to_italiano(name) : name;
  }

  std::string duration() {
    if (rng_.below(2)) return "";
    std::string d = kDurations[rng_.below(kDurations.size())];
    if (rng_.below(5) == 0) d += ".";
    return d;
  }

  std::string decoration() {
    std::string out;
    if (rng_.below(5) == 0) out += kArticulations[rng_.below(kArticulations.size())];
    if (rng_.below(6) == 0) out += kDynamics[rng_.below(kDynamics.size())];
    return out;
  }

  // One event; returns its note count.
  std::size_t event(std::string& out) {
    switch (rng_.below(10)) {
      case 0: {  // rest, whole-bar rest or skip
        static constexpr std::array<const char*, 3> kinds = {"r", "R", "s"};
        out += kinds[rng_.below(3)];
        out += rng_.below(2) ? "4" : "1";
        return 0;
      }
      case 1:
      case 2: {
        std::size_t n = 2 + rng_.below(3);
        out += "<";
        for (std::size_t k = 0; k < n; ++k) out += (k ? " " : "") + pitch();
        out += ">" + duration() + decoration();
        return n;
      }
      case 3: {  // tied pair: two written noteheads
        auto p = pitch();
        out += p + "4~ " + p + "4";
        return 2;
      }
      case 4: {
        out += p_markup();
        return 1;
      }
      default:
        out += pitch() + duration() + decoration();
        return 1;
    }
  }

  std::string p_markup() {
    static constexpr std::array<const char*, 3> words = {"dolce", "espressivo", "sotto voce"};
    return pitch() + "4^\\markup { \\italic \"" + std::string(words[rng_.below(3)]) + "\" }";
  }

  // Sequence of events and nested constructs, no braces; returns the note count.
  std::size_t sequence(std::string& out, int depth) {
    std::size_t total = 0;
    auto n = static_cast<std::size_t>(opt_.min_events) + rng_.below(static_cast<std::uint64_t>(opt_.max_events - opt_.min_events + 1));
    for (std::size_t i = 0; i < n; ++i) {
      out += i ? " " : "";
      auto choice = depth < opt_.max_depth ? rng_.below(14) : 13;
      switch (choice) {
        case 0: {
          auto times = 2 + rng_.below(3);
          out += "\\repeat unfold " + std::to_string(times) + " { ";
          total += times * sequence(out, depth + 1);
          out += " }";
          break;
        }
        case 1: {
          out += "\\repeat volta 2 { ";
          total += sequence(out, depth + 1);
          out += " }";
          if (rng_.below(2)) {
            out += " \\alternative { { ";
            total += sequence(out, depth + 1);
            out += " } { ";
            total += sequence(out, depth + 1);
            out += " } }";
          }
          break;
        }
        case 2: {
          out += "\\grace { ";
          std::size_t g = 1 + rng_.below(3);
          for (std::size_t k = 0; k < g; ++k) out += (k ? " " : "") + pitch() + "16";
          out += " }";
          total += g;
          break;
        }
        case 3:
          out += "\\acciaccatura " + pitch() + "8 " + pitch() + "4";
          total += 2;
          break;
        case 4: {
          out += "\\tuplet 3/2 { ";
          for (int k = 0; k < 3; ++k) out += (k ? " " : "") + pitch() + "8";
          out += " }";
          total += 3;
          break;
        }
        default:
          total += event(out);
          break;
      }
    }
    return total;
  }

 private:
  Rng& rng_;
  const ScoreOptions& opt_;
};

inline std::string voice_name(std::size_t i) {
  static constexpr std::array<const char*, 4> names = {"violinoPrimo", "violinoSecondo", "viola", "basso"};
  return names[i % names.size()];
}

}  // namespace detail

/// A complete single-file score whose note count is known by construction.
inline SyntheticScore generate_score(std::uint64_t seed, const ScoreOptions& opt = {}) {
  Rng rng(seed);
  detail::Writer w(rng, opt);
  SyntheticScore s;
  std::string& out = s.text;
  out += "\\version \"2.24.0\"\n";
  if (opt.italiano) out += "\\language \"italiano\"\n";
  out += "\\header {\n  title = \"Sonata " + std::to_string(seed % 100) + "\"\n  composer = \"Anon\"\n}\n\n";

  const std::size_t n_voices = 1 + rng.below(3);
  std::vector<std::size_t> voice_notes(n_voices);
  for (std::size_t v = 0; v < n_voices; ++v) {
    out += detail::voice_name(v) + " = ";
    const bool relative = rng.below(2);
    if (relative) out += "\\relative " + w.pitch() + " ";
    out += "{\n  \\clef " + std::string(v + 1 == n_voices && n_voices > 1 ? "bass" : "treble") + " \\key " +
           w.key_name() + (rng.below(2) ? " \\major" : " \\minor") + " \\time 3/4\n  ";
    voice_notes[v] = w.sequence(out, 0);
    out += "\n}\n\n";
  }
  if (rng.below(2)) {
    out += "cadenza = { ";
    s.unused_notes = w.sequence(out, 1);
    out += " }\n\n";
  }
  if (rng.below(2)) {
    out += "incipitViolino = { ";
    s.incipit_notes = w.sequence(out, 1);
    out += " }\n\n";
  }

  out += "\\score {\n  <<\n";
  for (std::size_t v = 0; v < n_voices; ++v) {
    const std::size_t uses = rng.below(4) == 0 ? 2 : 1;
    out += "    \\new Staff \\with { instrumentName = \"" + detail::voice_name(v) + "\" } {\n";
    out += "      \\set Staff.midiInstrument = \"violin\"\n";
    if (rng.below(3) == 0) out += "      \\tempo \"Allegro\" 4 = 120\n";
    for (std::size_t u = 0; u < uses; ++u) out += "      \\" + detail::voice_name(v) + "\n";
    s.expected_notes += uses * voice_notes[v];
    if (rng.below(3) == 0) {
      out += "      ";
      s.expected_notes += w.sequence(out, 1);
      out += "\n";
    }
    out += "    }\n";
  }
  out += "  >>\n  \\layout { }\n  \\midi { \\tempo 4 = 90 }\n}\n";
  return s;
}

/// PostScript-like text with exactly `noteheads` glyph references and decoys
/// that must not be counted.
inline std::string synthetic_ps(std::size_t noteheads, std::uint64_t seed) {
  Rng rng(seed);
  static constexpr std::array<const char*, 5> glyphs = {"s0", "s1", "s2", "s2cross", "s0diamond"};
  static constexpr std::array<const char*, 6> decoys = {
      "/noteheads s2 glyphshow", "noteheads.s2 glyphshow", "/rests.2 glyphshow", "/flags.u3 glyphshow",
      "/accidentals.sharp glyphshow", "(noteheads) show"};
  std::string out = "%!PS-Adobe-3.0\n%%Creator: synthetic\n%%Pages: 1\n";
  std::size_t placed = 0;
  while (placed < noteheads || rng.below(4) != 0) {
    out += std::to_string(rng.below(500)) + "." + std::to_string(rng.below(100)) + " " + std::to_string(rng.below(700)) +
           " moveto ";
    if (placed < noteheads && rng.below(3) != 0) {
      out += "/noteheads.";
      out += glyphs[rng.below(glyphs.size())];
      out += " glyphshow";
      ++placed;
      // two glyphs on one line now and then
      if (placed < noteheads && rng.below(5) == 0) {
        out += " /noteheads.s2 glyphshow";
        ++placed;
      }
    } else {
      out += decoys[rng.below(decoys.size())];
    }
    out += "\n";
  }
  out += "showpage\n%%EOF\n";
  return out;
}

// --- labelled multi-file projects -----------------------------------------

struct ProjectFile {
  std::string relative_path;
  std::string content;
};

struct SyntheticProject {
  std::string file_id;
  std::string label;  // class name
  std::string header_name;
  std::vector<ProjectFile> files;
};

inline const std::vector<std::string>& corpus_classes() {
  static const std::vector<std::string> names = {"vivaldi", "corelli", "albinoni"};
  return names;
}

/// One project per file id: header (with \header and includes), a macro file,
/// two or three movement files, and a score file. Each class has its own
/// stylistic habits so that token statistics separate them.
inline SyntheticProject generate_project(std::size_t index, std::size_t n_classes, std::uint64_t seed) {
  Rng rng(splitmix64(seed ^ (0x9e37ULL * (index + 1))));
  ScoreOptions opt;
  opt.italiano = true;
  opt.max_depth = 1;
  detail::Writer w(rng, opt);
  const std::size_t cls = index % n_classes;
  static const std::vector<std::string> forms = {"concerto", "sonata", "sinfonia"};
  SyntheticProject p;
  p.label = corpus_classes()[cls % corpus_classes().size()];
  char num[8];
  std::snprintf(num, sizeof num, "%03zu", index);
  p.file_id = p.label + "_" + forms[rng.below(forms.size())] + "_" + num;
  p.header_name = p.file_id + ".ly";

  auto style = [&](std::string& out) {
    const std::size_t n = 6 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      out += " ";
      switch (cls) {
        case 0:  // chords and trills
          if (rng.below(2)) {
            out += "<" + w.pitch() + " " + w.pitch() + " " + w.pitch() + ">4\\trill";
          } else {
            out += w.pitch() + "8\\f";
          }
          break;
        case 1:  // rests and staccato figures
          if (rng.below(2)) {
            out += "r8 " + w.pitch() + "8-. " + w.pitch() + "8-.";
          } else {
            out += w.pitch() + "2\\p";
          }
          break;
        default:  // repeated tuplets
          if (rng.below(2)) {
            out += "\\tuplet 3/2 { " + w.pitch() + "16 " + w.pitch() + "16 " + w.pitch() + "16 }";
          } else {
            out += "\\repeat unfold 2 { " + w.pitch() + "16 " + w.pitch() + "16 }";
          }
          break;
      }
    }
  };

  const std::size_t n_mov = 2 + rng.below(2);
  std::string header = "\\version \"2.24.0\"\n\\language \"italiano\"\n\\header {\n  title = \"" + forms[0] +
                       "\"\n  composer = \"" + p.label + "\"\n  % revision history\n  maintainer = \"someone\"\n}\n";
  header += "\\include \"macros.ly\"\n";
  std::string score = "\\score {\n  <<\n";
  static const std::vector<std::string> tempos = {"Allegro", "Adagio", "Presto", "Largo", "Andante"};
  for (std::size_t m = 0; m < n_mov; ++m) {
    const std::string name = "forma" + std::string(1, static_cast<char>('A' + m));
    std::string body = "% movement " + std::to_string(m + 1) + "\n" + name + " = \\relative do' {\n  \\key re \\major \\time 4/4 \\tempo \"" +
                       tempos[rng.below(tempos.size())] + "\" 4 = " + std::to_string(60 + 10 * rng.below(10)) + "\n ";
    style(body);
    body += "\n}\n";
    const std::string fname = "mov" + std::to_string(m + 1) + ".ly";
    p.files.push_back({fname, body});
    header += "\\include \"" + fname + "\"\n";
    score += "    \\new Staff { \\set Staff.midiInstrument = \"violin\" \\" + name + " }\n";
  }
  score += "  >>\n  \\layout { }\n}\n";
  header += "\\include \"score.ly\"\n";
  p.files.push_back({"macros.ly", "% shared macros\ntrillo = \\trill\n"});
  p.files.push_back({"score.ly", score});
  p.files.push_back({p.header_name, header});
  return p;
}

inline void write_project(const SyntheticProject& p, const fs::path& dir) {
  for (const auto& f : p.files) write_file(dir / f.relative_path, f.content);
}

}  // namespace lilytk::synth
