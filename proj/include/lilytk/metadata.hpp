#pragma once

// Per-work metadata extraction, the JSON manifest, and corpus distribution tables.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lilytk/error.hpp"
#include "lilytk/pitchlang.hpp"
#include "lilytk/syntax.hpp"
#include "lilytk/taxonomy.hpp"
#include "lilytk/util.hpp"

namespace lilytk::metadata {

using ojson = nlohmann::ordered_json;

inline constexpr std::string_view kUnknown = "Unknown";

enum class Period { EarlyBaroque, HighBaroque, LateBaroque, TransitionalClassical };

inline std::string_view period_name(Period p) {
  switch (p) {
    case Period::EarlyBaroque: return "EarlyBaroque";
    case Period::HighBaroque: return "HighBaroque";
    case Period::LateBaroque: return "LateBaroque";
    case Period::TransitionalClassical: return "TransitionalClassical";
  }
  throw Error(Errc::SchemaViolation, "invalid period value " + std::to_string(static_cast<int>(p)));
}

inline std::optional<Period> parse_period(std::string_view s) {
  for (auto p : {Period::EarlyBaroque, Period::HighBaroque, Period::LateBaroque, Period::TransitionalClassical})
    if (period_name(p) == s) return p;
  return std::nullopt;
}

/// <1650 Early, [1650,1700) High, [1700,1750] Late, >1750 Transitional.
inline Period bin_period(int year) {
  if (year < 1400 || year > 1850) throw Error(Errc::YearOutOfRange, "year " + std::to_string(year) + " outside [1400, 1850]");
  if (year < 1650) return Period::EarlyBaroque;
  if (year < 1700) return Period::HighBaroque;
  if (year <= 1750) return Period::LateBaroque;
  return Period::TransitionalClassical;
}

// --- composer -------------------------------------------------------------

struct ComposerRule {
  std::regex pattern;
  bool captures = false;
  std::string canonical;  // used when the pattern does not capture
};

struct ComposerRules {
  std::vector<ComposerRule> rules;
  std::map<std::string, std::string> aliases;  // lowercased variant -> canonical

  /// See data/composer_rules.txt for the format.
  static ComposerRules parse(std::string_view text) {
    ComposerRules out;
    for (const auto& raw : split_lines(text)) {
      auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> fields;
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        fields.emplace_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
      }
      if (fields[0] == "alias") {
        if (fields.size() != 3) throw Error(Errc::MalformedSpec, "alias line needs variant and canonical name");
        out.aliases[to_lower_ascii(fields[1])] = fields[2];
        continue;
      }
      out.rules.push_back(compile_rule(fields[0], fields.size() > 1 ? fields[1] : std::string()));
    }
    return out;
  }

  static ComposerRule compile_rule(std::string_view pattern, std::string canonical) {
    std::string re = "^";
    bool captures = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (pattern.substr(i, 9) == "<surname>") {
        re += "([^_.\\- ]+)";
        captures = true;
        i += 8;
      } else if (pattern[i] == '*') {
        re += ".*";
      } else if (std::string_view("\\^$.|?+()[]{}").find(pattern[i]) != std::string_view::npos) {
        re += '\\';
        re += pattern[i];
      } else {
        re += pattern[i];
      }
    }
    re += "$";
    if (!captures && canonical.empty()) throw Error(Errc::MalformedSpec, "rule '" + std::string(pattern) + "' needs a canonical name");
    return ComposerRule{std::regex(re, std::regex::icase), captures, std::move(canonical)};
  }

  /// Alias lookup, else first letter upper-cased and the rest lower-cased.
  std::string standardise(std::string_view name) const {
    auto lower = to_lower_ascii(name);
    if (auto it = aliases.find(lower); it != aliases.end()) return it->second;
    if (!lower.empty() && lower[0] >= 'a' && lower[0] <= 'z') lower[0] = static_cast<char>(lower[0] - 'a' + 'A');
    return lower;
  }
};

/// Canonical composer for a filename; "Unknown" when no rule matches.
inline std::string extract_composer(std::string_view filename, const ComposerRules& rules) {
  auto stem = fs::path(std::string(filename)).stem().string();
  for (const auto& r : rules.rules) {
    std::smatch m;
    if (!std::regex_match(stem, m, r.pattern)) continue;
    return r.captures ? rules.standardise(m[1].str()) : r.canonical;
  }
  return std::string(kUnknown);
}

// --- form -----------------------------------------------------------------

inline std::vector<std::string> parse_forms(std::string_view text) {
  std::vector<std::string> forms;
  for (const auto& raw : split_lines(text)) {
    auto line = trim(raw);
    if (!line.empty() && line.front() != '#') forms.push_back(to_lower_ascii(line));
  }
  return forms;
}

/// Longest form name occurring in the title (case-insensitive, at a word start);
/// ties go to the earlier entry of `forms`.
inline std::string extract_form(std::string_view title, const std::vector<std::string>& forms) {
  const auto t = to_lower_ascii(title);
  const std::string* best = nullptr;
  for (const auto& f : forms) {
    if (f.empty()) continue;
    for (auto pos = t.find(f); pos != std::string::npos; pos = t.find(f, pos + 1)) {
      if (pos > 0 && is_ascii_letter(static_cast<unsigned char>(t[pos - 1]))) continue;
      if (!best || f.size() > best->size()) best = &f;
      break;
    }
  }
  return best ? *best : std::string(kUnknown);
}

// --- instruments ----------------------------------------------------------

struct InstrumentResult {
  std::set<std::string> instruments;
  std::vector<std::string> warnings;  // malformed directives, skipped
};

/// Quoted values of `\set <Context>.midiInstrument = "name"` (also `#"name"`).
inline InstrumentResult extract_instruments(const syntax::ParsedSource& p) {
  using syntax::TokenKind;
  InstrumentResult out;
  const auto& toks = p.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::Command || toks[i].text != "\\set") continue;
    auto prop = syntax::next_significant(toks, i + 1);
    if (prop == syntax::npos || toks[prop].kind != TokenKind::Word) continue;
    std::string_view name = toks[prop].text;
    if (name != "midiInstrument" && !(name.size() > 15 && name.substr(name.size() - 15) == ".midiInstrument")) continue;
    auto eq = syntax::next_significant(toks, prop + 1);
    auto val = eq == syntax::npos ? syntax::npos : syntax::next_significant(toks, eq + 1);
    std::optional<std::string> value;
    if (eq != syntax::npos && toks[eq].kind == TokenKind::Equals && val != syntax::npos) {
      const auto& v = toks[val];
      if (v.kind == TokenKind::String) value = syntax::string_value(v.text);
      else if (v.kind == TokenKind::Other && v.text.size() >= 3 && v.text[0] == '#' && v.text[1] == '"')
        value = syntax::string_value(v.text.substr(1));
    }
    if (value && !value->empty())
      out.instruments.insert(*value);
    else
      out.warnings.push_back("MalformedDirective: midiInstrument without a quoted value at byte " +
                             std::to_string(toks[i].span.begin));
  }
  return out;
}

inline InstrumentResult extract_instruments(std::string_view src) { return extract_instruments(syntax::parse(src)); }

// --- sections -------------------------------------------------------------

struct SectionRecord {
  std::string name;
  std::string key;    // nederlands pitch name, empty if absent
  std::string scale;  // "major" / "minor" / empty
  std::optional<taxonomy::TempoMark> tempo;
  std::string time_signature;  // "n/d" or empty
  std::set<std::string> labels;
};

struct SectionResult {
  std::vector<SectionRecord> sections;
  std::vector<std::string> warnings;
};

/// One record per variable block whose name contains `pattern` (case-insensitive),
/// in source order.
inline SectionResult extract_sections(const syntax::ParsedSource& p, std::string_view pattern = "forma") {
  using syntax::TokenKind;
  const auto g = syntax::reachable_variables(p);
  std::vector<const syntax::VariableBinding*> blocks;
  const auto needle = to_lower_ascii(pattern);
  auto consider = [&](const syntax::VariableBinding& b) {
    if (b.body_first != syntax::npos && to_lower_ascii(b.name).find(needle) != std::string::npos) blocks.push_back(&b);
  };
  for (const auto& [_, b] : g.bindings) consider(b);
  for (const auto& b : g.shadowed) consider(b);
  std::sort(blocks.begin(), blocks.end(), [](auto* a, auto* b) { return a->name_token < b->name_token; });

  const auto& toks = p.tokens;
  auto next = [&](std::size_t i) { return syntax::next_significant(toks, i + 1); };
  SectionResult out;
  for (const auto* b : blocks) {
    SectionRecord rec;
    std::string mark;
    for (std::size_t i = b->body_first; i <= b->body_last; ++i) {
      const auto& t = toks[i];
      if (t.kind != TokenKind::Command) continue;
      if (t.text == "\\key" && rec.key.empty()) {
        auto k = next(i);
        if (k != syntax::npos && toks[k].kind == TokenKind::Word) {
          auto name = std::string(pitchlang::split_octave(toks[k].text).name);
          if (auto nl = pitchlang::default_table().to_nederlands(name)) name = *nl;
          rec.key = name;
          auto m = next(k);
          if (m != syntax::npos && (toks[m].text == "\\major" || toks[m].text == "\\minor")) rec.scale = toks[m].text.substr(1);
        }
      } else if (t.text == "\\time" && rec.time_signature.empty()) {
        auto a = next(i);
        auto slash = a == syntax::npos ? a : next(a);
        auto d = slash == syntax::npos ? slash : next(slash);
        if (d != syntax::npos && toks[a].kind == TokenKind::Number && toks[slash].text == "/" &&
            toks[d].kind == TokenKind::Number)
          rec.time_signature = toks[a].text + "/" + toks[d].text;
      } else if (t.text == "\\tempo" && !rec.tempo) {
        auto j = next(i);
        if (j != syntax::npos && toks[j].kind == TokenKind::String) {
          if (rec.name.empty()) rec.name = syntax::string_value(toks[j].text);
          j = next(j);
        }
        auto eq = j == syntax::npos ? j : next(j);
        auto bpm = eq == syntax::npos ? eq : next(eq);
        if (bpm != syntax::npos && toks[j].kind == TokenKind::Number && toks[eq].kind == TokenKind::Equals &&
            toks[bpm].kind == TokenKind::Number) {
          auto dur = taxonomy::parse_duration(toks[j].text);
          if (dur) rec.tempo = taxonomy::TempoMark{dur->first, dur->second, std::stoll(toks[bpm].text)};
        }
      } else if (t.text == "\\mark" && mark.empty()) {
        auto s = next(i);
        if (s != syntax::npos && toks[s].kind == TokenKind::String) mark = syntax::string_value(toks[s].text);
      }
    }
    if (rec.name.empty()) rec.name = mark.empty() ? b->name : mark;
    if (rec.key.empty()) out.warnings.push_back(b->name + ": no \\key");
    if (rec.time_signature.empty()) out.warnings.push_back(b->name + ": no \\time");
    if (!rec.tempo) out.warnings.push_back(b->name + ": no metronome \\tempo");
    out.sections.push_back(std::move(rec));
  }
  return out;
}

inline SectionResult extract_sections(std::string_view src, std::string_view pattern = "forma") {
  return extract_sections(syntax::parse(src), pattern);
}

/// Taxonomy categories of the section name; names that yield no speed leaf and are
/// unclassified or non-descriptive fall back to the tempo category of their BPM.
inline std::set<std::string> label_section(const SectionRecord& rec, const taxonomy::TaxonomyDag& dag,
                                           const taxonomy::TempoCategoryTable& table) {
  auto labels = taxonomy::classify_section_name(rec.name, dag);
  const bool has_speed_leaf = std::any_of(taxonomy::speed_leaves().begin(), taxonomy::speed_leaves().end(),
                                          [&](const auto& l) { return labels.count(l) > 0; });
  const bool uninformative = labels.count(std::string(taxonomy::kUnclassified)) || labels.count("non_descriptive");
  if (!has_speed_leaf && uninformative && rec.tempo && rec.tempo->bpm > 0) {
    labels.erase(std::string(taxonomy::kUnclassified));
    labels.insert(taxonomy::tempo_category(taxonomy::quarter_bpm(*rec.tempo), table));
    labels.insert("speed");
  }
  return labels;
}

// --- manifest -------------------------------------------------------------

struct ManuscriptRef {
  std::string source;
  std::string catalogue_number;
};

struct ScoreManifest {
  std::string file_id;
  std::string composer = std::string(kUnknown);
  std::string form = std::string(kUnknown);
  std::set<std::string> instruments;
  std::vector<SectionRecord> sections;
  std::optional<int> year;
  bool period_estimated = false;
  std::optional<Period> period;
  std::optional<ManuscriptRef> manuscript_ref;
};

/// Composition year per work, and active years per composer for the fallback.
struct DateSidecar {
  std::map<std::string, int> work_year;                       // file_id -> year
  std::map<std::string, std::pair<int, int>> composer_active;  // composer -> (from, to)

  /// Sets year/period on the manifest; composer midpoints are flagged as estimated.
  void apply(ScoreManifest& m) const {
    if (auto it = work_year.find(m.file_id); it != work_year.end()) {
      m.year = it->second;
      m.period_estimated = false;
    } else if (auto c = composer_active.find(m.composer); c != composer_active.end()) {
      m.year = (c->second.first + c->second.second) / 2;
      m.period_estimated = true;
    }
    if (m.year) m.period = bin_period(*m.year);
  }

  /// CSV lines: `work,<file_id>,<year>` or `composer,<name>,<from>,<to>`.
  static DateSidecar parse(std::string_view text) {
    DateSidecar s;
    std::size_t lineno = 0;
    for (const auto& raw : split_lines(text)) {
      ++lineno;
      auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      std::vector<std::string> f;
      std::size_t start = 0;
      while (true) {
        auto comma = line.find(',', start);
        f.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      try {
        if (f[0] == "work" && f.size() == 3) {
          s.work_year[f[1]] = std::stoi(f[2]);
        } else if (f[0] == "composer" && f.size() == 4) {
          s.composer_active[f[1]] = {std::stoi(f[2]), std::stoi(f[3])};
        } else {
          throw Error(Errc::MalformedRecord, "bad date sidecar line", lineno);
        }
      } catch (const std::invalid_argument&) {
        throw Error(Errc::MalformedRecord, "bad number in date sidecar", lineno);
      }
    }
    return s;
  }
};

namespace detail {

inline void schema_fail(const std::string& what) { throw Error(Errc::SchemaViolation, what); }

inline bool valid_time_signature(const std::string& t) {
  static const std::regex re("^[0-9]+/[0-9]+$");
  return t.empty() || std::regex_match(t, re);
}

}  // namespace detail

/// Checks a serialized manifest against the record schema.
inline void validate_manifest(const ojson& j, const std::vector<std::string>& forms) {
  using detail::schema_fail;
  static const std::vector<std::pair<std::string, ojson::value_t>> fields = {
      {"file_id", ojson::value_t::string},      {"composer", ojson::value_t::string},
      {"form", ojson::value_t::string},         {"instruments", ojson::value_t::array},
      {"period", ojson::value_t::string},       {"period_estimated", ojson::value_t::boolean},
      {"sections", ojson::value_t::array}};
  if (!j.is_object()) schema_fail("manifest must be an object");
  for (const auto& [name, type] : fields) {
    if (!j.contains(name)) schema_fail("missing field '" + name + "'");
    if (j[name].type() != type) schema_fail("field '" + name + "' has the wrong type");
  }
  if (!j.contains("year") || !(j["year"].is_null() || j["year"].is_number_integer())) schema_fail("year must be integer or null");
  if (!j.contains("manuscript_ref") || !(j["manuscript_ref"].is_null() || j["manuscript_ref"].is_object()))
    schema_fail("manuscript_ref must be object or null");
  if (j["file_id"].get<std::string>().empty()) schema_fail("empty file_id");
  const auto form = j["form"].get<std::string>();
  if (form != kUnknown && std::find(forms.begin(), forms.end(), form) == forms.end())
    schema_fail("form '" + form + "' is not in the configured list");
  const auto period = j["period"].get<std::string>();
  if (period != kUnknown && !parse_period(period)) schema_fail("invalid period '" + period + "'");
  std::set<std::string> seen;
  for (const auto& ins : j["instruments"]) {
    if (!ins.is_string()) schema_fail("instrument must be a string");
    if (!seen.insert(ins.get<std::string>()).second) schema_fail("duplicate instrument");
  }
  for (const auto& s : j["sections"]) {
    if (!s.is_object() || !s.contains("name") || !s.contains("time_signature") || !s.contains("scale") ||
        !s.contains("key") || !s.contains("tempo") || !s.contains("labels"))
      schema_fail("section record incomplete");
    if (!detail::valid_time_signature(s["time_signature"].get<std::string>())) schema_fail("bad time signature");
    const auto scale = s["scale"].get<std::string>();
    if (!scale.empty() && scale != "major" && scale != "minor") schema_fail("bad scale '" + scale + "'");
  }
}

/// Serializes a manifest with a fixed field order and validates it.
inline ojson build_manifest(const ScoreManifest& m, const std::vector<std::string>& forms) {
  ojson j;
  j["file_id"] = m.file_id;
  j["composer"] = m.composer;
  j["form"] = m.form;
  j["instruments"] = ojson::array();
  for (const auto& i : m.instruments) j["instruments"].push_back(i);
  j["period"] = m.period ? std::string(period_name(*m.period)) : std::string(kUnknown);
  j["year"] = m.year ? ojson(*m.year) : ojson(nullptr);
  j["period_estimated"] = m.period_estimated;
  if (m.manuscript_ref)
    j["manuscript_ref"] = ojson{{"source", m.manuscript_ref->source}, {"catalogue_number", m.manuscript_ref->catalogue_number}};
  else
    j["manuscript_ref"] = nullptr;
  j["sections"] = ojson::array();
  for (const auto& s : m.sections) {
    ojson r;
    r["name"] = s.name;
    r["key"] = s.key;
    r["scale"] = s.scale;
    if (s.tempo)
      r["tempo"] = ojson{{"beat_unit", s.tempo->beat_unit}, {"dots", s.tempo->dots}, {"bpm", s.tempo->bpm}};
    else
      r["tempo"] = nullptr;
    r["time_signature"] = s.time_signature;
    r["labels"] = ojson::array();
    for (const auto& l : s.labels) r["labels"].push_back(l);
    j["sections"].push_back(std::move(r));
  }
  validate_manifest(j, forms);
  return j;
}

inline ScoreManifest manifest_from_json(const ojson& j, const std::vector<std::string>& forms) {
  validate_manifest(j, forms);
  ScoreManifest m;
  m.file_id = j["file_id"];
  m.composer = j["composer"];
  m.form = j["form"];
  for (const auto& i : j["instruments"]) m.instruments.insert(i.get<std::string>());
  if (auto p = parse_period(j["period"].get<std::string>())) m.period = *p;
  if (!j["year"].is_null()) m.year = j["year"].get<int>();
  m.period_estimated = j["period_estimated"];
  if (!j["manuscript_ref"].is_null())
    m.manuscript_ref = ManuscriptRef{j["manuscript_ref"].value("source", ""), j["manuscript_ref"].value("catalogue_number", "")};
  for (const auto& s : j["sections"]) {
    SectionRecord r;
    r.name = s["name"];
    r.key = s["key"];
    r.scale = s["scale"];
    r.time_signature = s["time_signature"];
    if (!s["tempo"].is_null())
      r.tempo = taxonomy::TempoMark{s["tempo"]["beat_unit"], s["tempo"]["dots"], s["tempo"]["bpm"]};
    for (const auto& l : s["labels"]) r.labels.insert(l.get<std::string>());
    m.sections.push_back(std::move(r));
  }
  return m;
}

/// Everything needed to assemble a manifest from one flattened source file.
struct ExtractionConfig {
  ComposerRules composer_rules;
  std::vector<std::string> forms;
  taxonomy::TaxonomyDag taxonomy;
  taxonomy::TempoCategoryTable tempo_table = taxonomy::TempoCategoryTable::defaults();
  DateSidecar dates;
  std::string section_pattern = "forma";
};

struct ExtractionResult {
  ScoreManifest manifest;
  std::vector<std::string> warnings;
};

inline ExtractionResult extract_manifest(const std::string& file_id, std::string_view filename, std::string_view src,
                                         const ExtractionConfig& cfg) {
  ExtractionResult out;
  auto& m = out.manifest;
  m.file_id = file_id;
  const auto p = syntax::parse(src);
  const auto header = syntax::header_fields(p);
  auto field = [&](const char* k) -> std::string {
    auto it = header.find(k);
    return it == header.end() ? std::string() : it->second;
  };

  m.composer = extract_composer(filename, cfg.composer_rules);
  if (m.composer == kUnknown && !field("composer").empty()) {
    m.composer = cfg.composer_rules.standardise(field("composer"));
    out.warnings.push_back("composer taken from \\header, no filename rule matched");
  }
  std::string title = field("title") + " " + field("subtitle") + " " + field("piece");
  auto stem = fs::path(std::string(filename)).stem().string();
  std::replace(stem.begin(), stem.end(), '_', ' ');
  m.form = extract_form(title + " " + stem, cfg.forms);

  auto ins = extract_instruments(p);
  m.instruments = std::move(ins.instruments);
  out.warnings.insert(out.warnings.end(), ins.warnings.begin(), ins.warnings.end());

  auto sec = extract_sections(p, cfg.section_pattern);
  for (auto& s : sec.sections) s.labels = label_section(s, cfg.taxonomy, cfg.tempo_table);
  m.sections = std::move(sec.sections);
  out.warnings.insert(out.warnings.end(), sec.warnings.begin(), sec.warnings.end());

  auto source = field("source");
  if (source.empty()) source = field("manuscript");
  auto catalogue = field("catalogue");
  if (catalogue.empty()) catalogue = field("opus");
  if (!source.empty() || !catalogue.empty()) m.manuscript_ref = ManuscriptRef{source, catalogue};

  cfg.dates.apply(m);
  return out;
}

// --- corpus statistics ----------------------------------------------------

struct FrequencyEntry {
  std::string value;
  std::size_t count = 0;
  double percent = 0.0;
};

struct FrequencyTable {
  std::string attribute;
  std::string basis;  // what a count counts: files, sections, labels, or file presence
  std::size_t total = 0;  // denominator
  std::vector<FrequencyEntry> entries;  // count descending, then value ascending

  /// Presence tables count a file once per value, so their percentages need not sum to 100.
  bool is_presence() const { return basis == "file_presence"; }
};

struct CorpusStats {
  std::size_t n_files = 0;
  std::size_t n_sections = 0;
  std::vector<FrequencyTable> tables;

  const FrequencyTable& table(std::string_view attribute) const {
    for (const auto& t : tables)
      if (t.attribute == attribute) return t;
    throw Error(Errc::InvalidArgument, "no table " + std::string(attribute));
  }
};

namespace detail {

inline FrequencyTable make_table(std::string attribute, std::string basis, const std::map<std::string, std::size_t>& counts,
                                 std::size_t total) {
  FrequencyTable t{std::move(attribute), std::move(basis), total, {}};
  for (const auto& [v, c] : counts)
    t.entries.push_back(FrequencyEntry{v, c, total ? 100.0 * static_cast<double>(c) / static_cast<double>(total) : 0.0});
  std::stable_sort(t.entries.begin(), t.entries.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
  return t;
}

}  // namespace detail

inline CorpusStats corpus_stats(const std::vector<ScoreManifest>& manifests) {
  if (manifests.empty()) throw Error(Errc::EmptyCorpus, "no manifests");
  std::map<std::string, std::size_t> composer, form, period, instrument, key, time, label;
  std::size_t n_sections = 0, n_keys = 0, n_times = 0, n_labels = 0;
  for (const auto& m : manifests) {
    ++composer[m.composer];
    ++form[m.form];
    ++period[m.period ? std::string(period_name(*m.period)) : std::string(kUnknown)];
    for (const auto& i : m.instruments) ++instrument[i];
    for (const auto& s : m.sections) {
      ++n_sections;
      if (!s.key.empty()) {
        ++key[s.key + (s.scale.empty() ? "" : " " + s.scale)];
        ++n_keys;
      }
      if (!s.time_signature.empty()) {
        ++time[s.time_signature];
        ++n_times;
      }
      for (const auto& l : s.labels) {
        ++label[l];
        ++n_labels;
      }
    }
  }
  CorpusStats st;
  st.n_files = manifests.size();
  st.n_sections = n_sections;
  st.tables.push_back(detail::make_table("composer", "files", composer, manifests.size()));
  st.tables.push_back(detail::make_table("form", "files", form, manifests.size()));
  st.tables.push_back(detail::make_table("period", "files", period, manifests.size()));
  st.tables.push_back(detail::make_table("instrument", "file_presence", instrument, manifests.size()));
  st.tables.push_back(detail::make_table("key", "sections", key, n_keys));
  st.tables.push_back(detail::make_table("time_signature", "sections", time, n_times));
  st.tables.push_back(detail::make_table("section_label", "labels", label, n_labels));
  return st;
}

inline std::string format_percent(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

inline std::string stats_csv(const FrequencyTable& t) {
  std::string out = "value,count,percent\n";
  for (const auto& e : t.entries) {
    std::string v = e.value;
    if (v.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : v) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
      v = q + "\"";
    }
    out += v + "," + std::to_string(e.count) + "," + format_percent(e.percent) + "\n";
  }
  return out;
}

inline ojson stats_json(const CorpusStats& st) {
  ojson j;
  j["n_files"] = st.n_files;
  j["n_sections"] = st.n_sections;
  j["tables"] = ojson::array();
  for (const auto& t : st.tables) {
    ojson tj;
    tj["attribute"] = t.attribute;
    tj["basis"] = t.basis;
    tj["total"] = t.total;
    tj["unique"] = t.entries.size();
    tj["entries"] = ojson::array();
    for (const auto& e : t.entries) tj["entries"].push_back(ojson{{"value", e.value}, {"count", e.count}, {"percent", e.percent}});
    j["tables"].push_back(std::move(tj));
  }
  return j;
}

}  // namespace lilytk::metadata
