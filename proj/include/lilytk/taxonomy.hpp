#pragma once

// Section-label taxonomy: a DAG of categories with multi-parent membership, and
// the quarter-note BPM / tempo-category fallback for uninformative names.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lilytk/error.hpp"
#include "lilytk/util.hpp"

namespace lilytk::taxonomy {

inline const std::vector<std::string>& root_categories() {
  static const std::vector<std::string> roots = {"speed", "intention", "suite", "no_tempo", "non_descriptive"};
  return roots;
}

inline const std::vector<std::string>& speed_leaves() {
  static const std::vector<std::string> leaves = {"slow", "mid", "fast", "very_fast"};
  return leaves;
}

inline constexpr std::string_view kUnclassified = "unclassified";

/// Lowercases, folds Latin-1 diacritics (é -> e, ü -> u, ...) and joins words
/// with '_', so "Tempo giusto" and "tempo-giusto" both become "tempo_giusto".
inline std::string normalize_name(std::string_view s) {
  // U+00C0..U+00FF folded to ASCII; '\0' entries have no single-letter fold
  using namespace std::string_view_literals;
  static constexpr std::string_view kFold =
      "aaaaaaaceeeeiiii\0nooooo\0ouuuuy\0saaaaaaaceeeeiiii\0nooooo\0ouuuuy\0y"sv;
  static_assert(kFold.size() == 64);
  std::string out;
  s = trim(s);
  bool space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto c = static_cast<unsigned char>(s[i]);
    if (c == 0xC3 && i + 1 < s.size()) {
      auto cp = 0xC0u + (static_cast<unsigned char>(s[i + 1]) & 0x3F);
      char f = kFold[cp - 0xC0];
      if (f != '\0') {
        out.push_back(f);
        ++i;
        space = false;
        continue;
      }
    }
    if (c == ' ' || c == '\t' || c == '_' || c == '-') {
      if (!space && !out.empty()) out.push_back('_');
      space = true;
      continue;
    }
    space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

class TaxonomyDag {
 public:
  const std::set<std::string>& nodes() const { return nodes_; }
  const std::set<std::string>& parents(const std::string& node) const {
    static const std::set<std::string> none;
    auto it = parents_.find(node);
    return it == parents_.end() ? none : it->second;
  }
  bool contains(const std::string& node) const { return nodes_.count(node) > 0; }
  bool is_root(const std::string& node) const {
    return std::find(root_categories().begin(), root_categories().end(), node) != root_categories().end();
  }

  /// Canonical node name for a raw label: normalized, then alias-resolved.
  std::string canonical(std::string_view raw) const {
    auto n = normalize_name(raw);
    if (auto it = aliases_.find(n); it != aliases_.end()) return it->second;
    return n;
  }

  /// All strict ancestors of `node`.
  std::set<std::string> ancestors(const std::string& node) const {
    std::set<std::string> out;
    std::vector<std::string> stack(parents(node).begin(), parents(node).end());
    while (!stack.empty()) {
      auto cur = std::move(stack.back());
      stack.pop_back();
      if (!out.insert(cur).second) continue;
      for (const auto& p : parents(cur)) stack.push_back(p);
    }
    return out;
  }

 private:
  friend TaxonomyDag build_taxonomy(std::string_view);
  std::set<std::string> nodes_;
  std::map<std::string, std::set<std::string>> parents_;
  std::map<std::string, std::string> aliases_;
};

/// Parses `child -> parent` and `alias variant = canonical` lines (`#` comments).
/// The five root categories always exist. Every parent must be a root or appear
/// as a child somewhere in the file.
inline TaxonomyDag build_taxonomy(std::string_view text) {
  TaxonomyDag dag;
  for (const auto& r : root_categories()) dag.nodes_.insert(r);

  std::vector<std::pair<std::string, std::string>> edges;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    auto line = trim(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.rfind("alias ", 0) == 0) {
      auto rest = line.substr(6);
      auto eq = rest.find('=');
      if (eq == std::string_view::npos) throw Error(Errc::MalformedSpec, "alias without '='", lineno);
      dag.aliases_[normalize_name(rest.substr(0, eq))] = normalize_name(rest.substr(eq + 1));
      continue;
    }
    auto arrow = line.find("->");
    if (arrow == std::string_view::npos) throw Error(Errc::MalformedSpec, "expected 'node -> parent'", lineno);
    auto child = normalize_name(line.substr(0, arrow));
    auto parent = normalize_name(line.substr(arrow + 2));
    if (child.empty() || parent.empty()) throw Error(Errc::MalformedSpec, "empty node name", lineno);
    edges.emplace_back(child, parent);
    dag.nodes_.insert(child);
  }
  for (const auto& [child, parent] : edges) {
    if (!dag.nodes_.count(parent)) throw Error(Errc::DanglingEdge, child + " -> " + parent + ": unknown parent");
    dag.parents_[child].insert(parent);
  }
  for (const auto& [variant, target] : dag.aliases_)
    if (!dag.nodes_.count(target)) throw Error(Errc::DanglingEdge, "alias " + variant + " = " + target + ": unknown node");

  // cycle check, reporting the offending path
  std::map<std::string, int> color;  // 0 white, 1 on stack, 2 done
  std::vector<std::string> path;
  auto visit = [&](auto&& self, const std::string& n) -> void {
    color[n] = 1;
    path.push_back(n);
    for (const auto& p : dag.parents(n)) {
      if (color[p] == 1) {
        std::string cycle;
        auto from = std::find(path.begin(), path.end(), p);
        for (auto it = from; it != path.end(); ++it) cycle += *it + " -> ";
        throw Error(Errc::CycleDetected, cycle + p);
      }
      if (color[p] == 0) self(self, p);
    }
    path.pop_back();
    color[n] = 2;
  };
  for (const auto& n : dag.nodes_)
    if (color[n] == 0) visit(visit, n);
  return dag;
}

/// Ancestor categories of a section name. Multi-word names ("Largo e affettuoso")
/// union the categories of every known word when the full name is unknown.
inline std::set<std::string> classify_section_name(std::string_view name, const TaxonomyDag& dag) {
  auto categories_of = [&](const std::string& node) {
    auto a = dag.ancestors(node);
    if (dag.is_root(node)) a.insert(node);
    return a;
  };
  auto full = dag.canonical(name);
  if (dag.contains(full)) return categories_of(full);
  std::set<std::string> out;
  std::size_t start = 0;
  while (start < full.size()) {
    auto sp = full.find('_', start);
    if (sp == std::string::npos) sp = full.size();
    auto word = dag.canonical(std::string_view(full).substr(start, sp - start));
    if (dag.contains(word)) {
      auto a = categories_of(word);
      out.insert(a.begin(), a.end());
    }
    start = sp + 1;
  }
  if (out.empty()) out.insert(std::string(kUnclassified));
  return out;
}

/// Exact non-negative rational, always reduced.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    auto g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.num * b.num, a.den * b.den); }
  friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den <=> static_cast<__int128>(b.num) * a.den;
  }
};

struct TempoMark {
  int beat_unit = 4;  // 1, 2, 4, 8, 16, 32
  int dots = 0;
  std::int64_t bpm = 0;
};

/// Parses a duration like "4", "8.", "2.." into (unit, dots).
inline std::optional<std::pair<int, int>> parse_duration(std::string_view s) {
  int dots = 0;
  while (!s.empty() && s.back() == '.') {
    s.remove_suffix(1);
    ++dots;
  }
  if (s.empty() || s.size() > 2) return std::nullopt;
  int unit = 0;
  for (char c : s) {
    if (!is_ascii_digit(static_cast<unsigned char>(c))) return std::nullopt;
    unit = unit * 10 + (c - '0');
  }
  return std::pair{unit, dots};
}

/// BPM expressed in quarter notes: bpm * duration(beat) / duration(quarter).
inline Rational quarter_bpm(const TempoMark& mark) {
  switch (mark.beat_unit) {
    case 1: case 2: case 4: case 8: case 16: case 32:
      break;
    default:
      throw Error(Errc::InvalidDuration, "beat unit " + std::to_string(mark.beat_unit));
  }
  if (mark.dots < 0 || mark.dots > 4) throw Error(Errc::InvalidDuration, "too many dots");
  // dotted factor (2^(d+1) - 1) / 2^d
  const std::int64_t pow = std::int64_t{1} << mark.dots;
  return Rational(mark.bpm) * Rational(4 * ((pow << 1) - 1), mark.beat_unit * pow);
}

/// Left-closed BPM intervals; entry k covers [lower_k, lower_{k+1}).
struct TempoCategoryTable {
  std::vector<std::pair<Rational, std::string>> bounds;  // ascending, first lower bound is 0

  static TempoCategoryTable defaults() {
    return TempoCategoryTable{{{Rational(0), "slow"}, {Rational(66), "mid"}, {Rational(108), "fast"}, {Rational(168), "very_fast"}}};
  }

  /// `leaf lower_bound` per line, e.g. "mid 66".
  static TempoCategoryTable parse(std::string_view text) {
    TempoCategoryTable t;
    for (const auto& raw : split_lines(text)) {
      auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      std::istringstream in{std::string(line)};
      std::string leaf;
      std::int64_t lower;
      if (!(in >> leaf >> lower)) throw Error(Errc::MalformedSpec, "bad tempo table line: " + std::string(line));
      t.bounds.emplace_back(Rational(lower), leaf);
    }
    if (t.bounds.empty() || t.bounds.front().first != Rational(0))
      throw Error(Errc::MalformedSpec, "tempo table must start at 0");
    for (std::size_t k = 1; k < t.bounds.size(); ++k)
      if (!(t.bounds[k - 1].first < t.bounds[k].first))
        throw Error(Errc::MalformedSpec, "tempo table bounds must strictly increase");
    return t;
  }
};

inline const std::string& tempo_category(const Rational& qbpm, const TempoCategoryTable& table) {
  if (qbpm <= Rational(0)) throw Error(Errc::NonPositiveBpm, "quarter BPM must be positive");
  const std::string* leaf = &table.bounds.front().second;
  for (const auto& [lower, name] : table.bounds)
    if (lower <= qbpm) leaf = &name;
  return *leaf;
}

}  // namespace lilytk::taxonomy
