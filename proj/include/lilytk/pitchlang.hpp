#pragma once

// Italian (solmization) to nederlands pitch-name conversion.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lilytk/error.hpp"
#include "lilytk/syntax.hpp"

namespace lilytk::pitchlang {

/// Bidirectional italiano <-> nederlands table of the 35 natural and
/// (double) altered pitch names.
class PitchNameTable {
 public:
  PitchNameTable() {
    constexpr std::array<std::pair<std::string_view, char>, 7> bases = {
        {{"do", 'c'}, {"re", 'd'}, {"mi", 'e'}, {"fa", 'f'}, {"sol", 'g'}, {"la", 'a'}, {"si", 'b'}}};
    constexpr std::array<std::pair<std::string_view, std::string_view>, 5> alterations = {
        {{"", ""}, {"d", "is"}, {"dd", "isis"}, {"b", "es"}, {"bb", "eses"}}};
    for (const auto& [it, nl] : bases) {
      for (const auto& [it_sfx, nl_sfx] : alterations) {
        std::string dutch(1, nl);
        // e and a take the contracted flat forms es / as
        if ((nl == 'e' || nl == 'a') && !nl_sfx.empty() && nl_sfx[0] == 'e')
          dutch += nl_sfx.substr(1);
        else
          dutch += nl_sfx;
        std::string italian = std::string(it) + std::string(it_sfx);
        forward_.emplace(italian, dutch);
        inverse_.emplace(dutch, italian);
      }
    }
  }

  std::optional<std::string> to_nederlands(std::string_view italian) const {
    auto it = forward_.find(std::string(italian));
    if (it == forward_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> to_italiano(std::string_view dutch) const {
    auto it = inverse_.find(std::string(dutch));
    if (it == inverse_.end()) return std::nullopt;
    return it->second;
  }

  const std::map<std::string, std::string>& forward() const { return forward_; }
  const std::map<std::string, std::string>& inverse() const { return inverse_; }

 private:
  std::map<std::string, std::string> forward_;
  std::map<std::string, std::string> inverse_;
};

inline const PitchNameTable& default_table() {
  static const PitchNameTable table;
  return table;
}

inline std::string map_pitch_name(std::string_view name) {
  if (auto m = default_table().to_nederlands(name)) return *m;
  throw Error(Errc::NotAPitchName, "'" + std::string(name) + "' is not an italiano pitch name");
}

/// A Word token split into pitch name and trailing octave marks.
struct PitchWord {
  std::string_view name;
  std::string_view octave;
};

inline PitchWord split_octave(std::string_view word) {
  auto cut = word.find_first_of("',");
  if (cut == std::string_view::npos) return {word, {}};
  return {word.substr(0, cut), word.substr(cut)};
}

inline bool is_italiano_pitch(std::string_view word) {
  return default_table().to_nederlands(split_octave(word).name).has_value();
}

/// Also accepts the uncontracted spellings (ees, aes, ...) LilyPond allows.
inline bool is_nederlands_pitch(std::string_view word) {
  auto name = split_octave(word).name;
  if (default_table().to_italiano(name)) return true;
  return name == "ees" || name == "eeses" || name == "aes" || name == "aeses";
}

namespace detail {

inline bool excludes_next_block(std::string_view cmd) {
  static const std::set<std::string_view> kCommands = {
      "\\markup", "\\markuplist", "\\lyricmode", "\\addlyrics", "\\lyrics", "\\lyricsto",
      "\\paper",  "\\layout",     "\\midi",      "\\with",      "\\header"};
  return kCommands.count(cmd) > 0;
}

// Commands whose following Word arguments are pitches even outside music blocks.
inline int pitch_argument_count(std::string_view cmd) {
  if (cmd == "\\transpose") return 2;
  if (cmd == "\\relative" || cmd == "\\fixed" || cmd == "\\key" || cmd == "\\octaveCheck") return 1;
  return 0;
}

}  // namespace detail

/// Rewrites italiano pitch words to nederlands. Only Words in music context are
/// touched: inside blocks that are not header/markup/lyric/layout blocks, or
/// pitch arguments of \relative, \transpose, \key and friends. Words adjacent to
/// `=` are never rewritten. `\language "italiano"` becomes `\language "nederlands"`.
inline std::string convert_pitch_language(std::string_view src) {
  using syntax::TokenKind;
  const auto p = syntax::parse(src);
  const auto& toks = p.tokens;
  const auto& tree = p.tree;

  std::vector<bool> node_excluded(tree.nodes.size(), false);
  std::vector<std::string> replacement(toks.size());
  std::vector<bool> replace(toks.size(), false);

  bool pending_exclusion = false;
  int pitch_args = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    if (t.kind == TokenKind::Comment) continue;
    const std::size_t node = tree.owner[i];
    if (syntax::is_open(t.kind)) {
      const auto& nd = tree.nodes[node];
      node_excluded[node] = node_excluded[nd.parent] || pending_exclusion || nd.kind == syntax::BlockKind::HeaderBlock;
      pending_exclusion = false;
      pitch_args = 0;
      continue;
    }
    if (syntax::is_close(t.kind) || t.kind == TokenKind::Equals) {
      pending_exclusion = false;
      pitch_args = 0;
      continue;
    }
    if (t.kind == TokenKind::Command) {
      if (detail::excludes_next_block(t.text)) pending_exclusion = true;
      pitch_args = detail::pitch_argument_count(t.text);
      if (t.text == "\\language") {
        auto s = syntax::next_significant(toks, i + 1);
        if (s != syntax::npos && toks[s].kind == TokenKind::String && syntax::string_value(toks[s].text) == "italiano") {
          replacement[s] = "\"nederlands\"";
          replace[s] = true;
        }
      }
      continue;
    }
    if (t.kind != TokenKind::Word) {
      if (t.kind != TokenKind::String && t.kind != TokenKind::Other) pitch_args = 0;
      continue;
    }

    const bool is_pitch_arg = pitch_args > 0;
    if (pitch_args > 0) --pitch_args;
    if (pending_exclusion) {
      pending_exclusion = false;
      continue;
    }
    const bool in_music = node != 0 && !node_excluded[node];
    if (!in_music && !(is_pitch_arg && !node_excluded[node])) continue;
    auto pv = syntax::prev_significant(toks, i);
    auto nx = syntax::next_significant(toks, i + 1);
    if ((pv != syntax::npos && toks[pv].kind == TokenKind::Equals) ||
        (nx != syntax::npos && toks[nx].kind == TokenKind::Equals))
      continue;
    auto pw = split_octave(t.text);
    if (auto dutch = default_table().to_nederlands(pw.name)) {
      replacement[i] = *dutch + std::string(pw.octave);
      replace[i] = true;
    }
  }

  std::string out;
  out.reserve(src.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!replace[i]) continue;
    out.append(src.substr(pos, toks[i].span.begin - pos));
    out.append(replacement[i]);
    pos = toks[i].span.end;
  }
  out.append(src.substr(pos));
  return out;
}

}  // namespace lilytk::pitchlang
