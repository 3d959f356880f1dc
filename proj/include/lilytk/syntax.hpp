#pragma once

// Structural view of LilyPond source: a lossless lexer, the balanced block tree,
// top-level variable bindings and their reachability from \score blocks, plus the
// project-level helpers that turn a multi-file workspace into a single source.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lilytk/error.hpp"
#include "lilytk/util.hpp"

namespace lilytk::syntax {

enum class TokenKind {
  Command,           // backslash word
  Word,
  Number,
  String,            // double-quoted, quotes included in text
  OpenBrace,
  CloseBrace,
  OpenAngle,
  CloseAngle,
  DoubleAngleOpen,
  DoubleAngleClose,
  Equals,
  Comment,           // % line or %{ block %}
  Other,
};

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  TokenKind kind;
  std::string text;
  Span span;
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Offset of the first byte that is not part of a well-formed UTF-8 sequence.
inline std::optional<std::size_t> find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF)
      return i;
    i += len;
  }
  return std::nullopt;
}

namespace detail {

inline std::size_t utf8_len(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  return 4;
}

inline bool is_word_char(unsigned char c) { return is_ascii_letter(c) || c >= 0x80; }

inline bool is_articulation_tail(char c) {
  switch (c) {
    case '>': case '^': case '+': case '!': case '.': case '_': case '-': case '|':
      return true;
    default:
      return false;
  }
}

// Scheme expression after '#' or '$'. Returns one past the end.
inline std::size_t scan_scheme(std::string_view src, std::size_t start) {
  std::size_t i = start + 1;
  while (i < src.size() && (src[i] == '\'' || src[i] == '`' || src[i] == ',' || src[i] == '#')) ++i;
  if (i >= src.size()) return i;
  if (src[i] == '(') {
    int depth = 0;
    while (i < src.size()) {
      char c = src[i];
      if (c == '"') {
        ++i;
        while (i < src.size() && src[i] != '"') i += (src[i] == '\\') ? 2 : 1;
        if (i >= src.size()) throw Error(Errc::UnterminatedScheme, "unterminated string in Scheme expression", start);
        ++i;
        continue;
      }
      if (c == ';') {
        while (i < src.size() && src[i] != '\n') ++i;
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')' && --depth == 0) return i + 1;
      ++i;
    }
    throw Error(Errc::UnterminatedScheme, "unbalanced parentheses in Scheme expression", start);
  }
  if (src[i] == '"') {
    ++i;
    while (i < src.size() && src[i] != '"') i += (src[i] == '\\') ? 2 : 1;
    if (i >= src.size()) throw Error(Errc::UnterminatedScheme, "unterminated string in Scheme expression", start);
    return i + 1;
  }
  while (i < src.size()) {
    auto c = static_cast<unsigned char>(src[i]);
    if (is_space(c) || c == '{' || c == '}' || c == '"' || c == '<' || c == '>') break;
    ++i;
  }
  return i;
}

}  // namespace detail

/// Lossless structural lexer. Every non-whitespace byte of the input belongs to
/// exactly one token; comments are tokens. Words stop at the first digit so a
/// note such as `c'4.` lexes as Word(c') Number(4.).
inline std::vector<Token> lex(std::string_view src) {
  if (auto bad = find_invalid_utf8(src)) throw Error(Errc::InvalidUtf8, "invalid UTF-8", *bad);

  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto emit = [&](TokenKind k, std::size_t b, std::size_t e) {
    out.push_back(Token{k, std::string(src.substr(b, e - b)), Span{b, e}});
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(src[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    const char next = (i + 1 < n) ? src[i + 1] : '\0';
    switch (c) {
      case '%': {
        if (next == '{') {
          auto close = src.find("%}", i + 2);
          if (close == std::string_view::npos)
            throw Error(Errc::UnterminatedBlockComment, "unterminated %{ comment", b);
          i = close + 2;
        } else {
          while (i < n && src[i] != '\n') ++i;
          if (i > b && src[i - 1] == '\r') --i;
        }
        emit(TokenKind::Comment, b, i);
        continue;
      }
      case '"': {
        ++i;
        while (i < n && src[i] != '"') i += (src[i] == '\\') ? 2 : 1;
        if (i >= n) throw Error(Errc::UnterminatedString, "unterminated string literal", b);
        ++i;
        emit(TokenKind::String, b, i);
        continue;
      }
      case '\\': {
        if (i + 1 < n && is_ascii_letter(static_cast<unsigned char>(next))) {
          i += 1;
          while (i < n && is_ascii_letter(static_cast<unsigned char>(src[i]))) ++i;
          emit(TokenKind::Command, b, i);
        } else {
          i += (i + 1 < n) ? 1 + detail::utf8_len(static_cast<unsigned char>(next)) : 1;
          emit(TokenKind::Other, b, i);
        }
        continue;
      }
      case '#':
      case '$': {
        i = detail::scan_scheme(src, i);
        emit(TokenKind::Other, b, i);
        continue;
      }
      case '{': emit(TokenKind::OpenBrace, b, ++i); continue;
      case '}': emit(TokenKind::CloseBrace, b, ++i); continue;
      case '=': emit(TokenKind::Equals, b, ++i); continue;
      case '<':
        if (next == '<') {
          i += 2;
          emit(TokenKind::DoubleAngleOpen, b, i);
        } else {
          emit(TokenKind::OpenAngle, b, ++i);
        }
        continue;
      case '>':
        if (next == '>') {
          i += 2;
          emit(TokenKind::DoubleAngleClose, b, i);
        } else {
          emit(TokenKind::CloseAngle, b, ++i);
        }
        continue;
      case '-':
      case '^':
      case '_':
        // articulation shorthands (->, -., -^ ...) must not open or close angle blocks
        if (i + 1 < n && detail::is_articulation_tail(next)) {
          i += 2;
          emit(TokenKind::Other, b, i);
          continue;
        }
        break;
      default:
        break;
    }
    if (is_ascii_digit(c)) {
      while (i < n && is_ascii_digit(static_cast<unsigned char>(src[i]))) ++i;
      if (i + 1 < n && src[i] == '.' && is_ascii_digit(static_cast<unsigned char>(src[i + 1]))) {
        ++i;
        while (i < n && is_ascii_digit(static_cast<unsigned char>(src[i]))) ++i;
      }
      while (i < n && src[i] == '.') ++i;
      emit(TokenKind::Number, b, i);
      continue;
    }
    if (detail::is_word_char(c)) {
      while (i < n) {
        auto d = static_cast<unsigned char>(src[i]);
        if (detail::is_word_char(d)) {
          i += detail::utf8_len(d);
        } else if ((d == '.' || d == '-' || d == '_') && i + 1 < n &&
                   is_ascii_letter(static_cast<unsigned char>(src[i + 1]))) {
          ++i;
        } else {
          break;
        }
      }
      while (i < n && (src[i] == '\'' || src[i] == ',')) ++i;
      emit(TokenKind::Word, b, i);
      continue;
    }
    i += detail::utf8_len(c);
    emit(TokenKind::Other, b, i);
  }
  return out;
}

/// Rebuilds the source from tokens, filling gaps from `src`. Gaps are
/// whitespace-only when the tokens come from lex(src).
inline std::string reconstruct(const std::vector<Token>& tokens, std::string_view src) {
  std::string out;
  out.reserve(src.size());
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    out.append(src.substr(pos, t.span.begin - pos));
    out.append(t.text);
    pos = t.span.end;
  }
  out.append(src.substr(pos));
  return out;
}

inline bool is_open(TokenKind k) {
  return k == TokenKind::OpenBrace || k == TokenKind::OpenAngle || k == TokenKind::DoubleAngleOpen;
}
inline bool is_close(TokenKind k) {
  return k == TokenKind::CloseBrace || k == TokenKind::CloseAngle || k == TokenKind::DoubleAngleClose;
}

/// The literal contents of a String token with escapes resolved.
inline std::string string_value(std::string_view quoted) {
  std::string out;
  if (quoted.size() < 2) return out;
  quoted = quoted.substr(1, quoted.size() - 2);
  for (std::size_t i = 0; i < quoted.size(); ++i) {
    if (quoted[i] == '\\' && i + 1 < quoted.size()) {
      char e = quoted[++i];
      out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
    } else {
      out.push_back(quoted[i]);
    }
  }
  return out;
}

/// Index of the next token at or after `i` that is not a comment, or npos.
inline std::size_t next_significant(const std::vector<Token>& tokens, std::size_t i) {
  while (i < tokens.size() && tokens[i].kind == TokenKind::Comment) ++i;
  return i < tokens.size() ? i : npos;
}

/// Index of the closest token before `i` that is not a comment, or npos.
inline std::size_t prev_significant(const std::vector<Token>& tokens, std::size_t i) {
  while (i > 0) {
    --i;
    if (tokens[i].kind != TokenKind::Comment) return i;
  }
  return npos;
}

enum class BlockKind { Root, Brace, Angle, DoubleAngle, HeaderBlock, ScoreBlock };

struct BlockNode {
  BlockKind kind = BlockKind::Root;
  std::size_t parent = npos;
  std::vector<std::size_t> children;
  std::size_t open = npos;   // token index of the opening delimiter
  std::size_t close = npos;  // token index of the closing delimiter
};

struct BlockTree {
  std::vector<BlockNode> nodes;  // nodes[0] is the root
  std::vector<std::size_t> match;  // per token: index of the matching delimiter or npos
  std::vector<std::size_t> owner;  // per token: innermost enclosing node (open/close belong to their node)
};

/// Builds the block tree. Braces right after \header or \score become
/// HeaderBlock / ScoreBlock nodes.
inline BlockTree parse_blocks(const std::vector<Token>& tokens) {
  BlockTree tree;
  tree.nodes.push_back(BlockNode{});
  tree.match.assign(tokens.size(), npos);
  tree.owner.assign(tokens.size(), 0);
  std::vector<std::size_t> stack{0};

  auto closes = [](TokenKind open, TokenKind close) {
    return (open == TokenKind::OpenBrace && close == TokenKind::CloseBrace) ||
           (open == TokenKind::OpenAngle && close == TokenKind::CloseAngle) ||
           (open == TokenKind::DoubleAngleOpen && close == TokenKind::DoubleAngleClose);
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto k = tokens[i].kind;
    if (is_open(k)) {
      BlockNode node;
      node.parent = stack.back();
      node.open = i;
      if (k == TokenKind::OpenBrace) {
        node.kind = BlockKind::Brace;
        auto p = prev_significant(tokens, i);
        if (p != npos && tokens[p].kind == TokenKind::Command) {
          if (tokens[p].text == "\\header") node.kind = BlockKind::HeaderBlock;
          if (tokens[p].text == "\\score") node.kind = BlockKind::ScoreBlock;
        }
      } else {
        node.kind = (k == TokenKind::OpenAngle) ? BlockKind::Angle : BlockKind::DoubleAngle;
      }
      const std::size_t id = tree.nodes.size();
      tree.nodes[stack.back()].children.push_back(id);
      tree.nodes.push_back(std::move(node));
      stack.push_back(id);
      tree.owner[i] = id;
    } else if (is_close(k)) {
      if (stack.size() == 1 || !closes(tokens[tree.nodes[stack.back()].open].kind, k))
        throw Error(Errc::UnbalancedBlock, "unmatched '" + tokens[i].text + "'", tokens[i].span.begin);
      auto id = stack.back();
      stack.pop_back();
      tree.nodes[id].close = i;
      tree.match[i] = tree.nodes[id].open;
      tree.match[tree.nodes[id].open] = i;
      tree.owner[i] = id;
    } else {
      tree.owner[i] = stack.back();
    }
  }
  if (stack.size() > 1) {
    const auto& t = tokens[tree.nodes[stack.back()].open];
    throw Error(Errc::UnbalancedBlock, "unclosed '" + t.text + "'", t.span.begin);
  }
  return tree;
}

/// Lexed and block-parsed source, kept together because most analyses need both.
struct ParsedSource {
  std::vector<Token> tokens;
  BlockTree tree;
};

inline ParsedSource parse(std::string_view src) {
  ParsedSource p;
  p.tokens = lex(src);
  p.tree = parse_blocks(p.tokens);
  return p;
}

struct VariableBinding {
  std::string name;
  std::size_t name_token = npos;
  std::size_t body_first = npos;  // inclusive token range; empty when body_first == npos
  std::size_t body_last = npos;
  std::set<std::string> references;
};

struct ScoreGraph {
  std::map<std::string, VariableBinding> bindings;  // last definition of each name
  std::vector<VariableBinding> shadowed;            // earlier definitions that were overridden
  std::vector<std::pair<std::size_t, std::size_t>> score_roots;  // brace token ranges of \score blocks
  std::set<std::string> reachable;
  std::vector<std::string> warnings;
};

namespace detail {

inline bool is_toplevel_statement(std::string_view cmd) {
  static const std::set<std::string_view> kStatements = {
      "\\score", "\\header", "\\book", "\\bookpart", "\\version", "\\include", "\\language", "\\paper", "\\layout"};
  return kStatements.count(cmd) > 0;
}

// Last token of the value that starts at `first` (a top-level binding body).
inline std::size_t binding_body_last(const ParsedSource& p, std::size_t first) {
  const auto& toks = p.tokens;
  std::size_t last = npos;
  bool after_command = false;
  for (std::size_t i = first; i != npos && i < toks.size(); i = next_significant(toks, i + 1)) {
    const auto& t = toks[i];
    if (is_open(t.kind)) return p.tree.match[i];
    if (is_close(t.kind)) break;
    if (t.kind == TokenKind::Command) {
      if (last != npos && is_toplevel_statement(t.text)) break;
      last = i;
      after_command = true;
      continue;
    }
    auto nx = next_significant(toks, i + 1);
    if (last != npos && nx != npos && toks[nx].kind == TokenKind::Equals) break;  // next binding
    last = i;
    if (!after_command) break;
  }
  return last;
}

}  // namespace detail

/// Top-level bindings, \score roots, and the transitive closure of names
/// referenced from any \score block. A later definition of a name replaces the
/// earlier one for reachability; the earlier body is kept in `shadowed`.
inline ScoreGraph reachable_variables(const ParsedSource& p) {
  ScoreGraph g;
  const auto& toks = p.tokens;

  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (p.tree.owner[i] != 0 || toks[i].kind != TokenKind::Word) continue;
    auto eq = next_significant(toks, i + 1);
    if (eq == npos || toks[eq].kind != TokenKind::Equals) continue;
    auto pv = prev_significant(toks, i);
    if (pv != npos && toks[pv].kind == TokenKind::Equals) continue;
    VariableBinding b;
    b.name = toks[i].text;
    b.name_token = i;
    b.body_first = next_significant(toks, eq + 1);
    if (b.body_first != npos) b.body_last = detail::binding_body_last(p, b.body_first);
    if (b.body_last == npos) b.body_first = npos;
    if (auto it = g.bindings.find(b.name); it != g.bindings.end()) {
      g.warnings.push_back("variable '" + b.name + "' redefined; last definition wins");
      g.shadowed.push_back(std::move(it->second));
      g.bindings.erase(it);
    }
    const auto body_last = b.body_last;
    g.bindings.emplace(b.name, std::move(b));
    if (body_last != npos) i = body_last;
  }

  auto ref_name = [&](const Token& t) -> std::optional<std::string> {
    if (t.kind == TokenKind::Command) {
      auto name = t.text.substr(1);
      if (g.bindings.count(name)) return name;
    } else if (t.kind == TokenKind::Word) {
      if (g.bindings.count(t.text)) return t.text;
    }
    return std::nullopt;
  };

  for (auto& [name, b] : g.bindings) {
    if (b.body_first == npos) continue;
    for (std::size_t i = b.body_first; i <= b.body_last; ++i)
      if (auto r = ref_name(toks[i])) b.references.insert(*r);
  }

  std::vector<std::string> frontier;
  for (const auto& node : p.tree.nodes) {
    if (node.kind != BlockKind::ScoreBlock) continue;
    g.score_roots.emplace_back(node.open, node.close);
    for (std::size_t i = node.open; i <= node.close; ++i)
      if (auto r = ref_name(toks[i])) frontier.push_back(*r);
  }
  while (!frontier.empty()) {
    auto name = std::move(frontier.back());
    frontier.pop_back();
    if (!g.reachable.insert(name).second) continue;
    for (const auto& r : g.bindings.at(name).references)
      if (!g.reachable.count(r)) frontier.push_back(r);
  }
  return g;
}

inline ScoreGraph reachable_variables(std::string_view src) { return reachable_variables(parse(src)); }

namespace detail {

inline std::string remove_ranges(std::string_view src, std::vector<Span> ranges) {
  std::sort(ranges.begin(), ranges.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::string out;
  out.reserve(src.size());
  std::size_t pos = 0;
  for (const auto& r : ranges) {
    if (r.begin < pos) {
      pos = std::max(pos, r.end);
      continue;
    }
    out.append(src.substr(pos, r.begin - pos));
    pos = r.end;
  }
  out.append(src.substr(pos));
  return out;
}

inline std::string strip_headers_once(std::string_view src) {
  const auto p = parse(src);
  std::vector<Span> cut;
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    const auto& t = p.tokens[i];
    if (t.kind == TokenKind::Comment) {
      cut.push_back(t.span);
    } else if (t.kind == TokenKind::Command && t.text == "\\header") {
      auto open = next_significant(p.tokens, i + 1);
      if (open != npos && p.tokens[open].kind == TokenKind::OpenBrace) {
        auto close = p.tree.match[open];
        cut.push_back(Span{t.span.begin, p.tokens[close].span.end});
        i = close;
      }
    }
  }
  return remove_ranges(src, std::move(cut));
}

}  // namespace detail

/// Removes every \header { ... } block and every comment, preserving all other
/// bytes in order. Applied to a fixpoint so that the result is stable under a
/// second application even when a removed comment glued two tokens together.
inline std::string strip_headers(std::string_view src) {
  std::string cur = detail::strip_headers_once(src);
  for (int guard = 0; guard < 16; ++guard) {
    std::string again = detail::strip_headers_once(cur);
    if (again == cur) break;
    cur = std::move(again);
  }
  return cur;
}

/// Targets of `\include "file"` directives in source order.
struct IncludeDirective {
  std::string target;
  Span span;  // from the \include command through the closing quote
};

inline std::vector<IncludeDirective> include_directives(const std::vector<Token>& tokens) {
  std::vector<IncludeDirective> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind != TokenKind::Command || tokens[i].text != "\\include") continue;
    auto s = next_significant(tokens, i + 1);
    if (s == npos || tokens[s].kind != TokenKind::String) continue;
    out.push_back(IncludeDirective{string_value(tokens[s].text), Span{tokens[i].span.begin, tokens[s].span.end}});
  }
  return out;
}

struct ProjectLayout {
  fs::path macro_file;  // empty when the project has none
  fs::path header_file;
  std::vector<fs::path> movement_files;
  fs::path score_file;  // empty when the project has none
};

/// Directory listing a project is resolved against; `files` are paths relative to root.
struct Workspace {
  fs::path root;
  std::set<std::string> files;

  static Workspace scan(const fs::path& root) {
    Workspace ws{root, {}};
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) ws.files.insert(fs::relative(e.path(), root).generic_string());
    return ws;
  }
};

struct LayoutNames {
  std::string header;
  std::string macro;  // optional
  std::string score;  // optional
};

/// Movement order comes from the header's \include directives only; includes
/// of the macro or score file are not movements.
inline ProjectLayout resolve_includes(std::string_view header_source, const Workspace& ws, const LayoutNames& names) {
  ProjectLayout layout;
  layout.header_file = ws.root / names.header;
  if (!names.macro.empty()) layout.macro_file = ws.root / names.macro;
  if (!names.score.empty()) layout.score_file = ws.root / names.score;

  const auto directives = include_directives(lex(header_source));
  if (directives.empty()) throw Error(Errc::NoIncludes, "header " + names.header + " has no \\include directives");
  for (const auto& d : directives) {
    const auto rel = fs::path(d.target).lexically_normal().generic_string();
    if (!ws.files.count(rel)) throw Error(Errc::MissingIncludeTarget, "cannot resolve \\include \"" + d.target + "\"");
    if (rel == names.macro || rel == names.score || rel == names.header) continue;
    layout.movement_files.push_back(ws.root / rel);
  }
  return layout;
}

struct FlattenResult {
  std::string text;
  std::vector<std::string> warnings;
};

/// Concatenates macro file, movements in include order, and score file, joined by
/// single newlines. \include directives that point at any file of the layout are
/// removed; any other include is left in place and reported.
inline FlattenResult flatten_project(const ProjectLayout& layout) {
  std::vector<fs::path> parts;
  if (!layout.macro_file.empty()) parts.push_back(layout.macro_file);
  parts.insert(parts.end(), layout.movement_files.begin(), layout.movement_files.end());
  if (!layout.score_file.empty()) parts.push_back(layout.score_file);

  std::set<std::string> own;
  auto add_own = [&](const fs::path& p) {
    if (!p.empty()) own.insert(p.filename().generic_string());
  };
  add_own(layout.macro_file);
  add_own(layout.header_file);
  add_own(layout.score_file);
  for (const auto& m : layout.movement_files) add_own(m);

  FlattenResult result;
  bool first = true;
  for (const auto& path : parts) {
    const std::string src = read_file(path);
    std::vector<Span> cut;
    for (const auto& d : include_directives(lex(src))) {
      if (own.count(fs::path(d.target).filename().generic_string())) {
        cut.push_back(d.span);
      } else {
        result.warnings.push_back(path.filename().string() + ": nested \\include \"" + d.target + "\" left in place");
      }
    }
    if (!first) result.text.push_back('\n');
    first = false;
    result.text += detail::remove_ranges(src, std::move(cut));
  }
  return result;
}

/// Finds macro and score files by name when not given explicitly: the first
/// `.ly` file (sorted) whose name contains "macro" / "score".
inline LayoutNames discover_layout_names(const Workspace& ws, std::string header, std::string macro = {},
                                         std::string score = {}) {
  auto find = [&](std::string_view needle) -> std::string {
    for (const auto& f : ws.files) {
      if (f == header || fs::path(f).extension() != ".ly") continue;
      if (to_lower_ascii(fs::path(f).filename().string()).find(needle) != std::string::npos) return f;
    }
    return {};
  };
  if (macro.empty()) macro = find("macro");
  if (score.empty()) score = find("score");
  return LayoutNames{std::move(header), std::move(macro), std::move(score)};
}

/// Values of `key = "string"` assignments inside \header blocks.
inline std::map<std::string, std::string> header_fields(const ParsedSource& p) {
  std::map<std::string, std::string> out;
  for (const auto& node : p.tree.nodes) {
    if (node.kind != BlockKind::HeaderBlock) continue;
    for (std::size_t i = node.open + 1; i < node.close; ++i) {
      if (p.tokens[i].kind != TokenKind::Word || p.tree.owner[i] != static_cast<std::size_t>(&node - p.tree.nodes.data()))
        continue;
      auto eq = next_significant(p.tokens, i + 1);
      if (eq == npos || p.tokens[eq].kind != TokenKind::Equals) continue;
      auto v = next_significant(p.tokens, eq + 1);
      if (v != npos && p.tokens[v].kind == TokenKind::String) out.emplace(p.tokens[i].text, string_value(p.tokens[v].text));
    }
  }
  return out;
}

}  // namespace lilytk::syntax
