#pragma once

// Byte-level BPE tokenizer extended with atomic LilyPond command tokens, plus the
// fixed-size chunking and masked-LM corruption used to prepare training inputs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lilytk/error.hpp"
#include "lilytk/syntax.hpp"
#include "lilytk/util.hpp"

namespace lilytk::tok {

using TokenId = std::int32_t;
inline constexpr TokenId kIgnoreLabel = -100;
inline constexpr std::size_t kAddedTokenCount = 115;
inline constexpr std::size_t kDefaultChunkSize = 512;
inline constexpr double kDefaultMaskRate = 0.15;

/// Category names and their required sizes in the added-token file.
inline const std::vector<std::pair<std::string, std::size_t>>& added_token_categories() {
  static const std::vector<std::pair<std::string, std::size_t>> cats = {
      {"musical_commands", 15}, {"dynamics", 19},     {"structural_blocks", 20},
      {"articulations_ornaments", 14}, {"key_modes", 9}, {"overrides_other", 38}};
  return cats;
}

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes one code point starting at s[i]; advances i. Input is assumed valid.
inline std::uint32_t next_codepoint(std::string_view s, std::size_t& i) {
  auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = syntax::detail::utf8_len(c);
  std::uint32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

}  // namespace detail

/// The reversible byte -> printable code point mapping used by byte-level BPE
/// vocabularies (printable Latin-1 maps to itself, the rest is shifted past 255).
class ByteAlphabet {
 public:
  ByteAlphabet() {
    std::array<bool, 256> direct{};
    for (int b = '!'; b <= '~'; ++b) direct[b] = true;
    for (int b = 0xA1; b <= 0xAC; ++b) direct[b] = true;
    for (int b = 0xAE; b <= 0xFF; ++b) direct[b] = true;
    std::uint32_t shifted = 256;
    for (int b = 0; b < 256; ++b) {
      std::uint32_t cp = direct[b] ? static_cast<std::uint32_t>(b) : shifted++;
      detail::append_utf8(symbol_[b], cp);
      inverse_.emplace(cp, static_cast<std::uint8_t>(b));
    }
  }

  const std::string& symbol(std::uint8_t b) const { return symbol_[b]; }

  /// Appends the raw bytes a symbol string stands for.
  void decode(std::string_view symbols, std::string& out) const {
    std::size_t i = 0;
    while (i < symbols.size()) {
      const std::size_t start = i;
      auto cp = detail::next_codepoint(symbols, i);
      if (auto it = inverse_.find(cp); it != inverse_.end())
        out.push_back(static_cast<char>(it->second));
      else
        out.append(symbols.substr(start, i - start));
    }
  }

  /// Number of raw bytes a symbol string decodes to.
  std::size_t byte_length(std::string_view symbols) const {
    std::string tmp;
    decode(symbols, tmp);
    return tmp.size();
  }

 private:
  std::array<std::string, 256> symbol_;
  std::unordered_map<std::uint32_t, std::uint8_t> inverse_;
};

inline const ByteAlphabet& byte_alphabet() {
  static const ByteAlphabet a;
  return a;
}

struct SpecialIds {
  TokenId cls = -1;   // bound to <s>
  TokenId sep = -1;   // bound to </s>
  TokenId mask = -1;
  TokenId pad = -1;
  TokenId unk = -1;

  bool is_special(TokenId id) const { return id == cls || id == sep || id == mask || id == pad || id == unk; }
};

struct AddedTokenTable {
  std::vector<std::pair<std::string, std::vector<std::string>>> categories;  // in file order

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, toks] : categories) n += toks.size();
    return n;
  }
};

/// Parses `category<TAB>token` lines and enforces the six category sizes.
inline AddedTokenTable parse_added_tokens(std::string_view text) {
  AddedTokenTable table;
  std::unordered_set<std::string> seen;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(text)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error(Errc::MalformedVocabulary, "added-token line " + std::to_string(lineno) + " lacks a tab", lineno);
    std::string cat(trim(line.substr(0, tab)));
    std::string token(trim(line.substr(tab + 1)));
    if (token.empty() || token.front() != '\\')
      throw Error(Errc::MalformedVocabulary, "added token '" + token + "' must start with a backslash", lineno);
    if (!seen.insert(token).second) throw Error(Errc::DuplicateAddedToken, "duplicate added token " + token, lineno);
    auto it = std::find_if(table.categories.begin(), table.categories.end(),
                           [&](const auto& c) { return c.first == cat; });
    if (it == table.categories.end()) {
      table.categories.emplace_back(cat, std::vector<std::string>{});
      it = std::prev(table.categories.end());
    }
    it->second.push_back(std::move(token));
  }

  std::string problems;
  for (const auto& [cat, want] : added_token_categories()) {
    auto it = std::find_if(table.categories.begin(), table.categories.end(),
                           [&](const auto& c) { return c.first == cat; });
    std::size_t got = it == table.categories.end() ? 0 : it->second.size();
    if (got != want) problems += " " + cat + "=" + std::to_string(got) + "(want " + std::to_string(want) + ")";
  }
  for (const auto& [cat, toks] : table.categories) {
    auto known = std::any_of(added_token_categories().begin(), added_token_categories().end(),
                             [&](const auto& c) { return c.first == cat; });
    if (!known) problems += " unknown category '" + cat + "'";
  }
  if (table.size() != kAddedTokenCount || !problems.empty())
    throw Error(Errc::WrongCategoryCount,
                "added tokens total " + std::to_string(table.size()) + " (want 115);" + problems);
  return table;
}

struct TokenizedDoc {
  std::vector<TokenId> ids;
  std::vector<syntax::Span> offsets;  // byte span of each id in the source
};

class Vocabulary {
 public:
  /// `base` maps token strings to dense ids [0, base.size()). `merges` are
  /// (left, right) pairs in rank order.
  Vocabulary(std::unordered_map<std::string, TokenId> base, const std::vector<std::pair<std::string, std::string>>& merges,
             const AddedTokenTable& added)
      : base_(std::move(base)) {
    id_to_token_.assign(base_.size(), {});
    std::vector<bool> filled(base_.size(), false);
    for (const auto& [tok, id] : base_) {
      if (id < 0 || static_cast<std::size_t>(id) >= base_.size() || filled[id])
        throw Error(Errc::MalformedVocabulary, "base ids must be dense and unique; bad id " + std::to_string(id));
      filled[id] = true;
      id_to_token_[id] = tok;
    }
    for (int b = 0; b < 256; ++b)
      if (!base_.count(byte_alphabet().symbol(static_cast<std::uint8_t>(b))))
        throw Error(Errc::MalformedVocabulary, "base vocabulary lacks the symbol for byte " + std::to_string(b));

    auto special = [&](std::initializer_list<const char*> names) -> TokenId {
      for (auto n : names)
        if (auto it = base_.find(n); it != base_.end()) return it->second;
      throw Error(Errc::MalformedVocabulary, std::string("base vocabulary lacks special token ") + *names.begin());
    };
    special_.cls = special({"<s>", "[CLS]"});
    special_.sep = special({"</s>", "[SEP]"});
    special_.pad = special({"<pad>", "[PAD]"});
    special_.unk = special({"<unk>", "[UNK]"});
    special_.mask = special({"<mask>", "[MASK]"});

    for (std::size_t r = 0; r < merges.size(); ++r)
      merge_rank_.emplace(merges[r].first + ' ' + merges[r].second, static_cast<int>(r));

    for (const auto& [cat, toks] : added.categories) {
      for (const auto& t : toks) {
        if (base_.count(t)) throw Error(Errc::AddedTokenCollidesWithBase, "added token " + t + " already in base vocabulary");
        const auto id = static_cast<TokenId>(id_to_token_.size());
        added_ids_.emplace(t, id);
        id_to_token_.push_back(t);
        added_category_.push_back(cat);
        max_added_len_ = std::max(max_added_len_, t.size());
      }
    }
  }

  static Vocabulary load(const fs::path& vocab_file, const fs::path& merges_file, const fs::path& added_tokens_file) {
    std::unordered_map<std::string, TokenId> base;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(read_file(vocab_file))) {
      ++lineno;
      if (line.empty()) continue;
      auto tab = line.rfind('\t');
      if (tab == std::string::npos)
        throw Error(Errc::MalformedVocabulary, vocab_file.string() + ":" + std::to_string(lineno) + ": expected token<TAB>id", lineno);
      TokenId id;
      try {
        id = static_cast<TokenId>(std::stol(line.substr(tab + 1)));
      } catch (const std::exception&) {
        throw Error(Errc::MalformedVocabulary, vocab_file.string() + ":" + std::to_string(lineno) + ": bad id", lineno);
      }
      if (!base.emplace(line.substr(0, tab), id).second)
        throw Error(Errc::MalformedVocabulary, "duplicate base token on line " + std::to_string(lineno), lineno);
    }
    std::vector<std::pair<std::string, std::string>> merges;
    for (const auto& line : split_lines(read_file(merges_file))) {
      if (line.empty() || line.rfind("#version", 0) == 0) continue;
      auto sp = line.find(' ');
      if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size())
        throw Error(Errc::MalformedVocabulary, "bad merge line '" + line + "'");
      merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
    }
    return Vocabulary(std::move(base), merges, parse_added_tokens(read_file(added_tokens_file)));
  }

  std::size_t base_size() const { return base_.size(); }
  std::size_t added_size() const { return added_ids_.size(); }
  std::size_t size() const { return id_to_token_.size(); }
  const SpecialIds& special() const { return special_; }

  bool is_added(TokenId id) const { return id >= static_cast<TokenId>(base_size()) && id < static_cast<TokenId>(size()); }

  std::optional<TokenId> added_id(std::string_view token) const {
    if (auto it = added_ids_.find(std::string(token)); it != added_ids_.end()) return it->second;
    return std::nullopt;
  }

  std::optional<TokenId> base_id(std::string_view token) const {
    if (auto it = base_.find(std::string(token)); it != base_.end()) return it->second;
    return std::nullopt;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= size()) throw Error(Errc::UnknownId, "token id " + std::to_string(id));
    return id_to_token_[id];
  }

  std::vector<std::string> added_tokens() const {
    return {id_to_token_.begin() + static_cast<std::ptrdiff_t>(base_size()), id_to_token_.end()};
  }

  const std::string& added_category(TokenId id) const { return added_category_.at(id - static_cast<TokenId>(base_size())); }

  /// Length of the longest added token at `pos` whose next character is not an
  /// ASCII letter, or 0.
  std::size_t match_added(std::string_view text, std::size_t pos) const {
    const std::size_t longest = std::min(max_added_len_, text.size() - pos);
    for (std::size_t len = longest; len >= 2; --len) {
      if (pos + len < text.size() && is_ascii_letter(static_cast<unsigned char>(text[pos + len]))) continue;
      if (added_ids_.count(std::string(text.substr(pos, len)))) return len;
    }
    return 0;
  }

  std::optional<int> merge_rank(const std::string& left, const std::string& right) const {
    if (auto it = merge_rank_.find(left + ' ' + right); it != merge_rank_.end()) return it->second;
    return std::nullopt;
  }

 private:
  std::unordered_map<std::string, TokenId> base_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> merge_rank_;
  std::unordered_map<std::string, TokenId> added_ids_;
  std::vector<std::string> added_category_;
  std::size_t max_added_len_ = 0;
  SpecialIds special_;
};

namespace detail {

inline bool is_pre_space(unsigned char c) { return syntax::is_space(c); }
inline bool is_pre_letter(unsigned char c) { return is_ascii_letter(c) || c >= 0x80; }

// Byte-level pre-tokenization in the style of the GPT-2 split pattern
//   's|'t|'re|'ve|'m|'ll|'d| ?L+| ?N+| ?[^\sLN]+|\s+(?!\S)|\s+
// with L = ASCII letters and all non-ASCII bytes, N = ASCII digits.
inline std::vector<std::string_view> pretokenize(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto cls = [](unsigned char c) { return is_pre_space(c) ? 0 : is_pre_letter(c) ? 1 : is_ascii_digit(c) ? 2 : 3; };
  while (i < n) {
    if (s[i] == '\'') {
      for (std::string_view suf : {"s", "t", "re", "ve", "m", "ll", "d"}) {
        if (s.substr(i + 1, suf.size()) == suf) {
          out.push_back(s.substr(i, 1 + suf.size()));
          i += 1 + suf.size();
          goto next;
        }
      }
    }
    {
      std::size_t j = i;
      if (s[j] == ' ' && j + 1 < n && !is_pre_space(static_cast<unsigned char>(s[j + 1]))) ++j;
      auto c = static_cast<unsigned char>(s[j]);
      if (!is_pre_space(c)) {
        const int k = cls(c);
        while (j < n && cls(static_cast<unsigned char>(s[j])) == k) ++j;
        if (j == i) ++j;
        out.push_back(s.substr(i, j - i));
        i = j;
        continue;
      }
      std::size_t e = i;
      while (e < n && is_pre_space(static_cast<unsigned char>(s[e]))) ++e;
      if (e < n && e - i >= 2) e -= 1;
      out.push_back(s.substr(i, e - i));
      i = e;
    }
  next:;
  }
  return out;
}

}  // namespace detail

/// Applies the ranked merges to one pre-token; returns symbol strings.
inline std::vector<std::string> bpe(std::string_view piece, const Vocabulary& vocab) {
  std::vector<std::string> sym;
  sym.reserve(piece.size());
  for (unsigned char b : piece) sym.push_back(byte_alphabet().symbol(b));
  while (sym.size() > 1) {
    int best = std::numeric_limits<int>::max();
    std::size_t at = 0;
    for (std::size_t k = 0; k + 1 < sym.size(); ++k) {
      if (auto r = vocab.merge_rank(sym[k], sym[k + 1]); r && *r < best) {
        best = *r;
        at = k;
      }
    }
    if (best == std::numeric_limits<int>::max()) break;
    const std::string left = sym[at], right = sym[at + 1];
    std::vector<std::string> merged;
    merged.reserve(sym.size());
    for (std::size_t k = 0; k < sym.size();) {
      if (k + 1 < sym.size() && sym[k] == left && sym[k + 1] == right) {
        merged.push_back(left + right);
        k += 2;
      } else {
        merged.push_back(std::move(sym[k]));
        ++k;
      }
    }
    sym = std::move(merged);
  }
  return sym;
}

/// Added tokens are matched first (leftmost-longest, next char not an ASCII
/// letter); the text between them goes through byte-level BPE.
inline TokenizedDoc tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenizedDoc doc;
  std::unordered_map<std::string, std::vector<std::pair<TokenId, std::size_t>>> cache;
  const auto& alpha = byte_alphabet();

  auto encode_segment = [&](std::size_t begin, std::size_t end) {
    std::size_t pos = begin;
    for (auto piece : detail::pretokenize(text.substr(begin, end - begin))) {
      auto [it, fresh] = cache.try_emplace(std::string(piece));
      if (fresh) {
        for (const auto& s : bpe(piece, vocab)) {
          if (auto id = vocab.base_id(s)) {
            it->second.emplace_back(*id, alpha.byte_length(s));
          } else {
            // merge result absent from the vocabulary: fall back to its bytes
            std::string raw;
            alpha.decode(s, raw);
            for (unsigned char b : raw) it->second.emplace_back(*vocab.base_id(alpha.symbol(b)), 1);
          }
        }
      }
      for (const auto& [id, len] : it->second) {
        doc.ids.push_back(id);
        doc.offsets.push_back(syntax::Span{pos, pos + len});
        pos += len;
      }
    }
  };

  std::size_t seg = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    if (text[pos] == '\\') {
      if (auto len = vocab.match_added(text, pos)) {
        encode_segment(seg, pos);
        doc.ids.push_back(*vocab.added_id(text.substr(pos, len)));
        doc.offsets.push_back(syntax::Span{pos, pos + len});
        pos += len;
        seg = pos;
        continue;
      }
    }
    ++pos;
  }
  encode_segment(seg, text.size());
  return doc;
}

inline std::string detokenize(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  std::string out;
  for (auto id : ids) {
    const auto& t = vocab.token(id);
    if (vocab.is_added(id))
      out += t;
    else
      byte_alphabet().decode(t, out);
  }
  return out;
}

struct Chunk {
  std::vector<TokenId> ids;  // [CLS] content... [SEP]
  std::size_t content_len = 0;
};

/// Non-overlapping chunks of at most `size` ids, specials included:
/// every chunk holds up to size - 2 content ids between CLS and SEP.
inline std::vector<Chunk> chunk(const std::vector<TokenId>& ids, const SpecialIds& special,
                                std::size_t size = kDefaultChunkSize) {
  if (size < 3) throw Error(Errc::InvalidArgument, "chunk size must be >= 3");
  const std::size_t body = size - 2;
  std::vector<Chunk> out;
  for (std::size_t start = 0; start < ids.size(); start += body) {
    const std::size_t stop = std::min(ids.size(), start + body);
    Chunk c;
    c.ids.reserve(stop - start + 2);
    c.ids.push_back(special.cls);
    c.ids.insert(c.ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(start),
                 ids.begin() + static_cast<std::ptrdiff_t>(stop));
    c.ids.push_back(special.sep);
    c.content_len = stop - start;
    out.push_back(std::move(c));
  }
  return out;
}

struct MaskedExample {
  std::vector<TokenId> input_ids;
  std::vector<TokenId> labels;  // original id at selected positions, kIgnoreLabel elsewhere
  std::vector<std::size_t> masked_positions;  // sorted
  std::size_t n_mask_token = 0;
  std::size_t n_random = 0;
  std::size_t n_kept = 0;
};

/// Selects exactly round(rate * content_len) content positions uniformly without
/// replacement; 80% become the mask id, 10% a random non-special id, the rest
/// keep their token. Deterministic per seed.
inline MaskedExample sample_mlm_masks(const Chunk& c, const Vocabulary& vocab, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate < 1.0)) throw Error(Errc::RateOutOfRange, "mask rate must lie in (0, 1)");
  MaskedExample ex;
  ex.input_ids = c.ids;
  ex.labels.assign(c.ids.size(), kIgnoreLabel);
  const auto n_select = static_cast<std::size_t>(std::llround(rate * static_cast<double>(c.content_len)));
  if (n_select == 0) return ex;

  Rng rng(seed);
  std::vector<std::size_t> candidates(c.content_len);
  for (std::size_t k = 0; k < c.content_len; ++k) candidates[k] = k + 1;  // skip CLS
  // partial Fisher-Yates: the first n_select entries are the sample, in draw order
  for (std::size_t k = 0; k < n_select; ++k) std::swap(candidates[k], candidates[k + rng.below(candidates.size() - k)]);
  candidates.resize(n_select);

  ex.n_mask_token = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n_select)));
  ex.n_random = std::min(n_select - ex.n_mask_token,
                         static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n_select))));
  ex.n_kept = n_select - ex.n_mask_token - ex.n_random;

  const auto& sp = vocab.special();
  for (std::size_t k = 0; k < n_select; ++k) {
    const auto pos = candidates[k];
    ex.labels[pos] = c.ids[pos];
    if (k < ex.n_mask_token) {
      ex.input_ids[pos] = sp.mask;
    } else if (k < ex.n_mask_token + ex.n_random) {
      TokenId r;
      do {
        r = static_cast<TokenId>(rng.below(vocab.size()));
      } while (sp.is_special(r));
      ex.input_ids[pos] = r;
    }
  }
  ex.masked_positions = std::move(candidates);
  std::sort(ex.masked_positions.begin(), ex.masked_positions.end());
  return ex;
}

}  // namespace lilytk::tok
