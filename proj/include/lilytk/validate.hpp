#pragma once

// Note-count validation: parsed note events vs rendered notehead glyphs.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdio>
#include <mutex>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lilytk/error.hpp"
#include "lilytk/pitchlang.hpp"
#include "lilytk/syntax.hpp"
#include "lilytk/util.hpp"

namespace lilytk::validate {

struct Exclusions {
  std::size_t unused_variable_notes = 0;
  std::size_t incipit_notes = 0;
};

struct NoteCount {
  std::size_t count = 0;
  Exclusions exclusions;
  std::vector<std::string> warnings;  // unknown constructs, counted as zero
};

struct CountOptions {
  std::string incipit_pattern = "incipit";  // case-insensitive substring of the variable name
};

namespace detail {

inline bool is_rest_or_skip(std::string_view w) { return w == "r" || w == "R" || w == "s"; }

inline bool is_note_word(std::string_view w) {
  return pitchlang::is_nederlands_pitch(w) || pitchlang::is_italiano_pitch(w);
}

// Commands whose following word/string arguments are not music.
inline int skipped_argument_count(std::string_view cmd) {
  static const std::map<std::string_view, int> kArgs = {
      {"\\key", 1},      {"\\relative", 1}, {"\\fixed", 1},   {"\\octaveCheck", 1}, {"\\transpose", 2},
      {"\\clef", 1},     {"\\new", 1},      {"\\context", 1}, {"\\change", 1},      {"\\bar", 1},
      {"\\mark", 1},     {"\\tempo", 1},    {"\\language", 1}, {"\\include", 1},    {"\\version", 1},
      {"\\unset", 1},    {"\\revert", 1},   {"\\instrumentSwitch", 1}};
  auto it = kArgs.find(cmd);
  return it == kArgs.end() ? 0 : it->second;
}

// Commands whose next block (or single argument) produces no noteheads.
inline bool skips_next_argument(std::string_view cmd) {
  static const std::set<std::string_view> kCommands = {
      "\\markup", "\\markuplist", "\\lyricmode", "\\addlyrics", "\\lyrics",    "\\lyricsto", "\\paper",
      "\\layout", "\\midi",       "\\with",      "\\header",    "\\chordmode", "\\chords",   "\\figuremode",
      "\\figures", "\\drummode",  "\\drums"};
  return kCommands.count(cmd) > 0;
}

inline bool contains_ci(std::string_view hay, std::string_view needle) {
  return !needle.empty() && to_lower_ascii(hay).find(to_lower_ascii(needle)) != std::string::npos;
}

class Counter {
 public:
  Counter(const syntax::ParsedSource& p, const syntax::ScoreGraph& g, const CountOptions& opt)
      : p_(p), g_(g), opt_(opt) {}

  bool is_incipit(const std::string& name) const { return contains_ci(name, opt_.incipit_pattern); }

  // Count of a variable body; references expand per occurrence.
  std::size_t variable(const std::string& name) {
    if (auto it = memo_.find(name); it != memo_.end()) return it->second;
    const auto& b = g_.bindings.at(name);
    if (b.body_first == syntax::npos) return memo_[name] = 0;
    if (!active_.insert(name).second) {
      warn("cyclic reference to \\" + name + " ignored");
      return 0;
    }
    std::size_t last_chord = 0;
    auto n = range(b.body_first, b.body_last, last_chord);
    active_.erase(name);
    return memo_[name] = n;
  }

  std::size_t shadowed_body(const syntax::VariableBinding& b) {
    if (b.body_first == syntax::npos) return 0;
    std::size_t last_chord = 0;
    return range(b.body_first, b.body_last, last_chord);
  }

  // Inclusive token range.
  std::size_t range(std::size_t first, std::size_t last, std::size_t& last_chord) {
    using syntax::TokenKind;
    const auto& toks = p_.tokens;
    std::size_t total = 0;
    int skip_words = 0;
    for (std::size_t i = first; i <= last && i < toks.size(); ++i) {
      const auto& t = toks[i];
      switch (t.kind) {
        case TokenKind::Comment:
          continue;
        case TokenKind::OpenAngle: {
          std::size_t close = p_.tree.match[i];
          std::size_t inner = 0;
          if (close > i + 1) inner = range(i + 1, close - 1, last_chord);
          last_chord = inner;
          total += inner;
          i = close;
          skip_words = 0;
          continue;
        }
        case TokenKind::Command: {
          skip_words = 0;
          if (skips_next_argument(t.text)) {
            i = skip_argument(i);
            if (t.text == "\\lyricsto" && i < toks.size()) i = skip_argument(i);
            continue;
          }
          if (t.text == "\\repeat") {
            i = repeat(i, last, total, last_chord);
            continue;
          }
          if (t.text == "\\set" || t.text == "\\override") {
            i = skip_assignment(i, last);
            continue;
          }
          if (auto n = skipped_argument_count(t.text)) {
            skip_words = n;
            continue;
          }
          auto name = t.text.substr(1);
          if (g_.bindings.count(name)) {
            if (!is_incipit(name)) total += variable(name);
          }
          continue;
        }
        case TokenKind::Word: {
          if (skip_words > 0) {
            --skip_words;
            continue;
          }
          auto nx = syntax::next_significant(toks, i + 1);
          if (nx != syntax::npos && nx <= last && toks[nx].kind == TokenKind::Equals) continue;  // name = "..."
          if (is_rest_or_skip(t.text)) continue;
          if (t.text == "q") {
            total += last_chord;
            continue;
          }
          if (is_note_word(t.text)) {
            ++total;
            last_chord = 1;
            continue;
          }
          warn("unknown word '" + t.text + "' at byte " + std::to_string(t.span.begin) + " counted as 0");
          continue;
        }
        case TokenKind::String:
          if (skip_words > 0) --skip_words;
          continue;
        case TokenKind::Equals:
          continue;
        default:
          if (t.kind != TokenKind::Other) skip_words = 0;
          continue;
      }
    }
    return total;
  }

  std::vector<std::string> warnings;

 private:
  void warn(std::string w) {
    if (seen_warnings_.insert(w).second) warnings.push_back(std::move(w));
  }

  // Index of the last token of the argument following command i.
  std::size_t skip_argument(std::size_t i) const {
    const auto& toks = p_.tokens;
    auto a = syntax::next_significant(toks, i + 1);
    if (a == syntax::npos) return toks.size();
    if (syntax::is_open(toks[a].kind)) return p_.tree.match[a];
    if (toks[a].kind == syntax::TokenKind::Command) {
      // \markup \bold { ... } or \markup \italic "x"
      std::size_t j = a;
      while (j != syntax::npos && toks[j].kind == syntax::TokenKind::Command) j = syntax::next_significant(toks, j + 1);
      if (j == syntax::npos) return toks.size();
      return syntax::is_open(toks[j].kind) ? p_.tree.match[j] : j;
    }
    return a;
  }

  // \set Ctx.prop = value  /  \override Ctx.Grob.prop = value
  std::size_t skip_assignment(std::size_t i, std::size_t last) const {
    const auto& toks = p_.tokens;
    std::size_t j = i;
    for (std::size_t k = syntax::next_significant(toks, i + 1); k != syntax::npos && k <= last;
         k = syntax::next_significant(toks, k + 1)) {
      const auto& t = toks[k];
      if (t.kind == syntax::TokenKind::Equals) {
        auto v = syntax::next_significant(toks, k + 1);
        if (v == syntax::npos) return k;
        return syntax::is_open(toks[v].kind) ? p_.tree.match[v] : v;
      }
      if (t.kind != syntax::TokenKind::Word && t.kind != syntax::TokenKind::Other) return j;
      j = k;
    }
    return j;
  }

  // \repeat kind n body; unfold multiplies by n, other kinds render once.
  std::size_t repeat(std::size_t i, std::size_t last, std::size_t& total, std::size_t& last_chord) {
    const auto& toks = p_.tokens;
    auto kind = syntax::next_significant(toks, i + 1);
    auto times = kind == syntax::npos ? kind : syntax::next_significant(toks, kind + 1);
    if (times == syntax::npos || toks[kind].kind != syntax::TokenKind::Word ||
        toks[times].kind != syntax::TokenKind::Number)
      return i;
    auto body = syntax::next_significant(toks, times + 1);
    if (body == syntax::npos || body > last) return times;
    std::size_t mult = toks[kind].text == "unfold" ? static_cast<std::size_t>(std::stoul(toks[times].text)) : 1;
    if (syntax::is_open(toks[body].kind)) {
      auto close = p_.tree.match[body];
      std::size_t n = 0;
      if (toks[body].kind == syntax::TokenKind::OpenAngle) {
        n = range(body, close, last_chord);
      } else if (close > body + 1) {
        n = range(body + 1, close - 1, last_chord);
      }
      total += n * mult;
      return close;
    }
    // single-event body such as `\repeat unfold 4 c8` or a variable reference
    std::size_t end = body;
    auto nx = syntax::next_significant(toks, body + 1);
    if (toks[body].kind == syntax::TokenKind::Word && nx != syntax::npos && nx <= last &&
        toks[nx].kind == syntax::TokenKind::Number)
      end = nx;
    total += range(body, end, last_chord) * mult;
    return end;
  }

  const syntax::ParsedSource& p_;
  const syntax::ScoreGraph& g_;
  const CountOptions& opt_;
  std::map<std::string, std::size_t> memo_;
  std::set<std::string> active_;
  std::set<std::string> seen_warnings_;
};

}  // namespace detail

/// Note events in music reachable from \score blocks. Chords count one per pitch,
/// rests and skips count zero, `\repeat unfold n` multiplies its body by n, and
/// a variable referenced twice counts twice. Unused and incipit variables are
/// tallied separately.
inline NoteCount count_note_events(const syntax::ParsedSource& p, const CountOptions& opt = {}) {
  const auto g = syntax::reachable_variables(p);
  detail::Counter c(p, g, opt);
  NoteCount out;
  for (const auto& [open, close] : g.score_roots) {
    std::size_t last_chord = 0;
    if (close > open + 1) out.count += c.range(open + 1, close - 1, last_chord);
  }
  for (const auto& [name, b] : g.bindings) {
    if (c.is_incipit(name))
      out.exclusions.incipit_notes += c.variable(name);
    else if (!g.reachable.count(name))
      out.exclusions.unused_variable_notes += c.variable(name);
  }
  for (const auto& b : g.shadowed) {
    auto n = c.shadowed_body(b);
    if (c.is_incipit(b.name))
      out.exclusions.incipit_notes += n;
    else
      out.exclusions.unused_variable_notes += n;
  }
  out.warnings = std::move(c.warnings);
  out.warnings.insert(out.warnings.end(), g.warnings.begin(), g.warnings.end());
  return out;
}

inline NoteCount count_note_events(std::string_view src, const CountOptions& opt = {}) {
  try {
    return count_note_events(syntax::parse(src), opt);
  } catch (const Error& e) {
    throw Error(Errc::ParseFailure, e.what(), e.offset());
  }
}

/// Occurrences of `/noteheads.` followed by at least one character.
inline std::size_t count_ps_noteheads(std::string_view ps) {
  static constexpr std::string_view kPattern = "/noteheads.";
  std::size_t n = 0;
  for (auto pos = ps.find(kPattern); pos != std::string_view::npos; pos = ps.find(kPattern, pos + 1))
    if (pos + kPattern.size() < ps.size()) ++n;
  return n;
}

// --- compilation ----------------------------------------------------------

struct CompileReport {
  std::string file_id;
  bool succeeded = false;
  int exit_status = -1;
  std::string stderr_excerpt;
  std::vector<std::string> outputs;
};

struct CompileOptions {
  std::vector<std::string> flags = {"--ps"};
  std::chrono::milliseconds timeout = std::chrono::seconds(120);
  fs::path output_dir;  // empty: next to the source
  std::size_t excerpt_bytes = 2000;
};

/// Absolute path of an executable: taken as-is when it contains '/', else looked up on PATH.
inline std::optional<fs::path> find_executable(const std::string& name) {
  auto executable = [](const fs::path& p) { return ::access(p.c_str(), X_OK) == 0 && fs::is_regular_file(p); };
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) return executable(name) ? std::optional<fs::path>(name) : std::nullopt;
  const char* path = std::getenv("PATH");
  if (!path) return std::nullopt;
  std::string_view rest(path);
  while (true) {
    auto colon = rest.find(':');
    auto dir = rest.substr(0, colon);
    fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / name;
    if (executable(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

inline bool stderr_has_error(std::string_view err) { return to_lower_ascii(err).find("error") != std::string::npos; }

/// Runs `engraver <flags> -o <out>/<stem> <path>`. Succeeds iff exit status is
/// zero and stderr contains no "error" (any case).
inline CompileReport compile_file(const fs::path& path, const std::string& engraver, const CompileOptions& opt = {}) {
  auto exe = find_executable(engraver);
  if (!exe) throw Error(Errc::EngraverNotFound, "engraver '" + engraver + "' not found or not executable");
  CompileReport rep;
  rep.file_id = path.stem().string();
  const fs::path out_dir = opt.output_dir.empty() ? path.parent_path() : opt.output_dir;
  const fs::path out_base = out_dir / path.stem();

  std::vector<std::string> args{exe->string()};
  args.insert(args.end(), opt.flags.begin(), opt.flags.end());
  args.push_back("-o");
  args.push_back(out_base.string());
  args.push_back(path.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  int err_pipe[2];
  if (::pipe(err_pipe) != 0) throw Error(Errc::Io, "pipe failed");
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    throw Error(Errc::Io, "fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    int devnull = ::open("/dev/null", O_RDWR);
    ::dup2(devnull, STDIN_FILENO);
    ::dup2(devnull, STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(err_pipe[1]);

  std::string err;
  const auto deadline = std::chrono::steady_clock::now() + opt.timeout;
  bool timed_out = false;
  char buf[4096];
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{err_pipe[0], POLLIN, 0};
    int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    auto n = ::read(err_pipe[0], buf, sizeof buf);
    if (n <= 0) break;
    err.append(buf, static_cast<std::size_t>(n));
  }
  int status = 0;
  if (timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    ::close(err_pipe[0]);
    throw Error(Errc::Timeout, path.string() + " exceeded " + std::to_string(opt.timeout.count()) + " ms");
  }
  // stderr closed; the child may still be running
  while (true) {
    auto w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      ::close(err_pipe[0]);
      throw Error(Errc::Timeout, path.string() + " exceeded " + std::to_string(opt.timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::close(err_pipe[0]);

  rep.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
  rep.succeeded = rep.exit_status == 0 && !stderr_has_error(err);
  rep.stderr_excerpt = err.substr(0, opt.excerpt_bytes);
  for (const char* ext : {".ps", ".pdf", ".midi", ".mid", ".png", ".svg"}) {
    fs::path o = out_base;
    o += ext;
    if (fs::exists(o)) rep.outputs.push_back(o.string());
  }
  return rep;
}

// --- reports --------------------------------------------------------------

struct NoteCountReport {
  std::string file_id;
  std::size_t parsed_count = 0;
  std::optional<std::size_t> rendered_count;
  bool match = false;
  std::optional<double> rel_error;  // |parsed - rendered| / rendered
  Exclusions exclusions;
  std::optional<CompileReport> compile;
  std::vector<std::string> warnings;
};

inline void fill_comparison(NoteCountReport& r) {
  r.match = r.rendered_count && *r.rendered_count == r.parsed_count;
  r.rel_error.reset();
  if (r.rendered_count && *r.rendered_count > 0) {
    double p = static_cast<double>(r.parsed_count), q = static_cast<double>(*r.rendered_count);
    r.rel_error = std::fabs(p - q) / q;
  }
}

struct ValidateOptions {
  std::optional<std::string> engraver;  // none: use a sibling <stem>.ps if present
  CompileOptions compile;
  CountOptions count;
};

inline NoteCountReport validate_file(const fs::path& path, const ValidateOptions& opt = {}) {
  NoteCountReport r;
  r.file_id = path.stem().string();
  auto nc = count_note_events(read_file(path), opt.count);
  r.parsed_count = nc.count;
  r.exclusions = nc.exclusions;
  r.warnings = std::move(nc.warnings);
  fs::path ps;
  if (opt.engraver) {
    r.compile = compile_file(path, *opt.engraver, opt.compile);
    if (r.compile->succeeded)
      for (const auto& o : r.compile->outputs)
        if (fs::path(o).extension() == ".ps") ps = o;
  } else {
    auto sibling = path;
    sibling.replace_extension(".ps");
    if (fs::exists(sibling)) ps = sibling;
  }
  if (!ps.empty()) r.rendered_count = count_ps_noteheads(read_file(ps));
  fill_comparison(r);
  return r;
}

struct BatchSummary {
  std::size_t n_files = 0;
  std::size_t n_rendered = 0;
  std::size_t n_perfect = 0;
  double perfect_ratio = 0.0;  // over rendered files
  std::optional<double> mean_rel_error_over_mismatches;
};

struct BatchResult {
  std::vector<NoteCountReport> reports;  // sorted by file_id
  BatchSummary summary;
  std::vector<std::string> errors;
};

inline BatchSummary summarize(const std::vector<NoteCountReport>& reports) {
  BatchSummary s;
  s.n_files = reports.size();
  double err_sum = 0;
  std::size_t n_mismatch = 0;
  for (const auto& r : reports) {
    if (!r.rendered_count) continue;
    ++s.n_rendered;
    if (r.match) {
      ++s.n_perfect;
    } else if (r.rel_error) {
      err_sum += *r.rel_error;
      ++n_mismatch;
    }
  }
  if (s.n_rendered) s.perfect_ratio = static_cast<double>(s.n_perfect) / static_cast<double>(s.n_rendered);
  if (n_mismatch) s.mean_rel_error_over_mismatches = err_sum / static_cast<double>(n_mismatch);
  return s;
}

/// Validates every `.ly` in the directory with up to `workers` concurrent files.
/// Per-file failures become a report without a rendered count plus an error line.
inline BatchResult batch_validate(const fs::path& dir, const ValidateOptions& opt = {}, std::size_t workers = 1) {
  const auto files = list_files(dir, ".ly");
  if (files.empty()) throw Error(Errc::EmptyCorpus, "no .ly files in " + dir.string());
  std::vector<NoteCountReport> reports(files.size());
  std::vector<std::string> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        reports[i] = validate_file(files[i], opt);
      } catch (const Error& e) {
        if (e.code() == Errc::EngraverNotFound) throw;
        reports[i].file_id = files[i].stem().string();
        errors[i] = reports[i].file_id + ": " + e.what();
      }
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, files.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex m;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lk(m);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  BatchResult out;
  std::vector<std::size_t> order(files.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return reports[a].file_id < reports[b].file_id; });
  for (auto i : order) {
    out.reports.push_back(std::move(reports[i]));
    if (!errors[i].empty()) out.errors.push_back(std::move(errors[i]));
  }
  out.summary = summarize(out.reports);
  return out;
}

inline nlohmann::ordered_json report_json(const NoteCountReport& r) {
  nlohmann::ordered_json j;
  j["file_id"] = r.file_id;
  j["parsed_count"] = r.parsed_count;
  j["rendered_count"] = r.rendered_count ? nlohmann::ordered_json(*r.rendered_count) : nlohmann::ordered_json(nullptr);
  j["match"] = r.match;
  j["rel_error"] = r.rel_error ? nlohmann::ordered_json(*r.rel_error) : nlohmann::ordered_json(nullptr);
  j["exclusions"] = {{"unused_variable_notes", r.exclusions.unused_variable_notes},
                     {"incipit_notes", r.exclusions.incipit_notes}};
  if (r.compile)
    j["compile"] = {{"succeeded", r.compile->succeeded},
                    {"exit_status", r.compile->exit_status},
                    {"stderr_excerpt", r.compile->stderr_excerpt},
                    {"outputs", r.compile->outputs}};
  j["warnings"] = r.warnings;
  return j;
}

inline nlohmann::ordered_json summary_json(const BatchSummary& s) {
  nlohmann::ordered_json j;
  j["n_files"] = s.n_files;
  j["n_rendered"] = s.n_rendered;
  j["n_perfect"] = s.n_perfect;
  j["perfect_ratio"] = s.perfect_ratio;
  j["mean_rel_error_over_mismatches"] =
      s.mean_rel_error_over_mismatches ? nlohmann::ordered_json(*s.mean_rel_error_over_mismatches) : nlohmann::ordered_json(nullptr);
  return j;
}

inline std::string summary_csv(const std::vector<NoteCountReport>& reports) {
  std::string out = "file_id,parsed_count,rendered_count,match,rel_error,unused_variable_notes,incipit_notes\n";
  for (const auto& r : reports) {
    char err[32] = "";
    if (r.rel_error) std::snprintf(err, sizeof err, "%.6f", *r.rel_error);
    out += r.file_id + "," + std::to_string(r.parsed_count) + "," +
           (r.rendered_count ? std::to_string(*r.rendered_count) : std::string()) + "," + (r.match ? "true" : "false") +
           "," + err + "," + std::to_string(r.exclusions.unused_variable_notes) + "," +
           std::to_string(r.exclusions.incipit_notes) + "\n";
  }
  return out;
}

}  // namespace lilytk::validate
