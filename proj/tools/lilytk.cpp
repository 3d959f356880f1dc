#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lilytk/metadata.hpp"
#include "lilytk/pitchlang.hpp"
#include "lilytk/probe.hpp"
#include "lilytk/synth.hpp"
#include "lilytk/syntax.hpp"
#include "lilytk/taxonomy.hpp"
#include "lilytk/tokenizer.hpp"
#include "lilytk/validate.hpp"

namespace {

using namespace lilytk;
using ojson = nlohmann::ordered_json;

enum Exit : int { kOk = 0, kUsage = 2, kMismatch = 3, kExternal = 4 };

constexpr std::uint64_t kDefaultSeed = 20240917;

struct Globals {
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 1;
  std::string data_dir = LILYTK_DATA_DIR;
};

struct VocabPaths {
  std::string vocab, merges, added;

  void add(CLI::App* sub) {
    sub->add_option("--vocab", vocab, "base vocabulary (token<TAB>id)");
    sub->add_option("--merges", merges, "BPE merges file");
    sub->add_option("--added-tokens", added, "added-token table (category<TAB>token)");
  }

  tok::Vocabulary load(const Globals& g) const {
    auto pick = [&](const std::string& v, const char* def) { return v.empty() ? fs::path(g.data_dir) / def : fs::path(v); };
    return tok::Vocabulary::load(pick(vocab, "vocab/tiny-vocab.tsv"), pick(merges, "vocab/tiny-merges.txt"),
                                 pick(added, "added_tokens.tsv"));
  }
};

/// `.ly` files of a directory (sorted), or the single given file.
std::vector<fs::path> inputs(const fs::path& p) {
  if (fs::is_directory(p)) return list_files(p, ".ly");
  if (!fs::exists(p)) throw Error(Errc::Io, "no such file or directory: " + p.string());
  return {p};
}

void emit(const std::string& out, const std::string& data) {
  if (out.empty() || out == "-") {
    std::cout << data;
  } else {
    write_file(out, data);
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

std::vector<tok::Chunk> chunk_file(const fs::path& f, const tok::Vocabulary& v, std::size_t size) {
  auto doc = tok::tokenize(read_file(f), v);
  return tok::chunk(doc.ids, v.special(), size);
}

std::string data_file(const Globals& g, const std::string& given, const char* def) {
  return given.empty() ? (fs::path(g.data_dir) / def).string() : given;
}

void print_warnings(const std::string& who, const std::vector<std::string>& w) {
  for (const auto& line : w) std::cerr << "warning: " << who << ": " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lilytk: LilyPond corpus toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults (command-line flags take precedence)");
  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--workers", g.workers, "parallel files")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--data-dir", g.data_dir, "directory with the shipped tables")->capture_default_str();

  int code = kOk;

  // flatten
  auto* flatten = app.add_subcommand("flatten", "merge a multi-file project into one .ly");
  std::string ws_dir, header_name, macro_name, score_name, out;
  flatten->add_option("--workspace", ws_dir, "project directory")->required();
  flatten->add_option("--header", header_name, "header file, relative to the workspace")->required();
  flatten->add_option("--macro", macro_name, "macro file (default: discovered by name)");
  flatten->add_option("--score", score_name, "score file (default: discovered by name)");
  flatten->add_option("-o,--out", out, "output file (default stdout)");
  flatten->callback([&] {
    auto ws = syntax::Workspace::scan(ws_dir);
    auto names = syntax::discover_layout_names(ws, header_name, macro_name, score_name);
    if (!ws.files.count(names.header)) throw Error(Errc::Io, "header file '" + header_name + "' not found in " + ws_dir);
    auto layout = syntax::resolve_includes(read_file(ws.root / names.header), ws, names);
    auto res = syntax::flatten_project(layout);
    print_warnings(header_name, res.warnings);
    emit(out, res.text);
  });

  // prepare: flatten + convert-pitch + strip-headers over a directory of projects
  auto* prepare = app.add_subcommand("prepare", "flatten, convert pitch names and strip headers for every project");
  std::string projects_dir, prepared_dir;
  prepare->add_option("--projects", projects_dir, "directory with one sub-directory per project; header is <name>.ly")->required();
  prepare->add_option("-o,--out", prepared_dir, "output directory for <name>.ly files")->required();
  prepare->callback([&] {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(projects_dir))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw Error(Errc::EmptyCorpus, "no project directories in " + projects_dir);
    fs::create_directories(prepared_dir);
    for (const auto& d : dirs) {
      const auto name = d.filename().string();
      auto ws = syntax::Workspace::scan(d);
      auto names = syntax::discover_layout_names(ws, name + ".ly");
      auto layout = syntax::resolve_includes(read_file(d / names.header), ws, names);
      auto flat = syntax::flatten_project(layout);
      print_warnings(name, flat.warnings);
      write_file(fs::path(prepared_dir) / (name + ".ly"), syntax::strip_headers(pitchlang::convert_pitch_language(flat.text)));
    }
  });

  // convert-pitch / strip-headers
  std::string in;
  auto* convert = app.add_subcommand("convert-pitch", "rewrite italiano pitch names as nederlands");
  convert->add_option("-i,--in", in, "input .ly")->required();
  convert->add_option("-o,--out", out, "output file (default stdout)");
  convert->callback([&] { emit(out, pitchlang::convert_pitch_language(read_file(in))); });

  auto* strip = app.add_subcommand("strip-headers", "remove \\header blocks and comments");
  strip->add_option("-i,--in", in, "input .ly")->required();
  strip->add_option("-o,--out", out, "output file (default stdout)");
  strip->callback([&] { emit(out, syntax::strip_headers(read_file(in))); });

  // tokenize / chunk / mask
  VocabPaths vp;
  std::size_t chunk_size = tok::kDefaultChunkSize;
  double rate = tok::kDefaultMaskRate;

  auto* tokenize = app.add_subcommand("tokenize", "token ids per file as JSON lines");
  tokenize->add_option("-i,--in", in, ".ly file or directory")->required();
  tokenize->add_option("-o,--out", out, "output file (default stdout)");
  vp.add(tokenize);
  tokenize->callback([&] {
    auto v = vp.load(g);
    std::string text;
    for (const auto& f : inputs(in)) {
      auto doc = tok::tokenize(read_file(f), v);
      if (doc.ids.empty()) continue;
      ojson j;
      j["file_id"] = f.stem().string();
      j["ids"] = doc.ids;
      text += j.dump() + "\n";
    }
    emit(out, text);
  });

  auto* chunk = app.add_subcommand("chunk", "fixed-size CLS/SEP-wrapped chunks as JSON lines");
  chunk->add_option("-i,--in", in, ".ly file or directory")->required();
  chunk->add_option("-o,--out", out, "output file (default stdout)");
  chunk->add_option("--size", chunk_size, "ids per chunk including CLS and SEP")->capture_default_str();
  vp.add(chunk);
  chunk->callback([&] {
    auto v = vp.load(g);
    std::string text;
    for (const auto& f : inputs(in)) {
      auto chunks = chunk_file(f, v, chunk_size);
      for (std::size_t c = 0; c < chunks.size(); ++c) {
        ojson j;
        j["file_id"] = f.stem().string();
        j["chunk_index"] = c;
        j["content_len"] = chunks[c].content_len;
        j["input_ids"] = chunks[c].ids;
        text += j.dump() + "\n";
      }
    }
    emit(out, text);
  });

  auto* mask = app.add_subcommand("mask", "masked-language-model examples as JSON lines");
  mask->add_option("-i,--in", in, ".ly file or directory")->required();
  mask->add_option("-o,--out", out, "output file (default stdout)");
  mask->add_option("--size", chunk_size, "ids per chunk including CLS and SEP")->capture_default_str();
  mask->add_option("--rate", rate, "fraction of content positions selected")->capture_default_str();
  vp.add(mask);
  mask->callback([&] {
    auto v = vp.load(g);
    std::string text;
    for (const auto& f : inputs(in)) {
      const auto id = f.stem().string();
      auto chunks = chunk_file(f, v, chunk_size);
      for (std::size_t c = 0; c < chunks.size(); ++c) {
        auto ex = tok::sample_mlm_masks(chunks[c], v, rate, splitmix64(g.seed ^ fnv1a(id) ^ c));
        ojson j;
        j["file_id"] = id;
        j["chunk_index"] = c;
        j["input_ids"] = ex.input_ids;
        j["labels"] = ex.labels;
        text += j.dump() + "\n";
      }
    }
    emit(out, text);
  });

  // metadata / stats
  std::string corpus, rules_file, forms_file, taxonomy_file, tempo_file, dates_file;
  auto* meta = app.add_subcommand("metadata", "one JSON manifest per .ly file");
  meta->add_option("--corpus", corpus, ".ly file or directory")->required();
  meta->add_option("-o,--out", out, "manifest JSON lines (default stdout)");
  meta->add_option("--composer-rules", rules_file, "filename rules");
  meta->add_option("--forms", forms_file, "form names in priority order");
  meta->add_option("--taxonomy", taxonomy_file, "section-label taxonomy");
  meta->add_option("--tempo-table", tempo_file, "BPM category bounds");
  meta->add_option("--dates", dates_file, "CSV with work years and composer active years");
  meta->callback([&] {
    metadata::ExtractionConfig cfg;
    cfg.composer_rules = metadata::ComposerRules::parse(read_file(data_file(g, rules_file, "composer_rules.txt")));
    cfg.forms = metadata::parse_forms(read_file(data_file(g, forms_file, "forms.txt")));
    cfg.taxonomy = taxonomy::build_taxonomy(read_file(data_file(g, taxonomy_file, "taxonomy.txt")));
    cfg.tempo_table = taxonomy::TempoCategoryTable::parse(read_file(data_file(g, tempo_file, "tempo_categories.txt")));
    if (!dates_file.empty()) cfg.dates = metadata::DateSidecar::parse(read_file(dates_file));
    std::string text;
    for (const auto& f : inputs(corpus)) {
      auto r = metadata::extract_manifest(f.stem().string(), f.filename().string(), read_file(f), cfg);
      print_warnings(f.stem().string(), r.warnings);
      text += metadata::build_manifest(r.manifest, cfg.forms).dump() + "\n";
    }
    emit(out, text);
  });

  std::string manifests;
  auto* stats = app.add_subcommand("stats", "distribution tables over manifests");
  stats->add_option("--manifests", manifests, "manifest JSON lines")->required();
  stats->add_option("--forms", forms_file, "form names in priority order");
  stats->add_option("-o,--out", out, "output directory")->required();
  stats->callback([&] {
    auto forms = metadata::parse_forms(read_file(data_file(g, forms_file, "forms.txt")));
    std::vector<metadata::ScoreManifest> ms;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(read_file(manifests))) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        ms.push_back(metadata::manifest_from_json(ojson::parse(line), forms));
      } catch (const ojson::parse_error&) {
        throw Error(Errc::MalformedRecord, "manifest line " + std::to_string(lineno) + " is not JSON", lineno);
      }
    }
    auto st = metadata::corpus_stats(ms);
    fs::create_directories(out);
    for (const auto& t : st.tables) write_file(fs::path(out) / (t.attribute + ".csv"), metadata::stats_csv(t));
    write_file(fs::path(out) / "stats.json", metadata::stats_json(st).dump(2) + "\n");
    std::cout << st.n_files << " files, " << st.n_sections << " sections\n";
  });

  // validate
  std::string engraver;
  double timeout_s = 120;
  auto* validate = app.add_subcommand("validate", "compare parsed note counts with rendered noteheads");
  validate->add_option("--corpus", corpus, "directory of .ly files")->required();
  validate->add_option("--engraver", engraver, "engraver binary (fallback: $LILYPOND_BIN); without one, <stem>.ps files are read");
  validate->add_option("--timeout", timeout_s, "seconds per file")->capture_default_str();
  validate->add_option("-o,--out", out, "output directory for reports");
  validate->callback([&] {
    validate::ValidateOptions opt;
    if (engraver.empty())
      if (const char* env = std::getenv("LILYPOND_BIN"); env && *env) engraver = env;
    if (!engraver.empty()) opt.engraver = engraver;
    opt.compile.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
    if (!out.empty()) {
      fs::create_directories(out);
      opt.compile.output_dir = fs::path(out) / "compiled";
      fs::create_directories(opt.compile.output_dir);
    }
    auto res = validate::batch_validate(corpus, opt, g.workers);
    for (const auto& e : res.errors) std::cerr << "error: " << e << "\n";
    if (!out.empty()) {
      std::string lines;
      for (const auto& r : res.reports) lines += validate::report_json(r).dump() + "\n";
      write_file(fs::path(out) / "reports.jsonl", lines);
      write_file(fs::path(out) / "summary.csv", validate::summary_csv(res.reports));
      write_file(fs::path(out) / "summary.json", validate::summary_json(res.summary).dump(2) + "\n");
    }
    std::cout << validate::summary_json(res.summary).dump(2) << "\n";
    if (res.summary.n_rendered == 0) {
      code = kExternal;
    } else if (res.summary.n_rendered != res.summary.n_files || res.summary.perfect_ratio < 1.0) {
      code = kMismatch;
    }
  });

  // probe
  std::string embeddings, labels;
  probe::ProbeOptions popt;
  auto* probe_cmd = app.add_subcommand("probe", "cross-validated linear probes over pooled embeddings");
  probe_cmd->add_option("--embeddings", embeddings, "embedding JSON lines")->required();
  probe_cmd->add_option("--labels", labels, "CSV file_id,task,label")->required();
  probe_cmd->add_option("--layers", popt.layers, "layers to probe (default: all present)")->delimiter(',');
  probe_cmd->add_option("--k", popt.k, "folds")->capture_default_str();
  probe_cmd->add_option("--min-count", popt.min_count, "minimum samples per class")->capture_default_str();
  probe_cmd->add_option("--epochs", popt.train.epochs)->capture_default_str();
  probe_cmd->add_option("--step-size", popt.train.step_size)->capture_default_str();
  probe_cmd->add_option("--l2", popt.train.l2_penalty)->capture_default_str();
  probe_cmd->add_option("--model", popt.model, "model tag in the report")->capture_default_str();
  probe_cmd->add_option("-o,--out", out, "output directory")->required();
  probe_cmd->callback([&] {
    popt.seed = g.seed;
    popt.train.seed = g.seed;
    auto rep = probe::run_probe(probe::load_embeddings(embeddings), probe::load_labels(labels), popt);
    print_warnings("probe", rep.warnings);
    fs::create_directories(out);
    write_file(fs::path(out) / "report.csv", probe::report_csv(rep));
    write_file(fs::path(out) / "report.json", probe::report_json(rep, popt).dump(2) + "\n");
    auto table = probe::report_table(rep);
    write_file(fs::path(out) / "table.txt", table);
    write_file(fs::path(out) / "layers.txt", probe::layer_accuracy_table(rep));
    std::cout << table;
  });

  // embed-baseline
  std::size_t dim = 64;
  std::vector<int> layers = {3, 6, 9, 12};
  auto* embed = app.add_subcommand("embed-baseline", "histogram random-projection embeddings per chunk");
  embed->add_option("--corpus", corpus, ".ly file or directory")->required();
  embed->add_option("--dim", dim, "embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  embed->add_option("--layers", layers, "pseudo-layers to emit")->delimiter(',');
  embed->add_option("--size", chunk_size, "ids per chunk including CLS and SEP")->capture_default_str();
  embed->add_option("-o,--out", out, "embedding JSON lines (default stdout)");
  vp.add(embed);
  embed->callback([&] {
    auto v = vp.load(g);
    auto files = inputs(corpus);
    if (files.empty()) throw Error(Errc::EmptyCorpus, "no .ly files in " + corpus);
    std::string text;
    for (const auto& f : files)
      for (const auto& r : probe::baseline_embed(f.stem().string(), chunk_file(f, v, chunk_size), v.special(), dim, g.seed, layers))
        text += probe::to_jsonl(r) + "\n";
    emit(out, text);
  });

  // generate
  std::string kind = "scores";
  std::size_t n = 200, n_classes = 3;
  bool italiano = false;
  auto* generate = app.add_subcommand("generate", "synthetic fixtures with known ground truth");
  generate->add_option("kind", kind, "scores | corpus")->check(CLI::IsMember({"scores", "corpus"}))->capture_default_str();
  generate->add_option("--n", n, "number of files")->capture_default_str();
  generate->add_option("--classes", n_classes, "label classes (corpus)")->capture_default_str();
  generate->add_flag("--italiano", italiano, "write solmization pitch names (scores)");
  generate->add_option("-o,--out", out, "output directory")->required();
  generate->callback([&] {
    fs::create_directories(out);
    if (kind == "scores") {
      std::string truth = "file_id,notes,unused_variable_notes,incipit_notes\n";
      for (std::size_t i = 0; i < n; ++i) {
        synth::ScoreOptions o;
        o.italiano = italiano;
        auto s = synth::generate_score(splitmix64(g.seed + i), o);
        char id[32];
        std::snprintf(id, sizeof id, "score_%04zu", i);
        write_file(fs::path(out) / (std::string(id) + ".ly"), s.text);
        write_file(fs::path(out) / (std::string(id) + ".ps"), synth::synthetic_ps(s.expected_notes, g.seed ^ i));
        truth += std::string(id) + "," + std::to_string(s.expected_notes) + "," + std::to_string(s.unused_notes) + "," +
                 std::to_string(s.incipit_notes) + "\n";
      }
      write_file(fs::path(out) / "truth.csv", truth);
    } else {
      std::string csv = "file_id,task,label\n";
      for (std::size_t i = 0; i < n; ++i) {
        auto p = synth::generate_project(i, n_classes, g.seed);
        synth::write_project(p, fs::path(out) / "projects" / p.file_id);
        csv += p.file_id + ",composer," + p.label + "\n";
      }
      write_file(fs::path(out) / "labels.csv", csv);
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.code() == Errc::EngraverNotFound || e.code() == Errc::Timeout) ? kExternal : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return code;
}
