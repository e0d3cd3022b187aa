#include "kga_cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "kga/checkpoint_io.hpp"
#include "kga/error.hpp"
#include "kga_cli/config.hpp"
#include "kga_cli/pipeline.hpp"

namespace kga::cli {
namespace {

namespace fs = std::filesystem;

fs::path or_default(const fs::path& p, const fs::path& dir, const char* name) {
  return p.empty() ? dir / name : p;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void print_stats(std::ostream& out, const char* side, const KnowledgeGraph& g) {
  const auto s = graph_stats(g);
  std::size_t max_degree = s.degree_histogram.empty() ? 0 : s.degree_histogram.rbegin()->first;
  out << side << ": entities " << s.entities << ", relations " << s.relations << ", triplets "
      << s.triplets << ", max degree " << max_degree << '\n';
}

std::string report_line(const std::string& label, const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s\thits@1 %.4f\thits@10 %.4f\tmean_rank %.3f", label.c_str(),
                r.hits(1), r.hits(10), r.mean_rank);
  return buf;
}

const char* kLogHeader = "step\tdisc_loss\tmean_reward\tmi_estimate\tvalid_hits1\tvalid_mr\n";

EmbeddedPair load_tables(const RunConfig& c) {
  EmbeddedPair t{load_embeddings(or_default(c.source_embedding, c.out_dir, "source.emb")),
                 load_embeddings(or_default(c.target_embedding, c.out_dir, "target.emb"))};
  check_tables(t, c);
  return t;
}

// ---- subcommands ----------------------------------------------------------

int cmd_embed(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Dataset data = load_dataset(c, err, false);
  print_stats(out, "source", data.source);
  print_stats(out, "target", data.target);
  ensure_dir(c.out_dir);
  const auto tables = embed_pair(data, c);
  const auto src_path = or_default(c.source_embedding, c.out_dir, "source.emb");
  const auto tgt_path = or_default(c.target_embedding, c.out_dir, "target.emb");
  save_embeddings(tables.source, src_path);
  save_embeddings(tables.target, tgt_path);
  out << "wrote " << src_path.string() << " and " << tgt_path.string() << '\n';
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(c, err, false);
  const auto tables = load_tables(c);
  check_vocabulary(data, tables);
  ensure_dir(c.out_dir);
  write_text(c.out_dir / "run.conf", render_config(c));

  const auto ckpt_path = or_default(c.checkpoint, c.out_dir, "alignment.ckpt");
  const auto log_path = c.out_dir / "train.log";
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write '" + log_path.string() + "'");
  log << kLogHeader;

  const auto [train, validation] = train_validation(data, c);
  TrainConfig tc = c.train;
  tc.rng_seed = stage_seed(c, "train");
  const AlignmentTables view{tables.source, tables.target};
  const auto result = run_training(
      data.source, data.target, train, validation, view, tc,
      [&](const TrainLogRow& row) {
        log << format_log_row(row) << '\n';
        log.flush();
        out << format_log_row(row) << '\n';
      },
      [&](const Checkpoint& ckpt) { save_checkpoint(ckpt, ckpt_path); });
  out << "best step " << result.best.step << (result.stopped_early ? " (stopped early)" : "")
      << "; checkpoint " << ckpt_path.string() << '\n';
  return kOk;
}

int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(c, err, true);
  const auto tables = load_tables(c);
  check_vocabulary(data, tables);
  const auto ckpt =
      load_checkpoint(or_default(c.checkpoint, c.out_dir, "alignment.ckpt"), c.embed.dim);
  const AlignmentTables view{tables.source, tables.target};
  const std::vector<std::size_t> ks{1, 3, 10};
  const auto report = evaluate(ckpt.alignment, view, data.test, ks);
  std::vector<Index> sources;
  for (const auto& p : data.test) sources.push_back(p.source);
  const auto hist = collapse_histogram(ckpt.alignment, view, sources, c.top);

  ensure_dir(c.out_dir);
  write_report(report, c.out_dir / "report.tsv");
  emit_plot_data(report, c.out_dir / "hits.tsv");
  emit_plot_data(hist, c.out_dir / "collapse.tsv");
  out << report_line("eval", report) << '\n';
  out << "top-1 collapse count " << hist.top_count() << " of " << hist.n_sources << '\n';
  return kOk;
}

int cmd_synth(const RunConfig& c, std::ostream& out, std::ostream&) {
  const auto syn = synthesize_dataset(c);
  ensure_dir(c.out_dir);
  RunConfig manifest = c;
  manifest.source = c.out_dir / "source.tsv";
  manifest.target = c.out_dir / "target.tsv";
  manifest.seeds = c.out_dir / "seeds.tsv";
  manifest.test = c.out_dir / "test.tsv";
  write_triples(syn.data.source, manifest.source);
  write_triples(syn.data.target, manifest.target);
  write_ground_truth(syn.truth, syn.data.source, syn.data.target, c.out_dir / "truth.tsv");
  write_seed_pairs(syn.data.seeds, syn.data.source, syn.data.target, manifest.seeds);
  AlignmentSeeds test;
  test.entity_pairs = syn.data.test;
  write_seed_pairs(test, syn.data.source, syn.data.target, manifest.test);

  const auto shared = count_shared_triplets(syn.data.source, syn.data.target, syn.truth);
  write_text(c.out_dir / "manifest.conf",
             render_config(manifest) + "shared_triplets = " + std::to_string(shared) + "\n");
  print_stats(out, "source", syn.data.source);
  print_stats(out, "target", syn.data.target);
  out << "shared triplets " << shared << ", seed pairs " << syn.data.seeds.entity_pairs.size()
      << ", test pairs " << syn.data.test.size() << '\n';
  return kOk;
}

struct Variant {
  std::string label;
  std::function<void(RunConfig&)> apply;
};

int run_ablation(const RunConfig& c, const std::string& name, const std::vector<Variant>& variants,
                 bool reembed, std::ostream& out, std::ostream& err) {
  const Dataset data = load_dataset(c, err, true);
  ensure_dir(c.out_dir);
  std::string table = "variant\thits@1\thits@10\tmean_rank\ttop1_count\n";
  auto add_row = [&](const std::string& label, const EvalReport& r, std::size_t top1) {
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%.17g\t%.17g\t%zu\n", label.c_str(), r.hits(1),
                  r.hits(10), r.mean_rank, top1);
    table += buf;
    out << report_line(label, r) << '\n';
  };

  std::optional<EmbeddedPair> shared;
  if (!reembed) {
    shared = embed_pair(data, c);
    if (!data.seeds.entity_pairs.empty()) {
      const auto base = procrustes_baseline(data, *shared, c);
      add_row("procrustes", base, 0);
    }
  }
  for (const auto& v : variants) {
    RunConfig vc = c;
    v.apply(vc);
    const auto tables = reembed ? embed_pair(data, vc) : *shared;
    const auto res = run_pipeline(data, tables, vc);
    add_row(v.label, res.report, res.histogram.top_count());
  }
  write_text(c.out_dir / ("ablate_" + name + ".tsv"), table);
  return kOk;
}

int cmd_ablate_reward(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<Variant> vs;
  for (auto k : {RewardKind::LogX, RewardKind::LogXOverOneMinusX, RewardKind::XOverOneMinusX, RewardKind::X}) {
    vs.push_back({to_string(k), [k](RunConfig& r) { r.train.reward = k; }});
  }
  return run_ablation(c, "reward", vs, false, out, err);
}

int cmd_ablate_fake_mode(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<Variant> vs;
  for (auto m : {FakeSourceMode::Adversarial, FakeSourceMode::Random, FakeSourceMode::RandomPlusAdversarial}) {
    vs.push_back({to_string(m), [m](RunConfig& r) { r.train.fake_mode = m; }});
  }
  return run_ablation(c, "fake_mode", vs, false, out, err);
}

int cmd_ablate_embedding(const RunConfig& c, std::ostream& out, std::ostream& err) {
  std::vector<Variant> vs;
  for (auto k : {ModelKind::TransE, ModelKind::TransH, ModelKind::DistMult}) {
    vs.push_back({to_string(k), [k](RunConfig& r) { r.embed.kind = k; }});
  }
  return run_ablation(c, "embedding", vs, true, out, err);
}

using Command = int (*)(const RunConfig&, std::ostream&, std::ostream&);

struct CommandSpec {
  const char* name;
  const char* help;
  Command run;
};

constexpr CommandSpec kCommands[] = {
    {"embed", "Train entity/relation embeddings for both graphs", cmd_embed},
    {"train", "Pre-train and adversarially train the alignment functions", cmd_train},
    {"eval", "Rank test pairs under a checkpoint; write report and collapse histogram", cmd_eval},
    {"synth", "Generate a synthetic aligned graph pair with seed/test splits", cmd_synth},
    {"ablate-reward", "Compare the four reward functions against Procrustes", cmd_ablate_reward},
    {"ablate-fake-mode", "Compare adversarial, random, and mixed fake triplets", cmd_ablate_fake_mode},
    {"ablate-embedding", "Compare TransE, TransH, and DistMult embeddings", cmd_ablate_embedding},
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& ch : f) {
    if (ch == '_') ch = '-';
  }
  return "--" + f;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err, char** env) {
  CLI::App app{"Knowledge graph alignment: embeddings, adversarial training, evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  KeyValues flags;
  const CommandSpec* chosen = nullptr;

  for (const auto& spec : kCommands) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("-c,--config", config_path, "Config file of 'key = value' lines");
    for (const auto& key : config_keys()) {
      sub->add_option_function<std::string>(
          flag_name(key), [&flags, key](const std::string& v) { flags[key] = v; },
          "Overrides config key '" + key + "'");
    }
    sub->callback([&chosen, &spec] { chosen = &spec; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    const KeyValues file = config_path.empty() ? KeyValues{} : read_config_file(config_path);
    const KeyValues environment = env_overrides(env);
    const RunConfig config = build_config(merge({&file, &environment, &flags}));
    if (config.threads > 1) err << "note: computation runs on one thread regardless of --threads\n";
    return chosen->run(config, out, err);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace kga::cli
