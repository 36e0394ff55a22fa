#include "cli.hpp"

#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "run_config.hpp"
#include "structmap/error.hpp"
#include "structmap/parallel.hpp"
#include "structmap/sampler.hpp"
#include "structmap/structeval.hpp"
#include "structmap/sylinear.hpp"
#include "structmap/synthgen.hpp"
#include "structmap/trainer.hpp"
#include "structmap/vecstore.hpp"

namespace structmap::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Raw flag values; CLI11 tells us which were actually given.
struct Flags {
  std::string config;
  std::string out;
  std::string dataset;
  std::string model;
  std::string projection;
  std::uint64_t seed = 0;
  int queries = 0;
  std::string exclusion;
  int hard = 0;
  std::vector<int> purity;
  std::vector<int> probe_sizes;
  bool baseline = false;
  bool dump = false;
  bool probe = false;
  std::size_t threads = 0;
};

struct Options {
  CLI::Option* config = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* dataset = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* queries = nullptr;
  CLI::Option* exclusion = nullptr;
  CLI::Option* hard = nullptr;
  CLI::Option* purity = nullptr;
  CLI::Option* probe_sizes = nullptr;
  CLI::Option* threads = nullptr;
};

struct Command {
  CLI::App* app = nullptr;
  Options opts;
};

Command add_command(CLI::App& root, const std::string& name, const std::string& help, Flags& f,
                    bool needs_dataset, bool needs_model, bool eval_flags) {
  Command c;
  c.app = root.add_subcommand(name, help);
  c.opts.config = c.app->add_option("--config", f.config, "JSON config file");
  c.opts.out = c.app->add_option("--out", f.out, "Output directory");
  c.opts.seed = c.app->add_option("--seed", f.seed, "Global seed");
  c.opts.threads = c.app->add_option("--threads", f.threads, "Worker thread cap (default: all cores)");
  if (needs_dataset) c.opts.dataset = c.app->add_option("--dataset", f.dataset, "Dataset directory");
  if (needs_model) c.opts.model = c.app->add_option("--model", f.model, "SMAP model file");
  if (eval_flags) {
    c.opts.queries = c.app->add_option("--queries", f.queries, "Number of closest-word queries");
    c.opts.exclusion = c.app->add_option("--exclusion", f.exclusion, "Candidate exclusion rule")
                           ->check(CLI::IsMember({"self", "sentence", "group"}));
    c.opts.hard = c.app->add_option("--hard", f.hard, "Restrict queries to the N highest-entropy POS tags");
    c.app->add_flag("--baseline", f.baseline, "Evaluate raw vectors (ignore --model)");
  }
  return c;
}

RunConfig resolve(const Command& c, const Flags& f) {
  RunConfig cfg;
  if (c.opts.config->count()) merge_config_file(cfg, f.config);
  if (c.opts.seed->count()) cfg.seed = f.seed;
  cfg.apply_seed();
  if (c.opts.threads->count()) cfg.threads = f.threads;
  if (c.opts.out->count()) cfg.out = f.out;
  if (c.opts.dataset && c.opts.dataset->count()) cfg.dataset = f.dataset;
  if (c.opts.model && c.opts.model->count()) cfg.model = f.model;
  if (c.opts.queries && c.opts.queries->count()) cfg.eval.n_queries = f.queries;
  if (c.opts.exclusion && c.opts.exclusion->count()) cfg.eval.exclusion = parse_exclusion(f.exclusion);
  if (c.opts.hard && c.opts.hard->count()) cfg.eval.hard_top_pos = f.hard;
  if (c.opts.purity && c.opts.purity->count()) cfg.eval.kmeans_ks = f.purity;
  if (c.opts.probe_sizes && c.opts.probe_sizes->count()) cfg.eval.probe_sizes = f.probe_sizes;
  if (cfg.out.empty()) throw Error(ErrorCode::InvalidConfig, "an output directory is required (--out)");
  set_num_threads(cfg.threads);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out.flush()) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void write_manifest(const RunConfig& cfg, const std::string& command,
                    const std::vector<fs::path>& outputs, const ordered_json& extra = {}) {
  ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  std::vector<std::string> names;
  for (const auto& p : outputs) names.push_back(p.filename().string());
  j["outputs"] = names;
  if (!extra.is_null()) j["result"] = extra;
  write_text(cfg.out / "manifest.json", j.dump(2));
}

Dataset require_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw Error(ErrorCode::InvalidConfig, "a dataset is required (--dataset)");
  return load_dataset(cfg.dataset);
}

std::optional<LinearMap> resolve_transform(const RunConfig& cfg, bool baseline) {
  if (baseline) return std::nullopt;
  if (cfg.model.empty())
    throw Error(ErrorCode::InvalidConfig, "a model is required (--model) unless --baseline is given");
  return read_map(cfg.model);
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto d = generate_synthetic(cfg.synth);
  fs::create_directories(cfg.out);
  write_dataset(d, cfg.out);
  const auto paths = dataset_paths(cfg.out);
  write_manifest(cfg, "synth", {paths.vectors, paths.meta},
                 {{"tokens", d.tokens.size()}, {"groups", d.groups.size()}, {"dim", d.store.dim}});
  out << "wrote " << d.tokens.size() << " tokens in " << d.groups.size() << " groups to "
      << cfg.out.string() << '\n';
  return 0;
}

int cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  const auto d = require_dataset(cfg);
  const auto violations = validate(d);
  fs::create_directories(cfg.out);
  ordered_json report = ordered_json::array();
  for (const auto& v : violations) report.push_back({{"record", v.record}, {"message", v.message}});
  write_text(cfg.out / "violations.json", report.dump(2));
  write_dataset(d, cfg.out);
  const auto paths = dataset_paths(cfg.out);
  write_manifest(cfg, "ingest", {paths.vectors, paths.meta, cfg.out / "violations.json"},
                 {{"tokens", d.tokens.size()}, {"groups", d.groups.size()},
                  {"violations", violations.size()}});
  out << "ingested " << d.tokens.size() << " tokens, " << violations.size() << " violation(s)\n";
  return 0;
}

int cmd_sample_pairs(const RunConfig& cfg, std::ostream& out) {
  const auto d = require_dataset(cfg);
  const auto pairs = sample_pairs(d, cfg.train.pairs_per_group, cfg.seed);
  fs::create_directories(cfg.out);
  std::string text;
  for (const auto& p : pairs) {
    ordered_json j;
    j["group_id"] = p.group_id;
    j["anchor_sent"] = p.anchor_sent;
    j["positive_sent"] = p.positive_sent;
    j["i1"] = p.i1;
    j["i2"] = p.i2;
    text += j.dump() + '\n';
  }
  write_text(cfg.out / "pairs.jsonl", text);
  write_manifest(cfg, "sample-pairs", {cfg.out / "pairs.jsonl"}, {{"pairs", pairs.size()}});
  out << "sampled " << pairs.size() << " pairs\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto d = require_dataset(cfg);
  TrainConfig tc = cfg.train;
  tc.out_dir = cfg.out;
  const auto [f, report] = train(d, tc, [&](const BatchEvent& e) {
    err << "epoch " << e.epoch << " batch " << e.batch << " loss " << e.loss << '\n';
  });
  std::vector<fs::path> outputs = {report.final_map_path, cfg.out / "run_manifest.json"};
  if (tc.checkpoint_every > 0)
    for (int e = tc.checkpoint_every; e <= tc.epochs; e += tc.checkpoint_every)
      outputs.push_back(checkpoint_path(cfg.out, e));
  write_manifest(cfg, "train", outputs,
                 {{"epoch_loss", report.epoch_loss}, {"skipped_entries", report.skipped},
                  {"n_pairs", report.n_pairs}, {"wall_seconds", report.wall_seconds}});
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
    out << "epoch " << e + 1 << " mean loss " << report.epoch_loss[e] << '\n';
  out << "wrote " << report.final_map_path.string() << '\n';
  return 0;
}

struct EvalParts {
  bool nn = false;
  bool purity = false;
  bool probe = false;
};

int cmd_eval(const RunConfig& cfg, const Flags& f, EvalParts parts, const std::string& name,
             std::ostream& out) {
  const auto d = require_dataset(cfg);
  EvalConfig ec = cfg.eval;
  ec.transform = resolve_transform(cfg, f.baseline);
  fs::create_directories(cfg.out);

  std::vector<fs::path> outputs;
  EvalReport report;
  if (parts.nn) {
    std::vector<NNQuery> queries;
    report = nn_agreement(d, ec, f.dump ? &queries : nullptr);
    if (f.dump) {
      write_nn_dump(cfg.out / "nn_dump.jsonl", d, queries);
      outputs.push_back(cfg.out / "nn_dump.jsonl");
    }
  }
  report.transformed = ec.transform.has_value();
  report.exclusion = ec.exclusion;
  report.seed = ec.seed;
  if (parts.purity) {
    std::optional<VectorStore> projection;
    if (!f.projection.empty()) projection = read_vectors(f.projection);
    report.purity = kmeans_purity(d, ec, projection ? &*projection : nullptr);
  }
  if (parts.probe) {
    const auto probe = probe_fewshot(d, ec.transform, ec.probe_sizes, ec.seed);
    report.probe = probe.accuracy;
    report.probe_majority = probe.majority;
  }
  const auto report_path = cfg.out / "eval_report.json";
  write_text(report_path, report.to_json());
  outputs.insert(outputs.begin(), report_path);
  write_manifest(cfg, name, outputs, ordered_json::parse(report.to_json()));
  out << report.to_json() << '\n';
  return 0;
}

int cmd_export(const RunConfig& cfg, const Flags& f, std::ostream& out) {
  const auto d = require_dataset(cfg);
  const auto transform = resolve_transform(cfg, f.baseline);
  const auto rep = represent(d, transform);
  fs::create_directories(cfg.out);

  VectorStore vs;
  vs.dim = static_cast<std::uint32_t>(rep.vectors.cols());
  vs.data.resize(static_cast<std::size_t>(rep.vectors.size()));
  for (Eigen::Index r = 0; r < rep.vectors.rows(); ++r)
    for (Eigen::Index c = 0; c < rep.vectors.cols(); ++c)
      vs.data[static_cast<std::size_t>(r * rep.vectors.cols() + c)] =
          static_cast<float>(rep.vectors(r, c));
  write_vectors(vs, cfg.out / "representations.svec");

  std::string text;
  for (std::size_t k = 0; k < rep.token_index.size(); ++k) {
    const auto& t = d.tokens[rep.token_index[k]];
    ordered_json j;
    j["index"] = k;
    j["row"] = t.row;
    j["group_id"] = t.group_id;
    j["sent_id"] = t.sent_id;
    j["tok_idx"] = t.tok_idx;
    j["form"] = t.form;
    j["lex_id"] = t.lex_id;
    j["pos"] = t.pos;
    j["dep"] = t.dep;
    j["head_dep"] = t.head_dep;
    j["depth"] = t.depth;
    text += j.dump() + '\n';
  }
  write_text(cfg.out / "labels.jsonl", text);
  write_manifest(cfg, "export", {cfg.out / "representations.svec", cfg.out / "labels.jsonl"},
                 {{"rows", rep.token_index.size()}, {"dim", vs.dim}, {"transformed", transform.has_value()}});
  out << "exported " << rep.token_index.size() << " content tokens\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"structmap: learn and evaluate structural transformations of word vectors"};
  app.require_subcommand(1);
  Flags f;

  auto synth = add_command(app, "synth", "Generate a synthetic equivalence-set dataset", f, false, false, false);
  auto ingest = add_command(app, "ingest", "Validate a dataset and write a canonical copy", f, true, false, false);
  auto pairs = add_command(app, "sample-pairs", "Sample training word pairs", f, true, false, false);
  auto trn = add_command(app, "train", "Train the structural linear map", f, true, false, false);
  auto eval = add_command(app, "eval", "Closest-word agreement (plus optional purity/probe)", f, true, true, true);
  auto eval_nn = add_command(app, "eval-nn", "Closest-word agreement", f, true, true, true);
  auto eval_purity = add_command(app, "eval-purity", "K-means cluster purity", f, true, true, true);
  auto probe = add_command(app, "probe", "Few-shot dependency-label probe", f, true, true, true);
  auto exp = add_command(app, "export", "Dump per-token representations and labels", f, true, true, true);

  for (auto* c : {&eval, &eval_purity}) {
    c->opts.purity = c->app->add_option("--purity", f.purity, "Comma-separated K list")->delimiter(',');
  }
  eval_purity.app->add_option("--projection", f.projection, "SVEC file of externally projected vectors (rows aligned with the dataset)");
  for (auto* c : {&eval, &probe}) {
    c->opts.probe_sizes = c->app->add_option("--probe-sizes", f.probe_sizes, "Comma-separated training sizes")->delimiter(',');
  }
  eval.app->add_flag("--probe", f.probe, "Also run the few-shot probe");
  eval.app->add_flag("--dump", f.dump, "Write per-query nn_dump.jsonl");
  eval_nn.app->add_flag("--dump", f.dump, "Write per-query nn_dump.jsonl");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth.app->parsed()) return cmd_synth(resolve(synth, f), out);
    if (ingest.app->parsed()) return cmd_ingest(resolve(ingest, f), out);
    if (pairs.app->parsed()) return cmd_sample_pairs(resolve(pairs, f), out);
    if (trn.app->parsed()) return cmd_train(resolve(trn, f), out, err);
    if (eval.app->parsed())
      return cmd_eval(resolve(eval, f), f,
                      {true, eval.opts.purity->count() > 0, f.probe}, "eval", out);
    if (eval_nn.app->parsed()) return cmd_eval(resolve(eval_nn, f), f, {true, false, false}, "eval-nn", out);
    if (eval_purity.app->parsed())
      return cmd_eval(resolve(eval_purity, f), f, {false, true, false}, "eval-purity", out);
    if (probe.app->parsed()) return cmd_eval(resolve(probe, f), f, {false, false, true}, "probe", out);
    if (exp.app->parsed()) return cmd_export(resolve(exp, f), f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace structmap::cli
