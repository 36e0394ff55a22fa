#include "run_config.hpp"

#include <fstream>
#include <set>

#include "structmap/error.hpp"

namespace structmap::cli {
namespace {

using json = nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& prefix) {
  if (!obj.is_object())
    throw Error(ErrorCode::InvalidConfig,
                "config key '" + (prefix.empty() ? std::string("<root>") : prefix) +
                    "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key))
      throw Error(ErrorCode::InvalidConfig,
                  "unknown config key '" + (prefix.empty() ? key : prefix + "." + key) + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& into, const std::string& prefix) {
  if (!obj.contains(key)) return;
  try {
    into = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig,
                "config key '" + prefix + "." + key + "' has the wrong type: " + e.what());
  }
}

void merge_synth(SynthConfig& s, const json& j) {
  reject_unknown(j, {"n_groups", "variants_per_group", "sent_len", "dim_struct", "dim_lex",
                     "dim_out", "struct_scale", "lex_scale", "noise_scale", "n_dep_labels",
                     "n_struct_classes", "struct_jitter", "vocab_size", "lex_jitter",
                     "depth_modulus"},
                 "synth");
  const std::string p = "synth";
  read(j, "n_groups", s.n_groups, p);
  read(j, "variants_per_group", s.variants_per_group, p);
  read(j, "sent_len", s.sent_len, p);
  read(j, "dim_struct", s.dim_struct, p);
  read(j, "dim_lex", s.dim_lex, p);
  read(j, "dim_out", s.dim_out, p);
  read(j, "struct_scale", s.struct_scale, p);
  read(j, "lex_scale", s.lex_scale, p);
  read(j, "noise_scale", s.noise_scale, p);
  read(j, "n_dep_labels", s.n_dep_labels, p);
  read(j, "n_struct_classes", s.n_struct_classes, p);
  read(j, "struct_jitter", s.struct_jitter, p);
  read(j, "vocab_size", s.vocab_size, p);
  read(j, "lex_jitter", s.lex_jitter, p);
  read(j, "depth_modulus", s.depth_modulus, p);
}

void merge_train(TrainConfig& t, const json& j) {
  reject_unknown(j, {"epochs", "batch_size", "pairs_per_group", "symmetry", "out_dim", "lr",
                     "beta1", "beta2", "eps", "checkpoint_every", "log_every"},
                 "train");
  const std::string p = "train";
  read(j, "epochs", t.epochs, p);
  read(j, "batch_size", t.batch_size, p);
  read(j, "pairs_per_group", t.pairs_per_group, p);
  read(j, "symmetry", t.symmetry, p);
  read(j, "out_dim", t.out_dim, p);
  read(j, "lr", t.lr, p);
  read(j, "beta1", t.beta1, p);
  read(j, "beta2", t.beta2, p);
  read(j, "eps", t.eps, p);
  read(j, "checkpoint_every", t.checkpoint_every, p);
  read(j, "log_every", t.log_every, p);
}

void merge_eval(EvalConfig& e, const json& j) {
  reject_unknown(j, {"n_queries", "exclusion", "hard_top_pos", "kmeans_ks", "kmeans_iters",
                     "kmeans_tol", "kmeans_max_points", "probe_sizes"},
                 "eval");
  const std::string p = "eval";
  read(j, "n_queries", e.n_queries, p);
  if (j.contains("exclusion")) {
    std::string s;
    read(j, "exclusion", s, p);
    e.exclusion = parse_exclusion(s);
  }
  read(j, "hard_top_pos", e.hard_top_pos, p);
  read(j, "kmeans_ks", e.kmeans_ks, p);
  read(j, "kmeans_iters", e.kmeans_iters, p);
  read(j, "kmeans_tol", e.kmeans_tol, p);
  read(j, "kmeans_max_points", e.kmeans_max_points, p);
  read(j, "probe_sizes", e.probe_sizes, p);
}

}  // namespace

void RunConfig::apply_seed() {
  synth.seed = seed;
  train.seed = seed;
  eval.seed = seed;
}

void merge_config(RunConfig& cfg, const json& doc) {
  reject_unknown(doc, {"seed", "threads", "synth", "train", "eval", "paths"}, "");
  read(doc, "seed", cfg.seed, "");
  read(doc, "threads", cfg.threads, "");
  if (doc.contains("synth")) merge_synth(cfg.synth, doc.at("synth"));
  if (doc.contains("train")) merge_train(cfg.train, doc.at("train"));
  if (doc.contains("eval")) merge_eval(cfg.eval, doc.at("eval"));
  if (doc.contains("paths")) {
    const auto& p = doc.at("paths");
    reject_unknown(p, {"dataset", "model", "out"}, "paths");
    std::string s;
    if (p.contains("dataset")) { read(p, "dataset", s, "paths"); cfg.dataset = s; }
    if (p.contains("model")) { read(p, "model", s, "paths"); cfg.model = s; }
    if (p.contains("out")) { read(p, "out", s, "paths"); cfg.out = s; }
  }
}

void merge_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config " + path.string() + ": " + e.what());
  }
  merge_config(cfg, doc);
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  const auto& s = cfg.synth;
  j["synth"] = {{"n_groups", s.n_groups},
                {"variants_per_group", s.variants_per_group},
                {"sent_len", s.sent_len},
                {"dim_struct", s.dim_struct},
                {"dim_lex", s.dim_lex},
                {"dim_out", s.dim_out},
                {"struct_scale", s.struct_scale},
                {"lex_scale", s.lex_scale},
                {"noise_scale", s.noise_scale},
                {"n_dep_labels", s.n_dep_labels},
                {"n_struct_classes", s.n_struct_classes},
                {"struct_jitter", s.struct_jitter},
                {"vocab_size", s.vocab_size},
                {"lex_jitter", s.lex_jitter},
                {"depth_modulus", s.depth_modulus}};
  const auto& t = cfg.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"pairs_per_group", t.pairs_per_group},
                {"symmetry", t.symmetry},
                {"out_dim", t.out_dim},
                {"lr", t.lr},
                {"beta1", t.beta1},
                {"beta2", t.beta2},
                {"eps", t.eps},
                {"checkpoint_every", t.checkpoint_every},
                {"log_every", t.log_every}};
  const auto& e = cfg.eval;
  j["eval"] = {{"n_queries", e.n_queries},
               {"exclusion", to_string(e.exclusion)},
               {"hard_top_pos", e.hard_top_pos},
               {"kmeans_ks", e.kmeans_ks},
               {"kmeans_iters", e.kmeans_iters},
               {"kmeans_tol", e.kmeans_tol},
               {"kmeans_max_points", e.kmeans_max_points},
               {"probe_sizes", e.probe_sizes}};
  j["paths"] = {{"dataset", cfg.dataset.string()},
                {"model", cfg.model.string()},
                {"out", cfg.out.string()}};
  return j;
}

}  // namespace structmap::cli
