// Copyright 2026 The gcomm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// gcomm: train, evaluate and inspect speaker/listener runs.
//
// Exit codes: 0 success, 1 bad arguments or config, 2 runtime failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gcomm/env/record.hpp"
#include "gcomm/env/render.hpp"
#include "gcomm/error.hpp"
#include "gcomm/trainer/config.hpp"
#include "gcomm/trainer/report.hpp"
#include "gcomm/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace gcomm;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

// Config flags shared by train and eval. Each flag becomes an override so
// that the schema check in config_from_json sees everything.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::uint64_t> seeds;
  std::string split, channel, listener, intrinsic;
  bool oracle = false;
  std::optional<std::size_t> episodes;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override as dotted.key=value (repeatable)");
    app->add_option("--seed", seeds, "Seed; repeat for several runs");
    app->add_option("--split", split, "none, visual or numeral")
        ->check(CLI::IsMember({"none", "visual", "numeral"}));
    app->add_option("--channel", channel, "learned, perfect, random or fixed")
        ->check(CLI::IsMember({"learned", "perfect", "random", "fixed"}));
    app->add_option("--listener", listener, "hierarchical or single")
        ->check(CLI::IsMember({"hierarchical", "single"}));
    app->add_option("--intrinsic", intrinsic, "both, coverage, influence or none")
        ->check(CLI::IsMember({"both", "coverage", "influence", "none"}));
    app->add_flag("--oracle-listener", oracle, "Give the listener the target cell");
    app->add_option("--episodes", episodes, "Training episodes");
  }

  /// Base tree, then --set overrides, then the dedicated flags.
  nlohmann::json tree(nlohmann::json base) const {
    if (!config_path.empty()) {
      nlohmann::json file = read_json_file(config_path);
      base.merge_patch(file);
    }
    for (const auto& s : sets) apply_override(base, s);
    if (!split.empty()) apply_override(base, "split=" + split);
    if (!channel.empty()) {
      apply_override(base, "channel.kind=" + channel);
      // The identity channel needs room for every concept bit.
      if (channel == "perfect") {
        const auto d_m = base["channel"]["d_m"].get<std::size_t>();
        const std::size_t need = (ConceptVector::kWidth + d_m - 1) / d_m;
        if (base["channel"]["n_m"].get<std::size_t>() < need) {
          apply_override(base, "channel.n_m=" + std::to_string(need));
        }
      }
    }
    if (!listener.empty()) apply_override(base, "listener.mode=" + listener);
    if (!intrinsic.empty()) {
      const bool cov = intrinsic == "both" || intrinsic == "coverage";
      const bool inf = intrinsic == "both" || intrinsic == "influence";
      apply_override(base, std::string("intrinsic.coverage=") + (cov ? "true" : "false"));
      apply_override(base, std::string("intrinsic.influence=") + (inf ? "true" : "false"));
    }
    if (oracle) apply_override(base, "listener.oracle=true");
    if (episodes) apply_override(base, "episodes=" + std::to_string(*episodes));
    if (seeds.size() == 1) apply_override(base, "seed=" + std::to_string(seeds.front()));
    return base;
  }
};

void print_row(const MetricRow& r) {
  if (!r.metric.starts_with("eval_") && r.metric != "zero_shot") return;
  std::fprintf(stderr, "[%s seed %llu] %8zu %-14s %.4f\n", r.run.c_str(),
               static_cast<unsigned long long>(r.seed), r.episode, r.metric.c_str(), r.value);
}

int cmd_train(const ConfigFlags& flags, const std::string& out, bool quiet) {
  RunConfig cfg = config_from_json(flags.tree(to_json(RunConfig{})));
  const ProgressFn progress = quiet ? ProgressFn{} : ProgressFn(print_row);
  nlohmann::json summaries = nlohmann::json::array();
  if (flags.seeds.size() > 1) {
    for (const auto& s : train_seeds(cfg, flags.seeds, out, progress)) {
      summaries.push_back(s.to_json());
    }
  } else {
    summaries.push_back(train(cfg, out, progress).summary.to_json());
  }
  std::cout << (summaries.size() == 1 ? summaries.front() : summaries).dump(2) << '\n';
  return 0;
}

int cmd_eval(const ConfigFlags& flags, const std::string& run, std::string checkpoint,
             std::size_t per_task, bool zero_shot, const std::string& out) {
  nlohmann::json base = to_json(RunConfig{});
  if (!run.empty()) {
    base.merge_patch(read_json_file((fs::path(run) / "config.json").string()));
    if (checkpoint.empty()) checkpoint = (fs::path(run) / "checkpoint.bin").string();
  }
  if (checkpoint.empty()) throw Error(ErrorCode::kConfig, "eval needs --run or --checkpoint");
  const RunConfig cfg = config_from_json(flags.tree(base));
  Agents agents(cfg);
  agents.load(checkpoint);

  EvalResult res;
  if (zero_shot) {
    if (cfg.split == SplitMode::kNone) {
      throw Error(ErrorCode::kConfig, "zero-shot evaluation needs a split");
    }
    res = evaluate(agents, zero_shot_tasks(cfg), test_filter(cfg.split), per_task,
                   kZeroShotBase, true);
  } else {
    res = evaluate(agents, cfg.tasks, train_filter(cfg.split), per_task, kValidationBase, true);
  }
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j{{"version", kVersion},
                   {"episodes", res.episodes},
                   {"mean_reward", res.mean_reward},
                   {"success_rate", res.success_rate},
                   {"topsim", opt(res.topsim)},
                   {"ci", opt(res.ci)},
                   {"cic", opt(res.cic)},
                   {"failed_attention_on_target", opt(failed_attention_on_target(res.records))}};
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + out);
    for (const auto& r : res.records) {
      nlohmann::json rj = to_json(r);
      rj["phase"] = zero_shot ? "zero_shot" : "eval";
      f << rj.dump() << '\n';
    }
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

std::vector<std::size_t> pick(const std::vector<EpisodeRecord>& records,
                              const std::vector<std::size_t>& indices, bool failed_only) {
  std::vector<std::size_t> out;
  if (!indices.empty()) {
    for (std::size_t i : indices) {
      if (i >= records.size()) {
        throw Error(ErrorCode::kInvalidArgument, "record index " + std::to_string(i) +
                                                     " out of range");
      }
      out.push_back(i);
    }
    return out;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!failed_only || !records[i].success) out.push_back(i);
  }
  return out;
}

int cmd_render(const std::string& file, const std::vector<std::size_t>& indices,
               std::optional<int> max_steps, bool mark_target) {
  const auto records = read_records(file);
  if (!max_steps) {
    // Take the step limit from the run that wrote the log, when there is one.
    const fs::path cfg = fs::path(file).parent_path() / "config.json";
    max_steps = fs::exists(cfg) ? config_from_json(read_json_file(cfg.string())).env.max_steps
                                : EnvConfig{}.max_steps;
  }
  RenderOptions opt;
  opt.mark_target = mark_target;
  for (std::size_t i : pick(records, indices, false)) {
    const auto& r = records[i];
    std::cout << "== record " << i << " (episode " << r.episode << ", " << r.frames.size()
              << " frames)\n";
    const auto frames = render_episode(r, *max_steps, opt);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      std::cout << "-- frame " << t << '\n' << frames[t];
    }
  }
  return 0;
}

int cmd_attention(const std::string& file, const std::vector<std::size_t>& indices,
                  bool failed_only) {
  const auto records = read_records(file);
  for (std::size_t i : pick(records, indices, failed_only)) {
    std::cout << "== record " << i << '\n' << attention_table(records[i]);
  }
  const auto stat = failed_attention_on_target(records);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.success ? 0 : 1;
  std::cout << "failed episodes: " << failed << "\nfailed with attention argmax on target: ";
  if (stat) {
    std::printf("%.4f\n", *stat);
  } else {
    std::cout << "n/a\n";
  }
  return 0;
}

int cmd_metrics(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<fs::path> roots(dirs.begin(), dirs.end());
  const MetricsExport e = export_metrics(roots);
  write_export(e, out);
  std::cout << "rows " << e.tidy.size() << ", aggregate rows " << e.aggregate.size()
            << ", scatter points " << e.scatter.size() << '\n';
  std::cout << "pearson(topsim, zero_shot): ";
  if (e.scatter_r) {
    std::printf("%.6f\n", *e.scatter_r);
  } else {
    std::cout << "n/a\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gcomm: emergent communication in a grid world"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ConfigFlags train_flags, eval_flags;
  std::string train_out;
  bool quiet = false;
  auto* train_cmd = app.add_subcommand("train", "Train a speaker and listener");
  train_flags.attach(train_cmd);
  train_cmd->add_option("--out", train_out, "Run directory (omit to keep results in memory)");
  train_cmd->add_flag("--quiet", quiet, "No progress on stderr");

  std::string eval_run, eval_ckpt, eval_out;
  std::size_t eval_n = 500;
  bool zero_shot = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--run", eval_run, "Run directory with config.json and checkpoint.bin");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  eval_cmd->add_option("-n,--eval-episodes", eval_n, "Episodes per task")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--zero-shot", zero_shot, "Evaluate on the held-out side of the split");
  eval_cmd->add_option("--out", eval_out, "Write evaluation episodes as JSON lines");

  std::string render_file;
  std::vector<std::size_t> render_idx;
  std::optional<int> max_steps;
  bool mark_target = false;
  auto* render_cmd = app.add_subcommand("render", "ASCII replay of logged episodes");
  render_cmd->add_option("episodes", render_file, "episodes.jsonl")->required();
  render_cmd->add_option("--index", render_idx, "Record index (repeatable; default all)");
  render_cmd->add_option("--max-steps", max_steps,
                         "Step limit for the countdown (default: the run config)");
  render_cmd->add_flag("--mark-target", mark_target, "Debug: mark the target with '*'");

  std::string attn_file;
  std::vector<std::size_t> attn_idx;
  bool failed_only = false;
  auto* attn_cmd =
      app.add_subcommand("inspect-attention", "Attention tables for logged episodes");
  attn_cmd->add_option("episodes", attn_file, "episodes.jsonl")->required();
  attn_cmd->add_option("--index", attn_idx, "Record index (repeatable; default all)");
  attn_cmd->add_flag("--failed-only", failed_only, "Only episodes without reward");

  std::vector<std::string> metric_dirs;
  std::string metric_out;
  auto* metrics_cmd = app.add_subcommand("metrics", "Export plot-ready CSVs from run dirs");
  metrics_cmd->add_option("runs", metric_dirs, "Run directories")->required();
  metrics_cmd->add_option("--out", metric_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train_flags, train_out, quiet);
    if (*eval_cmd) return cmd_eval(eval_flags, eval_run, eval_ckpt, eval_n, zero_shot, eval_out);
    if (*render_cmd) return cmd_render(render_file, render_idx, max_steps, mark_target);
    if (*attn_cmd) return cmd_attention(attn_file, attn_idx, failed_only);
    if (*metrics_cmd) return cmd_metrics(metric_dirs, metric_out);
  } catch (const Error& e) {
    std::cerr << "gcomm: " << e.what() << '\n';
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "gcomm: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
