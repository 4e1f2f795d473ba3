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

#pragma once

// REINFORCE training of speaker and listener with shaped rewards, LP task
// sampling, periodic evaluation and run-directory output.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gcomm/agents/listener.hpp"
#include "gcomm/agents/speaker.hpp"
#include "gcomm/env/env.hpp"
#include "gcomm/env/record.hpp"
#include "gcomm/error.hpp"
#include "gcomm/intrinsic/coverage.hpp"
#include "gcomm/intrinsic/influence.hpp"
#include "gcomm/metrics/metrics.hpp"
#include "gcomm/nn/adam.hpp"
#include "gcomm/nn/checkpoint.hpp"
#include "gcomm/nn/params.hpp"
#include "gcomm/nn/tape.hpp"
#include "gcomm/trainer/config.hpp"
#include "gcomm/trainer/lp.hpp"

namespace gcomm {

/// Everything one run owns: speaker, listener, discriminator, optimizers and
/// the discriminator's buffer. `model` separates throwaway models (LP init)
/// from the main one under the same seed.
class Agents {
 public:
  explicit Agents(const RunConfig& cfg, std::uint64_t model = 0)
      : cfg_(cfg),
        speaker_init_(make_rng(cfg.seed, Stream::kInit, model * 3)),
        listener_init_(make_rng(cfg.seed, Stream::kInit, model * 3 + 1)),
        disc_init_(make_rng(cfg.seed, Stream::kInit, model * 3 + 2)),
        speaker_(params_, cfg.channel, cfg.speaker_hidden, speaker_init_),
        listener_(params_, cfg.listener_config(), listener_init_),
        disc_(params_, cfg.channel.width(), cfg.intrinsic.disc_hidden, disc_init_),
        buffer_(cfg.intrinsic.buffer_capacity) {
    std::vector<nn::Parameter*> agent_params = params_.with_prefix("speaker.");
    for (nn::Parameter* p : params_.with_prefix("listener.")) agent_params.push_back(p);
    opt_ = nn::Adam(std::move(agent_params), {.lr = cfg.lr});
    disc_opt_ = nn::Adam(disc_.parameters(), {.lr = cfg.intrinsic.disc_lr});
  }

  Agents(const Agents&) = delete;
  Agents& operator=(const Agents&) = delete;

  const RunConfig& config() const { return cfg_; }
  nn::ParamSet& params() { return params_; }
  const nn::ParamSet& params() const { return params_; }
  const Speaker& speaker() const { return speaker_; }
  const Listener& listener() const { return listener_; }
  const Discriminator& discriminator() const { return disc_; }
  nn::Adam& optimizer() { return opt_; }
  nn::Adam& disc_optimizer() { return disc_opt_; }
  DiscBuffer& buffer() { return buffer_; }
  const DiscBuffer& buffer() const { return buffer_; }
  double& baseline() { return baseline_; }

  nn::NamedOptimizers optimizers() { return {{"agents", &opt_}, {"disc", &disc_opt_}}; }

  void save(const std::string& path) { nn::save_checkpoint(path, params_, optimizers()); }
  void load(const std::string& path) { nn::load_checkpoint(path, params_, optimizers()); }

 private:
  RunConfig cfg_;
  nn::ParamSet params_;
  Rng speaker_init_, listener_init_, disc_init_;
  Speaker speaker_;
  Listener listener_;
  Discriminator disc_;
  nn::Adam opt_, disc_opt_;
  DiscBuffer buffer_;
  double baseline_ = 0.0;
};

/// Independent generator streams of one training loop.
struct Streams {
  Rng env, speaker, listener, pseudo, disc, task;

  explicit Streams(std::uint64_t seed, std::uint64_t model = 0)
      : env(make_rng(seed, Stream::kEnv, model)),
        speaker(make_rng(seed, Stream::kSpeaker, model)),
        listener(make_rng(seed, Stream::kListener, model)),
        pseudo(make_rng(seed, Stream::kPseudo, model)),
        disc(make_rng(seed, Stream::kDisc, model)),
        task(make_rng(seed, Stream::kTask, model)) {}
};

/// G_t = sum_{t' >= t} gamma^{t'-t} r_t'.
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

/// Alphabet size of the symbols a channel reports.
inline std::size_t symbol_alphabet(const ChannelConfig& c) {
  switch (c.kind) {
    case ChannelKind::kLearnedBinary:
    case ChannelKind::kPerfect:
      return std::size_t{1} << c.d_m;
    default:
      return c.d_m;
  }
}

inline std::uint64_t bundle_id(const std::vector<std::size_t>& symbols, std::size_t alphabet) {
  std::uint64_t id = 0;
  for (std::size_t s : symbols) id = id * alphabet + s;
  return id;
}

struct EpisodeOutcome {
  EpisodeRecord record;
  double env_return = 0.0;
  double influence = 0.0;  // summed over steps, before lambda3
  double coverage = 0.0;   // lambda1 (lambda2 - L), 0 when disabled
  double loss = 0.0;
};

/// Plays one training episode and applies one optimizer step to speaker and
/// listener. The discriminator is untouched here.
inline EpisodeOutcome train_episode(Agents& agents, Task task, Split split, Streams& rng,
                                    nn::Tape& tape) {
  const RunConfig& cfg = agents.config();
  const Listener& listener = agents.listener();
  const bool hierarchical = cfg.listener_mode == ListenerMode::kHierarchical;

  Episode ep = reset(cfg.env, task, split, rng.env);
  EpisodeOutcome out;
  out.record = begin_record(ep, cfg.seed, split);

  tape.clear();
  MessageBundle msg = agents.speaker().speak(tape, ep.concept_vector, nn::Mode::kTrain,
                                              rng.speaker);
  for (std::size_t s : msg.symbols) out.record.message.push_back(static_cast<int>(s));

  Master sub = Master::kA;
  nn::Var master_logp;
  if (hierarchical) {
    nn::Var lp = listener.master_log_probs(tape, msg.var);
    nn::Tensor p = lp.value();
    for (double& v : p.values()) v = std::exp(v);
    const std::size_t choice = sample_categorical(p.values(), rng.listener);
    master_logp = nn::pick(lp, choice);
    sub = Listener::resolve(static_cast<Master>(choice), rng.listener);
    out.record.master = std::string(name(static_cast<Master>(choice)));
  }

  auto pseudo_message = [&](Rng& r) -> nn::Tensor {
    if (cfg.pseudo_source == PseudoSource::kEpisode && !msg.dists.empty()) {
      return sample_from_dists(msg.dists, r);
    }
    if (agents.buffer().size() > 0) {
      return agents.buffer()[uniform_index(r, agents.buffer().size())].second;
    }
    return msg.concat;
  };

  std::vector<nn::Var> logps;
  std::vector<double> shaped;
  while (!ep.state.done) {
    const nn::Tensor obs = observe(ep.state, cfg.oracle_listener);
    EncodedGrid enc = listener.encode(tape, obs);
    ListenerStep st = listener.act(tape, msg.var, enc, sub, nn::Mode::kTrain, rng.listener);
    logps.push_back(nn::pick(st.log_probs, st.index));
    out.record.attention.push_back(st.alpha);

    double r_infl = 0.0;
    if (cfg.intrinsic.influence) {
      const nn::Tensor& grid = enc.grid.value();
      r_infl = influence_reward(
          st.probs,
          [&](const nn::Tensor& m) {
            return listener.policy_given_message(m, grid, enc.geometry, sub);
          },
          pseudo_message, cfg.intrinsic.k, rng.pseudo);
      out.influence += r_infl;
    }

    const StepResult res = step(ep.state, st.action);
    record_step(out.record, ep.state, st.action, res);
    out.env_return += res.reward;
    shaped.push_back((cfg.external_reward ? res.reward : 0.0) + cfg.intrinsic.lambda3 * r_infl);
  }
  if (cfg.intrinsic.coverage) {
    out.coverage = coverage_reward(ep.concept_vector, msg.concat, agents.discriminator(),
                                   cfg.intrinsic);
    shaped.back() += out.coverage;
  }
  out.record.shaped = shaped;

  std::vector<double> g = discounted_returns(shaped, cfg.gamma);
  if (cfg.baseline) {
    const double b = agents.baseline();
    agents.baseline() = cfg.baseline_decay * b + (1.0 - cfg.baseline_decay) * g.front();
    for (double& v : g) v -= b;
  }

  nn::Var objective;
  auto accumulate = [&](nn::Var logp, double weight) {
    if (weight == 0.0) return;
    nn::Var term = nn::scale(logp, weight);
    objective = objective.valid() ? nn::add(objective, term) : term;
  };
  for (std::size_t t = 0; t < logps.size(); ++t) accumulate(logps[t], g[t]);
  if (hierarchical) accumulate(master_logp, g.front());
  if (cfg.speaker_reinforce && msg.log_prob.valid()) accumulate(msg.log_prob, g.front());

  nn::Adam& opt = agents.optimizer();
  opt.zero_grad();
  if (objective.valid()) {
    nn::Var loss = nn::scale(objective, -1.0);
    out.loss = loss.value()[0];
    if (!std::isfinite(out.loss)) {
      throw Error(ErrorCode::kNonFinite, "non-finite REINFORCE loss in episode: " +
                                             to_json(out.record).dump());
    }
    tape.backward(loss);
  }
  opt.step();

  agents.buffer().push(ep.concept_vector, msg.concat);
  return out;
}

/// One evaluation episode: argmax everywhere, no parameter change. `rng` only
/// resolves a Null master and drives random channels.
inline EpisodeRecord eval_episode(const Agents& agents, const Episode& start, Split split,
                                  Rng& rng) {
  const RunConfig& cfg = agents.config();
  const Listener& listener = agents.listener();
  Episode ep = start;
  EpisodeRecord rec = begin_record(ep, cfg.seed, split);
  const MessageBundle msg = agents.speaker().speak_eval(ep.concept_vector, rng);
  for (std::size_t s : msg.symbols) rec.message.push_back(static_cast<int>(s));

  Master sub = Master::kA;
  if (cfg.listener_mode == ListenerMode::kHierarchical) {
    const Master choice = static_cast<Master>(argmax(listener.master_probs(msg.concat).values()));
    rec.master = std::string(name(choice));
    sub = Listener::resolve(choice, rng);
  }
  while (!ep.state.done) {
    const nn::Tensor obs = observe(ep.state, cfg.oracle_listener);
    const nn::Tensor grid = listener.encode_values(obs);
    const CellGeometry geo = CellGeometry::from_observation(obs);
    std::array<double, kNumCells> alpha{};
    const nn::Tensor p = listener.policy_given_message(msg.concat, grid, geo, sub, &alpha);
    const Action a = head_action(cfg.listener_mode, sub, listener.config().single_actions,
                                 argmax(p.values()));
    rec.attention.push_back(alpha);
    const StepResult res = step(ep.state, a);
    record_step(rec, ep.state, a, res);
  }
  return rec;
}

struct EvalResult {
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double success_rate = 0.0;
  std::optional<double> topsim;
  std::optional<double> ci;
  std::optional<double> cic;
  std::vector<EpisodeRecord> records;
};

/// Language sample with one message per distinct concept.
inline LanguageSample language_sample(const std::vector<EpisodeRecord>& records) {
  std::map<ConceptVector, Symbols> seen;
  for (const auto& r : records) {
    if (seen.contains(r.concept_vector)) continue;
    Symbols m;
    for (int s : r.message) m.push_back(static_cast<std::size_t>(s));
    seen.emplace(r.concept_vector, m);
  }
  LanguageSample out;
  for (auto& [c, m] : seen) out.push_back({c, m});
  return out;
}

/// Message-bundle x action counts over every step of the records.
inline CountTable message_action_counts(const std::vector<EpisodeRecord>& records,
                                        std::size_t alphabet) {
  std::map<std::uint64_t, std::size_t> rows;
  for (const auto& r : records) {
    Symbols m(r.message.begin(), r.message.end());
    rows.try_emplace(bundle_id(m, alphabet), rows.size());
  }
  CountTable t(std::max<std::size_t>(rows.size(), 1), kNumActions);
  for (const auto& r : records) {
    Symbols m(r.message.begin(), r.message.end());
    const std::size_t row = rows.at(bundle_id(m, alphabet));
    for (Action a : r.actions) t.add(row, static_cast<std::size_t>(a));
  }
  return t;
}

/// Episode `j` of task index `i` under `base` always replays the same reset.
inline Rng eval_episode_rng(std::uint64_t seed, std::uint64_t base, std::size_t task_index,
                            std::size_t j) {
  return make_rng(seed, Stream::kEval, base + task_index * 1'000'000 + j);
}

inline constexpr std::uint64_t kValidationBase = 0;
inline constexpr std::uint64_t kHeldoutBase = 1ull << 32;
inline constexpr std::uint64_t kZeroShotBase = 2ull << 32;

inline EvalResult evaluate(const Agents& agents, const std::vector<Task>& tasks, Split split,
                           std::size_t per_task, std::uint64_t base, bool keep_records = false) {
  if (per_task == 0) throw Error(ErrorCode::kInvalidArgument, "evaluation needs episodes");
  const RunConfig& cfg = agents.config();
  EvalResult res;
  std::vector<EpisodeRecord> records;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t j = 0; j < per_task; ++j) {
      Rng rng = eval_episode_rng(cfg.seed, base, static_cast<std::size_t>(tasks[i]), j);
      const Episode ep = reset(cfg.env, tasks[i], split, rng);
      EpisodeRecord rec = eval_episode(agents, ep, split, rng);
      rec.episode = static_cast<std::int64_t>(j);
      for (double r : rec.rewards) res.mean_reward += r;
      res.success_rate += rec.success ? 1.0 : 0.0;
      records.push_back(std::move(rec));
    }
  }
  res.episodes = records.size();
  res.mean_reward /= static_cast<double>(res.episodes);
  res.success_rate /= static_cast<double>(res.episodes);

  const std::size_t alphabet = symbol_alphabet(cfg.channel);
  const LanguageSample lang = language_sample(records);
  if (lang.size() >= 2) {
    res.topsim = topsim(lang);
    try {
      res.ci = context_independence(lang, alphabet);
    } catch (const Error&) {
      // no varying concept bit
    }
  }
  res.cic = cic(message_action_counts(records, alphabet));
  if (keep_records) res.records = std::move(records);
  return res;
}

/// Tasks that a held-out split can pose.
inline std::vector<Task> zero_shot_tasks(const RunConfig& cfg) {
  std::vector<Task> out;
  for (Task t : cfg.tasks) {
    if (cfg.split == SplitMode::kNumeral && t != Task::kPull) continue;
    out.push_back(t);
  }
  return out;
}

/// Fraction of held-out episodes solved in eval mode.
inline double zero_shot_accuracy(const Agents& agents, std::size_t n_episodes) {
  if (n_episodes == 0) throw Error(ErrorCode::kInvalidArgument, "n_episodes must be positive");
  const RunConfig& cfg = agents.config();
  if (cfg.split == SplitMode::kNone) {
    throw Error(ErrorCode::kConfig, "zero-shot accuracy needs a visual or numeral split");
  }
  const auto tasks = zero_shot_tasks(cfg);
  if (tasks.empty()) throw Error(ErrorCode::kConfig, "no task is posable on the held-out split");
  return evaluate(agents, tasks, test_filter(cfg.split), n_episodes, kZeroShotBase).success_rate;
}

/// Among failed episodes, the share whose first-step attention argmax is the
/// target cell. nullopt when nothing failed or attention was not logged.
inline std::optional<double> failed_attention_on_target(const std::vector<EpisodeRecord>& records) {
  std::size_t failed = 0, on_target = 0;
  for (const auto& r : records) {
    if (r.success || r.attention.empty()) continue;
    ++failed;
    const auto& a = r.attention.front();
    std::size_t best = 0;
    for (std::size_t c = 1; c < a.size(); ++c) {
      if (a[c] > a[best]) best = c;
    }
    on_target += static_cast<int>(best) == r.frames.front().target.cell();
  }
  if (failed == 0) return std::nullopt;
  return static_cast<double>(on_target) / static_cast<double>(failed);
}

/// Mean held-out reward per task on the frozen held-out seeds.
inline std::vector<double> heldout_rewards(const Agents& agents) {
  const RunConfig& cfg = agents.config();
  std::vector<double> out;
  for (Task t : cfg.tasks) {
    out.push_back(evaluate(agents, {t}, train_filter(cfg.split), cfg.lp_heldout, kHeldoutBase)
                      .mean_reward);
  }
  return out;
}

/// Seeds mu_i with the held-out reward of a throwaway model trained briefly on
/// task i alone.
inline LPTracker lp_init(const RunConfig& cfg) {
  std::vector<double> mu;
  for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
    RunConfig solo = cfg;
    solo.tasks = {cfg.tasks[i]};
    Agents model(solo, i + 1);
    Streams rng(cfg.seed, i + 1);
    nn::Tape tape;
    for (std::size_t e = 0; e < cfg.lp_init_episodes; ++e) {
      train_episode(model, cfg.tasks[i], train_filter(cfg.split), rng, tape);
      if ((e + 1) % cfg.intrinsic.retrain_period == 0 && cfg.intrinsic.coverage) {
        train_discriminator(model.discriminator(), model.disc_optimizer(), model.buffer(),
                            cfg.intrinsic, rng.disc);
      }
    }
    mu.push_back(evaluate(model, {cfg.tasks[i]}, train_filter(cfg.split), cfg.lp_heldout,
                          kHeldoutBase)
                     .mean_reward);
  }
  return LPTracker(std::move(mu), cfg.lp_beta, cfg.lp_epsilon);
}

struct MetricRow {
  std::string run;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::string metric;
  double value = 0.0;
};

inline constexpr const char* kMetricsHeader = "run,seed,episode,metric,value";

inline std::string csv_line(const MetricRow& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", r.value);
  return r.run + "," + std::to_string(r.seed) + "," + std::to_string(r.episode) + "," +
         r.metric + "," + buf;
}

struct RunSummary {
  std::string run;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  double final_reward = 0.0;
  double final_success = 0.0;
  std::optional<double> topsim, ci, cic;
  std::optional<double> zero_shot;
  std::optional<double> failed_attention_on_target;
  std::size_t failed_episodes = 0;
  double seconds = 0.0;

  nlohmann::json to_json() const {
    auto opt = [](const std::optional<double>& v) -> nlohmann::json {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"version", kVersion},
            {"run", run},
            {"seed", seed},
            {"episodes", episodes},
            {"final_reward", final_reward},
            {"final_success", final_success},
            {"topsim", opt(topsim)},
            {"ci", opt(ci)},
            {"cic", opt(cic)},
            {"zero_shot", opt(zero_shot)},
            {"failed_attention_on_target", opt(failed_attention_on_target)},
            {"failed_episodes", failed_episodes},
            {"seconds", seconds}};
  }
};

struct TrainResult {
  RunSummary summary;
  std::vector<MetricRow> metrics;
  std::unique_ptr<Agents> agents;
  std::vector<EpisodeRecord> final_records;
};

/// Appends rows and records to a run directory as they are produced.
class RunWriter {
 public:
  RunWriter() = default;
  explicit RunWriter(const std::filesystem::path& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create run dir " + dir.string());
    metrics_.open(dir / "metrics.csv", std::ios::trunc);
    episodes_.open(dir / "episodes.jsonl", std::ios::trunc);
    if (!metrics_ || !episodes_) throw Error(ErrorCode::kIo, "cannot open run files in " + dir.string());
    metrics_ << kMetricsHeader << '\n';
    check(metrics_);
  }

  bool active() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  void metric(const MetricRow& r) {
    if (!active()) return;
    metrics_ << csv_line(r) << '\n';
    check(metrics_);
  }

  void episode(const EpisodeRecord& r, std::string_view phase) {
    if (!active()) return;
    nlohmann::json j = to_json(r);
    j["phase"] = phase;
    episodes_ << j.dump() << '\n';
    check(episodes_);
  }

  void json_file(const std::string& file, const nlohmann::json& j) const {
    if (!active()) return;
    std::ofstream out(dir_ / file, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + (dir_ / file).string());
  }

  void flush() {
    if (!active()) return;
    metrics_.flush();
    episodes_.flush();
  }

 private:
  void check(std::ofstream& f) const {
    if (!f) throw Error(ErrorCode::kIo, "write failed in " + dir_.string());
  }

  std::filesystem::path dir_;
  std::ofstream metrics_, episodes_;
};

/// Progress hook: (episode, metric, value) as each row is emitted.
using ProgressFn = std::function<void(const MetricRow&)>;

/// Full training loop. `out_dir` empty keeps everything in memory.
inline TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir = {},
                         const ProgressFn& progress = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunWriter writer = out_dir.empty() ? RunWriter() : RunWriter(out_dir);
  writer.json_file("config.json", to_json(cfg));

  TrainResult result;
  result.agents = std::make_unique<Agents>(cfg);
  Agents& agents = *result.agents;
  Streams rng(cfg.seed);
  nn::Tape tape;
  const Split split = train_filter(cfg.split);

  auto emit = [&](std::size_t episode, const std::string& metric, double value) {
    MetricRow row{cfg.name, cfg.seed, episode, metric, value};
    writer.metric(row);
    if (progress) progress(row);
    result.metrics.push_back(std::move(row));
  };
  auto emit_eval = [&](std::size_t episode, const EvalResult& ev, const std::string& prefix) {
    emit(episode, prefix + "reward", ev.mean_reward);
    if (ev.topsim) emit(episode, prefix + "topsim", *ev.topsim);
    if (ev.ci) emit(episode, prefix + "ci", *ev.ci);
    if (ev.cic) emit(episode, prefix + "cic", *ev.cic);
  };

  const bool use_lp = cfg.lp_enabled && cfg.multi_task();
  LPTracker lp;
  if (use_lp) {
    lp = lp_init(cfg);
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
      emit(0, "lp_p_" + std::string(name(cfg.tasks[i])), lp.probabilities()[i]);
    }
  }

  double window = 0.0;
  for (std::size_t e = 1; e <= cfg.episodes; ++e) {
    std::size_t ti = 0;
    if (use_lp) {
      ti = lp.sample(rng.task);
    } else if (cfg.multi_task()) {
      ti = uniform_index(rng.task, cfg.tasks.size());
    }
    EpisodeOutcome out = train_episode(agents, cfg.tasks[ti], split, rng, tape);
    out.record.episode = static_cast<std::int64_t>(e);
    window += out.env_return;
    if (cfg.record_every > 0 && e % cfg.record_every == 0) writer.episode(out.record, "train");

    if (cfg.intrinsic.coverage && e % cfg.intrinsic.retrain_period == 0) {
      if (auto l = train_discriminator(agents.discriminator(), agents.disc_optimizer(),
                                       agents.buffer(), cfg.intrinsic, rng.disc)) {
        if (e % cfg.train_log_every == 0) emit(e, "disc_loss", *l);
      }
    }
    if (cfg.train_log_every > 0 && e % cfg.train_log_every == 0) {
      emit(e, "train_reward", window / static_cast<double>(cfg.train_log_every));
      window = 0.0;
    }
    if (use_lp && e % cfg.lp_update_every == 0) {
      lp.update(heldout_rewards(agents));
      for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        emit(e, "lp_p_" + std::string(name(cfg.tasks[i])), lp.probabilities()[i]);
      }
    }
    if (cfg.eval_every > 0 && e % cfg.eval_every == 0 && e != cfg.episodes) {
      emit_eval(e, evaluate(agents, cfg.tasks, split, cfg.eval_episodes, kValidationBase),
                "eval_");
    }
    if (cfg.checkpoint_every > 0 && e % cfg.checkpoint_every == 0 && writer.active()) {
      agents.save((writer.dir() / ("checkpoint_" + std::to_string(e) + ".bin")).string());
    }
  }

  RunSummary& s = result.summary;
  s.run = cfg.name;
  s.seed = cfg.seed;
  s.episodes = cfg.episodes;
  EvalResult fin = evaluate(agents, cfg.tasks, split, cfg.final_eval_episodes, kValidationBase,
                            true);
  emit_eval(cfg.episodes, fin, "eval_");
  s.final_reward = fin.mean_reward;
  s.final_success = fin.success_rate;
  s.topsim = fin.topsim;
  s.ci = fin.ci;
  s.cic = fin.cic;
  s.failed_attention_on_target = failed_attention_on_target(fin.records);
  for (const auto& r : fin.records) s.failed_episodes += r.success ? 0 : 1;
  if (s.failed_attention_on_target) {
    emit(cfg.episodes, "failed_attention_on_target", *s.failed_attention_on_target);
  }
  if (cfg.split != SplitMode::kNone && !zero_shot_tasks(cfg).empty()) {
    s.zero_shot = zero_shot_accuracy(agents, cfg.final_eval_episodes);
    emit(cfg.episodes, "zero_shot", *s.zero_shot);
  }
  for (const auto& r : fin.records) writer.episode(r, "eval");
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (writer.active()) {
    agents.save((writer.dir() / "checkpoint.bin").string());
    writer.json_file("summary.json", s.to_json());
    writer.flush();
  }
  result.final_records = std::move(fin.records);
  return result;
}

/// Runs `seeds` one after another under `out_dir/seed_<s>`.
inline std::vector<RunSummary> train_seeds(RunConfig cfg, const std::vector<std::uint64_t>& seeds,
                                           const std::filesystem::path& out_dir = {},
                                           const ProgressFn& progress = {}) {
  std::vector<RunSummary> out;
  for (std::uint64_t seed : seeds) {
    cfg.seed = seed;
    const auto dir = out_dir.empty() ? out_dir : out_dir / ("seed_" + std::to_string(seed));
    out.push_back(train(cfg, dir, progress).summary);
  }
  return out;
}

}  // namespace gcomm
