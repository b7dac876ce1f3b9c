#include "skillopt/cli/commands.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "skillopt/errors.hpp"
#include "skillopt/eval.hpp"
#include "skillopt/hash.hpp"
#include "skillopt/llm/assets.hpp"
#include "skillopt/llm/mock.hpp"
#include "skillopt/llm/scoring.hpp"
#include "skillopt/optimizer.hpp"
#include "skillopt/run_store.hpp"

namespace fs = std::filesystem;

namespace skillopt::cli {

namespace {

json provider_identity(const ProviderConfig& c) {
  return json{{"kind", "http"},
              {"endpoint_url", c.endpoint_url},
              {"model_name", c.model_name},
              {"max_output_tokens", c.max_output_tokens}};
}

std::string scaffold_text(const RunConfig& config, ScaffoldVariant variant) {
  if (variant != ScaffoldVariant::custom) return std::string(assets::scaffold(variant));
  if (!config.scaffold_file) throw ConfigError("the custom variant needs --scaffold-file");
  if (!fs::exists(*config.scaffold_file)) {
    throw ConfigError(fmt::format("scaffold file {} does not exist", config.scaffold_file->string()));
  }
  auto text = read_text_file(*config.scaffold_file);
  if (text.empty()) throw ConfigError(fmt::format("scaffold file {} is empty", config.scaffold_file->string()));
  if (contains_reserved_header(text)) {
    throw ConfigError(fmt::format("scaffold file {} contains the reserved line '{}'",
                                  config.scaffold_file->string(), kAugmentationHeader));
  }
  return text;
}

std::string fmt_optional(const std::optional<double>& v, std::string_view missing = "n/a") {
  return v ? fmt::format("{:.4f}", *v) : std::string(missing);
}

}  // namespace

Providers make_providers(const RunConfig& config, const std::optional<fs::path>& mock_script) {
  Providers p;
  if (mock_script) {
    if (!fs::exists(*mock_script)) {
      throw ConfigError(fmt::format("mock script {} does not exist", mock_script->string()));
    }
    const int parallelism = config.scorer ? config.scorer->parallelism : 4;
    p.scorer = std::make_shared<MockProvider>(MockScript::load(*mock_script), parallelism);
    p.diagnoser = p.scorer;
    p.scorer_identity = json{{"kind", "mock"}, {"script_sha256", sha256_hex(read_text_file(*mock_script))}};
    p.diagnoser_identity = p.scorer_identity;
    return p;
  }
  if (!config.scorer || !config.diagnoser) {
    throw ConfigError("scorer and diagnoser providers are required unless --mock-script is given");
  }
  p.scorer = std::make_shared<HttpChatProvider>(*config.scorer);
  p.diagnoser = std::make_shared<HttpChatProvider>(*config.diagnoser);
  p.scorer_identity = provider_identity(*config.scorer);
  p.diagnoser_identity = provider_identity(*config.diagnoser);
  return p;
}

json to_json(const SplitManifest& m) {
  json batches = json::array();
  for (const auto& b : m.batches.batches) batches.push_back(b);
  return json{{"item", m.item},
              {"split_spec",
               {{"train", m.spec.train_fraction},
                {"val", m.spec.val_fraction},
                {"test", m.spec.test_fraction},
                {"seed", m.spec.seed}}},
              {"counts", {{"train", m.split.train.size()}, {"val", m.split.val.size()}, {"test", m.split.test.size()}}},
              {"train", m.split.train},
              {"val", m.split.val},
              {"test", m.split.test},
              {"batch_target", m.batches.target_batch_size},
              {"batches", batches}};
}

SplitManifest split_manifest_from_json(const json& j) {
  SplitManifest m;
  m.item = j.at("item").get<Item>();
  const auto& s = j.at("split_spec");
  m.spec.train_fraction = s.at("train").get<double>();
  m.spec.val_fraction = s.at("val").get<double>();
  m.spec.test_fraction = s.at("test").get<double>();
  m.spec.seed = s.at("seed").get<std::uint64_t>();
  m.split.train = j.at("train").get<std::vector<LabeledResponse>>();
  m.split.val = j.at("val").get<std::vector<LabeledResponse>>();
  m.split.test = j.at("test").get<std::vector<LabeledResponse>>();
  m.batches.target_batch_size = j.at("batch_target").get<std::size_t>();
  m.batches.batches = j.at("batches").get<std::vector<std::vector<std::size_t>>>();
  return m;
}

fs::path split_manifest_path(const RunConfig& config, const std::string& item_id, std::uint64_t seed) {
  return config.output_root / "splits" / fmt::format("item_{}", item_id) / fmt::format("seed_{}.json", seed);
}

fs::path run_dir(const RunConfig& config, const std::string& item_id, ScaffoldVariant variant, std::uint64_t seed) {
  return config.output_root / "runs" / fmt::format("item_{}", item_id) / std::string(to_string(variant)) /
         fmt::format("seed_{}", seed);
}

fs::path eval_dir(const RunConfig& config) { return config.output_root / "eval"; }

SplitManifest read_split_manifest(const RunConfig& config, const std::string& item_id, std::uint64_t seed) {
  const auto path = split_manifest_path(config, item_id, seed);
  if (!fs::exists(path)) {
    throw ConfigError(fmt::format("split manifest {} is missing; run 'ingest' first", path.string()));
  }
  try {
    auto m = split_manifest_from_json(json::parse(read_text_file(path)));
    if (m.item.item_id != item_id) throw DataError(fmt::format("{} describes item {}", path.string(), m.item.item_id));
    return m;
  } catch (const json::exception& e) {
    throw DataError(fmt::format("split manifest {} is malformed: {}", path.string(), e.what()));
  }
}

json run_snapshot(const RunConfig& config, const SplitManifest& manifest, ScaffoldVariant variant, std::uint64_t seed,
                  const Providers& providers, const std::string& scaffold) {
  const OptimizerConfig defaults;
  return json{{"item_id", manifest.item.item_id},
              {"variant", std::string(to_string(variant))},
              {"seed", seed},
              {"split_manifest_sha256", sha256_hex(dump_stable(to_json(manifest)))},
              {"scaffold_sha256", sha256_hex(scaffold)},
              {"patience", config.patience},
              {"diagnosis_token_budget", config.diagnosis_token_budget},
              {"leak_reprompts", defaults.leak_reprompts},
              {"scoring_attempts", defaults.scoring_attempts},
              {"scorer", providers.scorer_identity},
              {"diagnoser", providers.diagnoser_identity}};
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  if (!fs::exists(config.dataset_path)) {
    throw ConfigError(fmt::format("dataset file {} does not exist", config.dataset_path.string()));
  }
  LoadOptions options;
  options.rater = config.rater;
  if (config.item_catalog) options.catalog = load_item_catalog(*config.item_catalog);
  const auto dataset = load_dataset(config.dataset_path, options);
  out << fmt::format("loaded {} responses over {} items from {}\n", total_responses(dataset), dataset.size(),
                     config.dataset_path.string());

  for (const auto& item_id : config.items) {
    const auto it = dataset.find(item_id);
    if (it == dataset.end()) {
      std::vector<std::string> known;
      for (const auto& [id, data] : dataset) known.push_back(id);
      throw DataError(fmt::format("item {} is not in {} (items present: {})", item_id, config.dataset_path.string(),
                                  fmt::join(known, ", ")));
    }
    for (const auto seed : config.seeds) {
      SplitManifest m;
      m.item = it->second.item;
      m.spec = config.split;
      m.spec.seed = seed;
      m.split = stratified_split(it->second.responses, m.spec);
      m.batches = make_batches(m.split.train.size(), config.batch_target, seed);
      const auto path = split_manifest_path(config, item_id, seed);
      write_file_atomic(path, dump_stable(to_json(m)));
      out << fmt::format("item {} seed {}: train {} / val {} / test {}, {} batches -> {}\n", item_id, seed,
                         m.split.train.size(), m.split.val.size(), m.split.test.size(), m.batches.size(),
                         path.string());
    }
  }
}

void cmd_optimize(const RunConfig& config, Providers& providers, bool resume, std::ostream& out) {
  for (const auto& item_id : config.items) {
    for (const auto seed : config.seeds) {
      const auto manifest = read_split_manifest(config, item_id, seed);
      for (const auto variant : config.variants) {
        const auto scaffold = scaffold_text(config, variant);
        const auto dir = run_dir(config, item_id, variant, seed);
        const auto snapshot = run_snapshot(config, manifest, variant, seed, providers, scaffold);
        RunStore store(dir);
        OptimizerContext ctx{manifest.item,
                             manifest.split,
                             manifest.batches,
                             *providers.scorer,
                             *providers.diagnoser,
                             OptimizerConfig{config.patience, config.diagnosis_token_budget},
                             &store};
        const auto label = fmt::format("item {} / {} / seed {}", item_id, to_string(variant), seed);

        std::optional<RunState> state;
        if (resume && store.latest_checkpoint()) {
          state = resume_run(dir, config_hash(snapshot));
          if (is_finished(*state, ctx) && store.read_summary()) {
            out << fmt::format("{}: run already complete, nothing to resume ({})\n", label, dir.string());
            continue;
          }
          out << fmt::format("{}: resuming after iteration {}\n", label, state->iteration);
        } else {
          if (resume) out << fmt::format("{}: no checkpoint to resume, starting fresh\n", label);
          store.clear();
          write_file_atomic(dir / "README.md", run_layout_readme());
          state = init_run(ctx, Skill::initial(scaffold, variant), seed, snapshot);
        }
        const auto final_state = run_loop(std::move(*state), ctx);
        const auto summary = summarize(final_state, ctx);
        out << fmt::format("{}: {} after {} iteration(s), {} accepted, validation QWK {:.4f} -> {:.4f}\n", label,
                           to_string(summary.termination_reason), summary.iterations, summary.accepted_versions,
                           summary.initial_qwk_val, summary.final_qwk_best_val);
      }
    }
  }
}

namespace {

Skill load_best_skill(const fs::path& dir) {
  RunStore store(dir);
  if (!fs::is_directory(dir)) {
    throw CheckpointError(fmt::format("run directory {} is missing; run 'optimize' first", dir.string()));
  }
  if (!store.read_summary()) {
    throw CheckpointError(fmt::format("run {} has no summary.json; finish it with 'optimize --resume'", dir.string()));
  }
  const auto state = store.latest_checkpoint();
  if (!state) throw CheckpointError(fmt::format("run {} has no checkpoint", dir.string()));
  const auto version = state->skill_best.version;
  const auto text = store.read_skill_text(version);
  if (!text) {
    throw CheckpointError(fmt::format("run {} is missing skills/v{}.txt", dir.string(), version));
  }
  auto [scaffold, delta] = split_composed_skill(*text);
  Skill skill{std::move(scaffold), std::move(delta), state->skill_best.variant, version};
  if (skill != state->skill_best) {
    throw CheckpointError(fmt::format("run {}: skills/v{}.txt disagrees with the latest checkpoint", dir.string(),
                                      version));
  }
  return skill;
}

}  // namespace

void cmd_evaluate(const RunConfig& config, Providers& providers, std::ostream& out) {
  EvaluationResults results;
  RubricCache cache;
  auto& scorer = *providers.scorer;

  for (const auto seed : config.seeds) {
    std::map<ScaffoldVariant, std::vector<TransferTarget>> targets;
    std::map<ScaffoldVariant, std::map<std::string, Skill, ItemIdLess>> optimized;

    for (const auto& item_id : config.items) {
      const auto m = read_split_manifest(config, item_id, seed);
      const ScoringPolicy policy{OptimizerConfig{}.scoring_attempts, modal_score(m.split.train, m.item.scale)};
      const auto& test = m.split.test;

      results.conditions.push_back(
          evaluate_condition(m.item, test, Condition::no_rubric, {}, scorer, cache, policy, seed));
      std::optional<ConditionResult> expert;
      if (m.item.expert_rubric) {
        expert = evaluate_condition(m.item, test, Condition::expert, {}, scorer, cache, policy, seed);
        results.conditions.push_back(*expert);
      } else {
        spdlog::warn("item {} has no expert rubric; skipping the expert condition", item_id);
      }

      for (const auto variant : config.variants) {
        const auto s0_skill = Skill::initial(scaffold_text(config, variant), variant);
        const auto best = load_best_skill(run_dir(config, item_id, variant, seed));
        if (best.scaffold != s0_skill.scaffold) {
          throw CheckpointError(fmt::format("run {} was optimized from a different scaffold",
                                            run_dir(config, item_id, variant, seed).string()));
        }
        auto s0 = evaluate_condition(m.item, test, Condition::s0, {s0_skill}, scorer, cache, policy, seed);
        auto s_best = evaluate_condition(m.item, test, Condition::s_best, {best}, scorer, cache, policy, seed);
        results.conditions.push_back(s0);
        results.conditions.push_back(s_best);
        optimized[variant].emplace(item_id, best);
        targets[variant].push_back(TransferTarget{m.item, test, policy, std::move(s0), std::move(s_best), expert});
      }
    }

    if (config.items.size() >= 2) {
      for (const auto variant : config.variants) {
        TransferGroup group;
        group.variant = variant;
        group.seed = seed;
        group.grid = transfer_matrix(optimized[variant], targets[variant], scorer, cache);
        group.summary = aggregate_transfer(group.grid);
        results.transfers.push_back(std::move(group));
      }
    }
  }

  const auto dir = eval_dir(config);
  emit_report(results, dir);
  for (const auto& r : results.conditions) {
    out << fmt::format("item {} seed {} {}{}: test QWK {} (fallback {:.3f}, n={})\n", r.item_id, r.seed,
                       to_string(r.condition), r.s0_variant ? fmt::format(" [{}]", to_string(*r.s0_variant)) : "",
                       fmt_optional(r.test_qwk), r.fallback_rate, r.records.size());
  }
  for (const auto& t : results.transfers) {
    out << fmt::format("transfer {} seed {}: {} off-diagonal cells, improving vs s0 {}, median gain vs s0 {}\n",
                       to_string(t.variant), t.seed, t.summary.off_diagonal_cells,
                       fmt_optional(t.summary.fraction_improving_vs_s0), fmt_optional(t.summary.median_gain_vs_s0));
  }
  out << fmt::format("reports written to {}\n", dir.string());
}

void cmd_inspect(const fs::path& dir, std::ostream& out) {
  if (!fs::is_directory(dir)) throw CheckpointError(fmt::format("run directory {} does not exist", dir.string()));
  RunStore store(dir);
  const auto state = store.latest_checkpoint();
  if (!state) throw CheckpointError(fmt::format("{} holds no checkpoint; not a run directory", dir.string()));

  out << fmt::format("run {}\n", dir.string());
  out << fmt::format("item {} | variant {} | seed {} | config {}\n", state->item_id,
                     to_string(state->skill_best.variant), state->rng_seed, state->config_hash.substr(0, 12));
  out << fmt::format("initial validation QWK {:.4f}\n\n", state->initial_qwk_val);
  out << fmt::format("{:>4} {:>5} {:>9} {:>9} {:>8} {:>9} {:>8}  {:<24} {}\n", "iter", "batch", "batch_qwk",
                     "cand_qwk", "accepted", "best_qwk", "fallback", "outcome", "leaks");
  for (const auto& r : state->history) {
    out << fmt::format("{:>4} {:>5} {:>9} {:>9} {:>8} {:>9.4f} {:>8.3f}  {:<24} {}\n", r.iteration, r.batch_index,
                       fmt_optional(r.batch_qwk, "-"), fmt_optional(r.candidate_val_qwk, "-"),
                       r.accepted ? "yes" : "no", r.qwk_best_val_after, r.fallback_rate, to_string(r.outcome),
                       r.leak_violations.empty() ? "-" : fmt::format("{}", fmt::join(r.leak_violations, ",")));
  }
  if (const auto summary = store.read_summary()) {
    out << fmt::format("\nfinished: {} after {} iteration(s)\n", to_string(summary->termination_reason),
                       summary->iterations);
  } else {
    out << "\nin progress (no summary.json yet)\n";
  }
  out << fmt::format("best validation QWK {:.4f} with skill v{}\n", state->qwk_best_val, state->skill_best.version);
  if (state->skill_best.delta.empty()) {
    out << "augmentation: (empty)\n";
  } else {
    out << "augmentation:\n" << state->skill_best.delta << "\n";
  }
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const InvalidArgument*>(&error)) return 2;
  if (dynamic_cast<const DataError*>(&error) || dynamic_cast<const CheckpointError*>(&error) ||
      dynamic_cast<const DegenerateError*>(&error)) {
    return 3;
  }
  if (dynamic_cast<const ProviderError*>(&error)) return 4;
  return 1;
}

}  // namespace skillopt::cli
