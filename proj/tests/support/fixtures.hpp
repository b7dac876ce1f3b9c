#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillopt/core.hpp"
#include "skillopt/dataset.hpp"
#include "skillopt/llm/mock.hpp"
#include "skillopt/llm/provider.hpp"

namespace fixture {

namespace fs = std::filesystem;
using namespace skillopt;

inline constexpr std::string_view kStem = "Explain how photosynthesis converts sunlight into chemical energy.";

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "skillopt");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const fs::path& path() const { return path_; }
  fs::path operator/(std::string_view name) const { return path_ / name; }

 private:
  fs::path path_;
};

Item make_item(std::string id, std::string stem, int max_score, std::optional<std::string> expert = std::nullopt);

/// level_counts[k] responses with human score min_score + k. Texts carry the
/// hidden label as "[label=h]". Ids are "<item>-<n>", interleaved by level.
std::vector<LabeledResponse> make_responses(const Item& item, const std::vector<std::size_t>& level_counts);

/// Appends " [batch=b]" to every training response of batch b.
void tag_batches(DatasetSplit& split, const BatchPlan& plan);

/// In-memory optimization inputs for one item.
struct Setup {
  Item item;
  DatasetSplit split;
  BatchPlan batches;
};

Setup make_setup(Item item, const std::vector<std::size_t>& level_counts, std::size_t batch_target,
                 std::uint64_t seed = 42, bool tag = true);

/// TSV in the ASAP-SAS column layout.
std::string to_tsv(const std::vector<std::pair<Item, std::vector<LabeledResponse>>>& items);

void write_text(const fs::path& path, std::string_view text);
std::string read_text(const fs::path& path);

MockScript script(std::string_view json_text);

/// Forwards to another provider and throws ProviderError once `limit` calls
/// have gone through.
class KillAfterProvider final : public ChatProvider {
 public:
  KillAfterProvider(std::shared_ptr<ChatProvider> inner, std::size_t limit)
      : inner_(std::move(inner)), limit_(limit) {}

  [[nodiscard]] int parallelism() const override { return inner_->parallelism(); }
  [[nodiscard]] std::string name() const override { return "kill-after"; }
  [[nodiscard]] std::size_t calls() const { return calls_.load(); }

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  std::shared_ptr<ChatProvider> inner_;
  std::size_t limit_;
  std::atomic<std::size_t> calls_{0};
};

/// Scorer agrees with the hidden label iff the rubric carries RULE-α, else
/// predicts 0; the diagnoser always proposes the RULE-α augmentation.
std::string rule_alpha_script_json();

/// Marker ladder: RULE-α → label; LEVEL-5..LEVEL-1 → label for a fixed
/// hash-selected 90..50 % share, else 0; no marker → 10 %. Diagnosis picks
/// the augmentation by the "[batch=b]" tag found in the error cases.
std::string ladder_script_json(const std::vector<std::string>& delta_by_batch);

/// Augmentation text carrying `marker` (or none for "").
std::string ladder_delta(std::string_view marker);

}  // namespace fixture
