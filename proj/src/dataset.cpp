#include "skillopt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "skillopt/errors.hpp"
#include "skillopt/prng.hpp"
#include "skillopt/serialization.hpp"

namespace skillopt {

RaterColumn parse_rater(std::string_view text) {
  if (text == "score1") return RaterColumn::score1;
  if (text == "score2") return RaterColumn::score2;
  throw ConfigError(fmt::format("unknown rater column '{}' (expected score1|score2)", text));
}

std::string_view to_string(RaterColumn rater) { return rater == RaterColumn::score1 ? "score1" : "score2"; }

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<int> parse_int(std::string_view token) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  int value = 0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (token.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

}  // namespace

bool ItemIdLess::operator()(const std::string& a, const std::string& b) const {
  const bool na = all_digits(a);
  const bool nb = all_digits(b);
  if (na && nb) {
    const auto strip = [](const std::string& s) {
      const auto nz = s.find_first_not_of('0');
      return nz == std::string::npos ? std::string_view("0") : std::string_view(s).substr(nz);
    };
    const auto sa = strip(a);
    const auto sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
    return a < b;
  }
  if (na != nb) return na;
  return a < b;
}

const std::map<std::string, int, ItemIdLess>& asap_sas_max_scores() {
  static const std::map<std::string, int, ItemIdLess> table{
      {"1", 3}, {"2", 3}, {"3", 2}, {"4", 2}, {"5", 3}, {"6", 3}, {"7", 2}, {"8", 2}, {"9", 2}, {"10", 2}};
  return table;
}

ItemCatalog load_item_catalog(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("item catalog {}: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw ConfigError(fmt::format("item catalog {} must be a JSON object", path.string()));
  ItemCatalog catalog;
  for (const auto& [id, entry] : doc.items()) {
    ItemInfo info;
    try {
      if (entry.contains("stem")) info.stem = entry.at("stem").get<std::string>();
      if (entry.contains("expert_rubric") && !entry.at("expert_rubric").is_null()) {
        info.expert_rubric = entry.at("expert_rubric").get<std::string>();
      }
      if (entry.contains("max_score")) info.max_score = entry.at("max_score").get<int>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("item catalog {} entry '{}': {}", path.string(), id, e.what()));
    }
    catalog.emplace(id, std::move(info));
  }
  return catalog;
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open dataset file {}", path.string()));
  return parse_dataset(in, options, path.string());
}

Dataset parse_dataset(std::istream& in, const LoadOptions& options, std::string_view source) {
  static constexpr std::array<std::string_view, 5> kColumns{"Id", "EssaySet", "Score1", "Score2", "EssayText"};

  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    return DataError(fmt::format("{}: {} at line {}", source, what, line_no));
  };
  const auto chomp = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };

  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty file, header row required", source));
  line_no = 1;
  chomp(line);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_tabs(line);
  if (header.size() != kColumns.size() || !std::equal(header.begin(), header.end(), kColumns.begin())) {
    throw fail("header must be Id\\tEssaySet\\tScore1\\tScore2\\tEssayText");
  }

  Dataset dataset;
  std::set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != kColumns.size()) {
      throw fail(fmt::format("malformed row: expected {} columns, found {}", kColumns.size(), fields.size()));
    }
    const std::string id(fields[0]);
    const std::string set(fields[1]);
    if (id.empty() || set.empty()) throw fail("malformed row: empty Id or EssaySet");
    const auto score1 = parse_int(fields[2]);
    const auto score2 = parse_int(fields[3]);
    if (!score1 || !score2) throw fail("non-integer score");
    const std::string text(fields[4]);
    if (contains_reserved_header(text)) throw fail("reserved augmentation header in response text");
    if (!seen_ids.insert(id).second) throw fail(fmt::format("duplicate response Id '{}'", id));

    auto it = dataset.find(set);
    if (it == dataset.end()) {
      std::optional<int> max_score;
      const auto catalog_it = options.catalog.find(set);
      if (auto o = options.max_score_override.find(set); o != options.max_score_override.end()) {
        max_score = o->second;
      } else if (catalog_it != options.catalog.end() && catalog_it->second.max_score) {
        max_score = catalog_it->second.max_score;
      } else if (auto d = asap_sas_max_scores().find(set); d != asap_sas_max_scores().end()) {
        max_score = d->second;
      }
      if (!max_score) throw fail(fmt::format("no score scale configured for EssaySet '{}'", set));
      if (*max_score < 1) throw fail(fmt::format("max score for EssaySet '{}' must be >= 1", set));

      Item item;
      item.item_id = set;
      item.scale = ScoreScale::make(0, *max_score);
      item.stem_text = fmt::format("ASAP-SAS essay set {}", set);
      if (catalog_it != options.catalog.end()) {
        if (catalog_it->second.stem && !catalog_it->second.stem->empty()) item.stem_text = *catalog_it->second.stem;
        item.expert_rubric = catalog_it->second.expert_rubric;
      }
      if (contains_reserved_header(item.stem_text) ||
          (item.expert_rubric && contains_reserved_header(*item.expert_rubric))) {
        throw DataError(fmt::format("item {}: reserved augmentation header in item metadata", set));
      }
      it = dataset.emplace(set, ItemData{std::move(item), {}}).first;
    }

    const int score = options.rater == RaterColumn::score1 ? *score1 : *score2;
    if (!it->second.item.scale.contains(score)) throw fail("score out of range");
    it->second.responses.push_back(LabeledResponse{id, set, text, score});
  }
  return dataset;
}

std::size_t total_responses(const Dataset& dataset) {
  std::size_t n = 0;
  for (const auto& [id, data] : dataset) n += data.responses.size();
  return n;
}

void SplitSpec::validate() const {
  for (const double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) throw InvalidArgument(fmt::format("split fraction {} outside (0, 1)", f));
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must sum to 1");
  }
}

namespace {

using Triple = std::array<std::size_t, 3>;
constexpr std::uint64_t kDenominator = 1'000'000'000ULL;

/// Column indices ordered by remainder descending, then train, val, test.
std::array<int, 3> preference(const std::array<std::uint64_t, 3>& rem) {
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  return order;
}

/// All ways to pick `count` columns with a non-zero remainder, most preferred first.
std::vector<std::array<int, 3>> extra_seat_options(const std::array<std::uint64_t, 3>& rem, std::size_t count) {
  const auto order = preference(rem);
  std::vector<int> eligible;
  for (int c : order) {
    if (rem[c] > 0) eligible.push_back(c);
  }
  std::vector<std::array<int, 3>> options;
  if (count > eligible.size()) return options;
  // Combinations of `count` positions over `eligible`, lexicographic in preference rank.
  std::vector<bool> pick(eligible.size(), false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(count), true);
  do {
    std::array<int, 3> extra{0, 0, 0};
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      if (pick[i]) extra[eligible[i]] = 1;
    }
    options.push_back(extra);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return options;
}

}  // namespace

Apportionment apportion(std::span<const std::size_t> level_counts, const SplitSpec& spec) {
  spec.validate();
  std::array<std::uint64_t, 3> parts{
      static_cast<std::uint64_t>(std::llround(spec.train_fraction * kDenominator)),
      static_cast<std::uint64_t>(std::llround(spec.val_fraction * kDenominator)), 0};
  parts[2] = kDenominator - parts[0] - parts[1];

  const std::size_t levels = level_counts.size();
  std::vector<Triple> floors(levels);
  std::vector<std::array<std::uint64_t, 3>> rems(levels);
  std::vector<std::size_t> seats(levels);
  Triple floor_sum{};
  std::size_t total = 0;
  for (std::size_t v = 0; v < levels; ++v) {
    std::size_t used = 0;
    for (int k = 0; k < 3; ++k) {
      const std::uint64_t num = level_counts[v] * parts[k];
      floors[v][k] = num / kDenominator;
      rems[v][k] = num % kDenominator;
      used += floors[v][k];
      floor_sum[k] += floors[v][k];
    }
    seats[v] = level_counts[v] - used;
    total += level_counts[v];
  }

  std::array<std::uint64_t, 3> total_rem{};
  Triple total_floor{};
  for (int k = 0; k < 3; ++k) {
    const std::uint64_t num = total * parts[k];
    total_floor[k] = num / kDenominator;
    total_rem[k] = num % kDenominator;
  }
  const std::size_t total_seats = total - (total_floor[0] + total_floor[1] + total_floor[2]);

  Apportionment result;
  result.per_level.assign(levels, Triple{});
  std::vector<std::array<int, 3>> chosen(levels);

  // Depth-first over levels; each level takes its most preferred extra-seat
  // pattern that still leaves the column demands satisfiable.
  std::function<bool(std::size_t, std::array<long long, 3>&)> assign =
      [&](std::size_t v, std::array<long long, 3>& demand) -> bool {
    if (v == levels) return demand[0] == 0 && demand[1] == 0 && demand[2] == 0;
    for (const auto& extra : extra_seat_options(rems[v], seats[v])) {
      bool ok = true;
      for (int k = 0; k < 3; ++k) ok = ok && demand[k] >= extra[k];
      if (!ok) continue;
      for (int k = 0; k < 3; ++k) demand[k] -= extra[k];
      chosen[v] = extra;
      if (assign(v + 1, demand)) return true;
      for (int k = 0; k < 3; ++k) demand[k] += extra[k];
    }
    return false;
  };

  for (const auto& total_extra : extra_seat_options(total_rem, total_seats)) {
    std::array<long long, 3> demand{};
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      const auto target = static_cast<long long>(total_floor[k] + total_extra[k]);
      demand[k] = target - static_cast<long long>(floor_sum[k]);
      ok = ok && demand[k] >= 0;
    }
    if (!ok || !assign(0, demand)) continue;
    for (std::size_t v = 0; v < levels; ++v) {
      for (int k = 0; k < 3; ++k) {
        result.per_level[v][k] = floors[v][k] + static_cast<std::size_t>(chosen[v][k]);
        result.totals[k] += result.per_level[v][k];
      }
    }
    return result;
  }
  throw Error("apportionment found no feasible rounding");
}

DatasetSplit stratified_split(std::span<const LabeledResponse> responses, const SplitSpec& spec) {
  spec.validate();
  if (responses.empty()) throw DataError("split too small: no responses");
  const std::string& item_id = responses.front().item_id;

  std::map<int, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (responses[i].item_id != item_id) {
      throw InvalidArgument(fmt::format("stratified_split expects one item, saw '{}' and '{}'", item_id,
                                        responses[i].item_id));
    }
    by_level[responses[i].human_score].push_back(i);
  }

  std::vector<std::size_t> counts;
  for (const auto& [level, idx] : by_level) counts.push_back(idx.size());
  const auto plan = apportion(counts, spec);

  SplitMix64 rng(derive_seed(spec.seed, item_id));
  DatasetSplit split;
  std::size_t v = 0;
  for (auto& [level, idx] : by_level) {
    shuffle_in_place(idx, rng);
    const auto& sizes = plan.per_level[v++];
    std::size_t pos = 0;
    for (std::size_t n = 0; n < sizes[0]; ++n) split.train.push_back(responses[idx[pos++]]);
    for (std::size_t n = 0; n < sizes[1]; ++n) split.val.push_back(responses[idx[pos++]]);
    for (std::size_t n = 0; n < sizes[2]; ++n) split.test.push_back(responses[idx[pos++]]);
  }
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw DataError(fmt::format("split too small: item {} with {} responses gives parts {}/{}/{}", item_id,
                                responses.size(), split.train.size(), split.val.size(), split.test.size()));
  }
  return split;
}

BatchPlan make_batches(std::size_t train_size, std::size_t target, std::uint64_t seed) {
  if (train_size == 0) throw InvalidArgument("make_batches: empty training set");
  if (target == 0) throw InvalidArgument("make_batches: target batch size must be >= 1");

  std::vector<std::size_t> order(train_size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(derive_seed(seed, "batches"));
  shuffle_in_place(order, rng);

  BatchPlan plan;
  plan.target_batch_size = target;
  for (std::size_t start = 0; start < train_size; start += target) {
    const auto end = std::min(train_size, start + target);
    plan.batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                              order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  const std::size_t min_size = (target + 1) / 2;
  if (plan.batches.size() > 1 && plan.batches.back().size() < min_size) {
    auto tail = std::move(plan.batches.back());
    plan.batches.pop_back();
    plan.batches.back().insert(plan.batches.back().end(), tail.begin(), tail.end());
  }
  return plan;
}

}  // namespace skillopt
