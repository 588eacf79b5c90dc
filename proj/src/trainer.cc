// Copyright 2026 The aetsep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "aetsep/trainer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"

namespace aetsep {
namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t Mix(uint64_t seed, uint64_t stream, uint64_t index) {
  return SplitMix(SplitMix(seed ^ SplitMix(stream)) ^ index);
}

constexpr uint64_t kStreamTargets = 1;
constexpr uint64_t kStreamInterferers = 2;
constexpr uint64_t kStreamEpoch = 3;
constexpr uint64_t kStreamOffset = 4;

void Shuffle(std::vector<std::filesystem::path>& items, uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng() % i]);
  }
}

std::vector<std::filesystem::path> ListWavs(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::kNoData, "not a directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(entry.path());
  }
  if (out.empty()) throw Error(ErrorCode::kNoData, "no WAV files in " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

Tensor Segment(const std::vector<double>& s, int64_t begin, int64_t len) {
  return Tensor({len}, std::vector<double>(s.begin() + begin, s.begin() + begin + len));
}

bool AllGradientsFinite(const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.AllFinite()) return false;
  }
  return true;
}

void ApplyUpdate(SeparatorParams& params, OptimizerState& state,
                 const std::map<std::string, Tensor>& grads, const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::kSgd) {
    for (const auto& [name, g] : grads) {
      Tensor& p = params.mutable_tensor(name);
      for (int64_t i = 0; i < p.size(); ++i) p[i] -= cfg.learning_rate * g[i];
    }
    ++state.step;
    return;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = params.mutable_tensor(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Tensor::Filled(p.shape(), 0.0));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Tensor::Filled(p.shape(), 0.0));
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw Error(ErrorCode::kIncompatibleCheckpoint, "optimizer moments do not match " + name);
    }
    for (int64_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

std::vector<double> ComponentValues(const Evaluation& ev, const TrainingGraph& graph) {
  std::vector<double> out;
  for (NodeId id : graph.components()) out.push_back(ev[id].item());
  return out;
}

LogEntry MakeEntry(const char* phase, int64_t epoch, int64_t step, const CompositeCost& cost,
                   const StepResult& r) {
  LogEntry e;
  e.phase = phase;
  e.epoch = epoch;
  e.step = step;
  for (size_t i = 0; i < cost.components.size(); ++i) {
    e.components.emplace_back(std::string(LossKindName(cost.components[i].kind)),
                              r.components[i]);
  }
  e.total = r.loss;
  return e;
}

// Graphs are specialized to an input length; full-utterance training needs
// one per distinct pair length.
class GraphCache {
 public:
  GraphCache(const NetworkConfig& network, const CompositeCost& cost, const StoiConfig& stoi,
             const TrainConfig& cfg)
      : network_(network), cost_(cost), stoi_(stoi), cfg_(cfg) {}

  const TrainingGraph& For(const MixturePair& pair) {
    const int64_t len = cfg_.excerpt_len > 0 ? cfg_.excerpt_len : pair.mixture.size();
    auto it = graphs_.find(len);
    if (it == graphs_.end()) {
      it = graphs_
               .emplace(len, std::make_unique<TrainingGraph>(network_, cost_, stoi_, len,
                                                             cfg_.trim, cfg_.loss_epsilon))
               .first;
    }
    return *it->second;
  }

 private:
  NetworkConfig network_;
  CompositeCost cost_;
  StoiConfig stoi_;
  TrainConfig cfg_;
  std::map<int64_t, std::unique_ptr<TrainingGraph>> graphs_;
};

}  // namespace

void TrainConfig::Validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfigError, m); };
  CompositeCost::Parse(cost);
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be positive");
  if (epochs < 0) fail("epochs must be nonnegative");
  if (excerpt_len != 0 && excerpt_len < 4096) fail("excerpt_len must be 0 or at least 4096");
  if (trim < 0) fail("trim must be nonnegative");
  if (!(loss_epsilon >= 0.0)) fail("loss_epsilon must be nonnegative");
  if (normalization_pairs < 1) fail("normalization_pairs must be at least 1");
  if (!std::isfinite(snr_db)) fail("snr_db must be finite");
}

Dataset BuildDataset(const std::filesystem::path& target_dir,
                     const std::filesystem::path& interference_dir, double snr_db,
                     uint64_t seed, double sample_rate, Split split) {
  std::vector<std::filesystem::path> targets = ListWavs(target_dir);
  std::vector<std::filesystem::path> interferers = ListWavs(interference_dir);
  Shuffle(targets, Mix(seed, kStreamTargets, 0));
  Shuffle(interferers, Mix(seed, kStreamInterferers, 0));
  const size_t n = std::min(targets.size(), interferers.size());
  Dataset ds;
  ds.split = split;
  for (size_t i = 0; i < n; ++i) {
    const Waveform t = Resample(ReadWav(targets[i]), sample_rate);
    const Waveform z = Resample(ReadWav(interferers[i]), sample_rate);
    ds.pairs.push_back(MixAtSnr(t, z, snr_db));
    ds.sources.emplace_back(targets[i].string(), interferers[i].string());
  }
  return ds;
}

bool SourcesDisjoint(const Dataset& a, const Dataset& b) {
  std::set<std::string> seen;
  for (const auto& [t, z] : a.sources) {
    seen.insert(std::filesystem::weakly_canonical(t).string());
    seen.insert(std::filesystem::weakly_canonical(z).string());
  }
  for (const auto& [t, z] : b.sources) {
    if (seen.count(std::filesystem::weakly_canonical(t).string()) ||
        seen.count(std::filesystem::weakly_canonical(z).string())) {
      return false;
    }
  }
  return true;
}

TrainingGraph::TrainingGraph(const NetworkConfig& network, const CompositeCost& cost,
                             const StoiConfig& stoi, int64_t excerpt_len, int64_t trim,
                             double loss_epsilon)
    : excerpt_len_(excerpt_len), trim_(trim) {
  network.Validate();
  const int64_t out_len = network.OutputLength(excerpt_len);
  loss_len_ = out_len - 2 * trim;
  if (out_len == 0 || loss_len_ <= 0) {
    throw Error(ErrorCode::kSignalTooShort,
                "excerpt of " + std::to_string(excerpt_len) + " samples leaves nothing after " +
                    "synthesis and a trim of " + std::to_string(trim));
  }
  const NodeId mixture = graph_.Input("mixture", {excerpt_len});
  const NetworkNodes net = AddSeparatorNetwork(graph_, mixture, excerpt_len, network);
  output_ = graph_.Slice(net.output, 0, trim, out_len - trim);
  const NodeId y = graph_.Input("target", {loss_len_});
  const NodeId z = graph_.Input("interference", {loss_len_});
  const CompositeNodes loss = AddCompositeLoss(graph_, cost, output_, y, z, loss_len_,
                                               network.sample_rate, stoi, loss_epsilon);
  total_ = loss.total;
  components_ = loss.raw;
  stoi_bands_ = loss.stoi_bands;
}

Excerpt CutExcerpt(const MixturePair& pair, int64_t offset, const TrainingGraph& graph) {
  const int64_t len = graph.excerpt_len();
  if (offset < 0 || offset + len > pair.mixture.size() || pair.target.size() < offset + len ||
      pair.interference.size() < offset + len) {
    throw Error(ErrorCode::kSignalTooShort,
                "pair of " + std::to_string(pair.mixture.size()) +
                    " samples cannot supply an excerpt of " + std::to_string(len) +
                    " at offset " + std::to_string(offset));
  }
  const int64_t begin = offset + graph.trim();
  return Excerpt{Segment(pair.mixture.samples, offset, len),
                 Segment(pair.target.samples, begin, graph.loss_len()),
                 Segment(pair.interference.samples, begin, graph.loss_len())};
}

StepResult TrainStep(SeparatorParams& params, OptimizerState& state,
                     const TrainingGraph& graph, const Excerpt& excerpt,
                     const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "learning_rate must be nonnegative");
  }
  Inputs inputs;
  params.Bind(inputs);
  inputs.Bind("mixture", excerpt.mixture)
      .Bind("target", excerpt.target)
      .Bind("interference", excerpt.interference);
  const std::vector<std::string> names = params.names();
  GradientResult r = EvaluateWithGradient(graph.graph(), inputs,
                                          std::set<std::string>(names.begin(), names.end()));
  StepResult out{r.value, ComponentValues(r.evaluation, graph)};
  if (!std::isfinite(r.value) || !AllGradientsFinite(r.gradients)) {
    throw Error(ErrorCode::kNumericalDivergence,
                "non-finite loss or gradient at optimizer step " + std::to_string(state.step));
  }
  ApplyUpdate(params, state, r.gradients, config);
  return out;
}

StepResult EvaluateLoss(const SeparatorParams& params, const TrainingGraph& graph,
                        const Excerpt& excerpt) {
  Inputs inputs;
  params.Bind(inputs);
  inputs.Bind("mixture", excerpt.mixture)
      .Bind("target", excerpt.target)
      .Bind("interference", excerpt.interference);
  const Evaluation ev = Evaluate(graph.graph(), inputs);
  return StepResult{ev[graph.total()].item(), ComponentValues(ev, graph)};
}

std::string ToJsonLine(const LogEntry& entry) {
  nlohmann::ordered_json j;
  j["phase"] = entry.phase;
  j["epoch"] = entry.epoch;
  j["step"] = entry.step;
  nlohmann::ordered_json comps = nlohmann::ordered_json::object();
  for (const auto& [name, value] : entry.components) comps[name] = value;
  j["components"] = comps;
  j["total"] = entry.total;
  return j.dump();
}

int64_t ExcerptOffset(uint64_t seed, int64_t step, int64_t pair_len, int64_t excerpt_len) {
  if (excerpt_len <= 0 || pair_len <= excerpt_len) return 0;
  const uint64_t span = static_cast<uint64_t>(pair_len - excerpt_len) + 1;
  return static_cast<int64_t>(Mix(seed, kStreamOffset, static_cast<uint64_t>(step)) % span);
}

std::vector<int64_t> EpochOrder(uint64_t seed, int64_t epoch, int64_t count) {
  std::vector<int64_t> order(count);
  for (int64_t i = 0; i < count; ++i) order[i] = i;
  std::mt19937_64 rng(Mix(seed, kStreamEpoch, static_cast<uint64_t>(epoch)));
  for (int64_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng() % static_cast<uint64_t>(i)]);
  }
  return order;
}

FitResult Fit(const Dataset& dataset, const NetworkConfig& network, const TrainConfig& config,
              const StoiConfig& stoi, const FitOptions& options) {
  config.Validate();
  stoi.Validate();
  if (dataset.pairs.empty()) throw Error(ErrorCode::kNoData, "dataset is empty");
  const int64_t n = static_cast<int64_t>(dataset.pairs.size());
  CompositeCost cost = CompositeCost::Parse(config.cost);
  FitResult result;

  auto emit = [&](const LogEntry& e) {
    result.log.push_back(e);
    if (options.on_log) options.on_log(e);
  };

  Checkpoint current;
  if (options.resume) {
    current = *options.resume;
    if (current.progress.cost != config.cost) {
      throw Error(ErrorCode::kIncompatibleCheckpoint,
                  "checkpoint was trained with cost '" + current.progress.cost + "'");
    }
    if (current.progress.cost_scales.size() != cost.components.size()) {
      throw Error(ErrorCode::kIncompatibleCheckpoint, "checkpoint lacks cost scales");
    }
    for (size_t i = 0; i < cost.components.size(); ++i) {
      cost.components[i].scale = current.progress.cost_scales[i];
    }
  } else {
    current.params = InitParams(config.seed, network);
    current.progress.cost = config.cost;
    GraphCache raw_graphs(current.params.config(), cost, stoi, config);
    const int64_t batch = std::min(config.normalization_pairs, n);
    std::vector<double> sums(cost.components.size(), 0.0);
    for (int64_t i = 0; i < batch; ++i) {
      const MixturePair& pair = dataset.pairs[i];
      const TrainingGraph& g = raw_graphs.For(pair);
      const StepResult r = EvaluateLoss(current.params, g, CutExcerpt(pair, 0, g));
      for (size_t k = 0; k < sums.size(); ++k) sums[k] += r.components[k];
      emit(MakeEntry("normalize", 0, i, cost, r));
    }
    std::vector<double> means(sums.size());
    for (size_t k = 0; k < sums.size(); ++k) means[k] = sums[k] / static_cast<double>(batch);
    cost = NormalizeCostScales(cost, means);
    for (const CostComponent& c : cost.components) current.progress.cost_scales.push_back(c.scale);
  }

  GraphCache graphs(current.params.config(), cost, stoi, config);
  const int64_t total_steps = config.epochs * n;
  std::vector<int64_t> order;
  int64_t order_epoch = -1;
  for (int64_t s = current.progress.steps_completed; s < total_steps; ++s) {
    const int64_t epoch = s / n;
    if (epoch != order_epoch) {
      order = EpochOrder(config.seed, epoch, n);
      order_epoch = epoch;
    }
    const MixturePair& pair = dataset.pairs[order[s % n]];
    const TrainingGraph& g = graphs.For(pair);
    const int64_t offset =
        ExcerptOffset(config.seed, s, pair.mixture.size(), config.excerpt_len);
    const Excerpt excerpt = CutExcerpt(pair, offset, g);
    StepResult r;
    try {
      r = TrainStep(current.params, current.optimizer, g, excerpt, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumericalDivergence) throw;
      throw DivergenceError(e.what(), std::make_shared<const Checkpoint>(current));
    }
    current.progress.steps_completed = s + 1;
    current.progress.epochs_completed = (s + 1) / n;
    emit(MakeEntry("train", epoch, s, cost, r));
    if (options.on_step) options.on_step(current.params, s + 1);
  }
  if (cost.Uses(LossKind::kStoi)) {
    result.stoi_bands = graphs.For(dataset.pairs.front()).stoi_bands();
  }
  result.checkpoint = std::move(current);
  result.cost = cost;
  return result;
}

}  // namespace aetsep
