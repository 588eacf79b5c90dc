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

// aetsep command-line tool: train, separate, evaluate, gradcheck,
// export-bases and print-config.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "aetsep/aet_net.h"
#include "aetsep/checkpoint.h"
#include "aetsep/config.h"
#include "aetsep/error.h"
#include "aetsep/gradcheck.h"
#include "aetsep/losses.h"
#include "aetsep/metrics.h"
#include "aetsep/signal_io.h"
#include "aetsep/trainer.h"

namespace aetsep {
namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

// Flags that override entries of the JSON configuration.
struct Overrides {
  std::optional<std::string> cost;
  std::optional<double> learning_rate;
  std::optional<std::string> optimizer;
  std::optional<int64_t> epochs;
  std::optional<uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<int64_t> excerpt_len;
  std::optional<int64_t> trim;
  std::optional<int64_t> components;
  std::optional<int64_t> taps;
  std::optional<int64_t> stride;
  std::optional<int64_t> hidden;
  std::optional<std::string> sharing;
  std::optional<double> sample_rate;
  std::optional<std::string> band_pool;

  void Register(CLI::App* app, bool training) {
    if (training) {
      app->add_option("--cost", cost, "cost, e.g. sdr or sdr:0.75+stoi:0.25");
      app->add_option("--lr", learning_rate, "learning rate");
      app->add_option("--optimizer", optimizer, "adam or sgd");
      app->add_option("--epochs", epochs, "passes over the training pairs");
      app->add_option("--snr", snr_db, "mixing SNR in dB");
      app->add_option("--excerpt-len", excerpt_len, "samples per training excerpt (0: full)");
      app->add_option("--trim", trim, "samples dropped at each end before the loss");
      app->add_option("--components", components, "analysis filters");
      app->add_option("--taps", taps, "filter length");
      app->add_option("--stride", stride, "analysis hop");
      app->add_option("--hidden", hidden, "hidden units of the separator");
      app->add_option("--sharing", sharing, "independent or shared");
      app->add_option("--sample-rate", sample_rate, "working sample rate in Hz");
    }
    app->add_option("--seed", seed, "random seed");
    app->add_option("--band-pool", band_pool, "STOI band pooling: l2 or l1");
  }

  json Patch() const {
    json p = json::object();
    auto put = [&p](const char* section, const char* key, const auto& value) {
      if (value) p[section][key] = *value;
    };
    put("train", "cost", cost);
    put("train", "learning_rate", learning_rate);
    put("train", "optimizer", optimizer);
    put("train", "epochs", epochs);
    put("train", "seed", seed);
    put("train", "snr_db", snr_db);
    put("train", "excerpt_len", excerpt_len);
    put("train", "trim", trim);
    put("network", "components", components);
    put("network", "taps", taps);
    put("network", "stride", stride);
    put("network", "hidden", hidden);
    put("network", "weight_sharing", sharing);
    put("network", "sample_rate", sample_rate);
    put("stoi", "band_pool", band_pool);
    return p;
  }
};

ExperimentConfig ResolveConfig(const std::string& path, const Overrides& o) {
  ExperimentConfig base;
  if (!path.empty()) base = LoadExperimentConfig(path);
  return ExperimentConfigFromJson(o.Patch(), base);
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string targets, interferers, out, log, resume;
};

int CmdTrain(const ExperimentConfig& cfg, const TrainArgs& a) {
  const Dataset ds = BuildDataset(a.targets, a.interferers, cfg.train.snr_db, cfg.train.seed,
                                  cfg.network.sample_rate, Split::kTrain);
  std::ofstream log;
  if (!a.log.empty()) {
    log.open(a.log, std::ios::binary);
    if (!log) throw Error(ErrorCode::kIoError, "cannot write " + a.log);
  }
  FitOptions opt;
  if (!a.resume.empty()) opt.resume = LoadCheckpoint(a.resume);
  opt.on_log = [&log](const LogEntry& e) {
    if (log.is_open()) log << ToJsonLine(e) << '\n';
  };
  try {
    const FitResult r = Fit(ds, cfg.network, cfg.train, cfg.stoi, opt);
    SaveCheckpoint(r.checkpoint, a.out);
    std::cerr << "trained " << r.checkpoint.progress.steps_completed << " steps on "
              << ds.pairs.size() << " pairs; checkpoint " << a.out << "\n";
  } catch (const DivergenceError& e) {
    SaveCheckpoint(e.last_good(), a.out);
    std::cerr << "error: " << e.what() << "; last good checkpoint written to " << a.out
              << "\n";
    return kExitDivergence;
  }
  return kExitOk;
}

// --- separate --------------------------------------------------------------

int CmdSeparate(const std::string& ckpt, const std::string& input, const std::string& output) {
  const Checkpoint c = LoadCheckpoint(ckpt);
  const Waveform mixture = ReadWav(input);
  if (mixture.sample_rate != c.params.config().sample_rate) {
    throw Error(ErrorCode::kConfigError,
                "input is sampled at " + std::to_string(mixture.sample_rate) +
                    " Hz but the checkpoint expects " +
                    std::to_string(c.params.config().sample_rate) + " Hz");
  }
  WriteWav(SeparateFullLength(mixture, c.params), output);
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

int CmdEvaluate(const ExperimentConfig& cfg, const std::string& est_path,
                const std::string& target_path, const std::string& interf_path,
                const std::string& name, bool header) {
  const Waveform target = ReadWav(target_path);
  const double rate = target.sample_rate;
  const Waveform est = Resample(ReadWav(est_path), rate);
  const Waveform interf = Resample(ReadWav(interf_path), rate);
  if (est.size() != target.size() || interf.size() != target.size()) {
    throw Error(ErrorCode::kShapeError,
                "lengths differ after resampling to " + std::to_string(rate) + " Hz: " +
                    std::to_string(est.size()) + ", " + std::to_string(target.size()) + ", " +
                    std::to_string(interf.size()));
  }
  const EvalReport r = EvaluateSeparation(est, target, interf, cfg.stoi);
  if (header) std::cout << CsvHeader() << "\n";
  std::cout << CsvRow(name.empty() ? est_path : name, r) << "\n";
  return kExitOk;
}

// --- gradcheck -------------------------------------------------------------

GradCheckReport GradCheckSignalLoss(LossKind kind, uint64_t seed, int64_t n,
                                    const StoiConfig& stoi) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  auto draw = [&](double sigma) {
    std::vector<double> v(n);
    for (double& s : v) s = sigma * nd(rng);
    return v;
  };
  const Tensor y = Tensor::Vector(draw(1.0));
  const Tensor z = Tensor::Vector(draw(1.0));
  Tensor x = Tensor::Vector(draw(kind == LossKind::kStoi ? 0.2 : 0.5));
  for (int64_t i = 0; i < n; ++i) {
    x[i] += kind == LossKind::kStoi ? y[i] : 0.8 * y[i] + 0.3 * z[i];
  }
  Graph g;
  const NodeId xn = g.Input("x", {n});
  const NodeId yn = g.Input("y", {n});
  const NodeId zn = g.Input("z", {n});
  std::vector<std::string> wrt = {"x", "y"};
  GradCheckOptions opt;
  opt.seed = seed;
  switch (kind) {
    case LossKind::kMse: g.SetOutput(AddMseLoss(g, xn, yn)); break;
    case LossKind::kSdr: g.SetOutput(AddSdrLoss(g, xn, yn, kDefaultLossEpsilon)); break;
    case LossKind::kSir:
      g.SetOutput(AddSirLoss(g, xn, yn, zn, kDefaultLossEpsilon));
      wrt.push_back("z");
      break;
    case LossKind::kSar:
      g.SetOutput(AddSarLoss(g, xn, yn, zn, kDefaultLossEpsilon));
      wrt.push_back("z");
      break;
    case LossKind::kStoi:
      g.SetOutput(AddStoiLoss(g, xn, yn, n, stoi.analysis_rate, stoi).loss);
      opt.max_coords = 400;
      break;
  }
  Inputs in;
  in.Bind("x", x).Bind("y", y).Bind("z", z);
  return CheckGradients(g, in, wrt, opt);
}

GradCheckReport GradCheckNetwork(uint64_t seed, int64_t n, const NetworkConfig& net) {
  const TrainingGraph tg(net, CompositeCost::Parse("sdr"), StoiConfig{}, n, 0,
                         kDefaultLossEpsilon);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Waveform t{std::vector<double>(n), net.sample_rate};
  Waveform i{std::vector<double>(n), net.sample_rate};
  for (double& s : t.samples) s = nd(rng);
  for (double& s : i.samples) s = nd(rng);
  const Excerpt ex = CutExcerpt(MixAtSnr(t, i, 0.0), 0, tg);
  const SeparatorParams params = InitParams(seed, net);
  Inputs in;
  params.Bind(in);
  in.Bind("mixture", ex.mixture).Bind("target", ex.target).Bind("interference", ex.interference);
  GradCheckOptions opt;
  opt.seed = seed;
  opt.max_coords = 6;
  return CheckGradients(tg.graph(), in, params.names(), opt);
}

int CmdGradcheck(const ExperimentConfig& cfg, const std::string& loss, uint64_t seed,
                 int64_t length) {
  GradCheckReport r;
  if (loss == "network") {
    r = GradCheckNetwork(seed, length > 0 ? length : 3000, cfg.network);
  } else {
    const std::optional<LossKind> kind = ParseLossKind(loss);
    if (!kind) throw Error(ErrorCode::kConfigError, "unknown loss '" + loss + "'");
    // One STOI segment needs 30 frames at the analysis rate.
    const int64_t n = length > 0 ? length : (*kind == LossKind::kStoi ? 4000 : 2048);
    r = GradCheckSignalLoss(*kind, seed, n, cfg.stoi);
  }
  std::printf("loss=%s seed=%llu value=%.17g coordinates=%lld\n", loss.c_str(),
              static_cast<unsigned long long>(seed), r.value,
              static_cast<long long>(r.coordinates_checked));
  for (const auto& [name, err] : r.per_input) {
    std::printf("  %-16s max relative error %.3e\n", name.c_str(), err);
  }
  std::printf("max relative error %.3e\n", r.max_relative_error);
  return r.max_relative_error <= 1e-4 ? kExitOk : kExitFailed;
}

// --- export-bases ----------------------------------------------------------

int CmdExportBases(const std::string& ckpt, const std::string& out) {
  Checkpoint c;
  try {
    c = LoadCheckpoint(ckpt);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kIoError) throw;
    throw Error(ErrorCode::kCorruptFile, e.what());
  }
  const std::string csv = ExportBasesCsv(c.params, c.params.config().sample_rate);
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    WriteText(out, csv);
  }
  return kExitOk;
}

int Run(int argc, char** argv) {
  CLI::App app{"Source separation with differentiable performance-based costs"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  Overrides overrides;

  CLI::App* train = app.add_subcommand("train", "fit a separator on a directory pair");
  TrainArgs ta;
  train->add_option("--targets", ta.targets, "directory of target WAVs")->required();
  train->add_option("--interferers", ta.interferers, "directory of interference WAVs")
      ->required();
  train->add_option("--out", ta.out, "checkpoint to write")->required();
  train->add_option("--log", ta.log, "JSON-lines training log");
  train->add_option("--resume", ta.resume, "checkpoint to continue from");
  overrides.Register(train, true);

  CLI::App* separate = app.add_subcommand("separate", "apply a checkpoint to a mixture");
  std::string sep_ckpt, sep_in, sep_out;
  separate->add_option("--checkpoint", sep_ckpt)->required();
  separate->add_option("--input", sep_in)->required();
  separate->add_option("--output", sep_out)->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "SDR, SIR, SAR and STOI as CSV");
  std::string ev_est, ev_target, ev_interf, ev_name;
  bool ev_no_header = false;
  evaluate->add_option("--estimate", ev_est)->required();
  evaluate->add_option("--target", ev_target)->required();
  evaluate->add_option("--interference", ev_interf)->required();
  evaluate->add_option("--name", ev_name, "value of the file column");
  evaluate->add_flag("--no-header", ev_no_header);
  overrides.Register(evaluate, false);

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "compare gradients with differences");
  std::string gc_loss;
  uint64_t gc_seed = 0;
  int64_t gc_len = 0;
  gradcheck->add_option("--loss", gc_loss, "mse, sdr, sir, sar, stoi or network")->required();
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_option("--length", gc_len, "signal length in samples");

  CLI::App* export_bases = app.add_subcommand("export-bases", "analysis filters as CSV");
  std::string eb_ckpt, eb_out;
  export_bases->add_option("--checkpoint", eb_ckpt)->required();
  export_bases->add_option("--out", eb_out, "output path, - for stdout");

  CLI::App* print = app.add_subcommand("print-config", "print the effective configuration");
  overrides.Register(print, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const ExperimentConfig cfg = ResolveConfig(config_path, overrides);
    if (print_config || *print) {
      std::cout << ExperimentConfigToJson(cfg).dump(2) << "\n";
      return kExitOk;
    }
    if (*train) return CmdTrain(cfg, ta);
    if (*separate) return CmdSeparate(sep_ckpt, sep_in, sep_out);
    if (*evaluate) {
      return CmdEvaluate(cfg, ev_est, ev_target, ev_interf, ev_name, !ev_no_header);
    }
    if (*gradcheck) return CmdGradcheck(cfg, gc_loss, gc_seed, gc_len);
    if (*export_bases) return CmdExportBases(eb_ckpt, eb_out);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kNumericalDivergence ? kExitDivergence : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace
}  // namespace aetsep

int main(int argc, char** argv) { return aetsep::Run(argc, argv); }
