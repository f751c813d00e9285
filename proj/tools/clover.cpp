// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// clover: command-line front end.
//
// Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numerical
// failure.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clover/baselines.hpp"
#include "clover/checkpoint.hpp"
#include "clover/config.hpp"
#include "clover/data.hpp"
#include "clover/error.hpp"
#include "clover/factor_model.hpp"
#include "clover/hierarchy.hpp"
#include "clover/scoring.hpp"
#include "clover/training.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace clover;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects files written by a command so a failure can take them back.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty() && !fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const fs::path& p, const std::string& text) {
    written_.push_back(p);
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw DataError("cannot write '" + p.string() + "'");
  }

  void commit() { committed_ = true; }

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
    if (created_dir_) fs::remove(dir_, ec);  // only if still empty
  }

 private:
  fs::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> written_;
};

HierDataset load_dataset(const std::string& data_path, const HierarchySpec& spec,
                         Frequency frequency, const std::string& static_path) {
  const std::string static_text = static_path.empty() ? std::string() : read_text(static_path);
  return parse_csv(read_text(data_path), spec, frequency, static_text);
}

void require_same_hierarchy(const HierarchySpec& given, const HierarchySpec& stored) {
  if (format_hierarchy_spec(given) != format_hierarchy_spec(stored)) {
    throw ShapeError("--spec does not match the hierarchy stored in the checkpoint");
  }
}

DatasetView pick_split(const HierDataset& ds, std::size_t horizon, const std::string& which,
                       std::size_t& end) {
  const Splits s = split(ds, {horizon});
  if (which == "test") {
    end = s.test.begin;
    return s.test;
  }
  if (which == "validation") {
    end = s.validation.begin;
    return s.validation;
  }
  throw ConfigError("--split must be 'validation' or 'test', got '" + which + "'");
}

// ---------------------------------------------------------------------------

struct InspectArgs {
  std::string spec;
};

int run_inspect(const InspectArgs& a) {
  const HierarchySpec spec = load_hierarchy_spec(a.spec);
  const AggregationMatrix s = build_aggregation_matrix(spec);
  const auto masks = level_masks(spec);

  std::size_t label_width = 0;
  for (const auto& l : s.row_labels()) label_width = std::max(label_width, l.size());
  std::string header(label_width + 2, ' ');
  for (const auto& id : spec.bottom_ids) header += " " + id;
  std::cout << header << '\n';
  const std::string rule(header.size(), '-');

  std::size_t row = 0;
  for (std::size_t m = 0; m < masks.size(); ++m) {
    if (m > 0) std::cout << rule << '\n';
    for (std::size_t i = 0; i < masks[m].count; ++i, ++row) {
      std::string line = s.row_labels()[row];
      line.resize(label_width + 2, ' ');
      for (std::size_t b = 0; b < s.n_bottom(); ++b) {
        std::string cell = s(row, b) == 1.0 ? "1" : "0";
        cell.insert(0, spec.bottom_ids[b].size() + 1 - cell.size(), ' ');
        line += cell;
      }
      std::cout << line << '\n';
    }
  }
  std::cout << '\n' << s.rows() << " rows (" << s.n_aggregate() << " aggregate, " << s.n_bottom()
            << " bottom)\n";
  for (const auto& mk : masks) std::cout << "  " << mk.name << ": " << mk.count << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SyntheticArgs {
  std::string out;
  SyntheticConfig config;
};

int run_generate(SyntheticArgs a) {
  const SyntheticDataset syn = make_synthetic(a.config);
  OutputSet out(a.out);
  out.write(out.path("data.csv"), format_csv(syn.data));
  out.write(out.path("hierarchy.txt"), format_hierarchy_spec(syn.data.hierarchy));
  std::string statics = "unique_id";
  for (std::size_t j = 0; j < syn.data.static_features.dim(1); ++j) {
    statics += ",onehot" + std::to_string(j);
  }
  statics += '\n';
  for (std::size_t b = 0; b < syn.data.n_bottom(); ++b) {
    statics += syn.data.hierarchy.bottom_ids[b];
    for (std::size_t j = 0; j < syn.data.static_features.dim(1); ++j) {
      statics += "," + num(syn.data.static_features.at(b, j));
    }
    statics += '\n';
  }
  out.write(out.path("static.csv"), statics);
  out.write(out.path("generator.txt"), syn.metadata());
  out.commit();
  std::cout << "wrote " << syn.data.n_bottom() << " series x " << syn.data.length()
            << " steps to " << a.out << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string spec;
  std::string config;
  std::string statics;
  std::string out;
  std::optional<std::string> objective;
  std::optional<std::size_t> max_steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> frequency;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  RunConfig rc = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  if (a.objective) rc.train.objective = parse_objective(*a.objective);
  if (a.max_steps) rc.train.max_steps = *a.max_steps;
  if (a.seed) rc.train.seed = *a.seed;
  if (a.frequency) rc.frequency = parse_frequency(*a.frequency);
  rc.validate();

  const HierarchySpec spec = load_hierarchy_spec(a.spec);
  const HierDataset ds = load_dataset(a.data, spec, rc.frequency, a.statics);

  OutputSet out(a.out);
  std::string history = "step,train_loss,val_scrps,lr\n";
  const TrainResult res =
      train(ds, rc.network, rc.features, rc.train, [&](const HistoryRow& row) {
        history += std::to_string(row.step) + "," + num(row.train_loss) + "," +
                   num(row.val_scrps) + "," + num(row.lr) + "\n";
        if (!a.quiet && !std::isnan(row.val_scrps)) {
          std::cerr << "step " << row.step << "  loss " << row.train_loss << "  val sCRPS "
                    << row.val_scrps << '\n';
        }
        return true;
      });

  out.write(out.path("checkpoint.txt"), format_checkpoint(Checkpoint{rc, res.model}));
  out.write(out.path("history.csv"), history);
  out.write(out.path("config.txt"), format_run_config(rc));
  out.commit();
  std::cout << "steps " << res.steps_run << (res.early_stopped ? " (early stop)" : "")
            << ", best val sCRPS " << num(res.best_val_scrps) << " at step " << res.best_step
            << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
  std::string data;
  std::string spec;
  std::string checkpoint;
  std::string statics;
  std::string split = "test";
  std::size_t n_samples = 1000;
  std::uint64_t seed = 20240501;
};

struct Forecast {
  HierDataset data;
  AggregationMatrix s;
  std::size_t horizon = 0;
  std::size_t end = 0;
  Tensor targets;
  std::vector<double> last;
};

// Loads data against the checkpoint hierarchy and builds the evaluation window.
Forecast prepare(const ForecastArgs& a, const Checkpoint& ck) {
  if (!a.spec.empty()) require_same_hierarchy(load_hierarchy_spec(a.spec), ck.model.hierarchy);
  Forecast f{load_dataset(a.data, ck.model.hierarchy, ck.config.frequency, a.statics),
             build_aggregation_matrix(ck.model.hierarchy), ck.model.network.horizon};
  pick_split(f.data, f.horizon, a.split, f.end);
  const WindowMaker wm(f.data, ck.model.features, f.horizon, ck.model.scale);
  f.targets = wm.targets(f.end);
  f.last = wm.last_observation(f.end);
  return f;
}

Tensor model_samples(const ForecastArgs& a, const Checkpoint& ck, const Forecast& f) {
  const WindowMaker wm(f.data, ck.model.features, f.horizon, ck.model.scale);
  return forecast_samples(ck.model, wm, f.end, a.n_samples, a.seed);
}

struct EvaluateArgs : ForecastArgs {
  std::string baseline;
  std::string metrics = "scrps";
  std::string json;
  std::size_t horizon = 0;
  std::string frequency = "daily";
  std::size_t period = 0;
};

int run_evaluate(const EvaluateArgs& a) {
  if (a.n_samples < 2) throw ConfigError("--n-samples must be >= 2");
  std::vector<Metric> metrics;
  for (const auto& m : CLI::detail::split(a.metrics, ',')) metrics.push_back(parse_metric(CLI::detail::trim_copy(m)));
  if (metrics.empty()) throw ConfigError("--metrics is empty");
  if (a.checkpoint.empty() && a.baseline.empty()) {
    throw ConfigError("evaluate needs --checkpoint, --baseline, or both");
  }
  if (!a.baseline.empty() && a.baseline != "naive" && a.baseline != "seasonal-naive") {
    throw ConfigError("unknown baseline '" + a.baseline + "' (naive, seasonal-naive)");
  }

  std::optional<Checkpoint> ck;
  Forecast f;
  if (!a.checkpoint.empty()) {
    ck = load_checkpoint(a.checkpoint);
    f = prepare(a, *ck);
  } else {
    if (a.spec.empty()) throw ConfigError("--spec is required without --checkpoint");
    if (a.horizon == 0) throw ConfigError("--horizon is required without --checkpoint");
    const HierarchySpec spec = load_hierarchy_spec(a.spec);
    f.data = load_dataset(a.data, spec, parse_frequency(a.frequency), a.statics);
    f.s = build_aggregation_matrix(spec);
    f.horizon = a.horizon;
    pick_split(f.data, f.horizon, a.split, f.end);
    Tensor bottom(Shape{f.data.n_bottom(), f.horizon});
    for (std::size_t b = 0; b < f.data.n_bottom(); ++b) {
      for (std::size_t h = 0; h < f.horizon; ++h) bottom.at(b, h) = f.data.value(b, f.end + h);
    }
    f.targets = aggregate(f.s, bottom);
    Tensor prev(Shape{f.data.n_bottom(), 1});
    for (std::size_t b = 0; b < f.data.n_bottom(); ++b) {
      prev.at(b, 0) = f.end > 0 ? f.data.value(b, f.end - 1) : 0.0;
    }
    const Tensor agg = aggregate(f.s, prev);
    f.last.assign(agg.values().begin(), agg.values().end());
  }

  std::vector<std::pair<std::string, Tensor>> forecasters;
  if (ck) forecasters.emplace_back("clover", model_samples(a, *ck, f));
  if (!a.baseline.empty()) {
    const DatasetView history{&f.data, 0, f.end};
    Tensor samples;
    if (a.baseline == "naive") {
      const Tensor point = naive_forecast(history, f.s, f.horizon);
      samples = Tensor(Shape{f.s.rows(), f.horizon, a.n_samples});
      for (std::size_t r = 0; r < point.size(); ++r) {
        for (std::size_t i = 0; i < a.n_samples; ++i) samples[r * a.n_samples + i] = point[r];
      }
    } else {
      const std::size_t period =
          a.period > 0 ? a.period
                       : (ck && ck->model.features.season_length > 0
                              ? ck->model.features.season_length
                              : season_length(f.data.frequency));
      samples = seasonal_naive_empirical(history, f.s, f.horizon, period, a.n_samples, a.seed);
    }
    forecasters.emplace_back(a.baseline, std::move(samples));
  }

  const auto masks = level_masks(ck ? ck->model.hierarchy : f.data.hierarchy);
  nlohmann::json report = nlohmann::json::array();
  std::cout << "forecaster,level,metric,value\n";
  for (const auto& [name, samples] : forecasters) {
    const EvaluationInputs in{&f.targets, &samples, f.last, a.seed};
    for (Metric m : metrics) {
      const EvaluationReport r = evaluate_report(m, in, masks);
      nlohmann::json levels = nlohmann::json::object();
      for (const auto& [level, value] : r.per_level) {
        std::cout << name << ',' << level << ',' << metric_name(m) << ',' << num(value) << '\n';
        levels[level] = value;
      }
      std::cout << name << ",overall," << metric_name(m) << ',' << num(r.overall) << '\n';
      report.push_back({{"forecaster", name},
                        {"metric", metric_name(m)},
                        {"split", a.split},
                        {"levels", levels},
                        {"overall", r.overall},
                        {"n_samples", r.n_samples},
                        {"seed", r.seed}});
    }
  }
  if (!a.json.empty()) {
    OutputSet out({});
    out.write(a.json, report.dump(2) + "\n");
    out.commit();
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SampleArgs : ForecastArgs {
  std::string out;
  std::string quantiles;
};

int run_sample(const SampleArgs& a) {
  if (a.n_samples < 2) throw ConfigError("--n-samples must be >= 2");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Forecast f = prepare(a, ck);
  const Tensor samples = model_samples(a, ck, f);
  const std::size_t nh = f.horizon;
  const std::size_t ns = a.n_samples;
  const auto& labels = f.s.row_labels();
  const std::size_t first = f.end;

  std::string text;
  if (a.quantiles.empty()) {
    text = "series,timestamp,horizon,sample,value\n";
    for (std::size_t r = 0; r < f.s.rows(); ++r) {
      for (std::size_t h = 0; h < nh; ++h) {
        for (std::size_t i = 0; i < ns; ++i) {
          text += labels[r] + ',' + f.data.timestamps[first + h] + ',' + std::to_string(h + 1) +
                  ',' + std::to_string(i) + ',' + num(samples.at(r, h, i)) + '\n';
        }
      }
    }
  } else {
    std::vector<double> levels;
    for (const auto& q : CLI::detail::split(a.quantiles, ',')) {
      double v = 0.0;
      const std::string t = CLI::detail::trim_copy(q);
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || p != t.data() + t.size()) {
        throw ConfigError("--quantiles: bad level '" + t + "'");
      }
      levels.push_back(v);
    }
    const Tensor qs = empirical_quantiles(samples, levels);
    text = "series,timestamp,horizon,quantile,value,target\n";
    for (std::size_t r = 0; r < f.s.rows(); ++r) {
      for (std::size_t h = 0; h < nh; ++h) {
        for (std::size_t j = 0; j < levels.size(); ++j) {
          text += labels[r] + ',' + f.data.timestamps[first + h] + ',' + std::to_string(h + 1) +
                  ',' + num(levels[j]) + ',' + num(qs.at(r, h, j)) + ',' +
                  num(f.targets.at(r, h)) + '\n';
        }
      }
    }
  }
  OutputSet out({});
  out.write(a.out, text);
  out.commit();
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CalibrationArgs : ForecastArgs {
  std::string out;
};

int run_calibration(const CalibrationArgs& a) {
  if (a.n_samples < 2) throw ConfigError("calibration: --n-samples must be >= 2");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Forecast f = prepare(a, ck);
  const Tensor samples = model_samples(a, ck, f);
  const std::size_t ns = a.n_samples;
  std::string text = "series,horizon,target,pit\n";
  std::vector<double> pits;
  for (std::size_t r = 0; r < f.s.rows(); ++r) {
    for (std::size_t h = 0; h < f.horizon; ++h) {
      const std::span<const double> row(samples.values().data() + (r * f.horizon + h) * ns, ns);
      const double pit = pit_value(f.targets.at(r, h), row);
      pits.push_back(pit);
      text += f.s.row_labels()[r] + ',' + std::to_string(h + 1) + ',' + num(f.targets.at(r, h)) +
              ',' + num(pit) + '\n';
    }
  }
  OutputSet out({});
  out.write(a.out, text);
  out.commit();
  std::cout << pits.size() << " PIT values, KS distance from uniform "
            << num(ks_uniform_distance(pits)) << '\n';
  return kExitOk;
}

void add_forecast_options(CLI::App* cmd, ForecastArgs& a, bool need_checkpoint) {
  cmd->add_option("--data", a.data, "Long-format CSV: unique_id,ds,y[,covariates]")->required();
  cmd->add_option("--spec", a.spec, "Hierarchy spec; must match the checkpoint if given");
  auto* ck = cmd->add_option("--checkpoint", a.checkpoint, "Trained model");
  if (need_checkpoint) ck->required();
  cmd->add_option("--static", a.statics, "Static features CSV: unique_id,f1,...");
  cmd->add_option("--split", a.split, "Forecast window: validation or test")
      ->check(CLI::IsMember({"validation", "test"}));
  cmd->add_option("--n-samples", a.n_samples, "Monte Carlo samples");
  cmd->add_option("--eval-seed,--seed", a.seed, "Sampling seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coherent hierarchical probabilistic forecasting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  InspectArgs inspect;
  auto* c_inspect = app.add_subcommand("inspect-hierarchy", "Print the aggregation matrix");
  c_inspect->add_option("--spec", inspect.spec, "Hierarchy spec file")->required();

  SyntheticArgs synth;
  auto* c_synth = app.add_subcommand("generate-synthetic", "Write a synthetic hierarchical dataset");
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--n-bottom", synth.config.n_bottom);
  c_synth->add_option("--length", synth.config.length);
  c_synth->add_option("--n-factors", synth.config.n_factors);
  c_synth->add_option("--seed", synth.config.seed);
  c_synth->add_option("--period", synth.config.period);
  c_synth->add_option("--noise-scale", synth.config.noise_scale);
  c_synth->add_option("--loading", synth.config.loading);
  c_synth->add_option("--amplitude", synth.config.amplitude);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Fit a model and write a checkpoint");
  c_train->add_option("--data", tr.data, "Long-format CSV")->required();
  c_train->add_option("--spec", tr.spec, "Hierarchy spec file")->required();
  c_train->add_option("--config", tr.config, "key = value run config");
  c_train->add_option("--static", tr.statics, "Static features CSV");
  c_train->add_option("--out", tr.out, "Output directory")->required();
  c_train->add_option("--objective", tr.objective, "crps, energy or nll");
  c_train->add_option("--max-steps", tr.max_steps, "Overrides sgd_max_steps");
  c_train->add_option("--seed", tr.seed, "Overrides seed");
  c_train->add_option("--frequency", tr.frequency, "daily, weekly, monthly or quarterly");
  c_train->add_flag("--quiet", tr.quiet, "No progress on stderr");

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score forecasts per hierarchy level");
  add_forecast_options(c_eval, ev, false);
  c_eval->add_option("--baseline", ev.baseline, "naive or seasonal-naive");
  c_eval->add_option("--metrics", ev.metrics, "Comma list of scrps, relse, ql");
  c_eval->add_option("--json", ev.json, "Also write the report as JSON");
  c_eval->add_option("--horizon", ev.horizon, "Forecast horizon when no checkpoint is given");
  c_eval->add_option("--frequency", ev.frequency, "Data frequency when no checkpoint is given");
  c_eval->add_option("--period", ev.period, "Seasonal-naive period (default: from frequency)");

  SampleArgs smp;
  auto* c_sample = app.add_subcommand("sample", "Export coherent forecast samples or quantiles");
  add_forecast_options(c_sample, smp, true);
  c_sample->add_option("--out", smp.out, "Output CSV")->required();
  c_sample->add_option("--quantiles", smp.quantiles, "Comma list of levels, e.g. 0.1,0.5,0.9");

  CalibrationArgs cal;
  auto* c_cal = app.add_subcommand("calibration", "Export PIT values for a PP plot");
  add_forecast_options(c_cal, cal, true);
  c_cal->add_option("--out", cal.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*c_inspect) return run_inspect(inspect);
    if (*c_synth) return run_generate(synth);
    if (*c_train) return run_train(tr);
    if (*c_eval) return run_evaluate(ev);
    if (*c_sample) return run_sample(smp);
    if (*c_cal) return run_calibration(cal);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
