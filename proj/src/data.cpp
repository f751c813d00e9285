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

#include "clover/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "clover/error.hpp"
#include "text_util.hpp"

namespace clover {

namespace {

namespace chr = std::chrono;

struct TimeKey {
  bool integer = false;
  long long value = 0;  // index, or days since 1970-01-01

  auto operator<=>(const TimeKey&) const = default;
};

bool all_digits(std::string_view s) {
  if (!s.empty() && s[0] == '-') s.remove_prefix(1);
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<chr::year_month_day> parse_iso_date(std::string_view s) {
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  std::size_t y = 0;
  std::size_t m = 0;
  std::size_t d = 0;
  if (!text::parse_size(s.substr(0, 4), y) || !text::parse_size(s.substr(5, 2), m) ||
      !text::parse_size(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  const chr::year_month_day ymd{chr::year(static_cast<int>(y)), chr::month(static_cast<unsigned>(m)),
                                chr::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

TimeKey parse_time(std::string_view s) {
  s = text::trim(s);
  if (all_digits(s)) {
    long long v = 0;
    std::istringstream in{std::string(s)};
    in >> v;
    return {true, v};
  }
  if (auto ymd = parse_iso_date(s)) {
    return {false, chr::sys_days(*ymd).time_since_epoch().count()};
  }
  throw DataError("unrecognized timestamp '" + std::string(s) +
                  "' (expected YYYY-MM-DD or an integer)");
}

std::size_t calendar_slot(const TimeKey& key, Frequency frequency) {
  const auto period = static_cast<long long>(season_length(frequency));
  if (key.integer) return static_cast<std::size_t>(((key.value % period) + period) % period);
  const chr::sys_days day{chr::days(key.value)};
  const chr::year_month_day ymd{day};
  switch (frequency) {
    case Frequency::kDaily:
      return chr::weekday(day).iso_encoding() - 1;
    case Frequency::kWeekly: {
      const auto jan1 = chr::sys_days(ymd.year() / chr::January / 1);
      return std::min<std::size_t>(static_cast<std::size_t>((day - jan1).count() / 7), 51);
    }
    case Frequency::kMonthly:
      return static_cast<unsigned>(ymd.month()) - 1;
    case Frequency::kQuarterly:
      return (static_cast<unsigned>(ymd.month()) - 1) / 3;
  }
  return 0;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    out.emplace_back(text::trim(text.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::string format_date(long long days) {
  const chr::year_month_day ymd{chr::sys_days{chr::days(days)}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Tensor parse_static(std::string_view text, const HierarchySpec& spec) {
  const std::size_t nb = spec.bottom_ids.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t b = 0; b < nb; ++b) index.emplace(spec.bottom_ids[b], b);
  const auto lines = lines_of(text);
  std::size_t li = 0;
  while (li < lines.size() && lines[li].empty()) ++li;
  if (li == lines.size()) throw DataError("static features: empty file");
  const auto header = text::split(lines[li], ',');
  if (header.size() < 2 || header[0] != "unique_id") {
    throw DataError("static features: header must be unique_id,feature...");
  }
  const std::size_t nf = header.size() - 1;
  Tensor out(Shape{nb, nf});
  std::vector<bool> seen(nb, false);
  for (++li; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string where = "static features line " + std::to_string(li + 1) + ": ";
    const auto cells = text::split(lines[li], ',');
    if (cells.size() != header.size()) throw DataError(where + "wrong number of columns");
    auto it = index.find(cells[0]);
    if (it == index.end()) throw DataError(where + "unknown series id '" + cells[0] + "'");
    if (seen[it->second]) throw DataError(where + "duplicate series id '" + cells[0] + "'");
    seen[it->second] = true;
    for (std::size_t f = 0; f < nf; ++f) {
      double v = 0.0;
      if (!text::parse_double(cells[f + 1], v)) {
        throw DataError(where + "non-numeric value for '" + header[f + 1] + "'");
      }
      out.at(it->second, f) = v;
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    if (!seen[b]) throw DataError("static features: no row for series '" + spec.bottom_ids[b] + "'");
  }
  return out;
}

}  // namespace

std::string frequency_name(Frequency frequency) {
  switch (frequency) {
    case Frequency::kDaily: return "daily";
    case Frequency::kWeekly: return "weekly";
    case Frequency::kMonthly: return "monthly";
    case Frequency::kQuarterly: return "quarterly";
  }
  return "unknown";
}

Frequency parse_frequency(const std::string& name) {
  if (name == "daily") return Frequency::kDaily;
  if (name == "weekly") return Frequency::kWeekly;
  if (name == "monthly") return Frequency::kMonthly;
  if (name == "quarterly") return Frequency::kQuarterly;
  throw ConfigError("frequency: expected daily, weekly, monthly or quarterly, got '" + name + "'");
}

std::size_t season_length(Frequency frequency) {
  switch (frequency) {
    case Frequency::kDaily: return 7;
    case Frequency::kWeekly: return 52;
    case Frequency::kMonthly: return 12;
    case Frequency::kQuarterly: return 4;
  }
  return 1;
}

HierDataset parse_csv(std::string_view data_text, const HierarchySpec& spec, Frequency frequency,
                      std::string_view static_text) {
  spec.validate();
  const std::size_t nb = spec.bottom_ids.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t b = 0; b < nb; ++b) index.emplace(spec.bottom_ids[b], b);

  const auto lines = lines_of(data_text);
  std::size_t li = 0;
  while (li < lines.size() && lines[li].empty()) ++li;
  if (li == lines.size()) throw DataError("data: empty file");
  const auto header = text::split(lines[li], ',');
  if (header.size() < 3 || header[0] != "unique_id" || header[1] != "ds" || header[2] != "y") {
    throw DataError("data: header must start with unique_id,ds,y");
  }
  const std::size_t nc = header.size() - 3;

  struct Row {
    TimeKey key;
    std::string ds;
    double y;
    std::vector<double> cov;
  };
  std::vector<std::map<TimeKey, Row>> per_series(nb);
  std::map<TimeKey, std::string> all_times;
  std::optional<bool> integer_times;
  for (++li; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string where = "data line " + std::to_string(li + 1) + ": ";
    const auto cells = text::split(lines[li], ',');
    if (cells.size() != header.size()) {
      throw DataError(where + "expected " + std::to_string(header.size()) + " columns, found " +
                      std::to_string(cells.size()));
    }
    auto it = index.find(cells[0]);
    if (it == index.end()) throw DataError(where + "unknown series id '" + cells[0] + "'");
    Row row;
    try {
      row.key = parse_time(cells[1]);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    if (integer_times && *integer_times != row.key.integer) {
      throw DataError(where + "mixes integer and date timestamps");
    }
    integer_times = row.key.integer;
    row.ds = cells[1];
    if (!text::parse_double(cells[2], row.y) || !std::isfinite(row.y)) {
      throw DataError(where + "non-numeric y '" + cells[2] + "' for series '" + cells[0] + "'");
    }
    for (std::size_t c = 0; c < nc; ++c) {
      double v = 0.0;
      if (!text::parse_double(cells[3 + c], v)) {
        throw DataError(where + "non-numeric value for '" + header[3 + c] + "'");
      }
      row.cov.push_back(v);
    }
    auto& series = per_series[it->second];
    if (series.contains(row.key)) {
      throw DataError(where + "duplicate (unique_id, ds) = (" + cells[0] + ", " + cells[1] + ")");
    }
    all_times.emplace(row.key, row.ds);
    series.emplace(row.key, std::move(row));
  }
  if (all_times.empty()) throw DataError("data: no rows");

  const std::size_t t_len = all_times.size();
  HierDataset ds;
  ds.hierarchy = spec;
  ds.frequency = frequency;
  ds.values = Tensor(Shape{nb, t_len});
  ds.covariates = Tensor(Shape{nb, nc, t_len});
  ds.covariate_names.assign(header.begin() + 3, header.end());
  for (const auto& [key, label] : all_times) ds.timestamps.push_back(label);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& series = per_series[b];
    if (series.size() != t_len) {
      std::string missing;
      for (const auto& [key, label] : all_times) {
        if (!series.contains(key)) {
          missing = label;
          break;
        }
      }
      throw DataError("ragged series '" + spec.bottom_ids[b] + "': " +
                      std::to_string(series.size()) + " of " + std::to_string(t_len) +
                      " timestamps (first missing ds " + missing + ")");
    }
    std::size_t t = 0;
    for (const auto& [key, row] : series) {
      ds.values.at(b, t) = row.y;
      for (std::size_t c = 0; c < nc; ++c) ds.covariates.at(b, c, t) = row.cov[c];
      ++t;
    }
  }
  if (static_text.empty()) {
    ds.static_features = Tensor(Shape{nb, 1}, 1.0);
  } else {
    ds.static_features = parse_static(static_text, spec);
  }
  return ds;
}

HierDataset load_csv(const std::string& data_path, const std::string& hierarchy_path,
                     Frequency frequency, const std::string& static_path) {
  const HierarchySpec spec = load_hierarchy_spec(hierarchy_path);
  const std::string statics = static_path.empty() ? std::string() : text::read_file(static_path);
  return parse_csv(text::read_file(data_path), spec, frequency, statics);
}

std::string format_csv(const HierDataset& dataset) {
  std::ostringstream os;
  os << "unique_id,ds,y";
  for (const auto& name : dataset.covariate_names) os << ',' << name;
  os << '\n';
  const std::size_t nc = dataset.covariate_names.size();
  for (std::size_t b = 0; b < dataset.n_bottom(); ++b) {
    for (std::size_t t = 0; t < dataset.length(); ++t) {
      os << dataset.hierarchy.bottom_ids[b] << ',' << dataset.timestamps[t] << ','
         << text::format_double(dataset.value(b, t));
      for (std::size_t c = 0; c < nc; ++c) {
        os << ',' << text::format_double(dataset.covariates.at(b, c, t));
      }
      os << '\n';
    }
  }
  return os.str();
}

void export_csv(const HierDataset& dataset, const std::string& path) {
  text::write_file(path, format_csv(dataset));
}

CalendarFeatures make_calendar_features(std::span<const std::string> timestamps,
                                        Frequency frequency, const Tensor* values) {
  const std::size_t t_len = timestamps.size();
  const std::size_t period = season_length(frequency);
  CalendarFeatures out;
  out.dummies = Tensor(Shape{period, t_len});
  for (std::size_t t = 0; t < t_len; ++t) {
    out.dummies.at(calendar_slot(parse_time(timestamps[t]), frequency), t) = 1.0;
  }
  if (values != nullptr) {
    if (values->rank() != 2 || values->dim(1) != t_len) {
      throw ShapeError("calendar features: values " + shape_string(values->shape()) +
                       " do not match " + std::to_string(t_len) + " timestamps");
    }
    const std::size_t nb = values->dim(0);
    out.anchor = Tensor(Shape{nb, t_len});
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t t = 0; t < t_len; ++t) {
        out.anchor.at(b, t) = t < period ? values->at(b, 0) : values->at(b, t - period);
      }
    }
  }
  return out;
}

Splits split(const HierDataset& dataset, const SplitSpec& spec) {
  if (spec.horizon == 0) throw ConfigError("split: horizon must be >= 1");
  const std::size_t t_len = dataset.length();
  if (t_len < 3 * spec.horizon) {
    throw DataError("split: series length " + std::to_string(t_len) + " < 3 * horizon (" +
                    std::to_string(3 * spec.horizon) + ")");
  }
  const std::size_t val_begin = t_len - 2 * spec.horizon;
  const std::size_t test_begin = t_len - spec.horizon;
  return Splits{{&dataset, 0, val_begin},
                {&dataset, val_begin, test_begin},
                {&dataset, test_begin, t_len}};
}

Tensor series_scale(const DatasetView& view) {
  const std::size_t nb = view.data->n_bottom();
  Tensor scale(Shape{nb}, 1.0);
  if (view.length() == 0) return scale;
  for (std::size_t b = 0; b < nb; ++b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < view.length(); ++t) acc += std::abs(view.value(b, t));
    const double m = acc / static_cast<double>(view.length());
    if (m > 0.0) scale[b] = m;
  }
  return scale;
}

WindowMaker::WindowMaker(const HierDataset& dataset, const FeatureConfig& features,
                         std::size_t horizon, Tensor scale)
    : data_(&dataset),
      features_(features),
      horizon_(horizon),
      scale_(std::move(scale)),
      s_(build_aggregation_matrix(dataset.hierarchy)),
      period_(features.season_length > 0 ? features.season_length
                                         : season_length(dataset.frequency)) {
  if (horizon_ == 0) throw ConfigError("horizon must be >= 1");
  if (features_.lookback == 0) throw ConfigError("lookback must be >= 1");
  if (scale_.shape() != Shape{dataset.n_bottom()}) {
    throw ShapeError("window maker: scale must be [N_b]");
  }
  if (features_.season_length > 0 && features_.season_length != season_length(dataset.frequency)) {
    // Custom season: dummies follow the index, not the calendar.
    dummies_ = Tensor(Shape{period_, dataset.length()});
    for (std::size_t t = 0; t < dataset.length(); ++t) dummies_.at(t % period_, t) = 1.0;
  } else {
    dummies_ = make_calendar_features(dataset.timestamps, dataset.frequency).dummies;
  }
}

InputDims WindowMaker::dims() const {
  const std::size_t nc = data_->covariates.rank() == 3 ? data_->covariates.dim(1) : 0;
  return InputDims{s_.rows(), s_.n_bottom(), 1 + period_ + nc,
                   period_ + (features_.seasonal_anchor ? 1 : 0) + nc,
                   data_->static_features.dim(1)};
}

std::size_t WindowMaker::first_end() const {
  return std::max(features_.lookback, features_.seasonal_anchor ? period_ : std::size_t{1});
}

FeatureBundle WindowMaker::window(std::size_t end) const {
  const std::size_t t_len = data_->length();
  if (end < first_end() || end + horizon_ > t_len) {
    throw DataError("window end " + std::to_string(end) + " outside [" +
                    std::to_string(first_end()) + ", " +
                    std::to_string(t_len >= horizon_ ? t_len - horizon_ : 0) + "]");
  }
  const std::size_t nb = data_->n_bottom();
  const std::size_t nc = data_->covariates.rank() == 3 ? data_->covariates.dim(1) : 0;
  const std::size_t lb = features_.lookback;
  const InputDims d = dims();
  FeatureBundle out;
  out.historical = Tensor(Shape{nb, d.historical_channels, lb});
  out.future = Tensor(Shape{nb, d.future_channels, horizon_});
  out.statics = data_->static_features;
  out.scale = scale_;
  out.target_channel = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t tau = 0; tau < lb; ++tau) {
      const std::size_t t = end - lb + tau;
      out.historical.at(b, 0, tau) = data_->value(b, t);
      for (std::size_t p = 0; p < period_; ++p) out.historical.at(b, 1 + p, tau) = dummies_.at(p, t);
      for (std::size_t c = 0; c < nc; ++c) {
        out.historical.at(b, 1 + period_ + c, tau) = data_->covariates.at(b, c, t);
      }
    }
    for (std::size_t h = 0; h < horizon_; ++h) {
      const std::size_t t = end + h;
      std::size_t ch = 0;
      for (std::size_t p = 0; p < period_; ++p) out.future.at(b, ch++, h) = dummies_.at(p, t);
      if (features_.seasonal_anchor) {
        // Last observed value of the same season.
        const std::size_t src = end - period_ + (h % period_);
        out.future.at(b, ch++, h) = data_->value(b, src) / scale_[b];
      }
      for (std::size_t c = 0; c < nc; ++c) out.future.at(b, ch++, h) = data_->covariates.at(b, c, t);
    }
  }
  return out;
}

Tensor WindowMaker::targets(std::size_t end) const {
  if (end + horizon_ > data_->length()) {
    throw DataError("targets: window [" + std::to_string(end) + ", " +
                    std::to_string(end + horizon_) + ") runs past the data");
  }
  const std::size_t nb = data_->n_bottom();
  Tensor bottom(Shape{nb, horizon_});
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t h = 0; h < horizon_; ++h) bottom.at(b, h) = data_->value(b, end + h);
  }
  return aggregate(s_, bottom);
}

std::vector<double> WindowMaker::last_observation(std::size_t end) const {
  if (end == 0 || end > data_->length()) throw DataError("last_observation: no history before end");
  const std::size_t nb = data_->n_bottom();
  Tensor bottom(Shape{nb});
  for (std::size_t b = 0; b < nb; ++b) bottom[b] = data_->value(b, end - 1);
  const Tensor all = aggregate(s_, bottom);
  return {all.values().begin(), all.values().end()};
}

std::string SyntheticDataset::metadata() const {
  std::ostringstream os;
  os << "generator = synthetic\n"
     << "n_bottom = " << config.n_bottom << '\n'
     << "length = " << config.length << '\n'
     << "n_factors = " << config.n_factors << '\n'
     << "seed = " << config.seed << '\n'
     << "period = " << config.period << '\n'
     << "level_min = " << text::format_double(config.level_min) << '\n'
     << "level_max = " << text::format_double(config.level_max) << '\n'
     << "amplitude = " << text::format_double(config.amplitude) << '\n'
     << "ar = " << text::format_double(config.ar) << '\n'
     << "noise_scale = " << text::format_double(config.noise_scale) << '\n'
     << "loading = " << text::format_double(config.loading) << '\n';
  const auto& ids = data.hierarchy.bottom_ids;
  for (std::size_t b = 0; b < ids.size(); ++b) {
    os << "series." << ids[b] << ".level = " << text::format_double(levels[b]) << '\n'
       << "series." << ids[b] << ".amplitude = " << text::format_double(amplitudes[b]) << '\n'
       << "series." << ids[b] << ".phase = " << text::format_double(phases[b]) << '\n';
    for (std::size_t k = 0; k < config.n_factors; ++k) {
      os << "series." << ids[b] << ".loading" << k << " = "
         << text::format_double(loadings.at(b, k)) << '\n';
    }
  }
  return os.str();
}

SyntheticDataset make_synthetic(const SyntheticConfig& config) {
  const std::size_t nb = config.n_bottom;
  const std::size_t t_len = config.length;
  const std::size_t nk = config.n_factors;
  if (nb < 2) throw ConfigError("make_synthetic: n_bottom must be >= 2");
  if (t_len < 1 || config.period < 1) throw ConfigError("make_synthetic: length and period must be >= 1");
  if (!(std::abs(config.ar) < 1.0)) throw ConfigError("make_synthetic: |ar| must be < 1");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SyntheticDataset out;
  out.config = config;
  out.loadings = Tensor(Shape{nb, nk});
  for (std::size_t b = 0; b < nb; ++b) {
    out.levels.push_back(config.level_min + (config.level_max - config.level_min) * unit(rng));
    out.amplitudes.push_back(config.amplitude * (0.5 + unit(rng)));
    out.phases.push_back(0.5 * unit(rng));
    for (std::size_t k = 0; k < nk; ++k) {
      out.loadings.at(b, k) = k == 0 ? config.loading
                                     : 0.5 * config.loading * (unit(rng) < 0.5 ? -1.0 : 1.0);
    }
  }

  const int width = static_cast<int>(std::to_string(nb - 1).size());
  HierarchySpec spec;
  for (std::size_t b = 0; b < nb; ++b) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%0*zu", width, b);
    spec.bottom_ids.emplace_back(buf);
  }
  HierarchyLevel half{"half", {}};
  const std::size_t mid = nb / 2;
  half.groups["H1"].assign(spec.bottom_ids.begin(), spec.bottom_ids.begin() + mid);
  half.groups["H2"].assign(spec.bottom_ids.begin() + mid, spec.bottom_ids.end());
  spec.levels.push_back(std::move(half));
  spec.top_included = true;

  HierDataset& ds = out.data;
  ds.hierarchy = spec;
  ds.frequency = Frequency::kDaily;
  ds.values = Tensor(Shape{nb, t_len});
  ds.covariates = Tensor(Shape{nb, 0, t_len});
  ds.static_features = Tensor(Shape{nb, nb});
  for (std::size_t b = 0; b < nb; ++b) ds.static_features.at(b, b) = 1.0;
  const long long start = chr::sys_days(chr::year(2020) / chr::January / 1).time_since_epoch().count();
  for (std::size_t t = 0; t < t_len; ++t) ds.timestamps.push_back(format_date(start + static_cast<long long>(t)));

  const double stationary = config.noise_scale / std::sqrt(1.0 - config.ar * config.ar);
  std::vector<double> u(nb);
  for (std::size_t b = 0; b < nb; ++b) u[b] = stationary * normal(rng);
  std::vector<double> f(nk);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t k = 0; k < nk; ++k) f[k] = normal(rng);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(t % config.period) /
                         static_cast<double>(config.period);
    for (std::size_t b = 0; b < nb; ++b) {
      if (t > 0) u[b] = config.ar * u[b] + config.noise_scale * normal(rng);
      double y = out.levels[b] + out.amplitudes[b] * std::sin(angle + out.phases[b]) + u[b];
      for (std::size_t k = 0; k < nk; ++k) y += out.loadings.at(b, k) * f[k];
      ds.values.at(b, t) = std::max(y, 0.0);
    }
  }
  return out;
}

SyntheticDataset make_synthetic(std::size_t n_bottom, std::size_t length, std::size_t n_factors,
                                std::uint64_t seed) {
  SyntheticConfig config;
  config.n_bottom = n_bottom;
  config.length = length;
  config.n_factors = n_factors;
  config.seed = seed;
  return make_synthetic(config);
}

}  // namespace clover
