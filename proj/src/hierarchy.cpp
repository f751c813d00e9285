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

#include "clover/hierarchy.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>

#include "clover/error.hpp"
#include "text_util.hpp"

namespace clover {

namespace {

const std::set<std::string> kReservedLevelNames = {"total", "bottom", "overall"};

std::unordered_map<std::string, std::size_t> index_bottom(const HierarchySpec& spec) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t b = 0; b < spec.bottom_ids.size(); ++b) index.emplace(spec.bottom_ids[b], b);
  return index;
}

}  // namespace

void HierarchySpec::validate() const {
  if (bottom_ids.empty()) throw DataError("bottom_ids: no bottom series declared");
  std::set<std::string> seen;
  for (const auto& id : bottom_ids) {
    if (id.empty()) throw DataError("bottom_ids: empty identifier");
    if (!seen.insert(id).second) throw DataError("bottom_ids: duplicate id '" + id + "'");
  }
  std::set<std::string> level_names;
  for (const auto& level : levels) {
    if (level.name.empty() || level.name.find('.') != std::string::npos) {
      throw DataError("levels: invalid level name '" + level.name + "'");
    }
    if (kReservedLevelNames.contains(level.name)) {
      throw DataError("levels: level name '" + level.name + "' is reserved");
    }
    if (!level_names.insert(level.name).second) {
      throw DataError("levels: duplicate level '" + level.name + "'");
    }
    if (level.groups.empty()) throw DataError("levels: level '" + level.name + "' is empty");
    std::set<std::string> covered;
    for (const auto& [label, members] : level.groups) {
      const std::string field = "level." + level.name + "." + label;
      if (members.empty()) throw DataError(field + ": group has no members");
      for (const auto& m : members) {
        if (!seen.contains(m)) throw DataError(field + ": unknown bottom id '" + m + "'");
        if (!covered.insert(m).second) {
          throw DataError(field + ": bottom id '" + m + "' appears in two groups of level '" +
                          level.name + "'");
        }
      }
    }
    for (const auto& id : bottom_ids) {
      if (!covered.contains(id)) {
        throw DataError("level." + level.name + ": bottom id '" + id + "' is not assigned to a group");
      }
    }
  }
}

HierarchySpec parse_hierarchy_spec(std::string_view text) {
  HierarchySpec spec;
  bool have_bottom = false;
  std::vector<std::string> declared_order;
  std::vector<std::string> mention_order;
  std::map<std::string, HierarchyLevel> levels;
  for (const auto& kv : text::parse_key_values(text)) {
    const std::string where = "line " + std::to_string(kv.line_no) + ": ";
    if (kv.key == "bottom_ids") {
      spec.bottom_ids = text::split(kv.value, ',');
      have_bottom = true;
    } else if (kv.key == "top_included") {
      if (kv.value == "true" || kv.value == "1") {
        spec.top_included = true;
      } else if (kv.value == "false" || kv.value == "0") {
        spec.top_included = false;
      } else {
        throw DataError(where + "top_included: expected true or false, got '" + kv.value + "'");
      }
    } else if (kv.key == "levels") {
      declared_order = text::split(kv.value, ',');
      for (const auto& name : declared_order) {
        if (name.empty()) throw DataError(where + "levels: empty level name");
      }
    } else if (kv.key.starts_with("level.")) {
      const std::string rest = kv.key.substr(6);
      const auto dot = rest.find('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size()) {
        throw DataError(where + kv.key + ": expected level.<name>.<group>");
      }
      const std::string name = rest.substr(0, dot);
      const std::string label = rest.substr(dot + 1);
      auto [it, inserted] = levels.try_emplace(name);
      if (inserted) {
        it->second.name = name;
        mention_order.push_back(name);
      }
      if (it->second.groups.contains(label)) {
        throw DataError(where + kv.key + ": group declared twice");
      }
      it->second.groups[label] = text::split(kv.value, ',');
    } else {
      throw DataError(where + "unknown field '" + kv.key + "'");
    }
  }
  if (!have_bottom) throw DataError("bottom_ids: missing");
  std::vector<std::string> order = declared_order;
  for (const auto& name : mention_order) {
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
  }
  for (const auto& name : order) {
    auto it = levels.find(name);
    if (it == levels.end()) {
      spec.levels.push_back(HierarchyLevel{name, {}});
    } else {
      spec.levels.push_back(std::move(it->second));
    }
  }
  spec.validate();
  return spec;
}

HierarchySpec load_hierarchy_spec(const std::string& path) {
  return parse_hierarchy_spec(text::read_file(path));
}

std::string format_hierarchy_spec(const HierarchySpec& spec) {
  std::ostringstream os;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  os << "bottom_ids = " << join(spec.bottom_ids) << '\n';
  os << "top_included = " << (spec.top_included ? "true" : "false") << '\n';
  std::vector<std::string> names;
  for (const auto& level : spec.levels) names.push_back(level.name);
  if (!names.empty()) os << "levels = " << join(names) << '\n';
  for (const auto& level : spec.levels) {
    for (const auto& [label, members] : level.groups) {
      os << "level." << level.name << '.' << label << " = " << join(members) << '\n';
    }
  }
  return os.str();
}

AggregationMatrix::AggregationMatrix(Tensor matrix, std::vector<std::string> row_labels,
                                     std::size_t n_bottom)
    : matrix_(std::move(matrix)), row_labels_(std::move(row_labels)), n_bottom_(n_bottom) {}

AggregationMatrix build_aggregation_matrix(const HierarchySpec& spec) {
  spec.validate();
  const std::size_t nb = spec.bottom_ids.size();
  const auto index = index_bottom(spec);
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  if (spec.top_included) {
    rows.emplace_back(nb, 1.0);
    labels.emplace_back("total");
  }
  for (const auto& level : spec.levels) {
    for (const auto& [label, members] : level.groups) {
      std::vector<double> row(nb, 0.0);
      for (const auto& m : members) row[index.at(m)] = 1.0;
      rows.push_back(std::move(row));
      labels.push_back(level.name + "/" + label);
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    std::vector<double> row(nb, 0.0);
    row[b] = 1.0;
    rows.push_back(std::move(row));
    labels.push_back(spec.bottom_ids[b]);
  }
  std::vector<double> flat;
  flat.reserve(rows.size() * nb);
  for (const auto& row : rows) flat.insert(flat.end(), row.begin(), row.end());
  return AggregationMatrix(Tensor(Shape{rows.size(), nb}, std::move(flat)), std::move(labels),
                           nb);
}

Tensor aggregate(const AggregationMatrix& s, const Tensor& bottom) {
  if (bottom.rank() == 0 || bottom.dim(0) != s.n_bottom()) {
    throw ShapeError("aggregate: leading dimension of " + shape_string(bottom.shape()) +
                     " must equal N_b = " + std::to_string(s.n_bottom()));
  }
  const std::size_t nb = s.n_bottom();
  const std::size_t na = s.n_aggregate();
  const std::size_t inner = bottom.size() / std::max<std::size_t>(nb, 1);
  Shape out_shape = bottom.shape();
  out_shape[0] = s.rows();
  Tensor out(out_shape);
  const auto in = bottom.values();
  auto ov = out.values();
  for (std::size_t r = 0; r < na; ++r) {
    double* dst = ov.data() + r * inner;
    for (std::size_t b = 0; b < nb; ++b) {
      if (s(r, b) == 0.0) continue;
      const double* src = in.data() + b * inner;
      for (std::size_t e = 0; e < inner; ++e) dst[e] += src[e];
    }
  }
  std::copy(in.begin(), in.end(), ov.begin() + static_cast<std::ptrdiff_t>(na * inner));
  return out;
}

std::vector<LevelMask> level_masks(const HierarchySpec& spec) {
  const AggregationMatrix s = build_aggregation_matrix(spec);
  const std::size_t n = s.rows();
  std::vector<LevelMask> masks;
  std::size_t row = 0;
  auto take = [&](std::string name, std::size_t count) {
    LevelMask m{std::move(name), std::vector<unsigned char>(n, 0), count};
    for (std::size_t i = 0; i < count; ++i) m.mask[row + i] = 1;
    row += count;
    masks.push_back(std::move(m));
  };
  if (spec.top_included) take("total", 1);
  for (const auto& level : spec.levels) take(level.name, level.groups.size());
  take("bottom", spec.bottom_ids.size());
  return masks;
}

LevelMask overall_mask(std::size_t n_rows) {
  return LevelMask{"overall", std::vector<unsigned char>(n_rows, 1), n_rows};
}

}  // namespace clover
