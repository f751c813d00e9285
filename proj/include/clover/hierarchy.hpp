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

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "clover/tensor.hpp"

namespace clover {

/// One level of the hierarchy: a partition of the bottom ids into groups.
struct HierarchyLevel {
  std::string name;
  // group label -> member bottom ids. Iteration order (lexicographic labels)
  // is the row order of the level's block in the aggregation matrix.
  std::map<std::string, std::vector<std::string>> groups;
};

/// Declarative description of a hierarchy. Grouped hierarchies are several
/// independent levels over the same bottom set.
struct HierarchySpec {
  std::vector<std::string> bottom_ids;
  std::vector<HierarchyLevel> levels;
  bool top_included = true;

  // Throws DataError naming the offending field.
  void validate() const;
};

/// Parses the key=value hierarchy file format:
///
///     # comment
///     bottom_ids = A1, A2, B1, B2
///     top_included = true
///     levels = state                 (optional; fixes declaration order)
///     level.state.A = A1, A2
///     level.state.B = B1, B2
///
/// Levels appear in `levels` order, otherwise in order of first mention.
HierarchySpec parse_hierarchy_spec(std::string_view text);
HierarchySpec load_hierarchy_spec(const std::string& path);
std::string format_hierarchy_spec(const HierarchySpec& spec);

/// Binary (N_a + N_b) x N_b summing matrix S = [A; I].
///
/// Rows: the total row (if any), then each level's groups in declaration
/// order and lexicographic group label, then the bottom series. Immutable
/// after construction.
class AggregationMatrix {
 public:
  AggregationMatrix() = default;
  AggregationMatrix(Tensor matrix, std::vector<std::string> row_labels,
                    std::size_t n_bottom);

  std::size_t rows() const { return matrix_.dim(0); }
  std::size_t cols() const { return n_bottom_; }
  std::size_t n_aggregate() const { return rows() - n_bottom_; }
  std::size_t n_bottom() const { return n_bottom_; }

  const Tensor& matrix() const { return matrix_; }
  double operator()(std::size_t row, std::size_t col) const {
    return matrix_[row * n_bottom_ + col];
  }
  const std::vector<std::string>& row_labels() const { return row_labels_; }

  // Row-major [N_a + N_b, N_b].
  std::span<const double> values() const { return matrix_.values(); }

 private:
  Tensor matrix_;
  std::vector<std::string> row_labels_;
  std::size_t n_bottom_ = 0;
};

AggregationMatrix build_aggregation_matrix(const HierarchySpec& spec);

/// S * bottom. `bottom` has leading dimension N_b and any trailing shape; the
/// result has leading dimension N_a + N_b. The bottom block is copied, not
/// recomputed, so it equals the input exactly.
Tensor aggregate(const AggregationMatrix& s, const Tensor& bottom);

/// Binary indicator of the rows that belong to one level.
struct LevelMask {
  std::string name;
  std::vector<unsigned char> mask;
  std::size_t count = 0;
};

/// Masks for "total" (when present), each declared level, and "bottom", in
/// row order.
std::vector<LevelMask> level_masks(const HierarchySpec& spec);

/// All-ones mask named "overall".
LevelMask overall_mask(std::size_t n_rows);

}  // namespace clover
