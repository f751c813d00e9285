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

#include "clover/checkpoint.hpp"

#include <sstream>
#include <vector>

#include "clover/error.hpp"
#include "text_util.hpp"

namespace clover {

namespace {

constexpr std::string_view kMagic = "# clover checkpoint v1";

struct Section {
  std::string header;  // text inside [...]
  std::string body;
};

std::vector<Section> split_sections(std::string_view text) {
  std::vector<Section> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    const std::string_view line = text::trim(text.substr(start, pos - start));
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
      out.push_back({std::string(line.substr(1, line.size() - 2)), {}});
    } else if (!out.empty()) {
      out.back().body.append(text.substr(start, pos - start));
      out.back().body.push_back('\n');
    }
    start = pos + 1;
  }
  return out;
}

void write_tensor(std::ostringstream& os, const std::string& name, const Tensor& t) {
  os << "[tensor " << name << "]\nshape = ";
  for (std::size_t i = 0; i < t.rank(); ++i) os << (i ? "," : "") << t.shape()[i];
  os << "\nvalues = ";
  for (std::size_t i = 0; i < t.size(); ++i) os << (i ? "," : "") << text::format_double(t[i]);
  os << '\n';
}

Tensor read_tensor(const std::string& name, const std::string& body) {
  Shape shape;
  std::vector<double> values;
  bool have_shape = false;
  bool have_values = false;
  for (const auto& kv : text::parse_key_values(body)) {
    if (kv.key == "shape") {
      for (const auto& piece : text::split(kv.value, ',')) {
        std::size_t d = 0;
        if (!text::parse_size(piece, d)) throw DataError("checkpoint tensor '" + name + "': bad shape");
        shape.push_back(d);
      }
      have_shape = true;
    } else if (kv.key == "values") {
      for (const auto& piece : text::split(kv.value, ',')) {
        double v = 0.0;
        if (!text::parse_double(piece, v)) {
          throw DataError("checkpoint tensor '" + name + "': bad value '" + piece + "'");
        }
        values.push_back(v);
      }
      have_values = true;
    } else {
      throw DataError("checkpoint tensor '" + name + "': unknown field '" + kv.key + "'");
    }
  }
  if (!have_shape || !have_values) {
    throw DataError("checkpoint tensor '" + name + "': needs shape and values");
  }
  try {
    return Tensor(shape, std::move(values));
  } catch (const ShapeError& e) {
    throw DataError("checkpoint tensor '" + name + "': " + e.what());
  }
}

}  // namespace

std::string format_checkpoint(const Checkpoint& checkpoint) {
  const Model& m = checkpoint.model;
  std::ostringstream os;
  os << kMagic << "\n[config]\n" << format_run_config(checkpoint.config);
  os << "[hierarchy]\n" << format_hierarchy_spec(m.hierarchy);
  os << "[dims]\n"
     << "n_series = " << m.dims.n_series << '\n'
     << "n_bottom = " << m.dims.n_bottom << '\n'
     << "historical_channels = " << m.dims.historical_channels << '\n'
     << "future_channels = " << m.dims.future_channels << '\n'
     << "static_channels = " << m.dims.static_channels << '\n';
  write_tensor(os, "scale", m.scale);
  for (const auto& [name, t] : m.params.entries()) write_tensor(os, "param." + name, t);
  return os.str();
}

Checkpoint parse_checkpoint(std::string_view text) {
  if (!text.starts_with(kMagic)) throw DataError("checkpoint: missing header line");
  Checkpoint cp;
  bool have_config = false;
  bool have_hierarchy = false;
  bool have_dims = false;
  bool have_scale = false;
  for (const auto& sec : split_sections(text)) {
    if (sec.header == "config") {
      cp.config = parse_run_config(sec.body);
      have_config = true;
    } else if (sec.header == "hierarchy") {
      cp.model.hierarchy = parse_hierarchy_spec(sec.body);
      have_hierarchy = true;
    } else if (sec.header == "dims") {
      for (const auto& kv : text::parse_key_values(sec.body)) {
        std::size_t v = 0;
        if (!text::parse_size(kv.value, v)) throw DataError("checkpoint dims: bad " + kv.key);
        auto& d = cp.model.dims;
        if (kv.key == "n_series") d.n_series = v;
        else if (kv.key == "n_bottom") d.n_bottom = v;
        else if (kv.key == "historical_channels") d.historical_channels = v;
        else if (kv.key == "future_channels") d.future_channels = v;
        else if (kv.key == "static_channels") d.static_channels = v;
        else throw DataError("checkpoint dims: unknown field '" + kv.key + "'");
      }
      have_dims = true;
    } else if (sec.header == "tensor scale") {
      cp.model.scale = read_tensor("scale", sec.body);
      have_scale = true;
    } else if (sec.header.starts_with("tensor param.")) {
      const std::string name = sec.header.substr(13);
      Tensor t = read_tensor(name, sec.body);
      t.set_requires_grad(true);
      cp.model.params.add(name, std::move(t));
    } else {
      throw DataError("checkpoint: unknown section [" + sec.header + "]");
    }
  }
  if (!have_config || !have_hierarchy || !have_dims || !have_scale) {
    throw DataError("checkpoint: missing [config], [hierarchy], [dims] or scale section");
  }
  cp.model.network = cp.config.network;
  cp.model.features = cp.config.features;
  if (cp.model.dims.n_bottom != cp.model.hierarchy.bottom_ids.size() ||
      cp.model.scale.shape() != Shape{cp.model.dims.n_bottom}) {
    throw ShapeError("checkpoint: dims disagree with the embedded hierarchy");
  }
  check_params(cp.model.params, cp.model.network, cp.model.dims);
  return cp;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  text::write_file(path, format_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  return parse_checkpoint(text::read_file(path));
}

}  // namespace clover
