#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "quiverbl/stability.hpp"

namespace quiverbl {

using Json = nlohmann::ordered_json;

namespace io {

inline Json matrix_to_json(const Matrix& v) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < v.cols(); ++c) row.push_back(v(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    throw Error(ErrorCode::ParseError, where + ": expected a 2D array of numbers");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix v(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw Error(ErrorCode::ParseError, where + ": ragged rows in matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        throw Error(ErrorCode::ParseError, where + ": non-numeric matrix entry at row " +
                                               std::to_string(r + 1));
      v(r, c) = j[r][c].get<double>();
    }
  }
  return v;
}

// Datum file format. Vertex indices are 1-based on disk; arrows and matrix
// keys follow the canonical (tail, head, label) order.
inline Json datum_to_json(const QuiverDatum& datum) {
  QuiverDatum canonical = datum;
  std::vector<std::size_t> order(datum.quiver.arrows.size());
  for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return canonical_less(datum.quiver.arrows[a], datum.quiver.arrows[b]);
  });

  Json arrows = Json::array();
  Json matrices = Json::object();
  for (std::size_t e : order) {
    const Arrow& a = datum.quiver.arrows[e];
    arrows.push_back({{"tail", a.tail + 1}, {"head", a.head + 1}, {"label", a.label}});
    matrices[a.label] = matrix_to_json(datum.matrices[e]);
  }

  Json j;
  j["quiver"] = {{"k", datum.quiver.num_sources},
                 {"m", datum.quiver.num_sinks},
                 {"arrows", std::move(arrows)}};
  j["dims"] = {{"sources", datum.dims.source_dims}, {"sinks", datum.dims.sink_dims}};
  j["weights"] = datum.weights;
  j["matrices"] = std::move(matrices);
  return j;
}

inline QuiverDatum datum_from_json(const Json& j, const std::string& where = "datum") {
  auto need = [&](const Json& node, const char* field) -> const Json& {
    if (!node.contains(field))
      throw Error(ErrorCode::ParseError, where + ": missing field '" + field + "'");
    return node.at(field);
  };

  QuiverDatum datum;
  const Json& quiver = need(j, "quiver");
  datum.quiver.num_sources = need(quiver, "k").get<int>();
  datum.quiver.num_sinks = need(quiver, "m").get<int>();
  for (const Json& arrow : need(quiver, "arrows")) {
    Arrow a;
    a.tail = need(arrow, "tail").get<int>() - 1;
    a.head = need(arrow, "head").get<int>() - 1;
    a.label = need(arrow, "label").get<std::string>();
    datum.quiver.arrows.push_back(std::move(a));
  }
  datum.quiver.canonicalize();

  const Json& dims = need(j, "dims");
  datum.dims.source_dims = need(dims, "sources").get<std::vector<int>>();
  datum.dims.sink_dims = need(dims, "sinks").get<std::vector<int>>();
  datum.weights = need(j, "weights").get<std::vector<double>>();

  const Json& matrices = need(j, "matrices");
  for (const Arrow& a : datum.quiver.arrows) {
    if (!matrices.contains(a.label))
      throw Error(ErrorCode::ParseError, where + ": missing matrix for arrow '" + a.label + "'");
    datum.matrices.push_back(
        matrix_from_json(matrices.at(a.label), where + ".matrices." + a.label));
  }
  return datum;
}

// Y tuple file: {"Y": [matrix, ...]} in sink order.
inline Json pd_tuple_to_json(const PdTuple& y) {
  Json blocks = Json::array();
  for (const Matrix& yj : y) blocks.push_back(matrix_to_json(yj));
  return Json{{"Y", std::move(blocks)}};
}

inline PdTuple pd_tuple_from_json(const Json& j, const std::string& where = "Y-file") {
  if (!j.contains("Y")) throw Error(ErrorCode::ParseError, where + ": missing field 'Y'");
  PdTuple y;
  std::size_t index = 0;
  for (const Json& block : j.at("Y"))
    y.push_back(matrix_from_json(block, where + ".Y[" + std::to_string(index++) + "]"));
  return y;
}

// Filtration file: per-vertex basis matrices (columns are basis vectors) and
// the composition type in block order, top-left block first.
inline Json filtration_to_json(const Filtration& f) {
  Json sources = Json::array();
  for (const Matrix& b : f.basis.source_parts) sources.push_back(matrix_to_json(b));
  Json sinks = Json::array();
  for (const Matrix& b : f.basis.sink_parts) sinks.push_back(matrix_to_json(b));
  Json type = Json::array();
  for (const DimVector& part : f.type)
    type.push_back({{"sources", part.source_dims}, {"sinks", part.sink_dims}});
  Json j;
  j["basis"] = {{"sources", std::move(sources)}, {"sinks", std::move(sinks)}};
  j["type"] = std::move(type);
  return j;
}

inline Filtration filtration_from_json(const Json& j, const std::string& where = "filtration") {
  Filtration f;
  if (!j.contains("basis") || !j.contains("type"))
    throw Error(ErrorCode::ParseError, where + ": expected fields 'basis' and 'type'");
  const Json& basis = j.at("basis");
  if (!basis.contains("sources") || !basis.contains("sinks"))
    throw Error(ErrorCode::ParseError, where + ": basis needs 'sources' and 'sinks'");
  for (const Json& b : basis.at("sources"))
    f.basis.source_parts.push_back(matrix_from_json(b, where + ".basis.sources"));
  for (const Json& b : basis.at("sinks"))
    f.basis.sink_parts.push_back(matrix_from_json(b, where + ".basis.sinks"));
  for (const Json& part : j.at("type")) {
    DimVector d;
    if (!part.contains("sources") || !part.contains("sinks"))
      throw Error(ErrorCode::ParseError, where + ": type entries need 'sources' and 'sinks'");
    d.source_dims = part.at("sources").get<std::vector<int>>();
    d.sink_dims = part.at("sinks").get<std::vector<int>>();
    f.type.push_back(std::move(d));
  }
  return f;
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline QuiverDatum load_datum(const std::string& path) {
  return datum_from_json(load_json(path), path);
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

// Shape spec for generated data, e.g.
//   "d:2,2;n:1,2;p:1,0.5;arrows:1-1,1-2,2-2"
// Arrows default to one per (source, sink) pair; weights default to the
// uniform value making the dims perpendicular.
struct ShapeSpec {
  BipartiteQuiver quiver;
  DimVector dims;
  Weights weights;
};

inline ShapeSpec parse_shape_spec(const std::string& spec) {
  std::vector<int> sources, sinks;
  Weights weights;
  std::vector<std::pair<int, int>> arrow_pairs;
  bool have_arrows = false;

  std::stringstream parts(spec);
  std::string part;
  while (std::getline(parts, part, ';')) {
    const std::size_t colon = part.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorCode::ParseError, "shape spec: expected 'key:values' in '" + part + "'");
    const std::string key = part.substr(0, colon);
    std::stringstream values(part.substr(colon + 1));
    std::string item;
    while (std::getline(values, item, ',')) {
      try {
        if (key == "d") sources.push_back(std::stoi(item));
        else if (key == "n") sinks.push_back(std::stoi(item));
        else if (key == "p") weights.push_back(std::stod(item));
        else if (key == "arrows") {
          const std::size_t dash = item.find('-');
          if (dash == std::string::npos) throw std::invalid_argument("expected tail-head");
          arrow_pairs.emplace_back(std::stoi(item.substr(0, dash)) - 1,
                                   std::stoi(item.substr(dash + 1)) - 1);
          have_arrows = true;
        } else
          throw Error(ErrorCode::ParseError, "shape spec: unknown key '" + key + "'");
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::ParseError, "shape spec: cannot parse '" + item + "' for key '" +
                                               key + "'");
      }
    }
  }
  if (sources.empty() || sinks.empty())
    throw Error(ErrorCode::ParseError, "shape spec: 'd' and 'n' are required");

  ShapeSpec shape;
  shape.dims.source_dims = sources;
  shape.dims.sink_dims = sinks;
  shape.quiver.num_sources = static_cast<int>(sources.size());
  shape.quiver.num_sinks = static_cast<int>(sinks.size());

  if (!have_arrows) {  // complete bipartite
    for (int i = 0; i < shape.quiver.num_sources; ++i)
      for (int j = 0; j < shape.quiver.num_sinks; ++j) arrow_pairs.emplace_back(i, j);
  }
  int counter = 1;
  for (const auto& [tail, head] : arrow_pairs) {
    if (tail < 0 || tail >= shape.quiver.num_sources || head < 0 ||
        head >= shape.quiver.num_sinks)
      throw Error(ErrorCode::ParseError, "shape spec: arrow endpoint out of range");
    shape.quiver.arrows.push_back({tail, head, "a" + std::to_string(counter++)});
  }
  shape.quiver.canonicalize();

  if (weights.empty()) {
    double total_source = 0.0, total_sink = 0.0;
    for (int d : sources) total_source += d;
    for (int n : sinks) total_sink += n;
    weights.assign(sinks.size(), total_source / total_sink);
  }
  if (weights.size() != sinks.size())
    throw Error(ErrorCode::ParseError, "shape spec: weight count does not match 'n'");
  shape.weights = weights;
  return shape;
}

}  // namespace io
}  // namespace quiverbl
