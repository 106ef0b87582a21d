#include "pscluster/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pscluster/errors.hpp"
#include "pscluster/rng.hpp"
#include "pscluster/textio.hpp"

namespace psc {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool try_parse_int(std::string_view tok, std::int64_t& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last;
}

std::int64_t parse_int_token(std::string_view tok, std::size_t line, const char* what) {
  std::int64_t v = 0;
  if (!try_parse_int(tok, v))
    throw ParseError("bad " + std::string(what) + " '" + std::string(tok) + "'", line);
  return v;
}

double parse_real_token(std::string_view tok, std::size_t line, const char* what) {
  double v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw ParseError("bad " + std::string(what) + " '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

double Graph::weight(std::int64_t u, std::int64_t v) const {
  if (u == v) return 0.0;
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{u, v},
                             [](const GraphEdge& e, const std::pair<std::int64_t, std::int64_t>& key) {
                               return std::pair{e.u, e.v} < key;
                             });
  if (it == edges.end() || it->u != u || it->v != v) return 0.0;
  return it->weight;
}

std::vector<TopologyRecord> parse_topology_records(std::string_view text) {
  std::vector<TopologyRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    auto toks = split_tokens(line);
    if (toks.empty()) continue;
    // Tolerate a leading listing number, as in "10043 e 0 1 3".
    std::int64_t ignored = 0;
    if (toks.size() >= 2 && try_parse_int(toks[0], ignored) &&
        (toks[1] == "t" || toks[1] == "v" || toks[1] == "e"))
      toks.erase(toks.begin());

    TopologyRecord rec;
    rec.line = line_no;
    if (toks[0] == "t") {
      rec.kind = TopologyRecord::Kind::GraphMarker;  // delimiter, payload ignored
    } else if (toks[0] == "v") {
      if (toks.size() != 3)
        throw ParseError("vertex record needs 'v <id> <label>'", line_no);
      rec.kind = TopologyRecord::Kind::Vertex;
      rec.a = parse_int_token(toks[1], line_no, "vertex id");
      rec.b = parse_int_token(toks[2], line_no, "vertex label");
    } else if (toks[0] == "e") {
      if (toks.size() != 4)
        throw ParseError("edge record needs 'e <src> <dst> <label>'", line_no);
      rec.kind = TopologyRecord::Kind::Edge;
      rec.a = parse_int_token(toks[1], line_no, "edge source");
      rec.b = parse_int_token(toks[2], line_no, "edge target");
      rec.weight = parse_real_token(toks[3], line_no, "edge label");
    } else {
      throw ParseError("expected record type 't', 'v', or 'e', got '" + std::string(toks[0]) + "'",
                       line_no);
    }
    records.push_back(rec);
  }
  return records;
}

Graph build_graph(const std::vector<TopologyRecord>& records) {
  Graph g;
  std::map<std::int64_t, std::int64_t> label_by_id;  // ordered: dense ids follow ascending file ids
  for (const auto& rec : records) {
    if (rec.kind != TopologyRecord::Kind::Vertex) continue;
    if (rec.a < 0)
      throw DomainError("negative vertex id " + std::to_string(rec.a) + " at line " +
                        std::to_string(rec.line));
    if (rec.b < 0)
      throw DomainError("negative vertex label " + std::to_string(rec.b) + " at line " +
                        std::to_string(rec.line));
    auto [it, inserted] = label_by_id.try_emplace(rec.a, rec.b);
    if (!inserted) {
      if (it->second != rec.b)
        g.warnings.push_back("vertex " + std::to_string(rec.a) + " redeclared at line " +
                             std::to_string(rec.line) + ", keeping last label");
      it->second = rec.b;
    }
  }

  std::unordered_map<std::int64_t, std::int64_t> dense;
  dense.reserve(label_by_id.size());
  g.vertex_count = static_cast<std::int64_t>(label_by_id.size());
  for (const auto& [id, label] : label_by_id) {
    std::int64_t d = static_cast<std::int64_t>(g.original_ids.size());
    dense.emplace(id, d);
    g.original_ids.push_back(id);
    g.labels.push_back(label);
    if (id != d) g.remapped = true;
  }

  // Endpoints name declared file ids; when the file's ids were remapped an
  // in-range endpoint may instead name a declaration position directly (the
  // excerpted-listing shape, where `e 0 1 3` pairs the first two vertices).
  auto resolve = [&](std::int64_t endpoint, std::size_t line) {
    auto it = dense.find(endpoint);
    if (it != dense.end()) return it->second;
    if (g.remapped && endpoint >= 0 && endpoint < g.vertex_count) return endpoint;
    throw ReferentialError("edge at line " + std::to_string(line) +
                               " references undeclared vertex " + std::to_string(endpoint),
                           endpoint);
  };

  std::map<std::pair<std::int64_t, std::int64_t>, double> weight_by_edge;
  for (const auto& rec : records) {
    if (rec.kind != TopologyRecord::Kind::Edge) continue;
    if (rec.weight < 0)
      throw DomainError("negative edge label at line " + std::to_string(rec.line));
    std::int64_t u = resolve(rec.a, rec.line), v = resolve(rec.b, rec.line);
    if (u == v) {
      g.warnings.push_back("self loop on vertex " + std::to_string(rec.a) + " at line " +
                           std::to_string(rec.line) + " dropped");
      continue;
    }
    if (u > v) std::swap(u, v);
    auto [it, inserted] = weight_by_edge.try_emplace(std::pair{u, v}, rec.weight);
    if (!inserted) {
      g.warnings.push_back("duplicate edge at line " + std::to_string(rec.line) +
                           ", keeping last label");
      it->second = rec.weight;
    }
  }
  g.edges.reserve(weight_by_edge.size());
  for (const auto& [uv, w] : weight_by_edge)
    g.edges.push_back({uv.first, uv.second, w});
  return g;
}

Graph parse_topology(std::string_view text) { return build_graph(parse_topology_records(text)); }

PointSet parse_points(std::string_view text) {
  PointSet ps;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, (eol == std::string_view::npos ? text.size() : eol) - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view tok = line.substr(start, (comma == std::string_view::npos ? line.size() : comma) - start);
      while (!tok.empty() && is_space(tok.front())) tok.remove_prefix(1);
      while (!tok.empty() && is_space(tok.back())) tok.remove_suffix(1);
      row.push_back(parse_real_token(tok, line_no, "coordinate"));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!ps.points.empty() && row.size() != ps.points.front().size())
      throw ParseError("row has " + std::to_string(row.size()) + " coordinates, expected " +
                           std::to_string(ps.points.front().size()),
                       line_no);
    ps.points.push_back(std::move(row));
  }
  return ps;
}

std::string serialize_topology(const Graph& g) {
  std::string out = "t 1\n";
  for (std::int64_t d = 0; d < g.vertex_count; ++d) {
    out += "v ";
    out += std::to_string(g.original_ids[d]);
    out += ' ';
    out += std::to_string(g.labels[d]);
    out += '\n';
  }
  for (const auto& e : g.edges) {
    out += "e ";
    out += std::to_string(g.original_ids[e.u]);
    out += ' ';
    out += std::to_string(g.original_ids[e.v]);
    out += ' ';
    out += format_double(e.weight);
    out += '\n';
  }
  return out;
}

std::string serialize_points(const PointSet& ps) {
  std::string out;
  for (const auto& p : ps.points) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j) out += ',';
      out += format_double(p[j]);
    }
    out += '\n';
  }
  return out;
}

std::string idmap_tsv(const Graph& g) {
  std::string out;
  for (std::int64_t d = 0; d < g.vertex_count; ++d) {
    out += std::to_string(g.original_ids[d]);
    out += '\t';
    out += std::to_string(d);
    out += '\n';
  }
  return out;
}

void write_assignments(const ClusterAssignment& assignment, std::ostream& out) {
  out << assignments_tsv(assignment);
  if (!out.good()) throw IoError("failed writing cluster assignments");
}

std::string assignments_tsv(const ClusterAssignment& assignment) {
  std::string out;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += std::to_string(assignment.labels[i]);
    out += '\n';
  }
  return out;
}

LabeledPoints generate_blobs(const BlobSpec& spec, std::uint64_t seed) {
  if (spec.blobs < 1) throw DomainError("blob count must be positive");
  if (spec.points_per_blob < 1) throw DomainError("points per blob must be positive");
  if (spec.dim < 1) throw DomainError("dimension must be positive");
  if (spec.separation < 0 || spec.blob_sigma < 0)
    throw DomainError("separation and blob sigma must be nonnegative");

  const double pi = 3.141592653589793238462643383279502884;
  std::vector<std::vector<double>> centers(spec.blobs, std::vector<double>(spec.dim, 0.0));
  if (spec.blobs > 1) {
    if (spec.dim == 1) {
      for (std::int64_t b = 0; b < spec.blobs; ++b)
        centers[b][0] = static_cast<double>(b) * spec.separation;
    } else {
      // Evenly spaced on a circle whose chord between neighbours is the
      // requested separation, so every adjacent pair is `separation` apart.
      double radius = spec.separation / (2.0 * std::sin(pi / static_cast<double>(spec.blobs)));
      for (std::int64_t b = 0; b < spec.blobs; ++b) {
        double theta = 2.0 * pi * static_cast<double>(b) / static_cast<double>(spec.blobs);
        centers[b][0] = radius * std::cos(theta);
        centers[b][1] = radius * std::sin(theta);
      }
    }
  }

  GaussianSource gauss(seed);
  LabeledPoints out;
  out.points.points.reserve(static_cast<std::size_t>(spec.blobs * spec.points_per_blob));
  for (std::int64_t b = 0; b < spec.blobs; ++b) {
    for (std::int64_t p = 0; p < spec.points_per_blob; ++p) {
      std::vector<double> x(centers[b]);
      for (auto& coord : x) coord += spec.blob_sigma * gauss.next();
      out.points.points.push_back(std::move(x));
      out.truth.push_back(b);
    }
  }
  return out;
}

LabeledGraph generate_cliques(const CliqueSpec& spec) {
  if (spec.cliques < 1) throw DomainError("clique count must be positive");
  if (spec.clique_size < 1) throw DomainError("clique size must be positive");
  if (spec.weight < 0) throw DomainError("edge weight must be nonnegative");

  LabeledGraph out;
  Graph& g = out.graph;
  g.vertex_count = spec.cliques * spec.clique_size;
  for (std::int64_t c = 0; c < spec.cliques; ++c) {
    for (std::int64_t i = 0; i < spec.clique_size; ++i) {
      std::int64_t v = c * spec.clique_size + i;
      g.labels.push_back(1);
      g.original_ids.push_back(v);
      out.truth.push_back(c);
      for (std::int64_t j = i + 1; j < spec.clique_size; ++j)
        g.edges.push_back({v, c * spec.clique_size + j, spec.weight});
    }
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) { return std::pair{a.u, a.v} < std::pair{b.u, b.v}; });
  return out;
}

}  // namespace psc
