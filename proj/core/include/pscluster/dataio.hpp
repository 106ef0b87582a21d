#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace psc {

// Undirected weighted graph with dense 0-based vertex ids.  When the input
// file used non-dense ids they are remapped on parse; `original_ids` maps the
// dense id back to the id that appeared in the file.
struct GraphEdge {
  std::int64_t u = 0;  // canonical: u < v
  std::int64_t v = 0;
  double weight = 0.0;
};

struct Graph {
  std::int64_t vertex_count = 0;
  std::vector<std::int64_t> labels;        // per dense vertex id
  std::vector<std::int64_t> original_ids;  // dense id -> file id
  std::vector<GraphEdge> edges;            // canonical, deduplicated, no self loops
  bool remapped = false;
  std::vector<std::string> warnings;

  // Symmetric lookup: weight(u,v) == weight(v,u); 0 when no edge.
  double weight(std::int64_t u, std::int64_t v) const;
};

struct PointSet {
  std::vector<std::vector<double>> points;  // all rows share one dimension

  std::int64_t size() const { return static_cast<std::int64_t>(points.size()); }
  std::int64_t dim() const { return points.empty() ? 0 : static_cast<std::int64_t>(points.front().size()); }
};

struct ClusterAssignment {
  std::vector<std::int64_t> labels;  // one per point, each in [0, k)
  std::int64_t k = 0;
};

// One lexical record of the topology text format: `t ...`, `v <id> <label>`,
// or `e <src> <dst> <label>`, tokens separated by runs of spaces.  An optional
// leading integer token (a listing line number) is skipped.
struct TopologyRecord {
  enum class Kind { GraphMarker, Vertex, Edge };
  Kind kind = Kind::GraphMarker;
  std::int64_t a = 0;       // vertex id / edge src
  std::int64_t b = 0;       // vertex label / edge dst
  double weight = 0.0;      // edge label (nonnegative real)
  std::size_t line = 0;     // 1-based source line
};

std::vector<TopologyRecord> parse_topology_records(std::string_view text);

// Validates records into a Graph: endpoints must be declared, self loops are
// dropped with a warning, duplicate edges keep the last weight.
Graph build_graph(const std::vector<TopologyRecord>& records);

Graph parse_topology(std::string_view text);

// Comma-separated rows of finite reals, equal arity, no header.
PointSet parse_points(std::string_view text);

std::string serialize_topology(const Graph& g);
std::string serialize_points(const PointSet& ps);

// `<original_id>\t<dense_id>` rows; sidecar written when a parse remapped ids.
std::string idmap_tsv(const Graph& g);

// One `<point_index>\t<cluster_index>` row per point, ordered by point index.
void write_assignments(const ClusterAssignment& assignment, std::ostream& out);
std::string assignments_tsv(const ClusterAssignment& assignment);

struct BlobSpec {
  std::int64_t blobs = 3;
  std::int64_t points_per_blob = 30;
  double separation = 10.0;
  std::int64_t dim = 2;
  double blob_sigma = 1.0;
};

struct CliqueSpec {
  std::int64_t cliques = 3;
  std::int64_t clique_size = 4;
  double weight = 1.0;
};

struct LabeledPoints {
  PointSet points;
  std::vector<std::int64_t> truth;  // generating blob per point
};

struct LabeledGraph {
  Graph graph;
  std::vector<std::int64_t> truth;  // generating clique per vertex
};

// Deterministic for a fixed seed: rerunning yields identical bytes.
LabeledPoints generate_blobs(const BlobSpec& spec, std::uint64_t seed);
LabeledGraph generate_cliques(const CliqueSpec& spec);

}  // namespace psc
