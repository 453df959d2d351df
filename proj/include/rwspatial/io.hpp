#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rwspatial/genetics_model.hpp"
#include "rwspatial/graph.hpp"
#include "rwspatial/ident.hpp"
#include "rwspatial/popsim.hpp"
#include "rwspatial/posterior.hpp"

namespace rwspatial {

using Json = nlohmann::ordered_json;

/// Locale-independent shortest round-trip formatting of a double.
std::string format_double(double v);
/// Strict parse of a whole field; throws DataError naming `context` on failure.
double parse_double(const std::string& text, const std::string& context);
long long parse_integer(const std::string& text, const std::string& context);

/// Minimal CSV table: comma separated, mandatory header, no quoting.
struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  ///< 1-based file line of each row

  /// Column position; throws DataError if absent.
  std::size_t column(const std::string& name) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
  std::string where(std::size_t row) const;  ///< "source:line"
};

CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// A graph together with the numeric node attributes of its node table.
struct LoadedGraph {
  SpatialGraph graph;
  std::map<std::string, Eigen::VectorXd> node_attributes;
};

/// Node table: node_id (label), optional x and y, other columns are numeric
/// node attributes. Edge table: from, to (node_id labels), distance, optional
/// downstream and barrier (default 0), other columns are extra edge
/// covariates where an empty cell marks a missing value. With `symmetric`
/// each record also adds the reversed edge with the same covariates.
LoadedGraph load_graph(const CsvTable& nodes, const CsvTable& edges, bool symmetric);
LoadedGraph load_graph(const std::filesystem::path& nodes, const std::filesystem::path& edges,
                       bool symmetric);

/// Writes the directed edge list; load_graph(..., false) reproduces the graph exactly.
void write_graph(const LoadedGraph& graph, const std::filesystem::path& nodes,
                 const std::filesystem::path& edges);

/// The Columbus neighbourhood data: 49 polygons, rook adjacency (shared
/// boundary segment), crime per thousand households and home value in
/// thousands of dollars.
struct ColumbusData {
  SpatialGraph graph;
  Eigen::VectorXd crime;
  Eigen::VectorXd home_values;
};
ColumbusData columbus_fixture();
/// SHA-256 of the embedded node and edge tables.
std::string columbus_nodes_sha256();
std::string columbus_edges_sha256();

/// Flat key = value configuration. '#' starts a comment; blank lines are
/// ignored; duplicate keys are errors.
class RunConfig {
 public:
  RunConfig() = default;
  static RunConfig parse(std::istream& in, const std::string& source);
  static RunConfig load(const std::filesystem::path& path);

  /// Throws ConfigError naming the first key not in `allowed`.
  void require_known(const std::set<std::string>& allowed) const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated list of reals.
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;

  const std::map<std::string, std::string>& values() const noexcept { return values_; }
  std::string source() const { return source_; }
  void write(const std::filesystem::path& path) const;

 private:
  std::string source_ = "<defaults>";
  std::map<std::string, std::string> values_;
};

/// Hex SHA-256 of a file or a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_string(const std::string& data);

/// Run manifest: inputs with hashes, seed, configuration, outputs, timing.
struct Manifest {
  std::string command;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, std::string>> inputs;   ///< (path, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;  ///< (path, sha256)
  double wall_seconds = 0.0;
};
Json to_json(const Manifest& m);
/// Version string written to manifests.
std::string library_version();

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

/// Draws as CSV: one column per parameter, then log_likelihood.
void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& s);
/// Inverse of write_samples_csv (metadata is not stored in the CSV).
PosteriorSamples read_samples_csv(const std::filesystem::path& path);

Json to_json(const SamplerMetadata& m);
Json to_json(const std::vector<ParameterSummary>& s);
Json to_json(const DICResult& d);
Json to_json(const std::vector<SplitHalfEntry>& entries);
Json to_json(const IdentifiabilityReport& r);
Json to_json(const ConfounderSearchResult& r);

/// Columns time, then one per node (counts for the stochastic process,
/// densities for the limit ODE).
void write_trajectory_csv(const std::filesystem::path& path, const PopulationTrajectory& t,
                          const SpatialGraph& graph);
/// Columns node_id, then field_1..field_R.
void write_fields_csv(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& fields,
                      const SpatialGraph& graph);
/// Columns from, to, rate.
void write_generator_csv(const std::filesystem::path& path, const GeneratorMatrix& q,
                         const SpatialGraph& graph);

/// Long-format allele table: individual, node_id, locus, allele_1, allele_2
/// (1-based categories). K per locus is the largest category observed.
GeneticsData read_genetics_csv(const std::filesystem::path& path, const SpatialGraph& graph);
void write_genetics_csv(const std::filesystem::path& path, const GeneticsData& data,
                        const SpatialGraph& graph);

}  // namespace rwspatial
