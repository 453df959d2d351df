#include "rwspatial/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "rwspatial/errors.hpp"

namespace rwspatial {

namespace detail {
extern const char* const kColumbusNodesCsv;
extern const char* const kColumbusEdgesCsv;
}  // namespace detail

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError(context + ": '" + t + "' is not a number");
  }
  return v;
}

long long parse_integer(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  long long v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw DataError(context + ": '" + t + "' is not an integer");
  }
  return v;
}

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::column(const std::string& name) const {
  auto c = find_column(name);
  if (!c) throw DataError(source + ": missing required column '" + name + "'");
  return *c;
}

std::string CsvTable::where(std::size_t row) const {
  return source + ":" + std::to_string(line_numbers.at(row));
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable t;
  t.source = source;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (line.find('"') != std::string::npos) {
      throw DataError(source + ":" + std::to_string(lineno) + ": quoted fields are not supported");
    }
    auto fields = split(line, ',');
    if (!have_header) {
      if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw DataError(source + ": empty file (a header line is required)");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_csv(in, path.string());
}

LoadedGraph load_graph(const CsvTable& nodes, const CsvTable& edges, bool symmetric) {
  const std::size_t id_col = nodes.column("node_id");
  const auto x_col = nodes.find_column("x");
  const auto y_col = nodes.find_column("y");
  std::vector<std::size_t> attr_cols;
  for (std::size_t c = 0; c < nodes.header.size(); ++c) {
    if (c != id_col && c != x_col && c != y_col) attr_cols.push_back(c);
  }

  std::vector<Node> node_list;
  std::unordered_map<std::string, NodeIndex> index;
  std::map<std::string, Eigen::VectorXd> attributes;
  for (std::size_t c : attr_cols) {
    attributes[nodes.header[c]] = Eigen::VectorXd(static_cast<Eigen::Index>(nodes.rows.size()));
  }
  for (std::size_t r = 0; r < nodes.rows.size(); ++r) {
    const auto& row = nodes.rows[r];
    const std::string& label = row[id_col];
    if (label.empty()) throw DataError(nodes.where(r) + ": empty node_id");
    if (!index.emplace(label, r).second) {
      throw DataError(nodes.where(r) + ": duplicate node_id '" + label + "'");
    }
    Node n{label, std::nullopt};
    if (x_col && y_col) {
      n.coords = std::make_pair(parse_double(row[*x_col], nodes.where(r) + ": x"),
                                parse_double(row[*y_col], nodes.where(r) + ": y"));
    }
    node_list.push_back(std::move(n));
    for (std::size_t c : attr_cols) {
      attributes[nodes.header[c]][static_cast<Eigen::Index>(r)] =
          parse_double(row[c], nodes.where(r) + ": " + nodes.header[c]);
    }
  }

  const std::size_t from_col = edges.column("from");
  const std::size_t to_col = edges.column("to");
  const std::size_t dist_col = edges.column("distance");
  const auto down_col = edges.find_column("downstream");
  const auto bar_col = edges.find_column("barrier");
  std::vector<std::size_t> extra_cols;
  std::vector<std::string> extra_names;
  for (std::size_t c = 0; c < edges.header.size(); ++c) {
    if (c != from_col && c != to_col && c != dist_col && c != down_col && c != bar_col) {
      extra_cols.push_back(c);
      extra_names.push_back(edges.header[c]);
    }
  }

  auto lookup = [&](const std::string& label, std::size_t r, const char* end) {
    auto it = index.find(label);
    if (it == index.end()) {
      throw DataError(edges.where(r) + ": edge " + end + " '" + label + "' is not in the node table");
    }
    return it->second;
  };
  auto indicator = [&](std::optional<std::size_t> col, std::size_t r, const char* name) {
    if (!col) return 0;
    const long long v = parse_integer(edges.rows[r][*col], edges.where(r) + ": " + name);
    if (v != 0 && v != 1) throw DataError(edges.where(r) + ": " + name + " must be 0 or 1");
    return static_cast<int>(v);
  };

  std::vector<Edge> edge_list;
  std::map<std::pair<NodeIndex, NodeIndex>, std::size_t> seen;
  auto add = [&](NodeIndex a, NodeIndex b, const EdgeCovariates& cov, std::size_t r) {
    auto [it, fresh] = seen.emplace(std::make_pair(a, b), r);
    if (!fresh) {
      throw DataError(edges.where(r) + ": duplicate edge " + node_list[a].label + " -> " +
                      node_list[b].label + " (first given at line " +
                      std::to_string(edges.line_numbers[it->second]) + ")");
    }
    edge_list.push_back({a, b, cov});
  };
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    const auto& row = edges.rows[r];
    const NodeIndex a = lookup(row[from_col], r, "endpoint");
    const NodeIndex b = lookup(row[to_col], r, "endpoint");
    if (a == b) throw DataError(edges.where(r) + ": self edge at node '" + row[from_col] + "'");
    EdgeCovariates cov;
    cov.distance = parse_double(row[dist_col], edges.where(r) + ": distance");
    if (!(cov.distance > 0.0) || !std::isfinite(cov.distance)) {
      throw DataError(edges.where(r) + ": distance must be positive and finite");
    }
    cov.downstream = indicator(down_col, r, "downstream");
    cov.barrier = indicator(bar_col, r, "barrier");
    for (std::size_t c : extra_cols) {
      cov.extras.push_back(row[c].empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : parse_double(row[c], edges.where(r) + ": " + edges.header[c]));
    }
    add(a, b, cov, r);
    if (symmetric) add(b, a, cov, r);
  }

  return {SpatialGraph(std::move(node_list), std::move(edge_list), std::move(extra_names)),
          std::move(attributes)};
}

LoadedGraph load_graph(const std::filesystem::path& nodes, const std::filesystem::path& edges,
                       bool symmetric) {
  return load_graph(read_csv(nodes), read_csv(edges), symmetric);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_graph(const LoadedGraph& lg, const std::filesystem::path& nodes,
                 const std::filesystem::path& edges) {
  const SpatialGraph& g = lg.graph;
  const bool coords = !g.nodes().empty() &&
                      std::all_of(g.nodes().begin(), g.nodes().end(),
                                  [](const Node& n) { return n.coords.has_value(); });
  {
    auto out = open_out(nodes);
    out << "node_id";
    if (coords) out << ",x,y";
    for (const auto& [name, _] : lg.node_attributes) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const Node& n = g.nodes()[i];
      out << n.label;
      if (coords) out << ',' << format_double(n.coords->first) << ',' << format_double(n.coords->second);
      for (const auto& [_, v] : lg.node_attributes) out << ',' << format_double(v[static_cast<Eigen::Index>(i)]);
      out << '\n';
    }
  }
  auto out = open_out(edges);
  out << "from,to,distance,downstream,barrier";
  for (const auto& name : g.extra_names()) out << ',' << name;
  out << '\n';
  for (const Edge& e : g.edges()) {
    out << g.nodes()[e.from].label << ',' << g.nodes()[e.to].label << ','
        << format_double(e.covariates.distance) << ',' << e.covariates.downstream << ','
        << e.covariates.barrier;
    for (double x : e.covariates.extras) out << ',' << format_double(x);
    out << '\n';
  }
}

ColumbusData columbus_fixture() {
  std::istringstream nodes(detail::kColumbusNodesCsv);
  std::istringstream edges(detail::kColumbusEdgesCsv);
  LoadedGraph lg = load_graph(read_csv(nodes, "columbus/nodes.csv"),
                              read_csv(edges, "columbus/edges.csv"), true);
  return {std::move(lg.graph), lg.node_attributes.at("crime"), lg.node_attributes.at("hoval")};
}

std::string columbus_nodes_sha256() { return sha256_string(detail::kColumbusNodesCsv); }
std::string columbus_edges_sha256() { return sha256_string(detail::kColumbusEdgesCsv); }

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!cfg.values_.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError(where + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

void RunConfig::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, _] : values_) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(source_ + ": unknown key '" + key + "' (allowed: " + list + ")");
    }
  }
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string RunConfig::require_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) {
    throw ConfigError(source_ + ": missing required key '" + key + "'");
  }
  return it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return parse_double(it->second, key);
  } catch (const DataError& e) {
    throw ConfigError(source_ + ": " + e.what());
  }
}

long RunConfig::get_long(const std::string& key, long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return static_cast<long>(parse_integer(it->second, key));
  } catch (const DataError& e) {
    throw ConfigError(source_ + ": " + e.what());
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& t = it->second;
  std::uint64_t v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(source_ + ": " + key + ": '" + t + "' is not an unsigned 64-bit integer");
  }
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(source_ + ": " + key + ": expected true or false, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           std::vector<double> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  try {
    for (const auto& f : split(it->second, ',')) out.push_back(parse_double(f, key));
  } catch (const DataError& e) {
    throw ConfigError(source_ + ": " + e.what());
  }
  return out;
}

void RunConfig::write(const std::filesystem::path& path) const {
  auto out = open_out(path);
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

namespace {

std::string hex(const unsigned char* data, unsigned int n) {
  std::ostringstream os;
  for (unsigned int i = 0; i < n; ++i) {
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  }
  return os.str();
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw NumericalError("SHA-256 initialisation failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
  std::string finish() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, md, &n);
    return hex(md, n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_string(const std::string& data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.finish();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.finish();
}

std::string library_version() { return "0.1.0"; }

Json to_json(const Manifest& m) {
  Json j;
  j["command"] = m.command;
  j["version"] = library_version();
  j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
  j["config"] = m.config;
  Json inputs = Json::array();
  for (const auto& [p, h] : m.inputs) inputs.push_back({{"path", p}, {"sha256", h}});
  j["inputs"] = inputs;
  Json outputs = Json::array();
  for (const auto& [p, h] : m.outputs) outputs.push_back({{"path", p}, {"sha256", h}});
  j["outputs"] = outputs;
  j["wall_seconds"] = m.wall_seconds;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_samples_csv(const std::filesystem::path& path, const PosteriorSamples& s) {
  auto out = open_out(path);
  for (const auto& n : s.names()) out << n << ',';
  out << "log_likelihood\n";
  for (Eigen::Index r = 0; r < s.draw_count(); ++r) {
    for (Eigen::Index c = 0; c < s.draws().cols(); ++c) out << format_double(s.draws()(r, c)) << ',';
    out << format_double(s.log_likelihood()[r]) << '\n';
  }
}

PosteriorSamples read_samples_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header.back() != "log_likelihood") {
    throw DataError(path.string() + ": last column must be log_likelihood");
  }
  const std::size_t p = t.header.size() - 1;
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd ll(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c = 0; c < p; ++c) {
      draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(t.rows[r][c], t.where(r));
    }
    ll[static_cast<Eigen::Index>(r)] = parse_double(t.rows[r][p], t.where(r));
  }
  std::vector<std::string> names(t.header.begin(), t.header.end() - 1);
  return PosteriorSamples(std::move(names), std::move(draws), std::move(ll), {});
}

Json to_json(const SamplerMetadata& m) {
  return {{"model", m.model},         {"seed", m.seed},
          {"iterations", m.iterations}, {"burn_in", m.burn_in},
          {"thin", m.thin},           {"acceptance_rates", m.acceptance_rates},
          {"proposal_scales", m.proposal_scales}};
}

Json to_json(const std::vector<ParameterSummary>& s) {
  Json arr = Json::array();
  for (const auto& p : s) {
    arr.push_back({{"name", p.name},
                   {"mean", p.mean},
                   {"sd", p.sd},
                   {"q025", p.q025},
                   {"q500", p.q500},
                   {"q975", p.q975}});
  }
  return arr;
}

Json to_json(const DICResult& d) {
  return {{"dbar", d.dbar}, {"d_at_mean", d.d_at_mean}, {"p_d", d.p_d}, {"dic", d.dic}};
}

Json to_json(const std::vector<SplitHalfEntry>& entries) {
  Json arr = Json::array();
  for (const auto& e : entries) {
    arr.push_back({{"name", e.name},
                   {"first_mean", e.first_mean},
                   {"second_mean", e.second_mean},
                   {"first_q025", e.first_q025},
                   {"second_q025", e.second_q025},
                   {"first_q975", e.first_q975},
                   {"second_q975", e.second_q975},
                   {"pooled_sd", e.pooled_sd},
                   {"standardized_difference", e.standardized_difference},
                   {"flagged", e.flagged}});
  }
  return arr;
}

Json to_json(const IdentifiabilityReport& r) {
  Json j;
  j["classification"] = std::string(to_string(r.classification));
  j["witness_row"] = r.witness_row ? Json(*r.witness_row) : Json(nullptr);
  j["cycle"] = r.cycle ? Json(*r.cycle) : Json(nullptr);
  return j;
}

Json to_json(const ConfounderSearchResult& r) {
  Json j;
  j["confounder_found"] = r.confounder_found;
  j["best_residual"] = r.best_residual;
  j["starts"] = r.starts;
  Json w = Json::array();
  for (Eigen::Index i = 0; i < r.best_candidate.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < r.best_candidate.cols(); ++k) row.push_back(r.best_candidate(i, k));
    w.push_back(row);
  }
  j["best_candidate"] = w;
  return j;
}

void write_trajectory_csv(const std::filesystem::path& path, const PopulationTrajectory& t,
                          const SpatialGraph& graph) {
  auto out = open_out(path);
  out << "time";
  for (const Node& n : graph.nodes()) out << ',' << n.label;
  out << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << format_double(t.times[k]);
    for (Eigen::Index i = 0; i < t.values.cols(); ++i) {
      out << ',' << format_double(t.values(static_cast<Eigen::Index>(k), i));
    }
    out << '\n';
  }
}

void write_fields_csv(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& fields,
                      const SpatialGraph& graph) {
  auto out = open_out(path);
  out << "node_id";
  for (std::size_t r = 0; r < fields.size(); ++r) out << ",field_" << r + 1;
  out << '\n';
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    out << graph.nodes()[i].label;
    for (const auto& f : fields) out << ',' << format_double(f[static_cast<Eigen::Index>(i)]);
    out << '\n';
  }
}

void write_generator_csv(const std::filesystem::path& path, const GeneratorMatrix& q,
                         const SpatialGraph& graph) {
  auto out = open_out(path);
  out << "from,to,rate\n";
  for (const RateEntry& e : q.rates()) {
    out << graph.nodes()[e.from].label << ',' << graph.nodes()[e.to].label << ','
        << format_double(e.rate) << '\n';
  }
}

GeneticsData read_genetics_csv(const std::filesystem::path& path, const SpatialGraph& graph) {
  const CsvTable t = read_csv(path);
  const std::size_t ind_col = t.column("individual");
  const std::size_t node_col = t.column("node_id");
  const std::size_t locus_col = t.column("locus");
  const std::size_t a_cols[kPloidy] = {t.column("allele_1"), t.column("allele_2")};

  std::unordered_map<std::string, NodeIndex> node_index;
  for (std::size_t i = 0; i < graph.node_count(); ++i) node_index[graph.nodes()[i].label] = i;

  std::map<std::string, std::size_t> individuals;  // label -> position
  std::vector<NodeIndex> ind_node;
  std::map<long long, std::map<std::size_t, std::pair<int, int>>> calls;  // locus -> ind -> alleles
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto nit = node_index.find(row[node_col]);
    if (nit == node_index.end()) {
      throw DataError(t.where(r) + ": node '" + row[node_col] + "' is not in the graph");
    }
    auto [iit, fresh] = individuals.emplace(row[ind_col], ind_node.size());
    if (fresh) {
      ind_node.push_back(nit->second);
    } else if (ind_node[iit->second] != nit->second) {
      throw DataError(t.where(r) + ": individual '" + row[ind_col] + "' appears at two nodes");
    }
    const long long locus = parse_integer(row[locus_col], t.where(r) + ": locus");
    if (locus < 1) throw DataError(t.where(r) + ": locus numbers start at 1");
    int a[kPloidy];
    for (int p = 0; p < kPloidy; ++p) {
      const std::string& cell = row[a_cols[p]];
      if (cell.empty()) throw DataError(t.where(r) + ": missing allele call (not supported)");
      const long long v = parse_integer(cell, t.where(r) + ": allele");
      if (v < 1) throw DataError(t.where(r) + ": allele categories start at 1");
      a[p] = static_cast<int>(v - 1);
    }
    if (!calls[locus].emplace(iit->second, std::make_pair(a[0], a[1])).second) {
      throw DataError(t.where(r) + ": individual '" + row[ind_col] + "' repeated at locus " +
                      std::to_string(locus));
    }
  }

  GeneticsData data;
  data.individual_node = ind_node;
  long long expect = 1;
  for (const auto& [locus, by_ind] : calls) {
    if (locus != expect) throw DataError(path.string() + ": locus " + std::to_string(expect) + " is absent");
    ++expect;
    if (by_ind.size() != ind_node.size()) {
      throw DataError(path.string() + ": locus " + std::to_string(locus) +
                      " lacks calls for some individuals (missing calls are not supported)");
    }
    int k = 0;
    std::vector<int> alleles;
    for (const auto& [_, pair] : by_ind) {
      alleles.push_back(pair.first);
      alleles.push_back(pair.second);
      k = std::max({k, pair.first + 1, pair.second + 1});
    }
    data.categories.push_back(k);
    data.alleles.push_back(std::move(alleles));
  }
  data.validate(graph.node_count());
  return data;
}

void write_genetics_csv(const std::filesystem::path& path, const GeneticsData& data,
                        const SpatialGraph& graph) {
  auto out = open_out(path);
  out << "individual,node_id,locus,allele_1,allele_2\n";
  for (std::size_t l = 0; l < data.locus_count(); ++l) {
    for (std::size_t i = 0; i < data.individual_count(); ++i) {
      out << i + 1 << ',' << graph.nodes()[data.individual_node[i]].label << ',' << l + 1 << ','
          << data.alleles[l][i * kPloidy] + 1 << ',' << data.alleles[l][i * kPloidy + 1] + 1 << '\n';
    }
  }
}

}  // namespace rwspatial
