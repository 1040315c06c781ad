#include <fstream>
#include <sstream>

#include "grandag/error.hpp"
#include "grandag/graph.hpp"

namespace grandag {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string to_edge_list(const Dag& g) {
  std::ostringstream out;
  out << "d=" << g.size() << "\n";
  for (const auto& [i, j] : g.edges()) out << i << " " << j << "\n";
  return out.str();
}

Dag parse_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int d = -1;
  std::vector<Edge> edges;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (d < 0) {
      if (line.rfind("d=", 0) != 0) throw InvalidInput("edge list must start with a \"d=<n>\" header");
      try {
        d = std::stoi(line.substr(2));
      } catch (const std::exception&) {
        throw InvalidInput("malformed edge-list header: " + line);
      }
      if (d < 0) throw InvalidInput("negative node count in edge-list header");
      continue;
    }
    std::istringstream fields(line);
    int i = 0, j = 0;
    std::string extra;
    if (!(fields >> i >> j) || (fields >> extra)) {
      throw InvalidInput("malformed edge on line " + std::to_string(lineno) + ": " + line);
    }
    edges.emplace_back(i, j);
  }
  if (d < 0) throw InvalidInput("empty edge list (missing \"d=<n>\" header)");
  return Dag::from_edges(d, edges);
}

std::string to_adjacency_csv(const BinaryMatrix& adj) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < adj.rows(); ++i) {
    for (Eigen::Index j = 0; j < adj.cols(); ++j) {
      if (j) out << ',';
      out << static_cast<int>(adj(i, j));
    }
    out << '\n';
  }
  return out.str();
}

BinaryMatrix parse_adjacency_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::uint8_t>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::uint8_t> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      cell = trim(cell);
      double v = 0.0;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        throw InvalidInput("non-numeric adjacency entry: \"" + cell + "\"");
      }
      if (v != 0.0 && v != 1.0) throw InvalidInput("adjacency entries must be 0 or 1");
      row.push_back(static_cast<std::uint8_t>(v));
    }
    rows.push_back(std::move(row));
  }
  const auto d = static_cast<Eigen::Index>(rows.size());
  BinaryMatrix adj(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d) {
      throw InvalidInput("adjacency CSV must be square; row " + std::to_string(i) + " has " +
                         std::to_string(rows[i].size()) + " entries");
    }
    for (Eigen::Index j = 0; j < d; ++j) adj(i, j) = rows[i][j];
  }
  return adj;
}

Dag read_graph_file(const std::string& path) {
  const std::string text = slurp(path);
  const std::string head = trim(text.substr(0, text.find('\n')));
  if (head.rfind("d=", 0) == 0) return parse_edge_list(text);
  return Dag(parse_adjacency_csv(text));
}

void write_graph_file(const std::string& path, const Dag& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << to_edge_list(g);
}

}  // namespace grandag
