#include "spsurv/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace spsurv {

const char* to_string(CensoringKind kind) {
  switch (kind) {
    case CensoringKind::Exact: return "exact";
    case CensoringKind::Right: return "right";
    case CensoringKind::Left: return "left";
    case CensoringKind::Interval: return "interval";
  }
  return "?";
}

CensoringKind CensoredObservation::kind() const {
  if (a == b) return CensoringKind::Exact;
  if (std::isinf(b)) return CensoringKind::Right;
  if (a == u) return CensoringKind::Left;
  return CensoringKind::Interval;
}

void validate_times(double u, double a, double b, std::size_t line) {
  if (std::isnan(u) || std::isnan(a) || std::isnan(b)) throw DataError("missing or non-numeric time", line);
  if (u < 0.0 || a < 0.0 || b < 0.0) throw DataError("negative time", line);
  if (b < a) throw DataError("t2 < t1", line);
  if (a < u) throw DataError("interval starts before the truncation time", line);
  if (std::isinf(a)) throw DataError("lower endpoint is infinite", line);
  if (a == b && a == 0.0) throw DataError("exact survival time of zero", line);
}

std::vector<CensoredObservation> expand_time_varying(const TimeVaryingSubject& s) {
  if (s.epochs.empty()) throw DataError("time-varying subject has no epochs");
  validate_times(s.u, s.a, s.b);
  const std::size_t dim = s.epochs.front().x.size();
  for (std::size_t k = 0; k < s.epochs.size(); ++k) {
    if (s.epochs[k].x.size() != dim) throw DataError("covariate dimension changes across epochs");
    if (k > 0 && !(s.epochs[k].t > s.epochs[k - 1].t)) throw DataError("epoch times not strictly increasing");
  }
  if (s.epochs.front().t != s.u) throw DataError("first epoch must start at the truncation time");
  if (s.epochs.back().t > s.a) throw DataError("last epoch starts after the lower endpoint");

  std::vector<CensoredObservation> out;
  out.reserve(s.epochs.size());
  for (std::size_t k = 0; k + 1 < s.epochs.size(); ++k)
    out.push_back({s.epochs[k + 1].t, kInf, s.epochs[k].t, s.epochs[k].x, s.location});
  out.push_back({s.a, s.b, s.epochs.back().t, s.epochs.back().x, s.location});
  return out;
}

Dataset::Dataset(std::vector<CensoredObservation> observations, int num_locations,
                 std::vector<std::string> covariate_names, bool require_all_locations)
    : obs_(std::move(observations)), m_(num_locations), names_(std::move(covariate_names)) {
  if (m_ < 1) throw DataError("dataset needs at least one location");
  const auto n = static_cast<Eigen::Index>(obs_.size());
  const auto p = static_cast<Eigen::Index>(names_.size());
  x_.resize(n, p);
  by_location_.assign(static_cast<std::size_t>(m_), {});
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs_[static_cast<std::size_t>(i)];
    validate_times(o.u, o.a, o.b, static_cast<std::size_t>(i) + 1);
    if (static_cast<Eigen::Index>(o.x.size()) != p) throw DataError("covariate vector has wrong length");
    for (Eigen::Index j = 0; j < p; ++j) {
      const double v = o.x[static_cast<std::size_t>(j)];
      if (!std::isfinite(v)) throw DataError("missing covariate value '" + names_[static_cast<std::size_t>(j)] + "'");
      x_(i, j) = v;
    }
    if (o.location < 0 || o.location >= m_) throw DataError("location index out of range");
    by_location_[static_cast<std::size_t>(o.location)].push_back(static_cast<int>(i));
  }
  if (require_all_locations && n > 0) {
    for (int k = 0; k < m_; ++k)
      if (by_location_[static_cast<std::size_t>(k)].empty())
        throw DataError("location " + std::to_string(k + 1) + " has no observations");
  }
  means_ = n > 0 ? Eigen::VectorXd(x_.colwise().mean().transpose()) : Eigen::VectorXd::Zero(p);
  xc_ = x_.rowwise() - means_.transpose();
  location_ids.resize(static_cast<std::size_t>(m_));
  for (int k = 0; k < m_; ++k) location_ids[static_cast<std::size_t>(k)] = std::to_string(k + 1);
}

namespace {

double parse_number(const std::string& field, std::size_t line, const std::string& what) {
  std::string s = field;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s == "inf" || s == "Inf" || s == "INF") return kInf;
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) throw DataError("malformed " + what + " value '" + field + "'", line);
  return v;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

}  // namespace

std::unordered_map<std::string, std::array<double, 2>> read_sites(const std::string& path) {
  const CsvTable t = read_csv_file(path);
  if (t.header.size() < 3) throw DataError("site table needs columns id, x, y");
  std::unordered_map<std::string, std::array<double, 2>> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    if (!out.emplace(row[0], std::array<double, 2>{parse_number(row[1], line, "x"), parse_number(row[2], line, "y")}).second)
      throw DataError("duplicate site id '" + row[0] + "'", line);
  }
  return out;
}

LoadedData load_csv(const std::string& path, const CsvSchema& schema,
                    const std::unordered_map<std::string, std::array<double, 2>>* sites) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file '" + path + "'");
  return load_csv(in, schema, sites);
}

LoadedData load_csv(std::istream& in, const CsvSchema& schema,
                    const std::unordered_map<std::string, std::array<double, 2>>* sites) {
  const CsvTable t = read_csv(in);
  const std::size_t c1 = t.column(schema.t1);
  const std::size_t c2 = t.column(schema.t2);
  const bool has_trunc = !schema.trunc.empty();
  const std::size_t ct = has_trunc ? t.column(schema.trunc) : 0;
  std::vector<std::size_t> cx;
  for (const auto& name : schema.covariates) cx.push_back(t.column(name));
  const bool has_loc = !schema.location.empty();
  const std::size_t cl = has_loc ? t.column(schema.location) : 0;
  const bool raw_coords = !schema.coord_x.empty() || !schema.coord_y.empty();
  if (raw_coords && has_loc) throw DataError("give either a location column or raw coordinates, not both");
  if (sites && !has_loc) throw DataError("a site table requires a location column");
  const std::size_t cxx = raw_coords ? t.column(schema.coord_x) : 0;
  const std::size_t cyy = raw_coords ? t.column(schema.coord_y) : 0;

  LoadedData out;
  std::vector<std::string> ids;
  std::vector<std::array<double, 2>> coords;
  std::map<std::pair<double, double>, int> coord_index;
  std::vector<CensoredObservation> obs;
  obs.reserve(t.rows.size());

  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    CensoredObservation o;
    o.u = has_trunc && !blank(row[ct]) ? parse_number(row[ct], line, schema.trunc) : 0.0;
    o.a = blank(row[c1]) ? o.u : parse_number(row[c1], line, schema.t1);
    o.b = blank(row[c2]) ? kInf : parse_number(row[c2], line, schema.t2);
    validate_times(o.u, o.a, o.b, line);
    for (std::size_t j = 0; j < cx.size(); ++j) {
      if (blank(row[cx[j]])) throw DataError("missing covariate '" + schema.covariates[j] + "'", line);
      o.x.push_back(parse_number(row[cx[j]], line, schema.covariates[j]));
    }
    if (has_loc) {
      const std::string& id = row[cl];
      auto [it, inserted] = out.id_to_index.emplace(id, static_cast<int>(ids.size()));
      if (inserted) {
        ids.push_back(id);
        if (sites) {
          auto s = sites->find(id);
          if (s == sites->end()) throw DataError("site id '" + id + "' not in site table", line);
          coords.push_back(s->second);
        }
      }
      o.location = it->second;
    } else if (raw_coords) {
      const double x = parse_number(row[cxx], line, schema.coord_x);
      const double y = parse_number(row[cyy], line, schema.coord_y);
      auto [it, inserted] = coord_index.emplace(std::make_pair(x, y), static_cast<int>(ids.size()));
      if (inserted) {
        ids.push_back(std::to_string(ids.size() + 1));
        out.id_to_index.emplace(ids.back(), it->second);
        coords.push_back({x, y});
      }
      o.location = it->second;
    }
    obs.push_back(std::move(o));
  }

  const int m = (has_loc || raw_coords) ? static_cast<int>(ids.size()) : 1;
  if (!has_loc && !raw_coords) {
    ids = {"1"};
    out.id_to_index.emplace("1", 0);
  }
  out.data = Dataset(std::move(obs), std::max(m, 1), schema.covariates);
  out.data.location_ids = ids;
  if (!coords.empty()) {
    Eigen::MatrixX2d c(static_cast<Eigen::Index>(coords.size()), 2);
    for (std::size_t k = 0; k < coords.size(); ++k) c.row(static_cast<Eigen::Index>(k)) << coords[k][0], coords[k][1];
    out.data.coords = c;
  }
  return out;
}

CsvSchema standard_schema(const Dataset& data) {
  CsvSchema s;
  bool any_trunc = false;
  for (const auto& o : data.observations()) any_trunc |= o.truncated();
  if (any_trunc) s.trunc = "trunc";
  s.covariates = data.covariate_names();
  s.location = "location";
  return s;
}

void write_csv(const Dataset& data, std::ostream& out) {
  const CsvSchema s = standard_schema(data);
  std::vector<std::string> header{s.t1, s.t2};
  if (!s.trunc.empty()) header.push_back(s.trunc);
  for (const auto& c : s.covariates) header.push_back(c);
  header.push_back(s.location);
  write_csv_row(out, header);
  for (const auto& o : data.observations()) {
    std::vector<std::string> row{format_double(o.a), std::isinf(o.b) ? std::string() : format_double(o.b)};
    if (!s.trunc.empty()) row.push_back(format_double(o.u));
    for (double v : o.x) row.push_back(format_double(v));
    row.push_back(data.location_ids.at(static_cast<std::size_t>(o.location)));
    write_csv_row(out, row);
  }
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file '" + path + "' for writing");
  write_csv(data, out);
}

Eigen::MatrixXd read_adjacency(const std::string& path, AdjacencyFormat format, int num_regions) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file '" + path + "'");
  return read_adjacency(in, format, num_regions);
}

Eigen::MatrixXd read_adjacency(std::istream& in, AdjacencyFormat format, int num_regions) {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const auto hash = text.find('#');
    if (hash != std::string::npos) text.erase(hash);
    std::istringstream ss(text);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) vals.push_back(parse_number(tok, line, "adjacency"));
    if (!vals.empty()) {
      rows.push_back(std::move(vals));
      lines.push_back(line);
    }
  }
  if (format == AdjacencyFormat::Auto) {
    bool square = !rows.empty();
    for (const auto& r : rows) square &= r.size() == rows.size();
    format = square && rows.size() != 2 ? AdjacencyFormat::Matrix : AdjacencyFormat::EdgeList;
    if (square && rows.size() == 2) {
      // A 2x2 matrix and a two-edge list look alike; a matrix has a zero diagonal.
      format = rows[0][0] == 0.0 && rows[1][1] == 0.0 ? AdjacencyFormat::Matrix : AdjacencyFormat::EdgeList;
    }
  }
  Eigen::MatrixXd e;
  if (format == AdjacencyFormat::Matrix) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    e.setZero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m)
        throw DataError("adjacency matrix is not square", lines[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < m; ++j) e(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  } else {
    int m = num_regions;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != 2) throw DataError("edge list rows need two region indices", lines[r]);
      for (double v : rows[r]) {
        if (v < 1 || v != std::floor(v)) throw DataError("edge list indices are 1-based integers", lines[r]);
        if (num_regions > 0 && v > num_regions) throw DataError("edge list index exceeds region count", lines[r]);
        m = std::max(m, static_cast<int>(v));
      }
    }
    e.setZero(m, m);
    for (const auto& r : rows) {
      const auto i = static_cast<Eigen::Index>(r[0]) - 1;
      const auto j = static_cast<Eigen::Index>(r[1]) - 1;
      if (i == j) throw DataError("edge list contains a self loop");
      e(i, j) = e(j, i) = 1.0;
    }
  }
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      if (e(i, j) != 0.0 && e(i, j) != 1.0) throw DataError("adjacency entries must be 0 or 1");
      if (e(i, j) != e(j, i)) throw DataError("adjacency matrix is not symmetric");
    }
  return e;
}

void write_adjacency(const Eigen::MatrixXd& adjacency, std::ostream& out) {
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) out << (j ? " " : "") << static_cast<int>(adjacency(i, j));
    out << '\n';
  }
}

}  // namespace spsurv
