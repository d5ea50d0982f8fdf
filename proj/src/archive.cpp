#include "spsurv/archive.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "spsurv/csv.hpp"

namespace spsurv {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json to_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(to_json(Eigen::VectorXd(m.row(r).transpose())));
  return j;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].is_null() ? kInf : j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vector_from_json(j[static_cast<std::size_t>(r)]).transpose();
  return m;
}

void write_draws_csv(const PosteriorArchive& a, std::ostream& out) {
  write_csv_row(out, a.names);
  std::vector<std::string> row(static_cast<std::size_t>(a.draws.cols()));
  for (Eigen::Index l = 0; l < a.draws.rows(); ++l) {
    for (Eigen::Index k = 0; k < a.draws.cols(); ++k) row[static_cast<std::size_t>(k)] = format_double(a.draws(l, k));
    write_csv_row(out, row);
  }
}

void write_loglik_bin(const Eigen::MatrixXd& loglik, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(loglik.rows()), static_cast<std::uint64_t>(loglik.cols())};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = loglik;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
}

Eigen::MatrixXd read_loglik_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::uint64_t dims[2];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(dims[0]),
                                                                            static_cast<Eigen::Index>(dims[1]));
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!in) throw std::runtime_error("truncated log-likelihood file " + path);
  return rm;
}

void write_archive(const PosteriorArchive& a, const std::string& dir, const json& config, const json& extra,
                   bool loglik_csv) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir + "/draws.csv");
    if (!out) throw std::runtime_error("cannot write " + dir + "/draws.csv");
    write_draws_csv(a, out);
  }
  if (a.loglik.size() > 0) {
    write_loglik_bin(a.loglik, dir + "/loglik.bin");
    if (loglik_csv) {
      std::ofstream out(dir + "/loglik.csv");
      std::vector<std::string> row(static_cast<std::size_t>(a.loglik.cols()));
      for (Eigen::Index l = 0; l < a.loglik.rows(); ++l) {
        for (Eigen::Index i = 0; i < a.loglik.cols(); ++i) row[static_cast<std::size_t>(i)] = format_double(a.loglik(l, i));
        write_csv_row(out, row);
      }
    }
  }
  const auto& l = a.layout;
  json meta;
  meta["config"] = config;
  meta["seed"] = a.seed;
  meta["iterations"] = a.iterations;
  meta["layout"] = {{"p", l.p},           {"nxi", l.nxi},       {"J", l.J},           {"m", l.m},
                    {"selection", l.selection}, {"frailty", l.has_frailty}, {"phi", l.has_phi}};
  meta["names"] = a.names;
  json acc = json::object();
  for (const auto& [name, s] : a.blocks)
    acc[name] = {{"proposed", s.proposed}, {"accepted", s.accepted}, {"nonfinite", s.nonfinite}, {"rate", s.rate()}};
  meta["acceptance"] = acc;
  meta["loglik_total"] = to_json(a.loglik_total);
  meta["loglik_at_mean"] = a.loglik_at_mean;
  const auto& p = a.priors;
  meta["priors"] = {{"beta0", to_json(p.beta0)}, {"W0", to_json(p.W0)},   {"theta0", to_json(Eigen::VectorXd(p.theta0))},
                    {"V0", to_json(Eigen::MatrixXd(p.V0))}, {"g", p.g}, {"phi0", p.phi0},
                    {"b_phi", p.b_phi},          {"ridge_added", p.ridge_added}};
  const auto& pr = a.prerun;
  meta["prerun"] = {{"theta_hat", to_json(Eigen::VectorXd(pr.theta_hat))}, {"V_hat", to_json(Eigen::MatrixXd(pr.V_hat))},
                    {"beta_hat", to_json(pr.beta_hat)}, {"tau2_hat", pr.tau2_hat}, {"phi_hat", pr.phi_hat}};
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  std::ofstream out(dir + "/meta.json");
  out << meta.dump(2) << '\n';
}

LoadedArchive read_archive(const std::string& dir) {
  LoadedArchive r;
  {
    std::ifstream in(dir + "/meta.json");
    if (!in) throw std::runtime_error("cannot read " + dir + "/meta.json");
    r.meta = json::parse(in);
  }
  auto& a = r.archive;
  const auto& m = r.meta;
  const auto& l = m.at("layout");
  a.layout = ParameterLayout::make(l.at("p"), l.at("selection"), l.at("nxi"), l.at("J"),
                                   l.at("phi").get<bool>()       ? FrailtyKind::GRF
                                   : l.at("frailty").get<bool>() ? FrailtyKind::IID
                                                                 : FrailtyKind::None,
                                   l.at("m"));
  a.names = m.at("names").get<std::vector<std::string>>();
  a.seed = m.at("seed");
  a.iterations = m.at("iterations");
  a.loglik_total = vector_from_json(m.at("loglik_total"));
  a.loglik_at_mean = m.at("loglik_at_mean");
  for (const auto& [name, s] : m.at("acceptance").items())
    a.blocks[name] = {s.at("proposed").get<long>(), s.at("accepted").get<long>(), s.at("nonfinite").get<long>()};
  const auto& p = m.at("priors");
  a.priors.beta0 = vector_from_json(p.at("beta0"));
  a.priors.W0 = matrix_from_json(p.at("W0"));
  a.priors.theta0 = vector_from_json(p.at("theta0"));
  a.priors.V0 = matrix_from_json(p.at("V0"));
  a.priors.g = p.at("g");
  a.priors.phi0 = p.at("phi0");
  a.priors.b_phi = p.at("b_phi");
  a.priors.ridge_added = p.at("ridge_added");

  const CsvTable t = read_csv_file(dir + "/draws.csv");
  if (t.header != a.names) throw std::runtime_error("draws.csv header does not match meta.json");
  a.draws.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t rI = 0; rI < t.rows.size(); ++rI)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      a.draws(static_cast<Eigen::Index>(rI), static_cast<Eigen::Index>(c)) = std::strtod(t.rows[rI][c].c_str(), nullptr);
  if (fs::exists(dir + "/loglik.bin")) a.loglik = read_loglik_bin(dir + "/loglik.bin");
  return r;
}

}  // namespace spsurv
