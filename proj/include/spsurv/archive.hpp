#pragma once

#include <string>

#include <json.hpp>

#include "spsurv/sampler.hpp"

namespace spsurv {

// Directory layout: draws.csv (header = parameter names), loglik.bin (uint64 L,
// uint64 n, then L*n doubles row-major), optional loglik.csv and meta.json.
// `config` is echoed under "config"; `extra` keys are merged into the top level.
void write_archive(const PosteriorArchive& archive, const std::string& dir, const nlohmann::json& config,
                   const nlohmann::json& extra = nlohmann::json::object(), bool loglik_csv = false);

struct LoadedArchive {
  PosteriorArchive archive;
  nlohmann::json meta;
};

LoadedArchive read_archive(const std::string& dir);

void write_draws_csv(const PosteriorArchive& archive, std::ostream& out);
void write_loglik_bin(const Eigen::MatrixXd& loglik, const std::string& path);
Eigen::MatrixXd read_loglik_bin(const std::string& path);

nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace spsurv
