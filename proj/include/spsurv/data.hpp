#pragma once

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "spsurv/csv.hpp"
#include "spsurv/special.hpp"

namespace spsurv {

enum class CensoringKind { Exact, Right, Left, Interval };

const char* to_string(CensoringKind kind);

// One subject record. The survival time lies in (a, b); a == b means exactly
// observed and b == +inf means right censored. u is the left-truncation time.
struct CensoredObservation {
  double a = 0.0;
  double b = kInf;
  double u = 0.0;
  std::vector<double> x;
  int location = 0;  // 0-based index into the dataset's locations

  // Inferred from (u, a, b); never stored.
  CensoringKind kind() const;
  bool truncated() const { return u > 0.0; }
};

// Throws DataError when (u, a, b) violates 0 <= u <= a <= b or describes an
// exact time of zero.
void validate_times(double u, double a, double b, std::size_t line = 0);

struct Epoch {
  double t = 0.0;
  std::vector<double> x;
};

struct TimeVaryingSubject {
  double u = 0.0;
  double a = 0.0;
  double b = kInf;
  int location = 0;
  std::vector<Epoch> epochs;  // t_1 = u, strictly increasing, t_o <= a
};

// Splits a subject with step-function covariates into left-truncated records:
// (t_k, t_{k+1}, inf, x_k) for k < o and (t_o, a, b, x_o) last.
std::vector<CensoredObservation> expand_time_varying(const TimeVaryingSubject& subject);

// Immutable after construction; safe to share read-only across threads.
class Dataset {
 public:
  Dataset() = default;
  // Set require_all_locations = false only for prior-only use where some
  // locations carry no subjects.
  Dataset(std::vector<CensoredObservation> observations, int num_locations,
          std::vector<std::string> covariate_names, bool require_all_locations = true);

  std::size_t n() const { return obs_.size(); }
  int m() const { return m_; }
  int p() const { return static_cast<int>(names_.size()); }
  const std::vector<CensoredObservation>& observations() const { return obs_; }
  const CensoredObservation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  // Raw design (n x p) and its column-centered copy.
  const Eigen::MatrixXd& design() const { return x_; }
  const Eigen::MatrixXd& centered_design() const { return xc_; }
  const Eigen::VectorXd& covariate_means() const { return means_; }
  const std::vector<std::vector<int>>& by_location() const { return by_location_; }

  // Optional metadata carried for I/O.
  std::vector<std::string> location_ids;    // index -> original id
  std::optional<Eigen::MatrixX2d> coords;   // m x 2 site coordinates (georeferenced data)

 private:
  std::vector<CensoredObservation> obs_;
  int m_ = 0;
  std::vector<std::string> names_;
  Eigen::MatrixXd x_, xc_;
  Eigen::VectorXd means_;
  std::vector<std::vector<int>> by_location_;
};

struct CsvSchema {
  std::string t1 = "t1";
  std::string t2 = "t2";
  std::string trunc;     // empty: no truncation column
  std::vector<std::string> covariates;
  std::string location;  // areal id or site id column; empty: single location
  std::string coord_x;   // raw coordinates per subject (georeferenced)
  std::string coord_y;
};

struct LoadedData {
  Dataset data;
  std::unordered_map<std::string, int> id_to_index;
};

// Site table rows: id, x, y.
std::unordered_map<std::string, std::array<double, 2>> read_sites(const std::string& path);

// Loads arbitrarily censored data. An empty t2 field is +inf, an empty t1 is
// the truncation time. Location ids are densely re-indexed in order of first
// appearance. When `sites` is given the location column refers to site ids and
// coordinates are taken from the table; when coord_x/coord_y are set, distinct
// coordinate pairs become sites.
LoadedData load_csv(const std::string& path, const CsvSchema& schema,
                    const std::unordered_map<std::string, std::array<double, 2>>* sites = nullptr);
LoadedData load_csv(std::istream& in, const CsvSchema& schema,
                    const std::unordered_map<std::string, std::array<double, 2>>* sites = nullptr);

// Writes the standard schema: t1,t2[,trunc],covariates...,location[,x,y].
void write_csv(const Dataset& data, std::ostream& out);
void write_csv(const Dataset& data, const std::string& path);
CsvSchema standard_schema(const Dataset& data);

enum class AdjacencyFormat { Auto, Matrix, EdgeList };

// Whitespace-separated 0/1 matrix, or an edge list of 1-based index pairs.
Eigen::MatrixXd read_adjacency(const std::string& path, AdjacencyFormat format = AdjacencyFormat::Auto,
                               int num_regions = 0);
Eigen::MatrixXd read_adjacency(std::istream& in, AdjacencyFormat format = AdjacencyFormat::Auto,
                               int num_regions = 0);
void write_adjacency(const Eigen::MatrixXd& adjacency, std::ostream& out);

}  // namespace spsurv
