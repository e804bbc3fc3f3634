#include "rydchain/trace.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "rydchain/census.hpp"
#include "rydchain/error.hpp"

namespace rydchain {

std::vector<double> output_grid(double t_max, double dt_out) {
  if (!(t_max > 0.0)) throw Error(ErrorKind::kInvalidParameter, "t_max must be positive");
  if (!(dt_out > 0.0)) throw Error(ErrorKind::kInvalidParameter, "dt_out must be positive");
  const auto steps = static_cast<long>(std::floor(t_max / dt_out + 1e-9));
  std::vector<double> grid(steps + 1);
  for (long k = 0; k <= steps; ++k) grid[k] = k * dt_out;
  return grid;
}

void derive_moments(ObservableTrace& trace) {
  const Eigen::Index rows = trace.P.rows();
  trace.f_R.assign(rows, 0.0);
  trace.M2.assign(rows, 0.0);
  const double N = trace.atoms;
  for (Eigen::Index t = 0; t < rows; ++t) {
    double m1 = 0.0, m2 = 0.0;
    for (Eigen::Index n = 0; n < trace.P.cols(); ++n) {
      m1 += n * trace.P(t, n);
      m2 += double(n) * n * trace.P(t, n);
    }
    trace.f_R[t] = m1 / N;
    trace.M2[t] = m2 / (N * N);
  }
}

namespace {

struct FullPrecision {
  explicit FullPrecision(std::ostream& os) : os_(os), flags_(os.flags()), prec_(os.precision()) {
    os_ << std::setprecision(std::numeric_limits<double>::max_digits10);
  }
  ~FullPrecision() {
    os_.flags(flags_);
    os_.precision(prec_);
  }
  std::ostream& os_;
  std::ios::fmtflags flags_;
  std::streamsize prec_;
};

}  // namespace

void write_trace_csv(std::ostream& os, const ObservableTrace& trace) {
  FullPrecision guard(os);
  os << "t_us,f_R,M2";
  for (Eigen::Index n = 0; n < trace.P.cols(); ++n) os << ",P_" << n;
  os << '\n';
  for (std::size_t t = 0; t < trace.size(); ++t) {
    os << trace.times[t] << ',' << trace.f_R[t] << ',' << trace.M2[t];
    for (Eigen::Index n = 0; n < trace.P.cols(); ++n) os << ',' << trace.P(static_cast<Eigen::Index>(t), n);
    os << '\n';
  }
}

void write_cm2_csv(std::ostream& os, const ObservableTrace& trace) {
  if (!trace.Cm2) throw Error(ErrorKind::kInvalidParameter, "trace carries no configuration occupations");
  FullPrecision guard(os);
  os << "config";
  for (double t : trace.times) os << ",t=" << t;
  os << '\n';
  for (std::size_t m = 0; m < trace.cm2_configs.size(); ++m) {
    os << config_to_string(trace.cm2_configs[m], trace.atoms);
    for (std::size_t t = 0; t < trace.size(); ++t)
      os << ',' << (*trace.Cm2)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m));
    os << '\n';
  }
}

ObservableTrace read_trace_csv(std::istream& is, int atoms) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t_us,f_R,M2", 0) != 0)
    throw Error(ErrorKind::kConfigParse, "trace CSV header missing");
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) - 2;
  ObservableTrace tr;
  tr.atoms = atoms;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<Eigen::Index>(row.size()) != columns + 3) throw Error(ErrorKind::kConfigParse, "ragged trace CSV");
    rows.push_back(std::move(row));
  }
  tr.P.resize(static_cast<Eigen::Index>(rows.size()), columns);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    tr.times.push_back(rows[t][0]);
    tr.f_R.push_back(rows[t][1]);
    tr.M2.push_back(rows[t][2]);
    for (Eigen::Index n = 0; n < columns; ++n) tr.P(static_cast<Eigen::Index>(t), n) = rows[t][3 + n];
  }
  return tr;
}

ObservableTrace combine_traces(const std::vector<const ObservableTrace*>& traces, const std::vector<double>& weights) {
  if (traces.empty() || traces.size() != weights.size())
    throw Error(ErrorKind::kInvalidParameter, "trace/weight count mismatch");
  ObservableTrace out = *traces.front();
  out.P *= weights.front();
  for (auto& v : out.f_R) v *= weights.front();
  for (auto& v : out.M2) v *= weights.front();
  if (out.Cm2) *out.Cm2 *= weights.front();
  for (std::size_t k = 1; k < traces.size(); ++k) {
    const auto& tr = *traces[k];
    if (tr.times.size() != out.times.size() || tr.P.cols() != out.P.cols())
      throw Error(ErrorKind::kLengthMismatch, "traces do not share a grid");
    out.P += weights[k] * tr.P;
    for (std::size_t t = 0; t < out.size(); ++t) {
      out.f_R[t] += weights[k] * tr.f_R[t];
      out.M2[t] += weights[k] * tr.M2[t];
    }
    if (out.Cm2 && tr.Cm2) *out.Cm2 += weights[k] * *tr.Cm2;
    auto& d = out.diagnostics;
    d.max_norm_deviation = std::max(d.max_norm_deviation, tr.diagnostics.max_norm_deviation);
    d.max_energy_drift = std::max(d.max_energy_drift, tr.diagnostics.max_energy_drift);
    d.min_population = std::min(d.min_population, tr.diagnostics.min_population);
    d.max_hermiticity_error = std::max(d.max_hermiticity_error, tr.diagnostics.max_hermiticity_error);
    d.max_probability_error = std::max(d.max_probability_error, tr.diagnostics.max_probability_error);
  }
  return out;
}

}  // namespace rydchain
