#include "retsim/bounds.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "retsim/numeric.hpp"

namespace retsim {

namespace {

bool row_degenerate(const MarginMoments& moments, int j) {
  return moments.sigma(j, j) <= 0.0;
}

}  // namespace

gaussian::OrthantEstimate pe_mvn(const MarginMoments& moments,
                                 const gaussian::QmcConfig& cfg) {
  const int m = static_cast<int>(moments.mu.size());
  std::vector<int> live;
  for (int j = 0; j < m; ++j) {
    if (row_degenerate(moments, j)) {
      if (moments.mu[j] <= 0.0) {
        gaussian::OrthantEstimate certain;
        certain.value = 1.0;
        certain.accuracy_bound = 1e-12;
        return certain;  // deterministic margin at or below zero
      }
    } else {
      live.push_back(j);
    }
  }
  if (live.empty()) {
    gaussian::OrthantEstimate none;
    none.value = 0.0;
    none.accuracy_bound = 1e-12;
    return none;
  }
  const int mr = static_cast<int>(live.size());
  Eigen::VectorXd mu(mr);
  Eigen::MatrixXd sigma(mr, mr);
  for (int a = 0; a < mr; ++a) {
    mu[a] = -moments.mu[live[a]];
    for (int b = 0; b < mr; ++b)
      sigma(a, b) = moments.sigma(live[a], live[b]);
  }
  gaussian::OrthantEstimate est = gaussian::mvn_cdf_at_zero(mu, sigma, cfg);
  est.value = 1.0 - est.value;
  return est;
}

double bonferroni_first(const MarginMoments& moments) {
  const int m = static_cast<int>(moments.mu.size());
  KahanSum acc;
  for (int j = 0; j < m; ++j) {
    if (row_degenerate(moments, j)) {
      acc.add(moments.mu[j] <= 0.0 ? 1.0 : 0.0);
    } else {
      acc.add(gaussian::std_normal_cdf(-moments.mu[j] /
                                       std::sqrt(moments.sigma(j, j))));
    }
  }
  return acc.sum;
}

double bonferroni_third(const MarginMoments& moments) {
  const int m = static_cast<int>(moments.mu.size());
  KahanSum acc;
  acc.add(bonferroni_first(moments));
  for (int j = 0; j < m; ++j) {
    for (int l = j + 1; l < m; ++l) {
      Eigen::Vector2d mu(moments.mu[j], moments.mu[l]);
      Eigen::Matrix2d s;
      s << moments.sigma(j, j), moments.sigma(j, l), moments.sigma(l, j),
          moments.sigma(l, l);
      acc.add(-gaussian::bivariate_cdf_at_zero(mu, s));
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int l = j + 1; l < m; ++l) {
      for (int u = l + 1; u < m; ++u) {
        Eigen::Vector3d mu(moments.mu[j], moments.mu[l], moments.mu[u]);
        Eigen::Matrix3d s;
        s << moments.sigma(j, j), moments.sigma(j, l), moments.sigma(j, u),
            moments.sigma(l, j), moments.sigma(l, l), moments.sigma(l, u),
            moments.sigma(u, j), moments.sigma(u, l), moments.sigma(u, u);
        acc.add(gaussian::trivariate_cdf_at_zero(mu, s));
      }
    }
  }
  return acc.sum;
}

SidakResult sidak_bound(const MarginMoments& moments) {
  const int m = static_cast<int>(moments.mu.size());
  SidakResult out;
  double prod = 1.0;
  for (int j = 0; j < m; ++j) {
    if (row_degenerate(moments, j)) {
      prod *= moments.mu[j] > 0.0 ? 1.0 : 0.0;
    } else {
      prod *= gaussian::std_normal_cdf(moments.mu[j] /
                                       std::sqrt(moments.sigma(j, j)));
    }
  }
  out.value = 1.0 - prod;
  const CorrelationSummary corr = correlation_matrix(moments);
  out.valid = corr.defined_pairs == 0 || corr.min_offdiag >= -1e-10;
  return out;
}

BoundReport full_report(const MarginMoments& moments,
                        const gaussian::QmcConfig& cfg) {
  BoundReport out;
  out.pe = pe_mvn(moments, cfg);
  out.b1 = bonferroni_first(moments);
  out.b1_clipped = std::min(1.0, out.b1);
  out.b3 = bonferroni_third(moments);
  const SidakResult sidak = sidak_bound(moments);
  out.sidak = sidak.value;
  out.sidak_valid = sidak.valid;
  out.combined = std::min(out.b1_clipped, std::max(out.b3, 0.0));
  for (int j = 0; j < static_cast<int>(moments.mu.size()); ++j)
    if (row_degenerate(moments, j)) out.degenerate_rows.push_back(j);
  return out;
}

namespace {
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}
}  // namespace

std::string report_to_json(const BoundReport& report) {
  nlohmann::json j;
  j["pe_mvn"] = report.pe.value;
  j["pe_se"] = report.pe.standard_error;
  j["pe_samples"] = report.pe.samples;
  j["pe_method"] = gaussian::method_name(report.pe.method);
  j["b1"] = report.b1;
  j["b1_clipped"] = report.b1_clipped;
  j["b3"] = report.b3;
  j["sidak"] = report.sidak;
  j["sidak_valid"] = report.sidak_valid;
  j["combined"] = report.combined;
  j["degenerate_rows"] = report.degenerate_rows;
  return j.dump(2);
}

std::string report_csv_header() {
  return "pe_mvn,pe_se,pe_method,b1,b1_clipped,b3,sidak,sidak_valid,combined";
}

std::string report_csv_row(const BoundReport& report) {
  std::string row = fmt(report.pe.value);
  row += "," + fmt(report.pe.standard_error);
  row += ",";
  row += gaussian::method_name(report.pe.method);
  row += "," + fmt(report.b1);
  row += "," + fmt(report.b1_clipped);
  row += "," + fmt(report.b3);
  row += "," + fmt(report.sidak);
  row += report.sidak_valid ? ",1" : ",0";
  row += "," + fmt(report.combined);
  return row;
}

}  // namespace retsim
