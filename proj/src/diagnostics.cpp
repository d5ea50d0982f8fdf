#include "spsurv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "spsurv/csv.hpp"
#include "spsurv/log.hpp"

namespace spsurv {

std::vector<Eigen::Index> thinned_draws(Eigen::Index total, int count) {
  std::vector<Eigen::Index> out;
  if (total <= 0 || count <= 0) return out;
  const Eigen::Index k = std::min<Eigen::Index>(count, total);
  for (Eigen::Index j = 0; j < k; ++j) out.push_back((j * total) / k + (total / k) - 1);
  return out;
}

std::vector<ResidualSample> coxsnell_residuals(const PosteriorArchive& archive, const ModelContext& ctx,
                                               const std::vector<Eigen::Index>& draws) {
  const Dataset& data = ctx.data();
  const auto& obs = data.observations();
  std::vector<ResidualSample> out;
  std::vector<double> eta(data.n());
  for (auto d : draws) {
    const ChainState s = ChainState::unpack(archive.layout, archive.draws.row(d).transpose());
    const TbpBaseline base = ctx.baseline(s.z, s.theta);
    ctx.predictor(s.beta_eff(), s.xi, s.v, eta);
    const auto r = [&](double t, double e) {
      if (t <= 0.0) return 0.0;
      if (std::isinf(t)) return kInf;
      const auto v = model_eval(ctx.model(), t, e, base, false);
      return -log_surv_of(v.surv, v.cdf);
    };
    ResidualSample sample(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto& o = obs[i];
      auto& ri = sample[i];
      ri.kind = o.kind();
      ri.lo = ri.kind == CensoringKind::Left ? 0.0 : r(o.a, eta[i]);
      ri.hi = ri.kind == CensoringKind::Exact ? ri.lo : r(o.b, eta[i]);
      ri.entry = r(o.u, eta[i]);
      if (ri.kind == CensoringKind::Left) ri.lo = ri.entry;
    }
    out.push_back(std::move(sample));
  }
  return out;
}

namespace {

// Boundary keys order points so that "just after x" sorts after x itself.
struct Key {
  double value;
  int after;  // 1 for x+
  auto operator<=>(const Key&) const = default;
};

struct Boundary {
  Key key;
  bool left;
};

}  // namespace

double TurnbullResult::survival_before(std::size_t j) const {
  double s = 0.0;
  for (std::size_t k = j; k < mass.size(); ++k) s += mass[k];
  return std::min(s, 1.0);
}

double TurnbullResult::survival(double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (support[k].lo > x || (support[k].open_left && support[k].lo >= x)) s += mass[k];
  return std::min(s, 1.0);
}

TurnbullResult turnbull_npmle(const ResidualSample& sample, const TurnbullOptions& options) {
  TurnbullResult res;
  const std::size_t n = sample.size();
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::vector<Key> lo(n), hi(n), entry(n);
  std::vector<Boundary> bounds;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sample[i];
    const bool exact = s.kind == CensoringKind::Exact || s.lo == s.hi;
    lo[i] = exact ? Key{s.lo, 0} : Key{s.lo, 1};
    hi[i] = Key{s.hi, 0};
    entry[i] = Key{s.entry, s.entry > 0.0 ? 1 : 0};
    bounds.push_back({lo[i], true});
    bounds.push_back({hi[i], false});
  }
  std::sort(bounds.begin(), bounds.end(), [](const Boundary& a, const Boundary& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.left && !b.left;
  });
  std::vector<std::pair<Key, Key>> inner;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k)
    if (bounds[k].left && !bounds[k + 1].left) inner.emplace_back(bounds[k].key, bounds[k + 1].key);
  const std::size_t m = inner.size();
  for (const auto& [l, r] : inner) res.support.push_back({l.value, r.value, l.after == 1});

  // Membership lists: which innermost intervals each record (and its truncation set) covers.
  std::vector<std::pair<std::size_t, std::size_t>> cover(n), trunc(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = m, b = 0;
    for (std::size_t j = 0; j < m; ++j)
      if (lo[i] <= inner[j].first && inner[j].second <= hi[i]) a = std::min(a, j), b = j + 1;
    cover[i] = {a, std::max(a, b)};
    std::size_t t = m;
    for (std::size_t j = 0; j < m; ++j)
      if (entry[i] <= inner[j].first) {
        t = j;
        break;
      }
    trunc[i] = {t, m};
  }
  // Innermost intervals are sorted and disjoint, so each record covers a contiguous run.
  std::vector<double> p(m, 1.0 / static_cast<double>(m)), next(m);
  for (int it = 1; it <= options.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [a, b] = cover[i];
      double d = 0.0;
      for (std::size_t j = a; j < b; ++j) d += p[j];
      if (d > 0.0)
        for (std::size_t j = a; j < b; ++j) next[j] += p[j] / d;
      total += 1.0;
      const auto [t0, t1] = trunc[i];
      if (t0 == 0) continue;
      double tp = 0.0;
      for (std::size_t j = t0; j < t1; ++j) tp += p[j];
      if (tp <= 0.0) continue;
      // Ghost observations below the entry point.
      for (std::size_t j = 0; j < t0; ++j) next[j] += p[j] / tp;
      total += (1.0 - tp) / tp;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      next[j] /= total;
      delta = std::max(delta, std::abs(next[j] - p[j]));
    }
    p.swap(next);
    res.iterations = it;
    if (delta < options.tolerance) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) warn("Turnbull EM did not converge; returning the last iterate");
  res.mass = p;
  return res;
}

std::vector<PlotPoint> residual_plot_data(const std::vector<ResidualSample>& samples, const TurnbullOptions& options) {
  std::vector<PlotPoint> out;
  for (std::size_t d = 0; d < samples.size(); ++d) {
    const auto fit = turnbull_npmle(samples[d], options);
    for (std::size_t j = 0; j < fit.support.size(); ++j) {
      const double s = fit.survival_before(j);
      if (!(s > 0.0) || !std::isfinite(fit.support[j].lo)) continue;
      out.push_back({static_cast<int>(d + 1), fit.support[j].lo, -std::log(s)});
    }
  }
  return out;
}

std::vector<PlotPoint> residual_plot_data(const PosteriorArchive& archive, const ModelContext& ctx, int draws) {
  return residual_plot_data(coxsnell_residuals(archive, ctx, thinned_draws(archive.draws.rows(), draws)));
}

double cumhaz_slope(const std::vector<PlotPoint>& points, double min_survival) {
  const double cap = min_survival > 0.0 ? -std::log(min_survival) : kInf;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, k = 0.0;
  for (const auto& pt : points) {
    if (pt.cumhaz > cap) continue;
    sx += pt.r, sy += pt.cumhaz, sxx += pt.r * pt.r, sxy += pt.r * pt.cumhaz, k += 1.0;
  }
  if (k < 2.0) throw std::invalid_argument("too few points for a slope");
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void write_plot_csv(const std::vector<PlotPoint>& points, std::ostream& out) {
  write_csv_row(out, {"draw_id", "r", "cumhaz"});
  for (const auto& pt : points) write_csv_row(out, {std::to_string(pt.draw), format_double(pt.r), format_double(pt.cumhaz)});
}

void write_plot_svg(const std::vector<PlotPoint>& points, std::ostream& out) {
  constexpr double W = 480, H = 480, pad = 40;
  double top = 1.0;
  for (const auto& pt : points) top = std::max({top, pt.r, pt.cumhaz});
  const auto sx = [&](double x) { return pad + (W - 2 * pad) * x / top; };
  const auto sy = [&](double y) { return H - pad - (H - 2 * pad) * y / top; };
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' '
      << H << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
      << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(top) << "\" y2=\"" << sy(top)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n"
      << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(top) << "\" y2=\"" << sy(0)
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(top)
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">residual</text>\n"
      << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << H / 2
      << ")\" text-anchor=\"middle\">cumulative hazard</text>\n";
  static constexpr const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  for (const auto& pt : points)
    out << "<circle cx=\"" << sx(pt.r) << "\" cy=\"" << sy(pt.cumhaz) << "\" r=\"1.5\" fill=\""
        << colors[static_cast<std::size_t>(pt.draw) % 10] << "\"/>\n";
  out << "</svg>\n";
}

}  // namespace spsurv
