#include "rmaft/topology.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "rmaft/errors.hpp"

namespace rmaft {

double FailurePdf::operator()(double x) const { return a * std::exp(-lambda * x); }

FdHierarchy::FdHierarchy(std::vector<FdLevel> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw ArgumentError("a hierarchy needs at least one level");
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    const auto& l = levels_[j];
    if (l.count == 0) throw ArgumentError("level '" + l.name + "' has no elements");
    if (!(l.pdf.a > 0.0) || !(l.pdf.lambda > 0.0)) {
      throw ArgumentError("level '" + l.name + "' needs a positive failure distribution");
    }
    if (j > 0 && l.count > levels_[j - 1].count) {
      throw ArgumentError("level '" + l.name + "' has more elements than the level below it");
    }
  }
}

const FdLevel& FdHierarchy::level(std::size_t j) const {
  if (j == 0 || j > levels_.size()) throw LookupError("no hierarchy level " + std::to_string(j));
  return levels_[j - 1];
}

std::size_t FdHierarchy::parent(std::size_t j, std::size_t element) const {
  if (j >= levels_.size()) throw LookupError("top level has no parent");
  if (element >= count(j)) throw LookupError("element outside level " + std::to_string(j));
  return element * count(j + 1) / count(j);
}

std::size_t FdHierarchy::ancestor(std::size_t node, std::size_t j) const {
  level(j);
  std::size_t e = node;
  for (std::size_t k = 1; k < j; ++k) e = parent(k, e);
  return e;
}

std::size_t FdHierarchy::level_index(std::string_view name) const {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const auto wanted = lower(name);
  for (std::size_t j = 0; j < levels_.size(); ++j) {
    if (lower(levels_[j].name) == wanted) return j + 1;
  }
  throw LookupError("hierarchy has no level named '" + std::string(name) + "'");
}

FdHierarchy tsubame2_profile() {
  return FdHierarchy({
      {"node", 1408, {0.30142e-2, 1.3567}},
      {"psu", 352, {1.1836e-4, 1.4831}},
      {"switch", 88, {3.9249e-5, 1.5902}},
      {"rack", 44, {3.2257e-5, 1.5488}},
  });
}

Groups make_groups(std::size_t processes, std::size_t groups) {
  if (groups == 0 || groups > processes) throw ArgumentError("group count must lie in [1, processes]");
  const std::size_t size = (processes + groups - 1) / groups;
  Groups out;
  for (std::size_t start = 0; start < processes; start += size) {
    auto& g = out.emplace_back();
    for (std::size_t p = start; p < std::min(processes, start + size); ++p) {
      g.emplace_back(static_cast<std::uint32_t>(p));
    }
  }
  return out;
}

Placement make_taware_placement(const FdHierarchy& hier, const Groups& groups, std::size_t n) {
  if (n > hier.height()) throw ArgumentError("t-awareness level above the hierarchy");
  std::size_t processes = 0;
  for (const auto& g : groups) {
    for (auto p : g) processes = std::max(processes, p.index() + 1);
  }
  for (std::size_t k = 1; k <= n; ++k) {
    for (const auto& g : groups) {
      if (g.size() > hier.count(k)) {
        throw InfeasiblePlacement("level " + std::to_string(k) + " ('" + hier.level(k).name + "') has " +
                                  std::to_string(hier.count(k)) + " elements for a group of " +
                                  std::to_string(g.size()));
      }
    }
  }

  std::vector<std::size_t> node_of(processes, 0);
  if (n == 0) {
    std::size_t next = 0;
    for (const auto& g : groups) {
      for (auto p : g) node_of[p.index()] = next++ % hier.count(1);
    }
  } else {
    const auto top = hier.count(n);
    std::vector<std::vector<std::size_t>> nodes_under(top);
    for (std::size_t node = 0; node < hier.count(1); ++node) nodes_under[hier.ancestor(node, n)].push_back(node);
    std::vector<std::size_t> used(top, 0);
    std::size_t cursor = 0;
    for (const auto& g : groups) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto e = (cursor + i) % top;
        const auto& candidates = nodes_under[e];
        node_of[g[i].index()] = candidates[used[e]++ % candidates.size()];
      }
      cursor = (cursor + g.size()) % top;
    }
  }

  Placement out;
  out.element.resize(processes);
  for (std::size_t p = 0; p < processes; ++p) {
    auto& row = out.element[p];
    row.push_back(node_of[p]);
    for (std::size_t j = 1; j < hier.height(); ++j) row.push_back(hier.parent(j, row.back()));
  }
  return out;
}

std::optional<PlacementViolation> validate_taware(const Placement& placement, const Groups& groups, std::size_t n,
                                                  std::size_t m) {
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<std::size_t> elements;
      for (auto p : groups[gi]) elements.push_back(placement.at(p, k));
      std::sort(elements.begin(), elements.end());
      for (std::size_t i = 0; i < elements.size();) {
        std::size_t j = i;
        while (j < elements.size() && elements[j] == elements[i]) ++j;
        if (j - i > m) return PlacementViolation{gi, k, elements[i]};
        i = j;
      }
    }
  }
  return std::nullopt;
}

double p_conditional(std::size_t elements, std::size_t group_size, std::size_t failures) {
  if (elements == 0) throw ArgumentError("a level needs at least one element");
  if (group_size < 2) throw ArgumentError("group size must be at least 2");
  if (failures > elements) throw ArgumentError("more failures than elements");
  if (failures < 2) return 0.0;
  const long double h = static_cast<long double>(elements);
  const long double g = static_cast<long double>(group_size);
  const long double x = static_cast<long double>(failures);
  const long double d = static_cast<long double>((elements + group_size - 1) / group_size);
  // C(H-2, x-2) / C(H, x) = x (x-1) / (H (H-1))
  const long double v = d * (g * (g - 1.0L) / 2.0L) * (x * (x - 1.0L)) / (h * (h - 1.0L));
  return static_cast<double>(std::clamp(v, 0.0L, 1.0L));
}

std::size_t group_size(std::size_t processes, std::size_t groups, std::size_t m) {
  if (groups == 0) throw ArgumentError("at least one checksum group is needed");
  if (groups > processes) throw ArgumentError("more groups than processes");
  return (processes + groups - 1) / groups + m;
}

std::size_t groups_for_fraction(std::size_t processes, double fraction) {
  if (!(fraction > 0.0) || fraction > 1.0) throw ArgumentError("checksum fraction must lie in (0, 1]");
  const auto g = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(processes)));
  if (g == 0) throw ArgumentError("checksum fraction leaves no group");
  return g;
}

namespace {

void validate(const PcfQuery& q) {
  if (q.processes == 0) throw ArgumentError("no processes");
  if (q.m != 1) throw ArgumentError("only m = 1 (XOR) groups are modelled");
  if (q.hierarchy.height() == 0) throw ArgumentError("empty hierarchy");
  if (q.taware_level > q.hierarchy.height()) throw ArgumentError("t-awareness level above the hierarchy");
  group_size(q.processes, q.groups, q.m);
}

// Below this many elements a level is summed without threads.
constexpr long kParallelElements = 4096;

}  // namespace

double p_cf_serial(const PcfQuery& q) {
  validate(q);
  const auto size = group_size(q.processes, q.groups, q.m);
  double total = 0.0;
  for (std::size_t j = 1; j <= q.hierarchy.height(); ++j) {
    const auto& level = q.hierarchy.level(j);
    const bool taware = j <= q.taware_level;
    for (std::size_t x = 1; x <= level.count; ++x) {
      const double px = level.pdf(static_cast<double>(x));
      total += taware ? px * p_conditional(level.count, size, x) : px;
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

double p_cf(const PcfQuery& q) {
  validate(q);
  const auto size = group_size(q.processes, q.groups, q.m);
  double total = 0.0;
  for (std::size_t j = 1; j <= q.hierarchy.height(); ++j) {
    const auto& level = q.hierarchy.level(j);
    const bool taware = j <= q.taware_level;
    const long count = static_cast<long>(level.count);
    double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) schedule(static) if (count >= kParallelElements)
    for (long x = 1; x <= count; ++x) {
      const double px = level.pdf(static_cast<double>(x));
      sum += taware ? px * p_conditional(level.count, size, static_cast<std::size_t>(x)) : px;
    }
    total += sum;
  }
  return std::clamp(total, 0.0, 1.0);
}

FailurePdf fit_pdf(std::span<const double> counts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!(counts[i] > 0.0)) continue;
    const double x = static_cast<double>(i + 1);
    const double y = std::log(counts[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 2) throw ArgumentError("need at least two non-empty histogram bins to fit");
  const double n = static_cast<double>(used);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  if (!(slope < 0.0)) throw ArgumentError("histogram does not decay; no exponential fit");
  return FailurePdf{std::exp(intercept), -slope};
}

std::vector<double> synthesize_node_histogram(std::size_t bins) {
  if (bins < 2) throw ArgumentError("need at least two bins");
  std::vector<double> h(bins);
  h[0] = 0.75;
  h[1] = 0.20;
  for (std::size_t i = 2; i < bins; ++i) h[i] = h[i - 1] * (h[1] / h[0]);
  return h;
}

}  // namespace rmaft
