#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmaft/types.hpp"

namespace rmaft {

/// A * exp(-lambda * x): failures per day with x concurrent failures.
struct FailurePdf {
  double a = 0.0;
  double lambda = 0.0;

  double operator()(double x) const;
};

struct FdLevel {
  std::string name;
  std::size_t count = 0;
  FailurePdf pdf;
};

/// Failure-domain hierarchy, level 1 (nodes) first. Element e of level j
/// belongs to element floor(e * H_{j+1} / H_j) of level j + 1.
class FdHierarchy {
 public:
  FdHierarchy() = default;
  explicit FdHierarchy(std::vector<FdLevel> levels);

  std::size_t height() const { return levels_.size(); }
  /// 1-based, as in the model.
  const FdLevel& level(std::size_t j) const;
  std::size_t count(std::size_t j) const { return level(j).count; }
  std::size_t parent(std::size_t j, std::size_t element) const;
  /// Level-j element containing node `node`.
  std::size_t ancestor(std::size_t node, std::size_t j) const;
  /// 1-based level for a name ("node", "psu", ...); case-insensitive.
  std::size_t level_index(std::string_view name) const;
  const std::vector<FdLevel>& levels() const { return levels_; }

 private:
  std::vector<FdLevel> levels_;
};

/// TSUBAME2.0 style four-level hierarchy (node, psu, switch, rack) with the
/// fitted failure distributions.
FdHierarchy tsubame2_profile();

using Groups = std::vector<std::vector<ProcessId>>;

/// `groups` consecutive blocks of ceil(N / groups) processes.
Groups make_groups(std::size_t processes, std::size_t groups);

/// Element of each process at every level: element[p][j - 1].
struct Placement {
  std::vector<std::vector<std::size_t>> element;

  std::size_t at(ProcessId p, std::size_t level) const { return element.at(p.index()).at(level - 1); }
};

/// Round-robin placement where no two members of one group share an element
/// at any level <= n (m = 1). n = 0 places processes round-robin on nodes.
Placement make_taware_placement(const FdHierarchy& hier, const Groups& groups, std::size_t n);

struct PlacementViolation {
  std::size_t group = 0;
  std::size_t level = 0;
  std::size_t element = 0;
};

/// First (group, level, element) holding more than m members of one group.
std::optional<PlacementViolation> validate_taware(const Placement& placement, const Groups& groups, std::size_t n,
                                                  std::size_t m = 1);

/// Probability that x concurrent failures among H elements hit two members
/// of one group of size G under the worst-case placement:
///   ceil(H / G) * C(G, 2) * C(H - 2, x - 2) / C(H, x), clamped to [0, 1].
double p_conditional(std::size_t elements, std::size_t group_size, std::size_t failures);

struct PcfQuery {
  std::size_t processes = 0;
  std::size_t groups = 0;  // one checksum process per group
  std::size_t m = 1;
  std::size_t taware_level = 0;  // 0 = none
  FdHierarchy hierarchy;
};

/// ceil(N / g) + m
std::size_t group_size(std::size_t processes, std::size_t groups, std::size_t m = 1);
/// round(fraction * N); a fraction that yields no group is an error.
std::size_t groups_for_fraction(std::size_t processes, double fraction);

/// Catastrophic-failure probability per day; the plain loop is the
/// reference for the OpenMP one.
double p_cf_serial(const PcfQuery& q);
double p_cf(const PcfQuery& q);

/// Least-squares fit of log(count) against x; counts[i] belongs to x = i + 1.
FailurePdf fit_pdf(std::span<const double> counts);

/// Node-failure histogram with 75% single and 20% double failures and an
/// exponential tail continuing that ratio.
std::vector<double> synthesize_node_histogram(std::size_t bins);

}  // namespace rmaft
