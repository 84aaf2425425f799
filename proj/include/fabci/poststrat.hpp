#pragma once

// Poststratification of cell estimates to domains, and FAB intervals built
// around a domain's poststratified sample mean with a prior taken from the
// domain's logit-scale posterior.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fabci/fab_engine.hpp"
#include "fabci/interval.hpp"
#include "fabci/posterior.hpp"
#include "fabci/stats_kernel.hpp"

namespace fabci::poststrat {

struct Cell {
  std::string domain_id;
  std::string cell_id;
  double population = 1.0;  // N_j; real-valued (survey-weighted counts)
  long long y = 0;
  long long n = 0;
  std::optional<double> pi_true;
  // Externally supplied domain posterior on the logit scale.
  std::optional<double> post_mean_logit;
  std::optional<double> post_sd_logit;

  bool observed() const noexcept { return n > 0; }
};

class PoststratTable {
 public:
  /// Validates every cell; throws std::domain_error on violations.
  explicit PoststratTable(std::vector<Cell> cells);

  const std::vector<Cell>& cells() const noexcept { return cells_; }
  /// Domain ids in order of first appearance.
  const std::vector<std::string>& domains() const noexcept { return domains_; }
  /// Indices into cells() for one domain, in input order.
  const std::vector<std::size_t>& cells_of(const std::string& domain) const;
  bool has_truth() const noexcept;

 private:
  std::vector<Cell> cells_;
  std::vector<std::string> domains_;
  std::map<std::string, std::vector<std::size_t>> by_domain_;
};

/// Reads `domain_id,cell_id,N,y,n[,pi_true][,post_mean_logit,post_sd_logit]`
/// with a header row. Empty optional fields are allowed.
PoststratTable read_csv(std::istream& in);
void write_csv(std::ostream& out, const PoststratTable& table);

enum class CellScope { All, Observed };

/// sum N_j est_j / sum N_j over the domain's cells (or its observed cells).
/// `estimates` is keyed by cell_id.
double poststratify(const PoststratTable& table, const std::map<std::string, double>& estimates,
                    const std::string& domain, CellScope scope = CellScope::All);

/// Population-weighted mean of pi_true over every cell of the domain.
double true_proportion(const PoststratTable& table, const std::string& domain);

struct DomainEstimate {
  std::string domain_id;
  double poststrat_mean = 0.0;  // sample-based, observed cells only
  long long n_total = 0;
  long long y_total = 0;
  double mrp_mean_logit = 0.0;
  double mrp_sd_logit = 0.0;
  bool external_posterior = false;
  std::optional<ProportionInterval> credible;  // from the pooled posterior
};

struct DomainSummaries {
  std::vector<DomainEstimate> estimates;
  std::vector<std::string> skipped;  // domains without observed cells
};

/// Pools each domain's observed cells, runs the quadrature posterior on the
/// pooled counts, and fills the logit-scale summaries (unless the table
/// carries external ones).
DomainSummaries domain_summaries(const PoststratTable& table, const LogitNormalPrior& prior,
                                 double alpha);
DomainEstimate summarize_domain(const PoststratTable& table, const std::string& domain,
                                const LogitNormalPrior& prior, double alpha);

/// FAB interval centered at est.poststrat_mean with n = est.n_total and
/// prior N(mrp_mean_logit, mrp_sd_logit^2). The rounded count is recorded in
/// the result. Throws std::domain_error for a zero posterior sd.
ProportionInterval domain_fab_interval(const DomainEstimate& est, fab::FabConfig config,
                                       unsigned jobs = 1);

}  // namespace fabci::poststrat
