#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "splitdom/cones.hpp"
#include "splitdom/errors.hpp"
#include "splitdom/linalg.hpp"
#include "splitdom/sampled_cocycle.hpp"
#include "splitdom/systems.hpp"

namespace splitdom {

enum class SplittingKind { two_bundle, three_bundle_with_flow };
const char* to_string(SplittingKind kind);

/// Invariant splitting sampled along the orbits of a SampledCocycle.
///
/// Bundles are stored for samples [first, first + at.size()) of each orbit,
/// which must cover the analysis window of the cocycle (base points through
/// the horizon).
struct OrbitBundles {
  std::size_t first = 0;
  std::vector<std::vector<Subspace>> at;

  bool covers(std::size_t index) const { return index >= first && index < first + at.size(); }
  const std::vector<Subspace>& operator[](std::size_t index) const;
};

struct Splitting {
  SplittingKind kind = SplittingKind::two_bundle;
  Fiber fiber = Fiber::tangent;
  std::vector<OrbitBundles> orbits;

  std::size_t bundle_count() const { return kind == SplittingKind::two_bundle ? 2 : 3; }
  const Subspace& bundle(std::size_t orbit, std::size_t index, std::size_t which) const;
  /// Dimensions of the bundles (taken at the first stored sample).
  std::vector<int> dims() const;
  /// Checks dimensions sum to the fiber and are constant; throws DimensionError.
  void validate(int fiber_dim) const;
};

enum class Verdict { dominated, not_dominated, inconclusive };
const char* to_string(Verdict v);

enum class ContractionVerdict { contracting, expanding, neutral };
const char* to_string(ContractionVerdict v);

struct DominationConfig {
  double lambda_min = 0.05;
  double r2_min = 0.95;
  double gap_min = 1.5;
  int n_window = 20;
  double invariance_tolerance = 1e-4;
  double flow_angle_tolerance = 1e-8;
  double location_tolerance = 1e-4;
  int cone_iterations = 30;
  double cone_tolerance = 1e-6;
  /// Angle to the flow below which a cone limit is taken to have collapsed onto it.
  double flow_collapse_angle = 1e-3;
  /// Tail sup at least this fraction of q(0) signals a quotient that does not decay.
  double tail_fraction = 0.5;
  /// Preferred dim N^- when several gaps qualify.
  std::optional<int> dim_hint;
};

struct RateFit {
  double K = 0.0;
  double lambda = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (t, ln q); slope = -lambda, intercept = ln K.
/// Needs at least 8 points; nonpositive q throws InvalidSeriesError.
RateFit fit_rate(const std::vector<std::pair<double, double>>& series);

struct DominationReport {
  std::string system;
  std::string test;
  Fiber fiber = Fiber::tangent;
  SplittingKind splitting_kind = SplittingKind::two_bundle;
  double horizon = 0.0;
  double dt = 0.0;
  std::vector<std::pair<double, double>> quotients;
  double K = 0.0;
  double lambda = 0.0;
  double r_squared = 0.0;
  Verdict verdict = Verdict::inconclusive;
  /// Thresholds applied and measured side quantities, sorted by key.
  std::map<std::string, double> diagnostics;

  bool dominated() const { return verdict == Verdict::dominated; }
};

struct ContractionReport {
  std::string system;
  std::vector<std::pair<double, double>> forward_series;   // sup |D_t|E|
  std::vector<std::pair<double, double>> backward_series;  // sup |D_{-t}|E at image|
  RateFit forward;
  RateFit backward;
  ContractionVerdict verdict = ContractionVerdict::neutral;
  double invariance_defect = 0.0;

  /// Multiplier over a time span: exp(-forward rate * span) when contracting,
  /// exp(backward rate * span) otherwise.
  double multiplier(double span) const;
};

/// q = |D|_E| * |D^{-1}|_{D(F)}| for a single matrix.
double domination_quotient(const Matrix& d, const Subspace& E, const Subspace& F);

/// q over `steps` samples from base sample `index`, for bundles (lower, upper)
/// of a splitting, evaluated through the cocycle restricted to the bundles.
double domination_quotient(const SampledCocycle& cocycle, const Splitting& split, std::size_t lower,
                           std::size_t upper, std::size_t orbit, std::size_t index, int steps);

/// Largest sin(angle) between D(E_i) and E_{i+1} over the analysis window, for
/// each bundle of the splitting.
std::vector<double> invariance_defects(const SampledCocycle& cocycle, const Splitting& split);

DominationReport test_dominated(const Splitting& split, const SampledCocycle& cocycle,
                                const DominationConfig& config = {});
/// Quotient between the outer bundles of a three-bundle splitting; the middle
/// bundle must be the flow direction (else NotFlowCenteredError).
DominationReport test_partially_dominated(const Splitting& split, const SampledCocycle& cocycle,
                                          const DominationConfig& config = {});

/// Rates of a single invariant bundle (bundle `which` of the splitting).
ContractionReport test_uniform_contraction(const Splitting& split, std::size_t which,
                                           const SampledCocycle& cocycle, const DominationConfig& config = {});

struct HyperbolicityReport {
  DominationReport domination;
  ContractionReport lower;
  ContractionReport upper;
  /// (E, <X> + F) for three-bundle splittings, judged for partial hyperbolicity.
  std::optional<DominationReport> coarse;
  bool hyperbolic = false;
  bool partially_hyperbolic = false;
};

/// Tangent three-bundle E^s + <X> + E^u, or normal two-bundle N^- + N^+:
/// dominated (partially, for the tangent case), lower contracting and, for
/// hyperbolicity, upper expanding. Partial hyperbolicity of a three-bundle
/// splitting is judged on the coarsening (E, <X> + F).
HyperbolicityReport test_hyperbolic(const Splitting& split, const SampledCocycle& cocycle,
                                    const DominationConfig& config = {});

/// Normal-fiber splitting (N^-, N^+) from finite-window singular vectors.
/// Throws NoGapError when no singular-value gap reaches gap_min.
Splitting extract_poincare_splitting(const SampledCocycle& normal, const DominationConfig& config = {});

/// Reconstruction failure carrying the partial-domination report.
class ReconstructionFailedError : public Error {
 public:
  ReconstructionFailedError(const std::string& what, DominationReport report)
      : Error("ReconstructionFailedError: " + what), report_(std::move(report)) {}
  const DominationReport& report() const { return report_; }

 private:
  DominationReport report_;
};

struct Reconstruction {
  Splitting splitting;
  DominationReport report;
  double a_defect = 0.0;
  double b_defect = 0.0;
};

/// Lifts a dominated normal splitting to the tangent fiber and extracts the
/// invariant complements of the flow inside N^- + <X> and <X> + N^+.
Reconstruction reconstruct_flow_splitting(const Splitting& poincare, const AnalysisSet& set,
                                          const DominationConfig& config = {});

/// Normal bundles frame^T E, frame^T F of a tangent three-bundle splitting,
/// using the frames of the normal cocycle.
Splitting project_to_normal(const Splitting& flow_split, const SampledCocycle& normal);

/// Tangent bundles frame N for each normal bundle.
Splitting lift_to_tangent(const Splitting& normal_split, const SampledCocycle& normal);

/// Splitting of the time-reversed cocycle: samples mirrored, bundle order reversed.
Splitting reversed_splitting(const Splitting& split, const SampledCocycle& original);

/// (E + <X>, F) when `flow_with_lower`, else (E, <X> + F).
Splitting coarsen(const Splitting& three_bundle, bool flow_with_lower);

/// Three-bundle splitting from a system's analytic bundles. Returns nullopt
/// when the system declares none.
std::optional<Splitting> analytic_splitting(const DynamicalSystem& sys, const SampledCocycle& tangent);

/// Index of the bundle of a tangent two-bundle splitting containing X at every
/// sample. Throws FlowNotResolvedError when neither does.
std::size_t flow_direction_location(const Splitting& split, const SampledCocycle& tangent,
                                    const DominationConfig& config = {});

struct FlowLocationReport {
  std::size_t flow_bundle = 0;
  std::optional<std::size_t> contracting_bundle;
  double max_angle = 0.0;
};

/// Locates X and checks it is not in a uniformly contracting bundle; a flow
/// direction inside a contracting bundle raises TheoremViolationError.
FlowLocationReport check_flow_location(const Splitting& split, const SampledCocycle& tangent,
                                       const DominationConfig& config = {});

struct ContractionDominationResult {
  /// "lower-contracting" -> (E, <X> + F); "upper-expanding" -> (E + <X>, F).
  std::string hypothesis;
  DominationReport report;
};

/// For each of E contracting / F expanding that holds, tests the matching
/// coarsening. Empty when neither hypothesis holds (not applicable).
std::vector<ContractionDominationResult> verify_contraction_implies_domination(
    const Splitting& three_bundle, const SampledCocycle& tangent, const DominationConfig& config = {});

struct EquivalenceConfig {
  SamplingConfig sampling;
  DominationConfig domination;
  /// Optional metric factor R (|v| -> |R v|) applied to the tangent cocycle.
  std::optional<Matrix> metric_factor;
};

struct StageError {
  std::string stage;
  std::string message;
};

struct EquivalenceReport {
  std::string system;
  std::string kind;
  std::optional<DominationReport> lpf;  // extracted normal splitting
  std::optional<DominationReport> reconstructed;
  std::optional<DominationReport> analytic_partial;
  std::optional<DominationReport> projected;  // analytic splitting on the normal fiber
  std::optional<DominationReport> coarsened_flow_with_lower;
  std::optional<DominationReport> coarsened_flow_with_upper;
  std::vector<int> lpf_dims;
  std::optional<bool> lpf_partially_hyperbolic;
  std::optional<bool> flow_partially_hyperbolic;
  std::optional<bool> lpf_hyperbolic;
  std::optional<bool> flow_hyperbolic;
  std::vector<StageError> errors;

  bool lpf_dominated = false;
  bool flow_partially_dominated = false;
  /// LPF dominated => reconstruction partially dominated.
  bool backward_holds = true;
  /// Analytic partially dominated => projection dominated.
  bool forward_holds = true;
  bool agree = false;
};

/// Runs extraction, reconstruction and the analytic projection on one system
/// and compares the two directions of the equivalence.
EquivalenceReport verify_equivalence(const DynamicalSystem& sys, const EquivalenceConfig& config = {});

/// Sampled cocycles for a system, with the optional metric change applied.
AnalysisSet analysis_set(const DynamicalSystem& sys, const EquivalenceConfig& config);

struct ConeRoute {
  int core_dim = 0;
  double aperture = 1.0;
  std::optional<NewhouseCertificate> certificate;
  /// Without a strong certificate: smallest t in the grid at which the field is
  /// pointwise dominating (inf m m' > 1) and strictly invariant.
  std::optional<NewhouseCertificate> pointwise;
  /// Limits of the cone iteration at the base points (N^-, N^+), when certified.
  std::optional<Splitting> limit;
  /// Largest successive-iterate angle seen while computing the limits.
  double limit_last_angle = 0.0;
  /// Largest principal angle between the limits and the extracted splitting.
  std::optional<double> extraction_angle;
  std::optional<std::string> extraction_error;
};

/// Newhouse search on the seeded cone field of a normal cocycle, followed by
/// cone iteration to the limit bundles and comparison with extraction. When no
/// strong certificate exists, the limits are still computed from a pointwise
/// dominating, invariant field if there is one.
ConeRoute cone_route(const SampledCocycle& normal, double aperture, const std::vector<int>& t_grid,
                     const DominationConfig& config = {});

/// Maps every bundle through R (for conjugated cocycles).
Splitting transform(const Splitting& split, const Matrix& r);

}  // namespace splitdom
