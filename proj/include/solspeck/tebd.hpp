#pragma once
#include <atomic>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "solspeck/model.hpp"
#include "solspeck/mps.hpp"

namespace solspeck {

// Trotterized evolution under
//   H = sum_l [ -J (a+_l a_{l+1} + h.c.) + U/2 n_l(n_l-1) + V_l n_l ]
// split into two-site terms h_{l,l+1} that carry half of each interior site's
// on-site part and the full on-site part of an edge site. The order-2 step is
// half gates on even bonds, full gates on odd bonds, half gates on even bonds
// (0-based bond l couples sites l, l+1).

enum class GateKind { kReal, kImaginary };

struct GateSet {
  int M = 0, d = 0;
  double dt = 0;
  int order = 2;
  GateKind kind = GateKind::kReal;
  std::vector<Eigen::MatrixXcd> full;  // per bond; order 2 fills odd bonds only
  std::vector<Eigen::MatrixXcd> half;  // dt/2 gates; order 2 fills even bonds only
};

Eigen::MatrixXd two_site_hamiltonian(const LatticeModel& model, int bond);

GateSet build_gates(const LatticeModel& model, double dt, GateKind kind, int order = 2);

// Applies a two-site gate at a bond in canonical form and re-splits by SVD,
// keeping at most chi singular values. Returns the relative Schmidt weight
// discarded; accumulates it (and any lambda-floor clamps) into state.diag.
// The gate must conserve total occupation (block structure in i+j on the
// d*d two-site basis): the split runs per charge sector, and any cross-sector
// gate weight is silently projected out.
double apply_gate(MPSState& psi, int bond, const Eigen::MatrixXcd& gate, int chi);

struct StepReport {
  double discarded = 0;      // summed over bonds in this step
  double max_bond_discarded = 0;
};

StepReport trotter_step(MPSState& psi, const GateSet& gates, int chi);

// <h> on a bond with the canonical environments; h is d^2 x d^2 hermitian.
double bond_expectation(const MPSState& psi, int bond, const Eigen::MatrixXcd& h);

// Total energy as the sum of two-site expectations.
double energy(const MPSState& psi, const LatticeModel& model);

// N particles packed greedily from the trap center outward, Nmax per site.
MPSState cluster_product_state(const LatticeModel& model, int chi);

struct ImagTimeOptions {
  std::vector<double> schedule = {0.05, 0.01, 0.002};  // decreasing dtau
  double tolerance = 1e-8;       // energy plateau slope per unit tau
  int recanonicalize_every = 10; // steps between canonicalize + energy checks
  long max_steps_per_stage = 100000;
};

struct ImagTimeResult {
  MPSState psi;
  double energy = 0;
  std::vector<std::pair<double, double>> energy_trace;  // (tau, E)
  long steps = 0;
};

class ImagTimeError : public std::runtime_error {
 public:
  ImagTimeError(const std::string& msg, std::vector<std::pair<double, double>> trace)
      : std::runtime_error(msg), energy_trace(std::move(trace)) {}
  std::vector<std::pair<double, double>> energy_trace;
};

// Imaginary-time TEBD ground-state search over a decreasing dtau schedule;
// each stage runs until the energy slope drops below tolerance. Throws
// ImagTimeError (with the energy trace) if a stage exhausts its step budget.
ImagTimeResult imaginary_time_ground_state(const LatticeModel& model, MPSState initial,
                                           const ImagTimeOptions& opts = {});

struct Observers {
  long stride = 0;  // steps between on_observe calls; 0 = final state only
  std::function<void(long step, double t, const MPSState&)> on_observe;
  long checkpoint_every = 0;  // 0 = never
  std::function<void(long step, double t, const MPSState&)> on_checkpoint;
};

struct EvolutionReport {
  double cumulative_discarded = 0;
  double max_step_discarded = 0;
  double norm_dev_max = 0;        // max |1 - norm^2| seen at observation points
  double number_drift_max = 0;    // max relative particle-number drift
  std::vector<std::pair<double, double>> energy_trace;   // (t, E)
  std::vector<std::pair<double, double>> entropy_trace;  // (t, S_max)
  bool converged = true;    // false once the discarded-weight budget is hit
  bool interrupted = false;
  long steps_done = 0;
  double wall_seconds = 0;
};

// Order-2 real-time evolution for `steps` steps of size dt. Halts early,
// flagged unconverged, if cumulative discarded weight exceeds budget; an
// optional interrupt flag stops cleanly after the current step.
EvolutionReport real_time_evolve(const LatticeModel& model, MPSState& psi, double dt,
                                 long steps, const Observers& obs, int chi,
                                 double discarded_budget = 1e-6,
                                 const std::atomic<bool>* interrupt = nullptr);

}  // namespace solspeck
