#include "solspeck/tebd.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "svd_util.hpp"

namespace solspeck {

namespace {

using cxd = std::complex<double>;

constexpr double kLambdaFloor = 1e-12;
constexpr double kRankTrimRel = 1e-14;

Eigen::VectorXd lambda_left(const MPSState& psi, int l) {
  if (l == 0) return Eigen::VectorXd::Ones(1);
  return psi.lambda[l - 1];
}

Eigen::VectorXd lambda_right(const MPSState& psi, int l) {
  if (l == psi.M - 1) return Eigen::VectorXd::Ones(1);
  return psi.lambda[l];
}

double clamp_floor(double v, long& counter) {
  if (v < kLambdaFloor) {
    ++counter;
    return kLambdaFloor;
  }
  return v;
}

// Two-site wavefunction without the left bond spectrum, packed as a
// (d^2) x (chiL*chiR) matrix: row i*d+j, column b*chiL+a.
Eigen::MatrixXcd theta_tilde(const MPSState& psi, int bond) {
  const int l = bond;
  const int d = psi.d;
  const int cl = psi.chi_left(l);
  const int cr = psi.chi_right(l + 1);
  const Eigen::VectorXd lamC = psi.lambda[l];
  const Eigen::VectorXd lamR = lambda_right(psi, l + 1);
  std::vector<Eigen::MatrixXcd> b2(d);
  for (int j = 0; j < d; ++j) {
    b2[j] = psi.gamma[l + 1].slice(j);
    b2[j].array().rowwise() *= lamR.transpose().array();
  }
  Eigen::MatrixXcd T(static_cast<Eigen::Index>(d) * d, static_cast<Eigen::Index>(cl) * cr);
  Eigen::MatrixXcd prod(cl, cr);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXcd b1 = psi.gamma[l].slice(i);
    b1.array().rowwise() *= lamC.transpose().array();
    for (int j = 0; j < d; ++j) {
      prod.noalias() = b1 * b2[j];
      T.row(static_cast<Eigen::Index>(i) * d + j) =
          Eigen::Map<const Eigen::VectorXcd>(prod.data(), prod.size()).transpose();
    }
  }
  return T;
}

}  // namespace

Eigen::MatrixXd two_site_hamiltonian(const LatticeModel& model, int bond) {
  if (bond < 0 || bond + 1 >= model.M)
    throw std::out_of_range("two_site_hamiltonian: bad bond index");
  const int d = model.d();
  const Eigen::MatrixXd a = boson_lower(d);
  const Eigen::MatrixXd ad = boson_raise(d);
  const Eigen::MatrixXd n = boson_number(d);
  Eigen::MatrixXd onsiteL = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd onsiteR = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double nk = k;
    onsiteL(k, k) = 0.5 * model.U * nk * (nk - 1) + model.V[bond] * nk;
    onsiteR(k, k) = 0.5 * model.U * nk * (nk - 1) + model.V[bond + 1] * nk;
  }
  const double wL = bond == 0 ? 1.0 : 0.5;
  const double wR = bond + 1 == model.M - 1 ? 1.0 : 0.5;
  const Eigen::Index D = static_cast<Eigen::Index>(d) * d;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(D, D);
  auto kron_add = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double w) {
    for (int i1 = 0; i1 < d; ++i1)
      for (int i2 = 0; i2 < d; ++i2) {
        if (A(i1, i2) == 0.0) continue;
        for (int j1 = 0; j1 < d; ++j1)
          for (int j2 = 0; j2 < d; ++j2)
            h(static_cast<Eigen::Index>(i1) * d + j1, static_cast<Eigen::Index>(i2) * d + j2) +=
                w * A(i1, i2) * B(j1, j2);
      }
  };
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  kron_add(ad, a, -model.J);
  kron_add(a, ad, -model.J);
  kron_add(onsiteL, id, wL);
  kron_add(id, onsiteR, wR);
  return h;
}

GateSet build_gates(const LatticeModel& model, double dt, GateKind kind, int order) {
  if (!(dt > 0)) throw std::invalid_argument("build_gates: dt must be positive");
  if (order != 1 && order != 2) throw std::invalid_argument("build_gates: order must be 1 or 2");
  GateSet gs;
  gs.M = model.M;
  gs.d = model.d();
  gs.dt = dt;
  gs.order = order;
  gs.kind = kind;
  gs.full.resize(model.M - 1);
  gs.half.resize(model.M - 1);
  auto expgate = [&](const Eigen::MatrixXd& h, double tau) -> Eigen::MatrixXcd {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd& w = es.eigenvalues();
    const Eigen::MatrixXd& v = es.eigenvectors();
    Eigen::MatrixXcd g(h.rows(), h.cols());
    if (kind == GateKind::kReal) {
      Eigen::VectorXcd ph(w.size());
      for (long k = 0; k < w.size(); ++k) ph(k) = std::exp(cxd(0, -w(k) * tau));
      Eigen::MatrixXcd vs = v.cast<cxd>();
      g = vs * ph.asDiagonal() * vs.adjoint();
    } else {
      Eigen::VectorXd ph(w.size());
      const double w0 = w.minCoeff();  // shift so the largest factor is 1
      for (long k = 0; k < w.size(); ++k) ph(k) = std::exp(-(w(k) - w0) * tau);
      g = (v * ph.asDiagonal() * v.transpose()).cast<cxd>();
    }
    return g;
  };
  for (int l = 0; l + 1 < model.M; ++l) {
    const Eigen::MatrixXd h = two_site_hamiltonian(model, l);
    const bool even = l % 2 == 0;
    if (order == 1 || !even) gs.full[l] = expgate(h, dt);
    if (order == 2 && even) gs.half[l] = expgate(h, 0.5 * dt);
  }
  return gs;
}

double apply_gate(MPSState& psi, int bond, const Eigen::MatrixXcd& gate, int chi) {
  const int l = bond;
  if (l < 0 || l + 1 >= psi.M) throw std::out_of_range("apply_gate: bad bond index");
  if (chi < 1) throw std::invalid_argument("apply_gate: chi must be >= 1");
  const int d = psi.d;
  if (gate.rows() != static_cast<Eigen::Index>(d) * d || gate.cols() != gate.rows())
    throw std::invalid_argument("apply_gate: gate dimension mismatch");
  if (static_cast<int>(psi.q.size()) != psi.M + 1)
    throw std::logic_error("apply_gate: state carries no charge labels");
  const int cl = psi.chi_left(l);
  const int cr = psi.chi_right(l + 1);
  const Eigen::VectorXd lamL = lambda_left(psi, l);
  const Eigen::VectorXd lamR = lambda_right(psi, l + 1);

  // Gate application in the lambda-free gauge, then SVD of the full
  // two-site wavefunction; the left tensor is recovered from the
  // lambda-free product so no division by the left spectrum is needed.
  const Eigen::MatrixXcd Tt = gate * theta_tilde(psi, bond);

  // Repack to (chiL*d) x (d*chiR): row a + cl*i, column j*cr + b.
  Eigen::MatrixXcd theta_nol(static_cast<Eigen::Index>(cl) * d, static_cast<Eigen::Index>(d) * cr);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const Eigen::Index src_row = static_cast<Eigen::Index>(i) * d + j;
      for (int b = 0; b < cr; ++b)
        for (int a = 0; a < cl; ++a)
          theta_nol(a + static_cast<Eigen::Index>(i) * cl,
                    static_cast<Eigen::Index>(j) * cr + b) =
              Tt(src_row, static_cast<Eigen::Index>(b) * cl + a);
    }
  Eigen::MatrixXcd theta = theta_nol;
  for (int i = 0; i < d; ++i)
    theta.middleRows(static_cast<Eigen::Index>(i) * cl, cl).array().colwise() *= lamL.array();

  // The SVD runs blockwise in the center-bond charge. The gate is required to
  // conserve total occupation (block structure in i+j); whatever it leaks
  // across sectors is projected away here, so roundoff can never seed a
  // foreign number sector.
  std::vector<int> rowq(static_cast<size_t>(cl) * d);
  std::vector<int> colq(static_cast<size_t>(d) * cr);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < cl; ++a) rowq[static_cast<size_t>(i) * cl + a] = psi.q[l][a] + i;
  for (int j = 0; j < d; ++j)
    for (int b = 0; b < cr; ++b) colq[static_cast<size_t>(j) * cr + b] = psi.q[l + 2][b] - j;

  ChargedSvd svd;
  try {
    svd = svd_thin_charged(theta, rowq, colq);
  } catch (const std::exception& e) {
    throw std::runtime_error("apply_gate: SVD failed at bond " + std::to_string(bond) + ": " +
                             e.what());
  }
  const double total = svd.s.squaredNorm();
  if (!(total > 0))
    throw std::runtime_error("apply_gate: vanishing two-site state at bond " +
                             std::to_string(bond));
  int k = 1;
  const double cut = svd.s(0) * kRankTrimRel;
  while (k < svd.s.size() && k < chi && svd.s(k) > cut) ++k;
  double kept = svd.s.head(k).squaredNorm();
  const double discarded = std::max(0.0, 1.0 - kept / total);

  Eigen::VectorXd lamNew = svd.s.head(k) / std::sqrt(kept);
  // left tensor from the lambda-free product: Gamma_l = theta_nol V / s
  Eigen::MatrixXcd X = theta_nol * svd.Vh.topRows(k).adjoint();
  for (int a = 0; a < k; ++a) X.col(a) /= clamp_floor(svd.s(a), psi.diag.lambda_clamps);
  Tensor3 gl(cl, d, k);
  for (int i = 0; i < d; ++i)
    gl.slice(i) = X.middleRows(static_cast<Eigen::Index>(i) * cl, cl);
  Tensor3 gr(k, d, cr);
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXcd blk = svd.Vh.block(0, static_cast<Eigen::Index>(j) * cr, k, cr);
    for (int b = 0; b < cr; ++b)
      blk.col(b) /= clamp_floor(lamR(b), psi.diag.lambda_clamps);
    gr.slice(j) = blk;
  }
  psi.gamma[l] = std::move(gl);
  psi.gamma[l + 1] = std::move(gr);
  psi.lambda[l] = std::move(lamNew);
  psi.q[l + 1].assign(svd.charge.begin(), svd.charge.begin() + k);
  psi.diag.discarded_weight += discarded;
  return discarded;
}

StepReport trotter_step(MPSState& psi, const GateSet& gates, int chi) {
  if (gates.M != psi.M || gates.d != psi.d)
    throw std::invalid_argument("trotter_step: gate set does not match state geometry");
  StepReport rep;
  auto sweep = [&](const std::vector<Eigen::MatrixXcd>& g, int parity) {
    for (int l = parity; l + 1 < psi.M; l += 2) {
      const double w = apply_gate(psi, l, g[l], chi);
      rep.discarded += w;
      rep.max_bond_discarded = std::max(rep.max_bond_discarded, w);
    }
  };
  if (gates.order == 1) {
    sweep(gates.full, 0);
    sweep(gates.full, 1);
  } else {
    sweep(gates.half, 0);
    sweep(gates.full, 1);
    sweep(gates.half, 0);
  }
  return rep;
}

double bond_expectation(const MPSState& psi, int bond, const Eigen::MatrixXcd& h) {
  if (bond < 0 || bond + 1 >= psi.M) throw std::out_of_range("bond_expectation: bad bond");
  const int d = psi.d;
  if (h.rows() != static_cast<Eigen::Index>(d) * d || h.cols() != h.rows())
    throw std::invalid_argument("bond_expectation: operator dimension mismatch");
  Eigen::MatrixXcd T = theta_tilde(psi, bond);
  // attach the left spectrum: column b*chiL+a scales with lamL(a)
  const Eigen::VectorXd lamL = lambda_left(psi, bond);
  const int cl = psi.chi_left(bond);
  const int cr = psi.chi_right(bond + 1);
  for (int b = 0; b < cr; ++b)
    T.middleCols(static_cast<Eigen::Index>(b) * cl, cl).array().rowwise() *=
        lamL.transpose().array();
  const Eigen::MatrixXcd hT = h * T;
  return T.cwiseProduct(hT.conjugate()).sum().real();
}

double energy(const MPSState& psi, const LatticeModel& model) {
  double e = 0;
  for (int l = 0; l + 1 < model.M; ++l)
    e += bond_expectation(psi, l, two_site_hamiltonian(model, l).cast<cxd>());
  return e;
}

MPSState cluster_product_state(const LatticeModel& model, int chi) {
  std::vector<int> occ(model.M, 0);
  int remaining = model.N;
  int offset = 0;
  while (remaining > 0) {
    const int l = model.K() + (offset % 2 == 0 ? offset / 2 : -(offset + 1) / 2);
    if (l < 0 || l >= model.M)
      throw std::invalid_argument("cluster_product_state: lattice too small for N at this Nmax");
    const int put = std::min(remaining, model.Nmax);
    occ[l] = put;
    remaining -= put;
    ++offset;
  }
  return product_state(occ, model.d(), chi);
}

ImagTimeResult imaginary_time_ground_state(const LatticeModel& model, MPSState initial,
                                           const ImagTimeOptions& opts) {
  if (initial.M != model.M || initial.d != model.d())
    throw std::invalid_argument("imaginary_time_ground_state: state does not match model");
  const double n0 = total_number(initial);
  if (std::abs(n0 - model.N) > 1e-6)
    throw std::invalid_argument("imaginary_time_ground_state: initial particle number " +
                                std::to_string(n0) + " does not match N=" +
                                std::to_string(model.N));
  if (opts.schedule.empty())
    throw std::invalid_argument("imaginary_time_ground_state: empty schedule");
  for (size_t i = 1; i < opts.schedule.size(); ++i)
    if (opts.schedule[i] >= opts.schedule[i - 1])
      throw std::invalid_argument("imaginary_time_ground_state: schedule must decrease");

  ImagTimeResult res;
  res.psi = std::move(initial);
  const int chi = res.psi.chi;
  const int stride = std::max(1, opts.recanonicalize_every);
  double tau = 0;
  canonicalize(res.psi);
  double e_prev = energy(res.psi, model);
  res.energy_trace.emplace_back(tau, e_prev);

  for (double dtau : opts.schedule) {
    const GateSet gates = build_gates(model, dtau, GateKind::kImaginary, 2);
    bool stage_done = false;
    long stage_steps = 0;
    while (!stage_done) {
      for (int s = 0; s < stride; ++s) {
        trotter_step(res.psi, gates, chi);
        ++res.steps;
        ++stage_steps;
        tau += dtau;
      }
      canonicalize(res.psi);
      const double e_now = energy(res.psi, model);
      res.energy_trace.emplace_back(tau, e_now);
      const double slope = std::abs(e_now - e_prev) / (stride * dtau);
      e_prev = e_now;
      if (slope < opts.tolerance) stage_done = true;
      if (!stage_done && stage_steps >= opts.max_steps_per_stage)
        throw ImagTimeError("imaginary_time_ground_state: no energy plateau at dtau=" +
                                std::to_string(dtau) + " after " +
                                std::to_string(stage_steps) + " steps",
                            res.energy_trace);
    }
  }
  res.energy = e_prev;
  return res;
}

EvolutionReport real_time_evolve(const LatticeModel& model, MPSState& psi, double dt,
                                 long steps, const Observers& obs, int chi,
                                 double discarded_budget,
                                 const std::atomic<bool>* interrupt) {
  if (psi.M != model.M || psi.d != model.d())
    throw std::invalid_argument("real_time_evolve: state does not match model");
  if (steps < 0) throw std::invalid_argument("real_time_evolve: negative step count");
  const auto t0 = std::chrono::steady_clock::now();
  EvolutionReport rep;
  const double n_ref = model.N;

  auto observe = [&](long step, double t) {
    const double nrm = norm_squared(psi);
    rep.norm_dev_max = std::max(rep.norm_dev_max, std::abs(1.0 - nrm));
    const double n = total_number(psi);
    rep.number_drift_max = std::max(rep.number_drift_max, std::abs(n - n_ref) / n_ref);
    rep.energy_trace.emplace_back(t, energy(psi, model));
    rep.entropy_trace.emplace_back(t, entanglement_entropy(psi).S_max);
    if (obs.on_observe) obs.on_observe(step, t, psi);
  };

  observe(0, 0);
  if (steps == 0) {
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  }
  const GateSet gates = build_gates(model, dt, GateKind::kReal, 2);
  for (long s = 0; s < steps; ++s) {
    if (interrupt && interrupt->load()) {
      rep.interrupted = true;
      break;
    }
    const StepReport sr = trotter_step(psi, gates, chi);
    rep.cumulative_discarded += sr.discarded;
    rep.max_step_discarded = std::max(rep.max_step_discarded, sr.discarded);
    ++rep.steps_done;
    const double t = dt * static_cast<double>(s + 1);
    const bool last = s + 1 == steps;
    if ((obs.stride > 0 && (s + 1) % obs.stride == 0) || last) observe(s + 1, t);
    if (obs.checkpoint_every > 0 && (s + 1) % obs.checkpoint_every == 0 && obs.on_checkpoint)
      obs.on_checkpoint(s + 1, t, psi);
    if (rep.cumulative_discarded > discarded_budget) {
      rep.converged = false;
      if (!last && !(obs.stride > 0 && (s + 1) % obs.stride == 0)) observe(s + 1, t);
      break;
    }
  }
  if (rep.interrupted && obs.on_checkpoint)
    obs.on_checkpoint(rep.steps_done, dt * static_cast<double>(rep.steps_done), psi);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace solspeck
