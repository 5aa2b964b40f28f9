#include "efr/ensemble.hpp"

#include "efr/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace efr {

namespace {

double zero_weight_scale(double width) { return 1.0 / std::sqrt(2.0 * kPi * width * width); }

bool same_step(double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(std::abs(a), std::abs(b)); }

// det(M) and adj(M) = det(M) M^{-1}, finite also for singular M.
std::pair<cplx, CMat> det_adjugate(const CMat& m) {
  if (m.rows() == 0) return {1.0, CMat()};
  Eigen::PartialPivLU<CMat> lu(m);
  if (lu.rcond() > 1e-10) {
    const cplx det = lu.determinant();
    return {det, det * lu.inverse()};
  }
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  const cplx phase = svd.matrixU().determinant() * std::conj(svd.matrixV().determinant());
  const Eigen::Index n = s.size();
  RVec skip(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) p *= s(j);
    skip(i) = p;
  }
  const cplx det = phase * s.prod();
  return {det, phase * svd.matrixV() * skip.cast<cplx>().asDiagonal() * svd.matrixU().adjoint()};
}

CMat occupied_block(const CMat& m, const std::vector<int>& occ) {
  const auto n = static_cast<Eigen::Index>(occ.size());
  CMat out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(occ[i], occ[j]);
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class ChainRng {
 public:
  explicit ChainRng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int index(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 engine_;
};

FockState random_state(int sites, int particles, ChainRng& rng) {
  std::vector<int> pool(sites);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < particles; ++i) std::swap(pool[i], pool[i + rng.index(sites - i)]);
  pool.resize(particles);
  std::sort(pool.begin(), pool.end());
  return FockState(sites, pool);
}

// Fock state whose diagonal energy is closest to E: best window of sorted site
// energies, then single swaps while they help.
FockState closest_diagonal_state(const QuadraticHamiltonian& h, int particles, double energy) {
  const int n = static_cast<int>(h.sites());
  const double target = energy - h.offset();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return h.matrix()(a, a).real() < h.matrix()(b, b).real(); });
  auto diag = [&](int s) { return h.matrix()(s, s).real(); };
  int best = 0;
  double best_gap = INFINITY;
  for (int start = 0; start + particles <= n; ++start) {
    double sum = 0.0;
    for (int i = start; i < start + particles; ++i) sum += diag(order[i]);
    if (std::abs(sum - target) < best_gap) {
      best_gap = std::abs(sum - target);
      best = start;
    }
  }
  std::vector<bool> occ(n, false);
  double sum = 0.0;
  for (int i = best; i < best + particles; ++i) {
    occ[order[i]] = true;
    sum += diag(order[i]);
  }
  for (bool improved = true; improved;) {
    improved = false;
    for (int a = 0; a < n && !improved; ++a) {
      if (!occ[a]) continue;
      for (int b = 0; b < n; ++b) {
        if (occ[b]) continue;
        const double next = sum - diag(a) + diag(b);
        if (std::abs(next - target) < std::abs(sum - target) - 1e-14) {
          occ[a] = false;
          occ[b] = true;
          sum = next;
          improved = true;
          break;
        }
      }
    }
  }
  std::vector<int> sites;
  for (int s = 0; s < n; ++s)
    if (occ[s]) sites.push_back(s);
  return FockState(n, sites);
}

// Weight of the current chain state with the inverses of W_k[S,S] kept up to
// date, so a one-fermion move is a rank-2 update per time slice.
class IncrementalWeight {
 public:
  explicit IncrementalWeight(const WeightEvaluator& w)
      : table_(w.table()), cutoff_(w.spec().cutoff), factors_(cutoff_ + 1), slices_(cutoff_ + 1) {
    for (int k = 0; k <= cutoff_; ++k)
      factors_[k] = (k == 0 ? 1.0 : 2.0) * w.weights()[k] * table_.phase(k);
  }

  double reset(const FockState& psi) {
    sites_ = psi.occupied_sites();
    for (int k = 0; k <= cutoff_; ++k) refresh(k);
    since_refresh_ = 0;
    return raw();
  }

  // Raw weight after moving the fermion at `from` to `to`; remembered for accept().
  double propose(int from, int to) {
    const auto n = static_cast<Eigen::Index>(sites_.size());
    pos_ = static_cast<Eigen::Index>(std::find(sites_.begin(), sites_.end(), from) - sites_.begin());
    to_ = to;
    std::vector<int> next = sites_;
    next[pos_] = to;
    double acc = 0.0;
    for (int k = 0; k <= cutoff_; ++k) {
      Slice& sl = slices_[k];
      const CMat& w = table_[k];
      if (sl.direct) {
        sl.next_det = occupied_block(w, next).determinant();
      } else {
        sl.u.resize(n);
        sl.v.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
          sl.u(j) = w(to, next[j]) - w(from, sites_[j]);
          sl.v(j) = j == pos_ ? cplx(0.0) : w(next[j], to) - w(sites_[j], from);
        }
        sl.y = sl.inv * sl.v;
        const auto c = sl.inv.col(pos_);
        sl.m << sl.u.cwiseProduct(c).sum(), sl.u.cwiseProduct(sl.y).sum(), c(pos_), sl.y(pos_);
        const cplx ratio = (1.0 + sl.m(0, 0)) * (1.0 + sl.m(1, 1)) - sl.m(0, 1) * sl.m(1, 0);
        sl.next_det = sl.det * ratio;
        sl.stale = std::abs(ratio) < 1e-6;
      }
      acc += (factors_[k] * sl.next_det).real();
    }
    return acc;
  }

  void accept() {
    sites_[pos_] = to_;
    const bool full = ++since_refresh_ >= kRefreshInterval;
    for (int k = 0; k <= cutoff_; ++k) {
      Slice& sl = slices_[k];
      if (full || sl.direct || sl.stale) {
        refresh(k);
        continue;
      }
      // Woodbury with U = [e_p, v], Vᵀ = [uᵀ; e_pᵀ].
      Eigen::Matrix<cplx, Eigen::Dynamic, 2> left(sl.inv.rows(), 2);
      left.col(0) = sl.inv.col(pos_);
      left.col(1) = sl.y;
      Eigen::Matrix<cplx, 2, Eigen::Dynamic> right(2, sl.inv.cols());
      right.row(0) = sl.u.transpose() * sl.inv;
      right.row(1) = sl.inv.row(pos_);
      const Eigen::Matrix2cd core = (Eigen::Matrix2cd::Identity() + sl.m).inverse();
      sl.inv -= left * core * right;
      sl.det = sl.next_det;
    }
    if (full) since_refresh_ = 0;
  }

  double raw() const {
    double acc = 0.0;
    for (int k = 0; k <= cutoff_; ++k) acc += (factors_[k] * slices_[k].det).real();
    return acc;
  }

 private:
  static constexpr int kRefreshInterval = 64;

  struct Slice {
    CMat inv;
    cplx det = 1.0;
    bool direct = false;  // ill-conditioned block: determinants recomputed from scratch
    bool stale = false;
    CVec u, v, y;
    Eigen::Matrix2cd m;
    cplx next_det = 1.0;
  };

  void refresh(int k) {
    Slice& sl = slices_[k];
    const CMat block = occupied_block(table_[k], sites_);
    if (block.rows() == 0) {
      sl.det = 1.0;
      sl.direct = true;
      return;
    }
    Eigen::PartialPivLU<CMat> lu(block);
    sl.det = lu.determinant();
    sl.direct = !(lu.rcond() > 1e-8);
    sl.stale = false;
    if (!sl.direct) sl.inv = lu.inverse();
  }

  const PropagatorTable& table_;
  int cutoff_;
  std::vector<cplx> factors_;  // w_k e^{−i·offset·t_k}, doubled for k > 0
  std::vector<Slice> slices_;
  std::vector<int> sites_;
  Eigen::Index pos_ = 0;
  int to_ = 0;
  int since_refresh_ = 0;
};

}  // namespace

StateWeight state_weight(const FockState& psi, const FilterSpec& spec, const QuadraticHamiltonian& h) {
  spec.validate();
  if (psi.sites() != h.sites()) throw std::invalid_argument("state_weight: size mismatch");
  const FilterWeights w = riemann_filter_weights(spec);
  double raw = (w[0] * fock_echo(h, psi, 0.0)).real();
  for (int k = 1; k <= w.cutoff(); ++k) raw += 2.0 * (w[k] * fock_echo(h, psi, w.time(k))).real();
  return {std::max(raw, 0.0), raw, raw < 0.0};
}

ContourTilt contour_tilt(const QuadraticHamiltonian& h, int particles, const FilterSpec& spec) {
  spec.validate();
  const RVec& e = h.energies();
  const int n = static_cast<int>(e.size());
  if (particles < 1 || particles > n) throw std::invalid_argument("contour_tilt: bad filling");
  const double lo = h.offset() + e.head(particles).sum();
  const double hi = h.offset() + e.tail(particles).sum();
  const double span = std::max(std::abs(hi - spec.energy), std::abs(spec.energy - lo));
  const double period = 2.0 * kPi / spec.time_step;
  const double gap = period - span;
  const double bound = gap > 0.0 ? (gap * gap / (2.0 * spec.width * spec.width) - 80.0) / period : 0.0;
  const double beta = saddle_tilt(h, particles, spec.energy, spec.width);
  return {std::clamp(beta, -std::max(bound, 0.0), std::max(bound, 0.0)), spec.energy, particles};
}

PropagatorTable::PropagatorTable(const QuadraticHamiltonian& h, double time_step, int max_index, int threads,
                                 ContourTilt tilt)
    : time_step_(time_step), max_index_(max_index), offset_(h.offset()), tilt_(tilt) {
  if (!(time_step > 0.0) || max_index < 0) throw std::invalid_argument("PropagatorTable: bad grid");
  if (tilt.beta != 0.0 && (tilt.particles < 1 || tilt.particles > h.sites()))
    throw std::invalid_argument("PropagatorTable: a tilted contour needs 1 <= N0 <= N");
  if (tilt.beta == 0.0) {
    table_ = parallel_map<CMat>(static_cast<std::size_t>(2 * max_index + 1), threads, [&](std::size_t i) {
      return h.propagator((static_cast<int>(i) - max_index) * time_step);
    });
    return;
  }
  const double shift = (tilt.energy - offset_) / tilt.particles;
  const RVec& e = h.energies();
  const CMat& u = h.modes();
  table_ = parallel_map<CMat>(static_cast<std::size_t>(2 * max_index + 1), threads, [&](std::size_t i) {
    const double t = (static_cast<int>(i) - max_index) * time_step;
    CVec d(e.size());
    for (Eigen::Index a = 0; a < e.size(); ++a) d(a) = std::exp(cplx(-tilt.beta * (e(a) - shift), -e(a) * t));
    return CMat(u * d.asDiagonal() * u.adjoint());
  });
}

cplx PropagatorTable::echo(const FockState& psi, int m) const {
  if (psi.particles() == 0) return phase(m);
  return phase(m) * occupied_block((*this)[m], psi.occupied_sites()).determinant();
}

namespace {

FilterWeights tilted_weights(const FilterSpec& spec, const ContourTilt& tilt) {
  if (tilt.beta == 0.0) return riemann_filter_weights(spec);
  if (std::abs(tilt.energy - spec.energy) > 1e-12 * std::max(1.0, std::abs(spec.energy)))
    throw std::invalid_argument("WeightEvaluator: table tilted for a different filter energy");
  const double d2 = spec.width * spec.width;
  FilterSpec moved = spec;
  moved.energy += tilt.beta * d2;
  std::vector<cplx> w = riemann_filter_weights(moved).values();
  for (auto& x : w) x *= std::exp(0.5 * tilt.beta * tilt.beta * d2);
  return FilterWeights(spec.time_step, spec.cutoff, std::move(w));
}

}  // namespace

WeightEvaluator::WeightEvaluator(std::shared_ptr<const PropagatorTable> table, const FilterSpec& spec)
    : table_(std::move(table)), spec_(spec), weights_(tilted_weights(spec, table_->tilt())) {
  spec.validate();
  if (!same_step(table_->time_step(), spec.time_step) || table_->max_index() < spec.cutoff)
    throw std::invalid_argument("WeightEvaluator: propagator table does not cover the filter");
}

StateWeight WeightEvaluator::operator()(const FockState& psi) const {
  double raw = (weights_[0] * table_->echo(psi, 0)).real();
  for (int k = 1; k <= spec_.cutoff; ++k) raw += 2.0 * (weights_[k] * table_->echo(psi, k)).real();
  return {std::max(raw, 0.0), raw, raw < 0.0};
}

FilteredObservableEstimator::FilteredObservableEstimator(std::shared_ptr<const PropagatorTable> table,
                                                         const QuadraticHamiltonian& h, double width,
                                                         int cutoff, std::vector<CMat> observables,
                                                         int threads)
    : table_(std::move(table)),
      width_(width),
      cutoff_(cutoff),
      offset_(h.offset()),
      beta_(0.5 * table_->tilt().beta),
      energy_(table_->tilt().energy) {
  if (!(width > 0.0) || cutoff < 1) throw std::invalid_argument("FilteredObservableEstimator: bad filter");
  if (table_->max_index() < 2 * cutoff)
    throw std::invalid_argument("FilteredObservableEstimator: propagator table too short");
  const double dt = table_->time_step();
  const Eigen::Index n = h.sites();
  const int nk = 2 * cutoff + 1;
  const int nm = 4 * cutoff + 1;
  std::vector<double> g(nk);
  for (int k = -cutoff; k <= cutoff; ++k) {
    const double s = width * dt * k;
    g[k + cutoff] = dt / (2.0 * kPi) * std::exp(-0.5 * s * s);
  }
  norm_weights_.assign(nm, 0.0);
  for (int m = -2 * cutoff; m <= 2 * cutoff; ++m)
    for (int k = std::max(-cutoff, m - cutoff); k <= std::min(cutoff, m + cutoff); ++k)
      norm_weights_[m + 2 * cutoff] += g[k + cutoff] * g[m - k + cutoff];

  // P(a, k) = e^{−iε_a t_k}; Q_m = P diag(g_k g_{m−k}) P†. On a table tilted by 2β both
  // filters carry e^{−β(H−E)}, which in the mode basis is e^{−β(ε_a−s)} e^{−β(ε_b−s)}.
  const RVec& e = h.energies();
  const double shift = beta_ != 0.0 ? (energy_ - offset_) / table_->tilt().particles : 0.0;
  CMat p(n, nk);
  for (Eigen::Index a = 0; a < n; ++a)
    for (int k = -cutoff; k <= cutoff; ++k) p(a, k + cutoff) = std::exp(cplx(0.0, -h.energies()(a) * dt * k));
  std::vector<CMat> modes_x;
  for (const auto& x : observables) {
    if (x.rows() != n || x.cols() != n) throw std::invalid_argument("FilteredObservableEstimator: size mismatch");
    modes_x.push_back(h.modes().adjoint() * x * h.modes());
  }
  kernels_.assign(observables.size(), std::vector<CMat>(nm));
  auto blocks = parallel_map<std::vector<CMat>>(static_cast<std::size_t>(nm), threads, [&](std::size_t i) {
    const int m = static_cast<int>(i) - 2 * cutoff;
    CVec c = CVec::Zero(nk);
    for (int k = std::max(-cutoff, m - cutoff); k <= std::min(cutoff, m + cutoff); ++k)
      c(k + cutoff) = g[k + cutoff] * g[m - k + cutoff];
    CMat q = p * c.asDiagonal() * p.adjoint();
    for (Eigen::Index b = 0; b < n; ++b) {
      const cplx right = std::exp(cplx(-beta_ * (e(b) - shift), -e(b) * dt * m));
      for (Eigen::Index a = 0; a < n; ++a) q(a, b) *= right * std::exp(-beta_ * (e(a) - shift));
    }
    std::vector<CMat> out;
    for (const auto& xt : modes_x) out.push_back(h.modes() * CMat(xt.array() * q.array()) * h.modes().adjoint());
    return out;
  });
  for (int i = 0; i < nm; ++i)
    for (std::size_t o = 0; o < observables.size(); ++o) kernels_[o][i] = std::move(blocks[i][o]);
  constants_.assign(observables.size(), 0.0);
}

FilteredObservableEstimator::Transitions FilteredObservableEstimator::transitions(const FockState& psi) const {
  const int nm = 4 * cutoff_ + 1;
  Transitions tr;
  tr.echo.resize(nm);
  tr.traces.assign(kernels_.size(), std::vector<cplx>(nm));
  const auto& occ = psi.occupied_sites();
  for (int i = 0; i < nm; ++i) {
    const int m = i - 2 * cutoff_;
    const cplx phase = table_->phase(m);
    const auto [det, adj] = det_adjugate(occupied_block((*table_)[m], occ));
    tr.echo[i] = phase * det;
    for (std::size_t o = 0; o < kernels_.size(); ++o) {
      // ⟨ψ|Y e^{−iHτ}|ψ⟩ = tr(Z[S,S] adj(W[S,S])) with Z = Y W
      const CMat z = occupied_block(kernels_[o][i], occ);
      tr.traces[o][i] = phase * (z.array() * adj.transpose().array()).sum();
    }
  }
  return tr;
}

FilteredObservableEstimator::Value FilteredObservableEstimator::combine(const Transitions& tr,
                                                                       double energy) const {
  if (beta_ != 0.0 && std::abs(energy - energy_) > 1e-12 * std::max(1.0, std::abs(energy)))
    throw std::invalid_argument("FilteredObservableEstimator: table tilted for a different energy");
  const double dt = table_->time_step();
  const double centre = energy + beta_ * width_ * width_;
  cplx norm = 0.0;
  std::vector<cplx> acc(kernels_.size(), 0.0);
  for (std::size_t i = 0; i < tr.echo.size(); ++i) {
    const int m = static_cast<int>(i) - 2 * cutoff_;
    const cplx phase = std::exp(cplx(0.0, centre * m * dt));
    norm += norm_weights_[i] * phase * tr.echo[i];
    for (std::size_t o = 0; o < acc.size(); ++o) acc[o] += phase * tr.traces[o][i];
  }
  Value v;
  v.contour_norm = norm.real();
  v.norm = v.contour_norm * std::exp(beta_ * beta_ * width_ * width_);
  for (std::size_t o = 0; o < acc.size(); ++o) v.values.push_back(acc[o] / v.contour_norm + constants_[o]);
  return v;
}

void SamplerConfig::validate(int sites) const {
  target.validate();
  if (particles <= 0 || particles >= sites)
    throw std::invalid_argument("sampler: need 0 < N0 < N (all-empty or all-occupied filling)");
  if (chains < 1) throw std::invalid_argument("sampler: chains must be >= 1");
  if (samples_per_chain < 1) throw std::invalid_argument("sampler: samples_per_chain must be >= 1");
  if (resolved_burn_in(sites) < 0) throw std::invalid_argument("sampler: burn_in must be >= 0");
  if (resolved_stride(sites) < 1) throw std::invalid_argument("sampler: stride must be >= 1");
  if (chain_length(sites) <= resolved_burn_in(sites))
    throw std::invalid_argument("sampler: chain length must exceed burn-in");
  if (retries < 0) throw std::invalid_argument("sampler: retries must be >= 0");
}

double diagonal_energy(const FockState& psi, const QuadraticHamiltonian& h) {
  double e = h.offset();
  for (int s : psi.occupied_sites()) e += h.matrix()(s, s).real();
  return e;
}

double integrated_autocorrelation(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - mean) * (x[i + lag] - mean);
    tau += 2.0 * c / (static_cast<double>(n) * c0);
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::clamp(tau, 1.0, static_cast<double>(n));
}

double acceptance_probability(double p_old, double p_new) {
  if (!(p_old > 0.0)) return 1.0;
  return std::min(1.0, p_new / p_old);
}

SampleSet mh_sample(const SamplerConfig& cfg, const QuadraticHamiltonian& h) {
  cfg.validate(static_cast<int>(h.sites()));
  const ContourTilt tilt = contour_tilt(h, cfg.particles, cfg.target);
  auto table = std::make_shared<PropagatorTable>(h, cfg.target.time_step, cfg.target.cutoff, cfg.threads, tilt);
  return mh_sample(cfg, h, WeightEvaluator(table, cfg.target));
}

SampleSet mh_sample(const SamplerConfig& cfg, const QuadraticHamiltonian& h, const WeightEvaluator& weight) {
  const int n = static_cast<int>(h.sites());
  cfg.validate(n);
  const int n0 = cfg.particles;
  const int burn = cfg.resolved_burn_in(n);
  const int stride = cfg.resolved_stride(n);
  const double zero = 1e-12 * zero_weight_scale(cfg.target.width);

  struct ChainResult {
    std::vector<FockState> states;
    ChainDiagnostics diag;
  };
  auto chains = parallel_map<ChainResult>(static_cast<std::size_t>(cfg.chains), cfg.threads, [&](std::size_t c) {
    ChainRng rng(splitmix64(cfg.seed ^ splitmix64(c + 1)));
    ChainResult res;
    auto weigh = [&](const FockState& s) {
      const StateWeight w = weight(s);
      if (w.clipped) ++res.diag.clipped_weights;
      return w.value;
    };

    FockState state = random_state(n, n0, rng);
    double p = weigh(state);
    for (int r = 0; r < cfg.retries && p <= zero; ++r) {
      state = random_state(n, n0, rng);
      p = weigh(state);
      ++res.diag.redraws;
    }
    if (p <= zero) {
      state = closest_diagonal_state(h, n0, cfg.target.energy);
      p = weigh(state);
      res.diag.fallback_start = true;
      if (!(p > 0.0)) throw NoSpectralWeightError("sampler: zero-weight start after retry budget");
    }

    IncrementalWeight tracker(weight);
    p = std::max(tracker.reset(state), 0.0);
    const long long length = cfg.chain_length(n);
    long long accepted = 0;
    std::vector<double> energies;
    for (long long step = 1; step <= length; ++step) {
      const auto& occ = state.occupied_sites();
      const auto empty = state.empty_sites();
      const int from = occ[rng.index(n0)];
      const int to = empty[rng.index(n - n0)];
      const double raw = tracker.propose(from, to);
      if (raw < 0.0) ++res.diag.clipped_weights;
      const double pn = std::max(raw, 0.0);
      if (rng.uniform() < acceptance_probability(p, pn)) {
        state = state.moved(from, to);
        tracker.accept();
        p = pn;
        ++accepted;
      }
      if (step > burn && (step - burn) % stride == 0) {
        res.states.push_back(state);
        energies.push_back(diagonal_energy(state, h));
      }
    }
    res.diag.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(length);
    const double mean = std::accumulate(energies.begin(), energies.end(), 0.0) / energies.size();
    double var = 0.0;
    for (double e : energies) var += (e - mean) * (e - mean);
    res.diag.mean_energy = mean;
    res.diag.energy_std = energies.size() > 1 ? std::sqrt(var / (energies.size() - 1)) : 0.0;
    res.diag.autocorrelation_time = integrated_autocorrelation(energies);
    return res;
  });

  SampleSet out;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (auto& s : chains[c].states) {
      out.states.push_back(std::move(s));
      out.chain.push_back(static_cast<int>(c));
    }
    out.diagnostics.push_back(chains[c].diag);
  }
  return out;
}

SampledEstimate pooled_estimate(const std::vector<double>& values, const std::vector<int>& chain) {
  if (values.empty()) throw std::invalid_argument("pooled_estimate: no samples");
  if (values.size() != chain.size()) throw std::invalid_argument("pooled_estimate: size mismatch");
  std::vector<int> ids = chain;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const double total = static_cast<double>(values.size());
  SampledEstimate est;
  est.used = static_cast<int>(values.size());
  est.mean = std::accumulate(values.begin(), values.end(), 0.0) / total;
  double var_sum = 0.0;
  for (int id : ids) {
    std::vector<double> xs;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (chain[i] == id) xs.push_back(values[i]);
    if (xs.size() < 2) continue;
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    var_sum += static_cast<double>(xs.size()) * v * integrated_autocorrelation(xs);
  }
  est.standard_error = std::sqrt(var_sum) / total;
  return est;
}

SampledEstimate ensemble_expectation_sampled(const SampleSet& samples, const FilteredObservableEstimator& est,
                                             std::size_t index, double energy, double overlap_floor) {
  if (samples.states.empty()) throw std::invalid_argument("ensemble_expectation_sampled: no samples");
  if (index >= est.observables()) throw std::invalid_argument("ensemble_expectation_sampled: bad observable");
  const double floor = overlap_floor / (2.0 * kPi * est.width() * est.width());
  std::unordered_map<FockState, std::pair<double, bool>, FockStateHash> cache;
  std::vector<double> values;
  std::vector<int> chain;
  int skipped = 0;
  for (std::size_t i = 0; i < samples.states.size(); ++i) {
    const auto& s = samples.states[i];
    auto it = cache.find(s);
    if (it == cache.end()) {
      const auto v = est.evaluate(s, energy);
      const bool ok = v.norm > floor;
      it = cache.emplace(s, std::make_pair(ok ? v.values[index].real() : 0.0, ok)).first;
    }
    if (!it->second.second) {
      ++skipped;
      continue;
    }
    values.push_back(it->second.first);
    chain.push_back(samples.chain[i]);
  }
  if (values.empty()) throw InsufficientOverlapError("every sample fell below the overlap floor");
  SampledEstimate out = pooled_estimate(values, chain);
  out.skipped = skipped;
  return out;
}

SampledEstimate ensemble_expectation_sampled(const SampleSet& samples, const CMat& a, cplx constant,
                                             const FilterSpec& spec, const QuadraticHamiltonian& h,
                                             double width_factor, double overlap_floor) {
  spec.validate();
  const double width = width_factor * spec.width;
  const int cutoff = static_cast<int>(std::ceil(spec.reach() / (width * spec.time_step) - 1e-9));
  const int n0 = samples.states.front().particles();
  const ContourTilt tilt = contour_tilt(h, n0, spec);
  auto table = std::make_shared<PropagatorTable>(h, spec.time_step, 2 * cutoff, 1, tilt);
  const FilteredObservableEstimator est(table, h, width, cutoff, {a});
  SampledEstimate out = ensemble_expectation_sampled(samples, est, 0, spec.energy, overlap_floor);
  out.mean += constant.real();
  return out;
}

double ensemble_expectation_exact(const QuadraticHamiltonian& h, const FilterSpec& spec, const CMat& a,
                                  cplx constant, int particles) {
  if (a.rows() != h.sites() || a.cols() != h.sites())
    throw std::invalid_argument("ensemble_expectation_exact: size mismatch");
  const EnsembleOccupations occ = ensemble_occupations(h, spec, particles, false);
  const CMat at = h.modes().adjoint() * a * h.modes();
  return at.diagonal().real().dot(occ.n) + constant.real();
}

double ensemble_expectation_exact(const QuadraticHamiltonian& h, const FilterSpec& spec,
                                  const MajoranaMonomialSum& a, int particles) {
  const OneBodyForm f = a.one_body();
  return ensemble_expectation_exact(h, spec, f.matrix, f.constant, particles);
}

double canonical_expectation(const QuadraticHamiltonian& h, const CMat& a, cplx constant, double beta,
                             double width, const std::vector<double>& energies, int particles) {
  if (energies.size() < 3) throw std::invalid_argument("canonical_expectation: energy grid too short");
  for (std::size_t i = 1; i < energies.size(); ++i)
    if (energies[i] - energies[i - 1] > 0.5 * width * (1.0 + 1e-12) || energies[i] <= energies[i - 1])
      throw std::invalid_argument("canonical_expectation: grid spacing exceeds delta/2");
  const double radius = spectral_radius(h, particles);
  const CMat at = h.modes().adjoint() * a * h.modes();
  const RVec diag = at.diagonal().real();

  std::vector<double> log_w(energies.size(), -INFINITY), value(energies.size(), 0.0);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    try {
      const auto occ =
          ensemble_occupations(h, FilterSpec::resolved(energies[i], width, radius, 8.0), particles, false);
      log_w[i] = std::log(occ.trace) - beta * energies[i];
      value[i] = diag.dot(occ.n) + constant.real();
    } catch (const NoSpectralWeightError&) {
    }
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  if (!std::isfinite(top)) throw NoSpectralWeightError("canonical_expectation: no spectral weight on the grid");
  double num = 0.0, den = 0.0, edge = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double dx = 0.5 * ((i > 0 ? energies[i] - energies[i - 1] : 0.0) +
                             (i + 1 < energies.size() ? energies[i + 1] - energies[i] : 0.0));
    const double w = std::exp(log_w[i] - top) * dx;
    num += w * value[i];
    den += w;
    if (i == 0 || i + 1 == energies.size()) edge += w;
  }
  if (edge > 1e-6 * den) throw std::invalid_argument("canonical_expectation: grid does not cover the spectral support");
  return num / den;
}

}  // namespace efr
