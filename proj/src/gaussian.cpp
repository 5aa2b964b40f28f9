#include "efr/gaussian.hpp"

#include "efr/pfaffian.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

namespace efr {

namespace {

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void check_strictly_increasing(std::span<const int> idx, Eigen::Index modes) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= modes) throw std::invalid_argument("Majorana index out of range");
    if (i > 0 && idx[i] <= idx[i - 1])
      throw std::invalid_argument("Majorana indices must be strictly increasing");
  }
}

// ξ_a = u a_p + v a†_p with p = a / 2.
cplx majorana_u(int a) { return (a % 2 == 0) ? cplx(1.0) : cplx(0.0, -1.0); }
cplx majorana_v(int a) { return (a % 2 == 0) ? cplx(1.0) : cplx(0.0, 1.0); }

}  // namespace

QuadraticHamiltonian::QuadraticHamiltonian(CMat h, double offset, double hermiticity_tol)
    : h_(std::move(h)), offset_(offset) {
  if (h_.rows() != h_.cols() || h_.rows() == 0)
    throw std::invalid_argument("QuadraticHamiltonian: h must be a nonempty square matrix");
  if (!h_.allFinite() || !std::isfinite(offset_))
    throw std::invalid_argument("QuadraticHamiltonian: non-finite entries");
  const double scale = std::max(1.0, max_abs(h_));
  if (max_abs(h_ - h_.adjoint()) > hermiticity_tol * scale)
    throw std::invalid_argument("QuadraticHamiltonian: h is not Hermitian");
  h_ = (0.5 * (h_ + h_.adjoint())).eval();
  Eigen::SelfAdjointEigenSolver<CMat> solver(h_);
  if (solver.info() != Eigen::Success)
    throw NumericalError("QuadraticHamiltonian: eigendecomposition failed");
  energies_ = solver.eigenvalues();
  modes_ = solver.eigenvectors();
}

CMat QuadraticHamiltonian::propagator(double t) const {
  const CVec phase = (energies_.cast<cplx>() * cplx(0.0, -t)).array().exp();
  return modes_ * phase.asDiagonal() * modes_.adjoint();
}

CMat QuadraticHamiltonian::propagator_block(double t, std::span<const int> rows,
                                            std::span<const int> cols) const {
  const Eigen::Index n = sites();
  CMat left(static_cast<Eigen::Index>(rows.size()), n);
  CMat right(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) left.row(i) = modes_.row(rows[i]);
  for (std::size_t j = 0; j < cols.size(); ++j) right.col(j) = modes_.row(cols[j]).adjoint();
  const CVec phase = (energies_.cast<cplx>() * cplx(0.0, -t)).array().exp();
  return left * phase.asDiagonal() * right;
}

FockState::FockState(int sites, std::vector<int> occupied)
    : sites_(sites), occupied_(std::move(occupied)) {
  if (sites_ < 1) throw std::invalid_argument("FockState: need at least one site");
  std::sort(occupied_.begin(), occupied_.end());
  if (std::adjacent_find(occupied_.begin(), occupied_.end()) != occupied_.end())
    throw std::invalid_argument("FockState: repeated occupied site");
  for (int s : occupied_)
    if (s < 0 || s >= sites_) throw std::invalid_argument("FockState: site out of range");
}

FockState FockState::from_bits(std::string_view bits) {
  std::vector<int> occ;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') occ.push_back(static_cast<int>(i));
    else if (bits[i] != '0') throw std::invalid_argument("FockState: bit string must contain 0/1");
  }
  return FockState(static_cast<int>(bits.size()), std::move(occ));
}

bool FockState::occupied(int site) const {
  return std::binary_search(occupied_.begin(), occupied_.end(), site);
}

std::vector<int> FockState::empty_sites() const {
  std::vector<int> out;
  out.reserve(sites_ - occupied_.size());
  for (int s = 0, i = 0; s < sites_; ++s) {
    if (i < particles() && occupied_[i] == s) ++i;
    else out.push_back(s);
  }
  return out;
}

std::string FockState::bits() const {
  std::string s(sites_, '0');
  for (int o : occupied_) s[o] = '1';
  return s;
}

FockState FockState::moved(int from, int to) const {
  if (!occupied(from) || occupied(to)) throw std::invalid_argument("FockState::moved: invalid move");
  std::vector<int> occ = occupied_;
  *std::find(occ.begin(), occ.end(), from) = to;
  return FockState(sites_, std::move(occ));
}

CMat FockState::orbitals() const {
  CMat phi = CMat::Zero(sites_, particles());
  for (int i = 0; i < particles(); ++i) phi(occupied_[i], i) = 1.0;
  return phi;
}

std::size_t FockStateHash::operator()(const FockState& s) const noexcept {
  std::size_t h = std::hash<int>{}(s.sites());
  for (int o : s.occupied_sites()) h ^= std::hash<int>{}(o) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::vector<FockState> enumerate_sector(int sites, int particles) {
  if (particles < 0 || particles > sites) throw std::invalid_argument("enumerate_sector: bad filling");
  std::vector<FockState> out;
  std::vector<int> c(particles);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.emplace_back(sites, c);
    int i = particles - 1;
    while (i >= 0 && c[i] == sites - particles + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < particles; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

MajoranaCovariance::MajoranaCovariance(RMat gamma, double antisymmetry_tol) : gamma_(std::move(gamma)) {
  if (gamma_.rows() != gamma_.cols() || gamma_.rows() % 2 != 0)
    throw std::invalid_argument("MajoranaCovariance: need an even square matrix");
  if (gamma_.size() && (gamma_ + gamma_.transpose()).cwiseAbs().maxCoeff() > antisymmetry_tol)
    throw std::invalid_argument("MajoranaCovariance: matrix is not antisymmetric");
}

double MajoranaCovariance::purity_defect() const {
  const RMat sq = gamma_ * gamma_ + RMat::Identity(modes(), modes());
  return sq.size() ? sq.cwiseAbs().maxCoeff() : 0.0;
}

MajoranaMonomialSum::MajoranaMonomialSum(int sites, cplx constant,
                                         const std::vector<MajoranaTerm>& terms)
    : sites_(sites), constant_(constant) {
  if (sites_ < 1) throw std::invalid_argument("MajoranaMonomialSum: need at least one site");
  std::map<std::pair<int, int>, cplx> merged;
  for (const auto& t : terms) {
    if (t.first < 0 || t.second < 0 || t.first >= 2 * sites_ || t.second >= 2 * sites_)
      throw std::invalid_argument("MajoranaMonomialSum: index out of range");
    if (t.first == t.second) throw std::invalid_argument("MajoranaMonomialSum: repeated index in a term");
    if (t.first < t.second) merged[{t.first, t.second}] += t.coefficient;
    else merged[{t.second, t.first}] -= t.coefficient;
  }
  for (const auto& [key, c] : merged)
    if (c != cplx(0.0)) terms_.push_back({c, key.first, key.second});
}

MajoranaMonomialSum MajoranaMonomialSum::identity(int sites) { return {sites, 1.0, {}}; }

MajoranaMonomialSum MajoranaMonomialSum::from_one_body(const CMat& c, cplx constant) {
  const int n = static_cast<int>(c.rows());
  if (c.cols() != n) throw std::invalid_argument("from_one_body: matrix must be square");
  // a†_n a_m = (x_n − i y_n)(x_m + i y_m) / 4
  std::vector<MajoranaTerm> terms;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) {
      const cplx v = c(p, q);
      if (v == cplx(0.0)) continue;
      const int xp = 2 * p, yp = 2 * p + 1, xq = 2 * q, yq = 2 * q + 1;
      const std::pair<std::pair<int, int>, cplx> parts[] = {
          {{xp, xq}, v / 4.0}, {{xp, yq}, kI * v / 4.0}, {{yp, xq}, -kI * v / 4.0}, {{yp, yq}, v / 4.0}};
      for (const auto& [ij, coef] : parts) {
        if (ij.first == ij.second) constant += coef;
        else terms.push_back({coef, ij.first, ij.second});
      }
    }
  }
  return {n, constant, terms};
}

CMat MajoranaMonomialSum::coefficients() const {
  CMat alpha = CMat::Zero(2 * sites_, 2 * sites_);
  for (const auto& t : terms_) alpha(t.first, t.second) += t.coefficient;
  return alpha;
}

MajoranaMonomialSum MajoranaMonomialSum::rotated(const RMat& o) const {
  if (o.rows() != 2 * sites_ || o.cols() != 2 * sites_)
    throw std::invalid_argument("MajoranaMonomialSum::rotated: dimension mismatch");
  const CMat alpha = coefficients();
  const CMat m = alpha - alpha.transpose();
  const CMat r = o.transpose().cast<cplx>() * m * o.cast<cplx>();
  std::vector<MajoranaTerm> terms;
  for (int a = 0; a < 2 * sites_; ++a)
    for (int b = a + 1; b < 2 * sites_; ++b)
      if (r(a, b) != cplx(0.0)) terms.push_back({r(a, b), a, b});
  return {sites_, constant_, terms};
}

bool MajoranaMonomialSum::is_hermitian(double tol) const {
  if (std::abs(constant_.imag()) > tol) return false;
  return std::all_of(terms_.begin(), terms_.end(),
                     [tol](const MajoranaTerm& t) { return std::abs(t.coefficient.real()) <= tol; });
}

OneBodyForm MajoranaMonomialSum::one_body() const {
  OneBodyForm out{CMat::Zero(sites_, sites_), constant_, 0.0};
  CMat annihilate = CMat::Zero(sites_, sites_);
  CMat create = CMat::Zero(sites_, sites_);
  for (const auto& t : terms_) {
    const int a = t.first, b = t.second, p = a / 2, q = b / 2;
    const cplx ua = majorana_u(a), va = majorana_v(a), ub = majorana_u(b), vb = majorana_v(b);
    out.matrix(p, q) += t.coefficient * va * ub;
    out.matrix(q, p) -= t.coefficient * ua * vb;
    if (p == q) out.constant += t.coefficient * ua * vb;
    annihilate(p, q) += t.coefficient * ua * ub;
    create(p, q) += t.coefficient * va * vb;
  }
  out.pairing_norm = std::max(max_abs(annihilate - annihilate.transpose()),
                              max_abs(create - create.transpose()));
  return out;
}

cplx MajoranaMonomialSum::contract(const CMat& two_point) const {
  cplx acc = constant_;
  for (const auto& t : terms_) acc += t.coefficient * two_point(t.first, t.second);
  return acc;
}

cplx MajoranaMonomialSum::expectation(const MajoranaCovariance& gamma) const {
  if (gamma.sites() != sites_) throw std::invalid_argument("expectation: dimension mismatch");
  cplx acc = constant_;
  for (const auto& t : terms_) acc += t.coefficient * kI * gamma.matrix()(t.first, t.second);
  return acc;
}

MajoranaCovariance fock_covariance(const FockState& state) {
  const int n = state.sites();
  RMat g = RMat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const double lambda = state.occupied(j) ? -1.0 : 1.0;
    g(2 * j, 2 * j + 1) = lambda;
    g(2 * j + 1, 2 * j) = -lambda;
  }
  return MajoranaCovariance(std::move(g));
}

RMat orthogonal_evolution(const QuadraticHamiltonian& h, double t) {
  const Eigen::Index n = h.sites();
  const CMat w = h.propagator(t);
  RMat o(2 * n, 2 * n);
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx z = w(m, k);
      o(2 * m, 2 * k) = z.real();
      o(2 * m, 2 * k + 1) = -z.imag();
      o(2 * m + 1, 2 * k) = z.imag();
      o(2 * m + 1, 2 * k + 1) = z.real();
    }
  }
  return o;
}

MajoranaCovariance evolve_covariance(const MajoranaCovariance& gamma, const RMat& o) {
  if (o.rows() != gamma.modes() || o.cols() != gamma.modes())
    throw std::invalid_argument("evolve_covariance: dimension mismatch");
  RMat g = o * gamma.matrix() * o.transpose();
  g = 0.5 * (g - g.transpose());
  return MajoranaCovariance(std::move(g));
}

cplx wick_expectation(const MajoranaCovariance& gamma, std::span<const int> indices) {
  check_strictly_increasing(indices, gamma.modes());
  if (indices.size() % 2 != 0) throw std::invalid_argument("wick_expectation: odd number of operators");
  const auto k = static_cast<Eigen::Index>(indices.size());
  CMat sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = kI * gamma.matrix()(indices[i], indices[j]);
  return pfaffian(sub);
}

MixedTwoPoint mixed_two_point(const MajoranaCovariance& g1, const MajoranaCovariance& g2,
                              double singular_tol) {
  if (g1.modes() != g2.modes()) throw std::invalid_argument("mixed_two_point: dimension mismatch");
  const Eigen::Index m = g1.modes();
  const RMat sum = g1.matrix() + g2.matrix();
  Eigen::JacobiSVD<RMat> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  if (m > 0 && s(m - 1) < singular_tol * std::max(s(0), 1e-300))
    throw OrthogonalStatesError("Γ₁ + Γ₂ is singular: states are (nearly) orthogonal");
  double weight = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) weight *= s(i);
  weight = std::sqrt(weight) * std::pow(2.0, -static_cast<double>(m / 2));
  const RMat inv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  const CMat numerator = -2.0 * CMat::Identity(m, m) + kI * (g1.matrix() - g2.matrix()).cast<cplx>();
  const CMat delta = numerator * inv.cast<cplx>();
  CMat g = kI * delta.conjugate();
  g = (0.5 * (g - g.transpose())).eval();
  g.diagonal().setOnes();
  return {weight, std::move(g)};
}

cplx two_state_overlap_trace(const MajoranaCovariance& g1, const MajoranaCovariance& g2,
                             std::span<const int> indices, double singular_tol) {
  check_strictly_increasing(indices, g1.modes());
  const MixedTwoPoint mixed = mixed_two_point(g1, g2, singular_tol);
  if (indices.empty()) return mixed.weight;
  if (indices.size() % 2 != 0) return 0.0;
  const auto k = static_cast<Eigen::Index>(indices.size());
  CMat sub(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      sub(i, j) = (i == j) ? cplx(0.0) : mixed.two_point(indices[i], indices[j]);
  return mixed.weight * pfaffian(sub);
}

cplx gaussian_trace_phase(const QuadraticHamiltonian& h, double t) {
  cplx acc = std::exp(cplx(0.0, -h.offset() * t));
  for (double e : h.energies()) acc *= 1.0 + std::exp(cplx(0.0, -e * t));
  return acc;
}

CMat correlation_matrix(const MajoranaCovariance& gamma) {
  const Eigen::Index n = gamma.sites();
  const RMat& g = gamma.matrix();
  auto full = [&](Eigen::Index a, Eigen::Index b) -> cplx {
    return (a == b ? cplx(1.0) : cplx(0.0)) + kI * g(a, b);
  };
  CMat c(n, n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q)
      c(p, q) = (full(2 * p, 2 * q) + kI * full(2 * p, 2 * q + 1) - kI * full(2 * p + 1, 2 * q) +
                 full(2 * p + 1, 2 * q + 1)) /
                4.0;
  return c;
}

cplx density_trace_evolution(const MajoranaCovariance& gamma, const QuadraticHamiltonian& h,
                             double t) {
  if (gamma.sites() != h.sites()) throw std::invalid_argument("density_trace_evolution: dimension mismatch");
  const Eigen::Index n = h.sites();
  const CMat ct = correlation_matrix(gamma).transpose();
  const CMat m = CMat::Identity(n, n) - ct + ct * h.propagator(t);
  return std::exp(cplx(0.0, -h.offset() * t)) * m.determinant();
}

cplx contract_product(const MajoranaMonomialSum& a, const MajoranaMonomialSum& b,
                      const CMat& two_point) {
  const CMat alpha = a.coefficients();
  const CMat beta = b.coefficients();
  const cplx ea = (alpha.array() * two_point.array()).sum();
  const cplx eb = (beta.array() * two_point.array()).sum();
  const CMat gt = two_point.transpose();
  const cplx cross = (alpha.array() * (two_point * beta * gt).array()).sum();
  const cplx swap = (alpha.array() * (two_point * beta.transpose() * gt).array()).sum();
  return a.constant() * b.constant() + a.constant() * eb + b.constant() * ea + ea * eb - cross + swap;
}

}  // namespace efr
