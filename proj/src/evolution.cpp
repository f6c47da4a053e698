#include "lfbp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lfbp/quadrature.hpp"

namespace lfbp {
namespace {

void require_generation(int n) {
  if (n < 1) throw std::invalid_argument("evolve: n must be at least 1");
}

std::vector<double> cumulative(const std::vector<double>& w) {
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) cdf[i] = (acc += w[i]);
  for (double& c : cdf) c /= acc;
  return cdf;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// E[g(V_j + S_j)] with V_j ~ Exp(mu + j) and S_j the rate-ladder sum.
double component_expect(const ExpFamilyTriplet& t, const TestFunction& g, int j) {
  const double rate = t.mu() + j;
  const auto inner = [&](double s) {
    return expect_exponential([&](double v) { return g(TypePoint::real(v + s)); }, rate,
                              kInnerQuadrature);
  };
  return expect_rate_ladder(inner, t.lambda(), j);
}

}  // namespace

// Finite family ------------------------------------------------------------------------

FiniteGenerationLaw::FiniteGenerationLaw(int n, double m_n, std::vector<double> weights,
                                         Eigen::MatrixXd Mn, Eigen::VectorXd gamma_n,
                                         Eigen::MatrixXd Kn)
    : GenerationLaw(n, m_n, std::move(weights)),
      Mn_(std::move(Mn)),
      gamma_n_(std::move(gamma_n)),
      Kn_(std::move(Kn)) {}

double FiniteGenerationLaw::mean_mass(const TypePoint& x) const {
  return Mn_.row(static_cast<Eigen::Index>(x.index())).sum();
}

double FiniteGenerationLaw::kn_apply(const TypePoint& x, const TestFunction& g) const {
  const auto i = static_cast<Eigen::Index>(x.index());
  double s = 0.0;
  for (Eigen::Index j = 0; j < Kn_.cols(); ++j) s += Kn_(i, j) * g(TypePoint::finite(j));
  return s;
}

double FiniteGenerationLaw::gamma_n_integrate(const TestFunction& g) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < gamma_n_.size(); ++j) s += gamma_n_(j) * g(TypePoint::finite(j));
  return s;
}

TypePoint FiniteGenerationLaw::sample_gamma_n(Rng& rng) const {
  return TypePoint::finite(static_cast<std::size_t>(sample_index(gamma_n_, rng)));
}

TypePoint FiniteGenerationLaw::sample_marked(const TypePoint& x, Rng& rng) const {
  Eigen::VectorXd row = Kn_.row(static_cast<Eigen::Index>(x.index())).transpose();
  row = row.cwiseMax(0.0);
  const double total = row.sum();
  if (!(total > 0.0)) throw std::domain_error("sample_marked: K_n(x, E) = 0");
  return TypePoint::finite(static_cast<std::size_t>(sample_index(row / total, rng)));
}

FiniteGenerationLaw evolve(const FiniteTriplet& triplet, int n) {
  require_generation(n);
  const double m = triplet.m();
  const Eigen::MatrixXd M = triplet.mean_matrix();
  const Eigen::Index d = triplet.dim();

  // Row vectors gamma^T M^k; the k = 0 mass is exactly gamma(E) = 1.
  std::vector<double> mass(n);
  Eigen::RowVectorXd row = triplet.gamma().transpose();
  Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
  for (int k = 0; k < n; ++k) {
    if (k > 0) row = row * M;
    mass[k] = k == 0 ? 1.0 : row.sum();
    acc += row;
  }
  double total = 0.0;
  for (double v : mass) total += v;
  const double m_n = m * total;

  std::vector<double> weights(n);
  for (int k = 0; k < n; ++k) weights[k] = m * mass[k] / m_n;
  const Eigen::VectorXd gamma_n = (m / m_n) * acc.transpose();

  Eigen::MatrixXd Mn = Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k < n; ++k) Mn = Mn * M;

  // K_n = M^n - m_n / (1 + m_n) M^n(., E) gamma_n cancels two terms of size
  // rho^n. Instead follow the first surviving line: the marked child's, or
  // else the first surviving sibling's, which is found with probability
  // m / (1 + m p) times its own K_{n-1} law, p = gamma K_{n-1}(E).
  const Eigen::MatrixXd& K = triplet.K();
  Eigen::MatrixXd Kn = Eigen::MatrixXd::Identity(d, d);
  for (int k = 0; k < n; ++k) {
    const Eigen::VectorXd dead = Eigen::VectorXd::Ones(d) - Kn.rowwise().sum();
    const Eigen::RowVectorXd sibling = triplet.gamma().transpose() * Kn;
    const double p = sibling.sum();
    Kn = K * Kn + (m / (1.0 + m * p)) * (K * dead) * sibling;
  }
  return FiniteGenerationLaw(n, m_n, std::move(weights), std::move(Mn), gamma_n, Kn);
}

double gen_functional(const FiniteGenerationLaw& law, Eigen::Index x, const Eigen::VectorXd& h) {
  const double kn_mass = law.Kn().row(x).sum();
  const double kn_h = law.Kn().row(x).dot(h);
  const double den = 1.0 + law.m_n() - law.m_n() * law.gamma_n().dot(h);
  if (!(den >= 1.0 - 1e-12)) {
    throw std::logic_error("gen_functional: denominator below 1 (h outside [0, 1]?)");
  }
  return 1.0 - kn_mass + kn_h / den;
}

double gen_functional_iterated(const FiniteTriplet& triplet, Eigen::Index x, int n,
                               const Eigen::VectorXd& h) {
  const double m = triplet.m();
  const Eigen::VectorXd mass = triplet.mass();
  Eigen::VectorXd v = h;
  for (int k = 0; k < n; ++k) {
    const double den = 1.0 + m - m * triplet.gamma().dot(v);
    v = (Eigen::VectorXd::Ones(v.size()) - mass) + (triplet.K() * v) / den;
  }
  return v(x);
}

// Exponential family ---------------------------------------------------------------------

ExpGenerationLaw::ExpGenerationLaw(ExpFamilyTriplet triplet, int n)
    : GenerationLaw(n, 0.0, {}), triplet_(std::move(triplet)) {
  require_generation(n);
  const double m = triplet_.m();
  tail_.resize(n + 1);
  for (int j = 0; j <= n; ++j) tail_[j] = exp_family_tail(triplet_.lambda(), triplet_.mu(), j);

  // coeff_[k] = e_k + m sum_{i=1}^k d_i coeff_[k-i]
  coeff_.assign(n + 1, {});
  G_.assign(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    std::vector<double> c(k + 1, 0.0);
    c[k] = 1.0;
    for (int i = 1; i <= k; ++i) {
      const auto& prev = coeff_[k - i];
      for (std::size_t j = 0; j < prev.size(); ++j) c[j] += m * tail_[i] * prev[j];
    }
    double g = 0.0;
    for (int j = 0; j <= k; ++j) g += c[j] * tail_[j];
    coeff_[k] = std::move(c);
    G_[k] = g;
  }

  double total = 0.0;
  for (int k = 0; k < n; ++k) total += G_[k];
  const double m_n = m * total;
  std::vector<double> weights(n);
  for (int k = 0; k < n; ++k) weights[k] = m * G_[k] / m_n;

  component_weights_.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j <= k; ++j) component_weights_[j] += (m / m_n) * coeff_[k][j] * tail_[j];
  }
  component_cdf_ = cumulative(component_weights_);
  set_totals(m_n, std::move(weights));
}

double ExpGenerationLaw::mean_mass(const TypePoint& x) const {
  const int n = this->n();
  const double m = triplet_.m();
  double total = exp_family_kn_mass(triplet_.lambda(), x.value(), n);
  for (int i = 1; i <= n; ++i) {
    total += m * exp_family_kn_mass(triplet_.lambda(), x.value(), i) * G_[n - i];
  }
  return total;
}

double ExpGenerationLaw::gamma_n_integrate(const TestFunction& g) const {
  double s = 0.0;
  for (int j = 0; j < n(); ++j) {
    if (component_weights_[j] > 0.0) s += component_weights_[j] * component_expect(triplet_, g, j);
  }
  return s;
}

double ExpGenerationLaw::kn_apply(const TypePoint& x, const TestFunction& g) const {
  const int n = this->n();
  const double m = triplet_.m();
  const double lambda = triplet_.lambda();
  std::vector<double> q(n);
  for (int j = 0; j < n; ++j) q[j] = component_expect(triplet_, g, j);

  // M^n(x, g) = K^n(x, g) + m sum_{i=1}^n K^i(x, E) G_{n-i}(g)
  double mn_g = exp_family_kn_apply(triplet_, g, x.value(), n);
  for (int i = 1; i <= n; ++i) {
    const auto& c = coeff_[n - i];
    double Gg = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) Gg += c[j] * tail_[j] * q[j];
    mn_g += m * exp_family_kn_mass(lambda, x.value(), i) * Gg;
  }
  double gamma_n_g = 0.0;
  for (int j = 0; j < n; ++j) gamma_n_g += component_weights_[j] * q[j];
  return mn_g - (m_n() / (1.0 + m_n())) * mean_mass(x) * gamma_n_g;
}

TypePoint ExpGenerationLaw::sample_gamma_n(Rng& rng) const {
  const auto j = static_cast<int>(draw(component_cdf_, rng));
  return TypePoint::real(exp_family_gamma_kn_sample(triplet_, j, rng));
}

TypePoint ExpGenerationLaw::sample_marked(const TypePoint& x, Rng& rng) const {
  constexpr int kMaxAttempts = 10'000'000;
  const int n = this->n();
  std::vector<std::pair<TypePoint, int>> stack;
  std::vector<TypePoint> children;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    stack.clear();
    stack.emplace_back(x, 0);
    while (!stack.empty()) {
      const auto [type, depth] = stack.back();
      stack.pop_back();
      if (depth == n) return type;
      children.clear();
      append_offspring(triplet_, type, rng, children);
      // Marked child on top of the stack.
      for (auto it = children.rbegin(); it != children.rend(); ++it) {
        stack.emplace_back(*it, depth + 1);
      }
    }
  }
  throw std::runtime_error("sample_marked: survival to generation n too rare");
}

ExpGenerationLaw evolve(const ExpFamilyTriplet& triplet, int n) {
  return ExpGenerationLaw(triplet, n);
}

std::unique_ptr<GenerationLaw> evolve(const Triplet& triplet, int n) {
  if (const auto* f = std::get_if<FiniteTriplet>(&triplet)) {
    return std::make_unique<FiniteGenerationLaw>(evolve(*f, n));
  }
  return std::make_unique<ExpGenerationLaw>(std::get<ExpFamilyTriplet>(triplet), n);
}

// Shared ----------------------------------------------------------------------------------

double survival_prob(const FiniteTriplet& triplet, const TypePoint& x, int n) {
  return evolve(triplet, n).survival(x);
}

double survival_prob(const ExpFamilyTriplet& triplet, const TypePoint& x, int n) {
  return generation_totals(Triplet(triplet), x, n).back().survival();
}

double survival_prob(const Triplet& triplet, const TypePoint& x, int n) {
  return std::visit([&](const auto& t) { return survival_prob(t, x, n); }, triplet);
}

std::vector<GenerationTotals> generation_totals(const Triplet& triplet, const TypePoint& x,
                                                int n_max) {
  require_generation(n_max);
  std::vector<GenerationTotals> out(n_max + 1);
  const double m = as_lf(triplet).m();
  if (const auto* f = std::get_if<FiniteTriplet>(&triplet)) {
    const Eigen::MatrixXd M = f->mean_matrix();
    Eigen::VectorXd col = Eigen::VectorXd::Ones(f->dim());  // M^n 1
    double acc = 0.0;                                        // sum_{k<n} gamma^T M^k 1
    for (int n = 0; n <= n_max; ++n) {
      out[n] = {n, m * acc, col(static_cast<Eigen::Index>(x.index()))};
      acc += n == 0 ? 1.0 : f->gamma().dot(col);
      col = M * col;
    }
    return out;
  }
  const auto& t = std::get<ExpFamilyTriplet>(triplet);
  std::vector<double> d(n_max + 1), kx(n_max + 1), G(n_max + 1);
  int last = 0;  // d_i = 0 beyond this index in double precision
  for (int i = 0; i <= n_max; ++i) {
    d[i] = exp_family_tail(t.lambda(), t.mu(), i);
    kx[i] = exp_family_kn_mass(t.lambda(), x.value(), i);
    if (d[i] > 0.0) last = i;
  }
  // G_k = int M^k(y, E) gamma(dy) = d_k + m sum_{i=1}^k d_i G_{k-i}
  for (int k = 0; k <= n_max; ++k) {
    double g = d[k];
    for (int i = 1; i <= std::min(k, last); ++i) g += m * d[i] * G[k - i];
    G[k] = g;
  }
  double acc = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    // M^n(x, E) = K^n(x, E) + m sum_{i=1}^n K^i(x, E) G_{n-i}
    double mass = kx[n];
    for (int i = 1; i <= n && kx[i] > 0.0; ++i) mass += m * kx[i] * G[n - i];
    out[n] = {n, m * acc, mass};
    acc += G[n];
  }
  return out;
}

double gen_functional(const GenerationLaw& law, const TypePoint& x, const TestFunction& h) {
  const double kn_mass = law.survival(x);
  const double kn_h = law.kn_apply(x, h);
  const double den = 1.0 + law.m_n() - law.m_n() * law.gamma_n_integrate(h);
  if (!(den >= 1.0 - 1e-12)) {
    throw std::logic_error("gen_functional: denominator below 1 (h outside [0, 1]?)");
  }
  return 1.0 - kn_mass + kn_h / den;
}

GenerationSnapshot conditional_sample(const GenerationLaw& law, const TypePoint& x, Rng& rng) {
  if (!(law.survival(x) > 0.0)) {
    throw std::domain_error("conditional_sample: K_n(x, E) = 0, survival impossible");
  }
  GenerationSnapshot snap;
  snap.generation = law.n();
  const auto count = rng.shifted_geometric(law.m_n());
  snap.points.reserve(count);
  snap.points.push_back(law.sample_marked(x, rng));
  for (std::uint64_t k = 1; k < count; ++k) snap.points.push_back(law.sample_gamma_n(rng));
  return snap;
}

}  // namespace lfbp
