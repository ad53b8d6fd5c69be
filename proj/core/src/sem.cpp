#include "kar/sem.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "kar/split.hpp"

namespace kar {

namespace {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// E[F(|W|) - 0.5] for W standard normal: F(|W|) is uniform on [0.5, 1].
constexpr double kFoldedAnchorMean = 0.25;

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma,
                                const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw InvalidInput(std::string(what) + " covariance is not positive definite");
  }
  return llt.matrixL();
}

}  // namespace

double response_curve(double x) {
  return std::log(std::abs(16.0 * x - 8.0) + 1.0) * sgn(x - 0.5);
}

GeneratorDesign GeneratorDesign::main_synthetic() {
  GeneratorDesign d;
  d.tag = DesignTag::main_synthetic;
  d.noise_cov << 1.0, 0.3, 0.2, 0.3, 1.0, 0.0, 0.2, 0.0, 1.0;
  d.c_c = 0.75;
  d.c_z = -0.25;
  return d;
}

GeneratorDesign GeneratorDesign::kiv_setting() {
  GeneratorDesign d;
  d.tag = DesignTag::kiv_setting;
  d.noise_cov << 1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0;
  d.c_c = 1.0;
  d.c_z = 0.0;
  return d;
}

GeneratorDesign GeneratorDesign::variant() {
  GeneratorDesign d = main_synthetic();
  d.tag = DesignTag::variant;
  return d;
}

double GeneratorDesign::anchor_mean() const {
  switch (tag) {
    case DesignTag::main_synthetic: return 0.0;   // F(W) - 0.5
    case DesignTag::kiv_setting: return 0.5;      // F(W)
    case DesignTag::variant: return kFoldedAnchorMean;
  }
  throw InvalidInput("unknown design tag");
}

GeneratorDesign design_by_name(const std::string& name) {
  if (name == "main") return GeneratorDesign::main_synthetic();
  if (name == "kiv") return GeneratorDesign::kiv_setting();
  if (name == "variant") return GeneratorDesign::variant();
  throw InvalidInput("unknown design name: " + name);
}

std::string design_name(const GeneratorDesign& design) {
  switch (design.tag) {
    case DesignTag::main_synthetic: return "main";
    case DesignTag::kiv_setting: return "kiv";
    case DesignTag::variant: return "variant";
  }
  throw InvalidInput("unknown design tag");
}

Dataset generate(const GeneratorDesign& design, Eigen::Index n,
                 std::uint64_t seed) {
  if (n < 1) throw InvalidInput("generate needs n >= 1");
  const Eigen::MatrixXd l = cholesky_factor(design.noise_cov, "noise");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  Dataset data;
  data.x.resize(n, 1);
  data.y.resize(n);
  data.z.resize(n, 1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Vector3d g(gauss(rng), gauss(rng), gauss(rng));
    Eigen::Vector3d cvw = l * g;
    const double c = cvw(0), v = cvw(1), w = cvw(2);
    double xv, zv;
    switch (design.tag) {
      case DesignTag::main_synthetic:
        xv = normal_cdf((w + v) * inv_sqrt2);
        zv = normal_cdf(w) - 0.5;
        break;
      case DesignTag::kiv_setting:
        xv = normal_cdf((w + v) * inv_sqrt2);
        zv = normal_cdf(w);
        break;
      case DesignTag::variant:
        xv = normal_cdf((std::abs(w) + v) * inv_sqrt2);
        zv = normal_cdf(std::abs(w)) - 0.5;
        break;
      default:
        throw InvalidInput("unknown design tag");
    }
    data.x(i, 0) = xv;
    data.z(i, 0) = zv;
    data.y(i) = design.c_c * c + design.c_z * zv + response_curve(xv);
  }
  return data;
}

double true_do(const GeneratorDesign& design, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw InvalidInput("interventional query point must lie in [0, 1]");
  }
  // E[C] = 0 in every design; the anchor keeps its observational mean.
  return response_curve(x) + design.c_z * design.anchor_mean();
}

void SemSpec::validate() const {
  const Eigen::Index dz = dim_z(), dc = dim_c(), dx = dim_x(), dy = dim_y();
  if (dz < 1 || dc < 1 || dx < 1 || dy < 1) {
    throw InvalidInput("sem blocks must be nonempty");
  }
  auto expect = [](const Eigen::MatrixXd& m, Eigen::Index r, Eigen::Index c,
                   const char* what) {
    if (m.rows() != r || m.cols() != c) {
      throw InvalidInput(std::string("sem block ") + what + " has wrong shape");
    }
  };
  expect(sigma_z, dz, dz, "sigma_z");
  expect(sigma_c, dc, dc, "sigma_c");
  expect(sigma_x, dx, dx, "sigma_x");
  expect(sigma_y, dy, dy, "sigma_y");
  expect(b_cz, dc, dz, "b_cz");
  expect(b_xz, dx, dz, "b_xz");
  expect(b_xc, dx, dc, "b_xc");
  expect(b_yz, dy, dz, "b_yz");
  expect(b_yc, dy, dc, "b_yc");
  expect(b_yx, dy, dx, "b_yx");
}

Dataset generate_sem(const SemSpec& spec, Eigen::Index n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw InvalidInput("generate_sem needs n >= 1");
  if (spec.dim_y() != 1) {
    throw InvalidInput("generate_sem needs a scalar outcome");
  }
  const Eigen::MatrixXd lz = cholesky_factor(spec.sigma_z, "anchor");
  const Eigen::MatrixXd lc = cholesky_factor(spec.sigma_c, "confounder");
  const Eigen::MatrixXd lx = cholesky_factor(spec.sigma_x, "treatment");
  const Eigen::MatrixXd ly = cholesky_factor(spec.sigma_y, "outcome");

  // Reduced-form maps from the anchor.
  const Eigen::MatrixXd mx = spec.b_xz + spec.b_xc * spec.b_cz;
  const Eigen::MatrixXd my = spec.b_yz + spec.b_yc * spec.b_cz + spec.b_yx * mx;
  const Eigen::MatrixXd yc = spec.b_yc + spec.b_yx * spec.b_xc;  // via confounder noise

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto draw = [&](const Eigen::MatrixXd& l) {
    Eigen::VectorXd g(l.rows());
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
    return Eigen::VectorXd(l * g);
  };

  Dataset data;
  data.x.resize(n, spec.dim_x());
  data.y.resize(n);
  data.z.resize(n, spec.dim_z());
  data.latent.resize(n, spec.dim_c());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd z = draw(lz);
    Eigen::VectorXd ec = draw(lc);
    Eigen::VectorXd ex = draw(lx);
    Eigen::VectorXd ey = draw(ly);
    Eigen::VectorXd c = spec.b_cz * z + ec;
    Eigen::VectorXd x = mx * z + spec.b_xc * ec + ex;
    Eigen::VectorXd y = my * z + yc * ec + spec.b_yx * ex + ey;
    data.z.row(i) = z.transpose();
    data.latent.row(i) = c.transpose();
    data.x.row(i) = x.transpose();
    data.y(i) = y(0);
  }
  return data;
}

Eigen::MatrixXd sem_treatment_anchor_map(const SemSpec& spec) {
  return spec.b_xz + spec.b_xc * spec.b_cz;
}

Eigen::MatrixXd sem_confounded_cross(const SemSpec& spec) {
  return spec.b_yc * spec.sigma_c * spec.b_xc.transpose();
}

Eigen::MatrixXd sem_anchor_aligned_cross(const SemSpec& spec) {
  const Eigen::MatrixXd mx = sem_treatment_anchor_map(spec);
  return (spec.b_yz + spec.b_yc * spec.b_cz) * spec.sigma_z * mx.transpose();
}

namespace {

Eigen::MatrixXd h_gamma_denominator(const SemSpec& spec, double gamma) {
  const Eigen::MatrixXd mx = sem_treatment_anchor_map(spec);
  return spec.b_xc * spec.sigma_c * spec.b_xc.transpose() + spec.sigma_x +
         gamma * mx * spec.sigma_z * mx.transpose();
}

Eigen::MatrixXd right_divide(const Eigen::MatrixXd& num,
                             const Eigen::MatrixXd& den) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(den);
  if (ldlt.info() != Eigen::Success) {
    throw IllConditioned("population denominator is singular");
  }
  Eigen::MatrixXd out = ldlt.solve(num.transpose()).transpose();
  if (!out.allFinite()) {
    throw IllConditioned("population denominator is singular");
  }
  // LDLT accepts some indefinite inputs; verify the solve actually held.
  const double resid = (out * den - num).cwiseAbs().maxCoeff();
  const double mag = num.cwiseAbs().maxCoeff() + 1.0;
  if (!(resid <= 1e-8 * mag)) {
    throw IllConditioned("population denominator is singular");
  }
  return out;
}

void check_gamma_finite(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw InvalidInput("gamma must be finite and nonnegative");
  }
}

}  // namespace

Eigen::MatrixXd population_h_gamma(const SemSpec& spec, double gamma) {
  spec.validate();
  check_gamma_finite(gamma);
  const Eigen::MatrixXd mx = sem_treatment_anchor_map(spec);
  const Eigen::MatrixXd ty = spec.b_yz + spec.b_yc * spec.b_cz;
  const Eigen::MatrixXd num =
      (spec.b_yc + spec.b_yx * spec.b_xc) * spec.sigma_c * spec.b_xc.transpose() +
      spec.b_yx * spec.sigma_x +
      gamma * (ty + spec.b_yx * mx) * spec.sigma_z * mx.transpose();
  return right_divide(num, h_gamma_denominator(spec, gamma));
}

Eigen::MatrixXd bias_operator(const SemSpec& spec, double gamma) {
  spec.validate();
  check_gamma_finite(gamma);
  const Eigen::MatrixXd num =
      sem_confounded_cross(spec) + gamma * sem_anchor_aligned_cross(spec);
  return right_divide(num, h_gamma_denominator(spec, gamma));
}

SemSpec load_sem_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sem spec file: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("sem spec parse error: ") + e.what());
  }
  auto block = [&](const char* name) {
    if (!doc.contains(name)) {
      throw InvalidInput(std::string("sem spec missing block: ") + name);
    }
    const auto& rows = doc.at(name);
    if (!rows.is_array() || rows.empty()) {
      throw InvalidInput(std::string("sem spec block must be a matrix: ") + name);
    }
    Eigen::MatrixXd m(rows.size(), rows.at(0).size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& row = rows.at(i);
      if (!row.is_array() || row.size() != static_cast<std::size_t>(m.cols())) {
        throw InvalidInput(std::string("sem spec block is ragged: ") + name);
      }
      for (std::size_t j = 0; j < row.size(); ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            row.at(j).get<double>();
      }
    }
    return m;
  };
  SemSpec spec;
  spec.b_cz = block("B_CZ");
  spec.b_xz = block("B_XZ");
  spec.b_xc = block("B_XC");
  spec.b_yz = block("B_YZ");
  spec.b_yc = block("B_YC");
  spec.b_yx = block("B_YX");
  spec.sigma_z = block("Sigma_Z");
  spec.sigma_c = block("Sigma_C");
  spec.sigma_x = block("Sigma_X");
  spec.sigma_y = block("Sigma_Y");
  spec.validate();
  return spec;
}

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r,
                              Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index d) {
  Eigen::MatrixXd a = random_matrix(rng, d, d);
  return a * a.transpose() + 0.4 * Eigen::MatrixXd::Identity(d, d);
}

SemSpec draw_spec(std::mt19937_64& rng, Eigen::Index dz, Eigen::Index dc,
                  Eigen::Index dx, Eigen::Index dy) {
  SemSpec spec;
  spec.b_cz = random_matrix(rng, dc, dz);
  spec.b_xz = random_matrix(rng, dx, dz);
  spec.b_xc = random_matrix(rng, dx, dc);
  spec.b_yz = random_matrix(rng, dy, dz);
  spec.b_yc = random_matrix(rng, dy, dc);
  spec.b_yx = random_matrix(rng, dy, dx);
  spec.sigma_z = random_spd(rng, dz);
  spec.sigma_c = random_spd(rng, dc);
  spec.sigma_x = random_spd(rng, dx);
  spec.sigma_y = random_spd(rng, dy);
  return spec;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  return es.eigenvalues().minCoeff();
}

}  // namespace

SemSpec random_sem_spec(std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 7));
  std::uniform_int_distribution<int> dz_pick(1, 3), small_pick(1, 2);
  const Eigen::Index dx = small_pick(rng);
  const Eigen::Index dz = std::max<Eigen::Index>(dz_pick(rng), dx);
  return draw_spec(rng, dz, small_pick(rng), dx, 1);
}

IdentInstance make_ident_instance(IdentCase c, std::uint64_t seed) {
  std::mt19937_64 rng(derive_seed(seed, 11));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int attempt = 0; attempt < 256; ++attempt) {
    std::uniform_int_distribution<int> small_pick(1, 2);
    const Eigen::Index dx = small_pick(rng);
    const Eigen::Index dz = dx + small_pick(rng) - 1;  // dz >= dx
    SemSpec spec = draw_spec(rng, dz, small_pick(rng), dx, 1);

    switch (c) {
      case IdentCase::no_confounding:
        spec.b_yc.setZero();
        return {spec, 0.0};
      case IdentCase::valid_anchor: {
        spec.b_yz = -spec.b_yc * spec.b_cz;
        // The instrumental limit needs the anchor-driven treatment
        // covariance to dominate; keep it well conditioned.
        const Eigen::MatrixXd mx = sem_treatment_anchor_map(spec);
        const Eigen::MatrixXd quad = mx * spec.sigma_z * mx.transpose();
        const double lo = min_eigenvalue(quad);
        const double cross = sem_confounded_cross(spec).norm();
        if (lo > 0.1 && cross / lo < 50.0) return {spec, 1e8};
        break;
      }
      case IdentCase::doubly_clean:
        spec.b_yc.setZero();
        spec.b_yz.setZero();
        return {spec, 2.0};
      case IdentCase::balanced_bias: {
        const double a = 0.25 + 0.5 * std::abs(u(rng));  // in [0.25, 0.75]
        const Eigen::MatrixXd mx = sem_treatment_anchor_map(spec);
        const Eigen::MatrixXd lhs = spec.sigma_z * mx.transpose();  // dz x dx
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
            lhs.transpose());
        if (cod.rank() < lhs.cols()) break;
        const Eigen::MatrixXd target = -a * sem_confounded_cross(spec);
        // Solve t * lhs = target for the anchor-aligned outcome loading.
        const Eigen::MatrixXd t =
            cod.solve(target.transpose()).transpose();
        spec.b_yz = t - spec.b_yc * spec.b_cz;
        const double resid =
            (sem_anchor_aligned_cross(spec) + a * sem_confounded_cross(spec))
                .cwiseAbs()
                .maxCoeff();
        if (resid < 1e-12) return {spec, 1.0 / a};
        break;
      }
    }
  }
  throw InvalidInput("could not draw a conforming identifiability instance");
}

}  // namespace kar
