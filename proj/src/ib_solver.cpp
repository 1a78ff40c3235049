#include "ibl/ib_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace ibl {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Eigen::MatrixXd random_encoder(std::size_t nx, std::size_t nz, double concentration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(concentration, 1.0);
  Eigen::MatrixXd enc(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nz));
  for (Eigen::Index i = 0; i < enc.rows(); ++i) {
    for (Eigen::Index k = 0; k < enc.cols(); ++k) enc(i, k) = std::max(gamma(rng), 1e-300);
    enc.row(i) /= enc.row(i).sum();
  }
  return enc;
}

double objective_of(const InfoPlanePoint& pt, double beta) { return pt.i_xz - beta * pt.i_yz; }

}  // namespace

InfoPlanePoint info_plane(const Eigen::Ref<const Eigen::MatrixXd>& encoder, const DiscreteJoint& joint) {
  if (static_cast<std::size_t>(encoder.rows()) != joint.size_x()) {
    throw ValidationError("info_plane: encoder rows do not match |X|");
  }
  const Eigen::MatrixXd xz = joint.px().asDiagonal() * encoder;
  const Eigen::MatrixXd yz = joint.probs().transpose() * encoder;
  return {mutual_information(xz), mutual_information(yz)};
}

InfoPlanePoint info_plane(const Encoder& encoder, const DiscreteJoint& joint) {
  return info_plane(encoder.probs, joint);
}

std::size_t default_z_card(const DiscreteJoint& joint) {
  return std::max<std::size_t>(2, std::min(joint.size_x(), 2 * joint.size_y()));
}

namespace {

// Quantities of the joint that every update reuses.
class UpdateKernel {
 public:
  explicit UpdateKernel(const DiscreteJoint& joint) : joint_(joint) {
    cond_ = joint.px().cwiseInverse().asDiagonal() * joint.probs();
    self_.resize(cond_.rows());
    for (Eigen::Index x = 0; x < cond_.rows(); ++x) {
      double s = 0.0;
      for (Eigen::Index y = 0; y < cond_.cols(); ++y) {
        const double p = cond_(x, y);
        if (p > 0.0) s += p * std::log(p);
      }
      self_[x] = s;
    }
  }

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& encoder, double beta) const {
    const Eigen::Index nx = encoder.rows(), nz = encoder.cols(), ny = cond_.cols();
    const Eigen::VectorXd pz = encoder.transpose() * joint_.px();
    const Eigen::MatrixXd pyz = joint_.probs().transpose() * encoder;
    Eigen::MatrixXd log_y_given_z(ny, nz);
    bool any_zero = false;
    for (Eigen::Index k = 0; k < nz; ++k) {
      for (Eigen::Index y = 0; y < ny; ++y) {
        if (pz[k] > 0.0 && pyz(y, k) > 0.0) {
          log_y_given_z(y, k) = std::log(pyz(y, k) / pz[k]);
        } else {
          log_y_given_z(y, k) = 0.0;
          any_zero = true;
        }
      }
    }
    // cross(x,k) = sum_y p(y|x) log p(y|z_k)
    const Eigen::MatrixXd cross = cond_ * log_y_given_z;

    Eigen::MatrixXd next(nx, nz);
    Eigen::VectorXd logits(nz);
    for (Eigen::Index x = 0; x < nx; ++x) {
      double top = kNegInf;
      for (Eigen::Index k = 0; k < nz; ++k) {
        bool dead = !(pz[k] > 0.0);
        if (!dead && any_zero) {
          for (Eigen::Index y = 0; y < ny; ++y) {
            if (cond_(x, y) > 0.0 && !(pyz(y, k) > 0.0)) {
              dead = true;
              break;
            }
          }
        }
        logits[k] = dead ? kNegInf : std::log(pz[k]) - beta * (self_[x] - cross(x, k));
        top = std::max(top, logits[k]);
      }
      if (top == kNegInf) {
        next.row(x) = encoder.row(x);
        continue;
      }
      double norm = 0.0;
      for (Eigen::Index k = 0; k < nz; ++k) {
        next(x, k) = logits[k] == kNegInf ? 0.0 : std::exp(logits[k] - top);
        norm += next(x, k);
      }
      next.row(x) /= norm;
    }
    return next;
  }

 private:
  const DiscreteJoint& joint_;
  Eigen::MatrixXd cond_;
  Eigen::VectorXd self_;
};

}  // namespace

Eigen::MatrixXd ib_update(const DiscreteJoint& joint, const Eigen::MatrixXd& encoder, double beta) {
  if (static_cast<std::size_t>(encoder.rows()) != joint.size_x()) {
    throw ValidationError("ib_update: encoder rows do not match |X|");
  }
  return UpdateKernel(joint)(encoder, beta);
}

Encoder iterate_from(const DiscreteJoint& joint, Eigen::MatrixXd encoder, double beta, int max_iters,
                     double tol) {
  Encoder out;
  out.beta = beta;
  if (static_cast<std::size_t>(encoder.rows()) != joint.size_x()) {
    throw ValidationError("iterate_from: encoder rows do not match |X|");
  }
  const UpdateKernel update(joint);
  double previous = objective_of(info_plane(encoder, joint), beta);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd next = update(encoder, beta);
    const double change = (next - encoder).cwiseAbs().maxCoeff();
    encoder = std::move(next);
    out.iterations = it + 1;
    const double current = objective_of(info_plane(encoder, joint), beta);
    if (current > previous + 1e-12) ++out.monotonicity_violations;
    previous = current;
    if (change < tol) {
      out.converged = true;
      break;
    }
  }
  out.objective = previous;
  out.probs = std::move(encoder);
  return out;
}

Encoder solve(const DiscreteJoint& joint, double beta, const SolveOptions& options) {
  if (!(beta > 0.0)) throw ValidationError("solve: beta must be positive");
  const std::size_t nz = options.z_card == 0 ? default_z_card(joint) : options.z_card;
  if (nz < 2) throw ValidationError("solve: z_card must be at least 2");
  if (options.restarts < 1) throw ValidationError("solve: at least one restart required");

  Encoder best;
  bool have = false;
  for (int r = 0; r < options.restarts; ++r) {
    Eigen::MatrixXd init = random_encoder(joint.size_x(), nz, options.init_concentration,
                                          derive_seed(options.seed, 0x1b, static_cast<std::uint64_t>(r)));
    Encoder candidate = iterate_from(joint, std::move(init), beta, options.max_iters, options.tol);
    if (!have || candidate.objective < best.objective) {
      best = std::move(candidate);
      have = true;
    }
  }
  return best;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) {
    throw ValidationError("geometric_grid: need n >= 2 and 0 < lo < hi");
  }
  std::vector<double> grid(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

void detect_onset(SweepResult& result) {
  const auto& pts = result.points;
  const auto& proto = result.protocol;
  if (pts.size() < std::max<std::size_t>(7, proto.baseline_points + 2)) {
    throw ValidationError("sweep: grid too short for onset detection (need at least 7 points)");
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < proto.baseline_points; ++i) mean += pts[i].i_xz;
  mean /= static_cast<double>(proto.baseline_points);
  double var = 0.0;
  for (std::size_t i = 0; i < proto.baseline_points; ++i) var += (pts[i].i_xz - mean) * (pts[i].i_xz - mean);
  var /= static_cast<double>(proto.baseline_points);
  result.baseline_mean = mean;
  result.baseline_std = std::sqrt(var);

  const double threshold = mean + proto.sigma_multiplier * result.baseline_std + proto.floor;
  result.detected_beta0.reset();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].i_xz > threshold) {
      result.detected_beta0 = 0.5 * (pts[i].beta + pts[i - 1].beta);
      break;
    }
  }
}

SweepResult sweep(const DiscreteJoint& joint, const std::vector<double>& beta_grid,
                  const SweepOptions& options) {
  for (std::size_t i = 1; i < beta_grid.size(); ++i) {
    if (!(beta_grid[i] > beta_grid[i - 1])) throw ValidationError("sweep: beta grid must be ascending");
  }
  SweepResult result;
  result.protocol = options.protocol;
  if (beta_grid.size() < std::max<std::size_t>(7, options.protocol.baseline_points + 2)) {
    throw ValidationError("sweep: grid too short for onset detection (need at least 7 points)");
  }
  result.points.resize(beta_grid.size());

  auto record = [&](std::size_t i, const Encoder& enc) {
    const InfoPlanePoint pt = info_plane(enc, joint);
    result.points[i] = {beta_grid[i], pt.i_xz, pt.i_yz, objective_of(pt, beta_grid[i]), enc.converged};
  };

  if (options.warm_start) {
    Eigen::MatrixXd carry;
    for (std::size_t k = beta_grid.size(); k-- > 0;) {
      Encoder enc;
      if (carry.size() == 0) {
        SolveOptions so = options.solve;
        so.seed = derive_seed(options.solve.seed, 0x5e, k);
        enc = solve(joint, beta_grid[k], so);
      } else {
        enc = iterate_from(joint, carry, beta_grid[k], options.solve.max_iters, options.solve.tol);
      }
      carry = enc.probs;
      record(k, enc);
    }
  } else {
    const auto n = static_cast<long>(beta_grid.size());
#pragma omp parallel for schedule(dynamic) if (options.execution == Execution::parallel)
    for (long k = 0; k < n; ++k) {
      SolveOptions so = options.solve;
      so.seed = derive_seed(options.solve.seed, 0x5e, static_cast<std::uint64_t>(k));
      record(static_cast<std::size_t>(k), solve(joint, beta_grid[static_cast<std::size_t>(k)], so));
    }
  }
  detect_onset(result);
  return result;
}

}  // namespace ibl
