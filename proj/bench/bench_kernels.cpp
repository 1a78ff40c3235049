// Times the OpenMP kernels against their serial reference paths.
#include <chrono>
#include <cstdio>
#include <random>

#include "ibl/experiment.hpp"
#include "ibl/parallel.hpp"

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ibl::ConditionalMatrix random_conditional(std::size_t n, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(0.5, 1.0);
  Eigen::MatrixXd rows(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += rows(i, j) = g(rng) + 1e-12;
    rows.row(i) /= s;
  }
  return ibl::ConditionalMatrix(rows);
}

}  // namespace

int main() {
  std::printf("workers: %d\n", ibl::max_workers());

  const auto cond = random_conditional(4000, 10, 7);
  for (auto exec : {ibl::Execution::serial, ibl::Execution::parallel}) {
    ibl::SubsetSearchOptions o;
    o.execution = exec;
    o.family = ibl::SubsetFamily::range;
    double beta = 0.0;
    const double t = seconds([&] { beta = ibl::subset_search(cond, o).beta0; });
    std::printf("subset_search range N=4000 C=10 %-8s %8.3f s  beta0=%.6f\n",
                exec == ibl::Execution::serial ? "serial" : "parallel", t, beta);
  }

  ibl::DiscretizeOptions d;
  d.bins_per_axis = 16;
  const auto joint = ibl::discretize_exact(ibl::preset_spec("noise-0.2"), d);
  const auto grid = ibl::default_beta_grid(1.0 / (0.6 * 0.6));
  for (auto exec : {ibl::Execution::serial, ibl::Execution::parallel}) {
    ibl::SweepOptions s;
    s.execution = exec;
    std::optional<double> onset;
    const double t = seconds([&] { onset = ibl::sweep(joint, grid, s).detected_beta0; });
    std::printf("sweep 256x2 25 betas %-8s %8.3f s  onset=%.4f\n",
                exec == ibl::Execution::serial ? "serial" : "parallel", t, onset.value_or(-1.0));
  }
}
