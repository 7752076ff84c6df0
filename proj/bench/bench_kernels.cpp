// Times the serial and OpenMP versions of the sampler's hot kernels on the
// reference synthetic survey.
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "usual/kernels.hpp"
#include "usual/sampler.hpp"
#include "usual/synthetic.hpp"

using namespace usual;
using Clock = std::chrono::steady_clock;

template <class F>
double time_ms(int reps, F&& f) {
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

void report(const std::string& name, double serial, double parallel) {
  std::cout << std::left << std::setw(16) << name << std::right << std::fixed << std::setprecision(3)
            << std::setw(12) << serial << std::setw(12) << parallel << std::setw(9)
            << serial / parallel << "\n";
}

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 4000;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 20;

  const SyntheticTruth truth = SyntheticTruth::reference(n);
  const SurveyDataset d = standardize(preprocess(generate_synthetic(truth, 11)));
  const ModelData md = ModelData::build(d, build_design(d, synthetic_formula()));
  SamplerStreams streams = SamplerStreams::make(5, md.n);
  ChainState s = init_state(md, Priors{}, ChainConfig{}, streams);
  const UPosteriorCache cache(s, md);

  std::cout << "individuals " << md.n << ", recalls " << md.N << ", threads "
            << kernels::thread_count() << ", reps " << reps << "\n";
  std::cout << std::left << std::setw(16) << "kernel" << std::right << std::setw(12) << "serial_ms"
            << std::setw(12) << "omp_ms" << std::setw(9) << "speedup" << "\n";

  const Eigen::MatrixXd E = kernels::residuals_serial(s, md);
  const Eigen::RowVectorXd g = E.row(0);

  report("residuals", time_ms(reps, [&] { kernels::residuals_serial(s, md); }),
         time_ms(reps, [&] { kernels::residuals_parallel(s, md); }));
  report("scatter", time_ms(reps, [&] { kernels::weighted_scatter_serial(E, md.recall_weight); }),
         time_ms(reps, [&] { kernels::weighted_scatter_parallel(E, md.recall_weight); }));
  report("design_product",
         time_ms(reps, [&] { kernels::weighted_design_product_serial(md.X, g, md.recall_weight); }),
         time_ms(reps, [&] { kernels::weighted_design_product_parallel(md.X, g, md.recall_weight); }));
  report("latent_sweep",
         time_ms(reps, [&] { kernels::latent_sweep_serial(s, md, streams.latent, cache); }),
         time_ms(reps, [&] { kernels::latent_sweep_parallel(s, md, streams.latent, cache); }));
  return 0;
}
