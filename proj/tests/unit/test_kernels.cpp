#include <doctest.h>

#include <cstdlib>

#include "usual/kernels.hpp"
#include "usual/sampler.hpp"
#include "usual/synthetic.hpp"

using namespace usual;

TEST_CASE("serial and parallel kernels agree exactly") {
  ::setenv("USUAL_NUM_THREADS", "3", 1);
  kernels::configure_threads_from_env();
  const SurveyDataset d = standardize(preprocess(generate_synthetic(SyntheticTruth::reference(700), 8)));
  const ModelData md = ModelData::build(d, build_design(d, synthetic_formula()));
  SamplerStreams streams = SamplerStreams::make(2, md.n);
  ChainState s = init_state(md, Priors{}, ChainConfig{}, streams);

  const Eigen::MatrixXd E = kernels::residuals_serial(s, md);
  CHECK(E == kernels::residuals_parallel(s, md));
  // reductions sum in blocks, so they match the serial loop up to rounding
  const Eigen::MatrixXd S = kernels::weighted_scatter_parallel(E, md.recall_weight);
  CHECK((kernels::weighted_scatter_serial(E, md.recall_weight) - S).cwiseAbs().maxCoeff() <=
        1e-12 * S.cwiseAbs().maxCoeff());
  const Eigen::RowVectorXd g = E.row(3);
  const Eigen::VectorXd P = kernels::weighted_design_product_parallel(md.X, g, md.recall_weight);
  CHECK((kernels::weighted_design_product_serial(md.X, g, md.recall_weight) - P).cwiseAbs().maxCoeff() <=
        1e-12 * P.cwiseAbs().maxCoeff());

  ChainState a = s, b = s;
  std::vector<RngStream> sa = streams.latent, sb = streams.latent;
  const UPosteriorCache cache(s, md);
  kernels::latent_sweep_serial(a, md, sa, cache);
  kernels::latent_sweep_parallel(b, md, sb, cache);
  CHECK(a.W == b.W);
  CHECK(a.U == b.U);

  // parallel results do not depend on the thread count
  ::setenv("USUAL_NUM_THREADS", "1", 1);
  kernels::configure_threads_from_env();
  CHECK(kernels::weighted_scatter_parallel(E, md.recall_weight) == S);
  CHECK(kernels::weighted_design_product_parallel(md.X, g, md.recall_weight) == P);
  ChainState c = s;
  std::vector<RngStream> sc = streams.latent;
  kernels::latent_sweep_parallel(c, md, sc, cache);
  CHECK(c.W == b.W);
  CHECK(c.U == b.U);

  // residual kernel against the per-recall definition
  for (std::size_t k = 0; k < md.N; k += 97) {
    CHECK((E.col(static_cast<Eigen::Index>(k)) - s.residual(md, k)).cwiseAbs().maxCoeff() == 0.0);
  }
  ::unsetenv("USUAL_NUM_THREADS");
}
