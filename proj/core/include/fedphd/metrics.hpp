#pragma once

#include <Eigen/Dense>

#include "fedphd/diffusion.hpp"
#include "fedphd/rng.hpp"

namespace fedphd {

/// Generative-quality proxy: average 1-D Wasserstein-1 distance over random
/// projection directions. Zero iff the two sample sets coincide (up to
/// numerical tolerance) along every projection.
struct QualityReport {
  double sliced_wasserstein = 0.0;
  int n_projections = 0;
  int n_samples = 0;
};

/// Average over n_proj random unit directions of the 1-D Wasserstein-1
/// distance between the projected empirical distributions. If the sets have
/// unequal sizes the larger one is subsampled uniformly without replacement.
/// Per projection the direction is drawn as normalized Gaussian; draw order:
/// subsample indices first (if needed), then directions.
double sliced_wasserstein(const SampleBatch& a, const SampleBatch& b,
                          int n_proj, Rng& rng);

QualityReport quality_report(const SampleBatch& generated,
                             const SampleBatch& held_out, int n_proj,
                             Rng& rng);

}  // namespace fedphd
