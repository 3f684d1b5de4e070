#include "lfmgan/latent.hpp"

#include <cmath>
#include <stdexcept>

namespace lfmgan {

namespace {

// One candidate pair. n1 and n2 must point at z_dim doubles. Candidates
// whose pivot coordinate n1[z-1] is exactly zero are redrawn without
// counting, since the solve is undefined there. Returns whether the
// candidate met the variant's acceptance bound.
bool draw_candidate(double* n1, double* n2, int64_t z_dim, PairVariant variant, Rng& rng) {
  for (;;) {
    for (int64_t k = 0; k < z_dim; ++k) n1[k] = rng.normal();
    for (int64_t k = 0; k < z_dim; ++k) n2[k] = rng.normal();
    if (n1[z_dim - 1] == 0.0) continue;
    double dr = 0.0;
    for (int64_t k = 0; k < z_dim - 1; ++k) dr += n1[k] * n2[k];
    const double solved = -dr / n1[z_dim - 1];
    n2[z_dim - 1] = solved;
    const bool accept = variant == PairVariant::Abs ? std::abs(solved) <= 1.0 : solved <= 1.0;
    return accept;
  }
}

}  // namespace

LatentBatch sample_gaussian(int64_t batch, int64_t z_dim, Rng& rng) {
  if (batch < 1 || z_dim < 1) throw std::invalid_argument("sample_gaussian: batch and z_dim must be positive");
  LatentBatch out;
  out.batch = batch;
  out.z_dim = z_dim;
  out.kind = LatentBatch::Kind::PlainRandom;
  out.values.resize(static_cast<size_t>(batch * z_dim));
  for (double& v : out.values) v = rng.normal();
  return out;
}

LatentBatch orthogonal_pairs(int64_t batch, int64_t z_dim, PairVariant variant, Rng& rng) {
  if (batch < 2 || batch % 2 != 0) throw std::invalid_argument("orthogonal_pairs: batch must be even and >= 2");
  if (z_dim < 2) throw std::invalid_argument("orthogonal_pairs: z_dim must be >= 2");
  LatentBatch out;
  out.batch = batch;
  out.z_dim = z_dim;
  out.kind = LatentBatch::Kind::Paired;
  out.variant = variant;
  out.values.resize(static_cast<size_t>(batch * z_dim));
  const int64_t half = batch / 2;
  std::vector<double> n1(static_cast<size_t>(z_dim)), n2(static_cast<size_t>(z_dim));
  for (int64_t j = 0; j < half; ++j) {
    while (!draw_candidate(n1.data(), n2.data(), z_dim, variant, rng)) {
    }
    double* first = out.values.data() + j * z_dim;
    double* second = out.values.data() + (j + half) * z_dim;
    for (int64_t k = 0; k < z_dim; ++k) {
      first[k] = n1[static_cast<size_t>(k)];
      second[k] = n2[static_cast<size_t>(k)];
    }
  }
  return out;
}

RejectionEstimate rejection_rate(PairVariant variant, int64_t z_dim, int64_t trials, Rng& rng) {
  if (z_dim < 2) throw std::invalid_argument("rejection_rate: z_dim must be >= 2");
  if (trials < 1) throw std::invalid_argument("rejection_rate: trials must be positive");
  std::vector<double> n1(static_cast<size_t>(z_dim)), n2(static_cast<size_t>(z_dim));
  int64_t rejected = 0;
  for (int64_t t = 0; t < trials; ++t) {
    if (!draw_candidate(n1.data(), n2.data(), z_dim, variant, rng)) ++rejected;
  }
  RejectionEstimate est;
  est.trials = trials;
  est.rate = static_cast<double>(rejected) / static_cast<double>(trials);
  est.ci95_half = 1.96 * std::sqrt(est.rate * (1.0 - est.rate) / static_cast<double>(trials));
  return est;
}

}  // namespace lfmgan
