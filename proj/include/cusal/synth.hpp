#ifndef CUSAL_SYNTH_HPP
#define CUSAL_SYNTH_HPP

#include "cusal/core.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cusal {

// All generators draw from std::mt19937_64. Independent streams for one seed
// are derived with std::seed_seq{seed_lo, seed_hi, stream}, so every output is
// reproducible bit-for-bit on a given standard library.

enum class MixingModel { LMM, PPNMM };

const char* to_string(MixingModel model);
MixingModel parse_mixing_model(const std::string& text);

struct SyntheticSpec {
  MixingModel model = MixingModel::LMM;
  Index R = 3;
  Index L = 244;
  Index T = 2500;
  /// +infinity disables noise.
  double snr_db = 35.0;
  Index n_corrupt = 0;
  std::optional<Index> sparsity_K;
  std::uint64_t seed = 0;
  /// PPNMM nonlinearity coefficients b_t ~ U(b_lo, b_hi).
  std::pair<double, double> b_range{-3.0, 3.0};

  void validate() const;
};

struct GroundTruth {
  AbundanceMatrix X_true;
  std::vector<Index> corrupted_bands;  ///< strictly increasing
  std::optional<Vector> b;             ///< PPNMM only
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticCube {
  ObservationMatrix Y;
  GroundTruth truth;
};

/// Columns on the simplex: Dirichlet(1) over all R entries, or over K
/// uniformly chosen entries (zeros elsewhere) when K is given.
AbundanceMatrix gen_abundances(Index R, Index T, std::optional<Index> K,
                               std::uint64_t seed);

/// Mixes abundances through M, adds Gaussian noise at the requested SNR
/// (measured on the clean signal) and overwrites n_corrupt distinct bands
/// with U[0, 1] values.
SyntheticCube gen_cube(const EndmemberMatrix& M, const SyntheticSpec& spec);

/// R smooth spectra in [0, 1] built from random Gaussian bumps, with every
/// pairwise spectral angle at least min_angle_deg. Throws GenerationFailed
/// after 10^4 rejected candidates.
EndmemberMatrix gen_endmembers(Index R, Index L, std::uint64_t seed,
                               double min_angle_deg);

/// Smallest pairwise angle between columns, in degrees.
double min_pairwise_angle_deg(const Matrix& M);

}  // namespace cusal

#endif  // CUSAL_SYNTH_HPP
