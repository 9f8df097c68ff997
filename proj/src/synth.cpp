#include "cusal/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace cusal {

namespace {

enum Stream : std::uint32_t {
  kAbundanceStream = 1,
  kNonlinearStream = 2,
  kNoiseStream = 3,
  kCorruptionStream = 4,
  kEndmemberStream = 5,
};

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

const char* to_string(MixingModel model) {
  return model == MixingModel::LMM ? "lmm" : "ppnmm";
}

MixingModel parse_mixing_model(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "lmm") return MixingModel::LMM;
  if (lower == "ppnmm") return MixingModel::PPNMM;
  throw Error(ErrorCode::InvalidInput, "unknown mixing model '" + text + "'");
}

void SyntheticSpec::validate() const {
  if (R < 1 || L < 1 || T < 1)
    throw Error(ErrorCode::InvalidInput, "R, L and T must be positive");
  if (n_corrupt < 0 || n_corrupt > L)
    throw Error(ErrorCode::InvalidInput, "n_corrupt must lie in [0, L]");
  if (sparsity_K && (*sparsity_K < 1 || *sparsity_K > R))
    throw Error(ErrorCode::InvalidInput, "sparsity K must lie in [1, R]");
  if (std::isnan(snr_db))
    throw Error(ErrorCode::InvalidInput, "SNR must be a number");
  if (!(b_range.first <= b_range.second))
    throw Error(ErrorCode::InvalidInput, "b_range must be ordered");
}

AbundanceMatrix gen_abundances(Index R, Index T, std::optional<Index> K,
                               std::uint64_t seed) {
  if (R < 1 || T < 1) throw Error(ErrorCode::InvalidInput, "R and T must be positive");
  if (K && (*K < 1 || *K > R))
    throw Error(ErrorCode::InvalidInput, "sparsity K must lie in [1, R]");
  auto rng = make_rng(seed, kAbundanceStream);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  const Index support = K.value_or(R);
  std::vector<Index> idx(static_cast<std::size_t>(R));
  Matrix X = Matrix::Zero(R, T);
  for (Index t = 0; t < T; ++t) {
    std::iota(idx.begin(), idx.end(), Index{0});
    if (support < R) {
      // Partial Fisher-Yates: the first `support` slots are a uniform subset.
      for (Index i = 0; i < support; ++i) {
        std::uniform_int_distribution<Index> pick(i, R - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
    }
    double sum = 0.0;
    for (Index i = 0; i < support; ++i) {
      double g = gamma(rng);
      while (g <= 0.0) g = gamma(rng);
      X(idx[i], t) = g;
      sum += g;
    }
    X.col(t) /= sum;
  }
  return AbundanceMatrix(std::move(X), AbundanceTag::FullyConstrained);
}

SyntheticCube gen_cube(const EndmemberMatrix& M, const SyntheticSpec& spec) {
  spec.validate();
  if (M.endmembers() != spec.R || M.bands() != spec.L)
    throw Error(ErrorCode::DimensionMismatch,
                "endmember matrix is " + std::to_string(M.bands()) + "x" +
                    std::to_string(M.endmembers()) + ", spec wants " +
                    std::to_string(spec.L) + "x" + std::to_string(spec.R));

  AbundanceMatrix X = gen_abundances(spec.R, spec.T, spec.sparsity_K, spec.seed);
  Matrix S = M.data() * X.data();

  std::optional<Vector> b;
  if (spec.model == MixingModel::PPNMM) {
    auto rng = make_rng(spec.seed, kNonlinearStream);
    std::uniform_real_distribution<double> ub(spec.b_range.first, spec.b_range.second);
    b = Vector(spec.T);
    for (Index t = 0; t < spec.T; ++t) {
      (*b)[t] = ub(rng);
      S.col(t) += (*b)[t] * S.col(t).cwiseProduct(S.col(t));
    }
  }

  Matrix Y = S;
  double noise_sigma = 0.0;
  if (std::isfinite(spec.snr_db)) {
    const double per_entry_power =
        S.squaredNorm() / static_cast<double>(spec.L * spec.T);
    noise_sigma = std::sqrt(per_entry_power / std::pow(10.0, spec.snr_db / 10.0));
    auto rng = make_rng(spec.seed, kNoiseStream);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index t = 0; t < spec.T; ++t)
      for (Index l = 0; l < spec.L; ++l) Y(l, t) += noise_sigma * normal(rng);
  } else if (spec.snr_db < 0) {
    throw Error(ErrorCode::InvalidInput, "SNR of -inf is meaningless");
  }

  std::vector<Index> bands;
  if (spec.n_corrupt > 0) {
    auto rng = make_rng(spec.seed, kCorruptionStream);
    std::vector<Index> all(static_cast<std::size_t>(spec.L));
    std::iota(all.begin(), all.end(), Index{0});
    for (Index i = 0; i < spec.n_corrupt; ++i) {
      std::uniform_int_distribution<Index> pick(i, spec.L - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    bands.assign(all.begin(), all.begin() + spec.n_corrupt);
    std::sort(bands.begin(), bands.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (Index l : bands)
      for (Index t = 0; t < spec.T; ++t) Y(l, t) = unit(rng);
  }

  GroundTruth truth{std::move(X), std::move(bands), std::move(b), noise_sigma,
                    spec.seed};
  return SyntheticCube{ObservationMatrix(std::move(Y)), std::move(truth)};
}

double min_pairwise_angle_deg(const Matrix& M) {
  double best = 180.0;
  for (Index i = 0; i < M.cols(); ++i)
    for (Index j = i + 1; j < M.cols(); ++j) {
      const double c = M.col(i).dot(M.col(j)) / (M.col(i).norm() * M.col(j).norm());
      const double a = std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
      best = std::min(best, a);
    }
  return best;
}

EndmemberMatrix gen_endmembers(Index R, Index L, std::uint64_t seed,
                               double min_angle_deg) {
  if (R < 1 || L < 1 || R > L)
    throw Error(ErrorCode::InvalidInput, "need 1 <= R <= L");
  if (!(min_angle_deg >= 0.0) || min_angle_deg > 90.0)
    throw Error(ErrorCode::InvalidInput, "min angle must lie in [0, 90] degrees");
  constexpr int kMaxRejections = 10000;
  auto rng = make_rng(seed, kEndmemberStream);
  std::uniform_int_distribution<int> n_bumps(2, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double Ld = static_cast<double>(L);
  const double cos_limit = std::cos(min_angle_deg * std::numbers::pi / 180.0);

  Matrix M(L, R);
  Vector cand(L);
  Index accepted = 0;
  int rejected = 0;
  while (accepted < R) {
    const double slope = unit(rng) - 0.5;
    const double base = 0.2 * unit(rng);
    for (Index l = 0; l < L; ++l) cand[l] = base + 0.3 * slope * (l / Ld);
    const int k = n_bumps(rng);
    for (int i = 0; i < k; ++i) {
      const double centre = Ld * unit(rng);
      const double width = Ld * (0.02 + 0.15 * unit(rng));
      const double height = 0.2 + unit(rng);
      for (Index l = 0; l < L; ++l) {
        const double d = (static_cast<double>(l) - centre) / width;
        cand[l] += height * std::exp(-0.5 * d * d);
      }
    }
    const double lo = cand.minCoeff();
    const double hi = cand.maxCoeff();
    bool ok = hi - lo > 0.0;
    if (ok) {
      cand = ((cand.array() - lo) / (hi - lo) * 0.9 + 0.05).matrix();
      const double cn = cand.norm();
      for (Index j = 0; j < accepted && ok; ++j)
        ok = cand.dot(M.col(j)) / (cn * M.col(j).norm()) <= cos_limit;
    }
    if (ok) {
      M.col(accepted++) = cand;
    } else if (++rejected > kMaxRejections) {
      throw Error(ErrorCode::GenerationFailed,
                  "could not place " + std::to_string(R) +
                      " endmembers with pairwise angle >= " +
                      std::to_string(min_angle_deg) + " degrees");
    }
  }
  return EndmemberMatrix(std::move(M));
}

}  // namespace cusal
