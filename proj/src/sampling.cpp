#include "diqkd/sampling.hpp"

#include "diqkd/pinching.hpp"

namespace diqkd {
namespace {

Mat4 ginibre(Rng& rng) {
  std::normal_distribution<double> n;
  Mat4 g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g(i, j) = {n(rng), n(rng)};
  return g;
}

DensityMatrix4 normalized(const Mat4& m) {
  const Mat4 h = (m + m.adjoint()) * 0.5;
  return DensityMatrix4(Herm4::from_trusted(h / h.trace().real()));
}

}  // namespace

Herm4 random_hermitian(Rng& rng) { return Herm4::from_trusted(ginibre(rng)); }

DensityMatrix4 random_density(Rng& rng) {
  const Mat4 g = ginibre(rng);
  return normalized(g * g.adjoint());
}

DensityMatrix4 random_supported_density(Rng& rng, double theta) {
  const Mat4 p = key_projector(theta);
  const Mat4 g = p * ginibre(rng);
  return normalized(g * g.adjoint());
}

AnglePair random_angles(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, kHalfPi);
  const double a = u(rng);
  return AnglePair(a, u(rng));
}

}  // namespace diqkd
