#pragma once

// Seeded random operators and states for property checks.

#include <random>

#include "diqkd/chsh.hpp"
#include "diqkd/hermitian.hpp"

namespace diqkd {

using Rng = std::mt19937_64;

/// Entries with independent standard normal real and imaginary parts, made Hermitian.
Herm4 random_hermitian(Rng& rng);

/// Ginibre state G G^H / Tr(G G^H); full rank with probability one.
DensityMatrix4 random_density(Rng& rng);

/// Random state supported on the range of Q(theta) (x) I.
DensityMatrix4 random_supported_density(Rng& rng, double theta);

/// Both angles uniform on [0, pi/2].
AnglePair random_angles(Rng& rng);

}  // namespace diqkd
