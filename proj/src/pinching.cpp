#include "diqkd/pinching.hpp"

namespace diqkd {

Mat4 key_projector(double theta) {
  return detail::kron_matrix<double, 2, 2>(projector_q_matrix(theta), Mat2::Identity());
}

DensityMatrix4 pinch_key(const DensityMatrix4& rho, double theta) {
  return pinch(rho, Herm4::from_trusted(key_projector(theta)));
}

double entropy_production(const DensityMatrix4& rho, double theta) {
  return relative_entropy(rho, pinch_key(rho, theta));
}

double entropy_production_difference(const DensityMatrix4& rho, double theta) {
  return von_neumann_entropy(pinch_key(rho, theta)) - von_neumann_entropy(rho);
}

}  // namespace diqkd
