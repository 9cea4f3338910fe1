#include "ddporo/dofmap.hpp"

#include <stdexcept>

namespace ddporo {

void DofMap::finalize() {
  const int n = n_dofs();
  free_dofs_.clear();
  constrained_dofs_.clear();
  free_index_.assign(static_cast<std::size_t>(n), -1);
  constrained_index_.assign(static_cast<std::size_t>(n), -1);
  for (int d = 0; d < n; ++d) {
    if (constraints_.count(d)) {
      constrained_index_[static_cast<std::size_t>(d)] = static_cast<int>(constrained_dofs_.size());
      constrained_dofs_.push_back(d);
    } else {
      free_index_[static_cast<std::size_t>(d)] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
  finalized_ = true;
}

Eigen::VectorXd DofMap::constrained_values(double t) const {
  if (!finalized_) throw std::logic_error("DofMap: finalize() not called");
  Eigen::VectorXd v(n_constrained());
  for (int i = 0; i < n_constrained(); ++i)
    v[i] = constraints_.at(constrained_dofs_[static_cast<std::size_t>(i)]).value(t);
  return v;
}

const Constraint &DofMap::constraint_at(int constrained_idx) const {
  return constraints_.at(constrained_dofs_[static_cast<std::size_t>(constrained_idx)]);
}

Eigen::MatrixXd gather_field(const Mesh &mesh, const DofMap &dofs, const Eigen::VectorXd &x,
                             int elem, Field f, int n_comps) {
  Eigen::MatrixXd out(mesh.nodes_per_elem(), n_comps);
  for (int a = 0; a < mesh.nodes_per_elem(); ++a)
    for (int c = 0; c < n_comps; ++c) out(a, c) = x[dofs.dof(mesh.elements(elem, a), f, c)];
  return out;
}

}  // namespace ddporo
