// Degree-of-freedom bookkeeping for the four-field discretization
// (displacement, pressure, momentum multiplier, mass multiplier), all with
// equal-order nodal interpolation, plus the constrained-DOF table with
// time-ramped prescribed values.

#pragma once

#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "ddporo/mesh.hpp"

namespace ddporo {

enum class Field { U = 0, P = 1, BetaMom = 2, BetaMass = 3 };

// Prescribed value offset + rate * min(t, t_hold).
struct Constraint {
  double offset = 0.0;
  double rate = 0.0;
  double t_hold = std::numeric_limits<double>::infinity();

  double value(double t) const { return offset + rate * (t < t_hold ? t : t_hold); }
};

class DofMap {
 public:
  DofMap(int dim, int n_nodes) : dim_(dim), n_nodes_(n_nodes) {}

  int dim() const { return dim_; }
  int n_nodes() const { return n_nodes_; }
  int dofs_per_node() const { return 2 * dim_ + 2; }
  int n_dofs() const { return n_nodes_ * dofs_per_node(); }

  // Node-interleaved layout: [u_x .. u_dim, p, bmom_x .. bmom_dim, bmass].
  int dof(int node, Field f, int comp = 0) const {
    const int base = node * dofs_per_node();
    switch (f) {
      case Field::U: return base + comp;
      case Field::P: return base + dim_;
      case Field::BetaMom: return base + dim_ + 1 + comp;
      case Field::BetaMass: return base + 2 * dim_ + 1;
    }
    return -1;
  }

  void constrain(int dof_id, double offset, double rate = 0.0,
                 double t_hold = std::numeric_limits<double>::infinity()) {
    constraints_[dof_id] = Constraint{offset, rate, t_hold};
    finalized_ = false;
  }

  // Convenience: constrain one field component on every node of a set.
  void constrain_set(const std::vector<int> &nodes, Field f, int comp, double offset,
                     double rate = 0.0,
                     double t_hold = std::numeric_limits<double>::infinity()) {
    for (int n : nodes) constrain(dof(n, f, comp), offset, rate, t_hold);
  }

  // Builds the free/constrained partition. Must be called after the last
  // constrain() and before any of the accessors below.
  void finalize();

  int n_free() const { return static_cast<int>(free_dofs_.size()); }
  int n_constrained() const { return static_cast<int>(constrained_dofs_.size()); }
  const std::vector<int> &free_dofs() const { return free_dofs_; }
  const std::vector<int> &constrained_dofs() const { return constrained_dofs_; }

  // Position of a DOF in the free (constrained) ordering, or -1.
  int free_index(int dof_id) const { return free_index_[static_cast<std::size_t>(dof_id)]; }
  int constrained_index(int dof_id) const {
    return constrained_index_[static_cast<std::size_t>(dof_id)];
  }
  bool is_constrained(int dof_id) const { return constrained_index(dof_id) >= 0; }

  // Prescribed values of all constrained DOFs at time t, in constrained
  // ordering.
  Eigen::VectorXd constrained_values(double t) const;

  const Constraint &constraint_at(int constrained_idx) const;

 private:
  int dim_;
  int n_nodes_;
  std::map<int, Constraint> constraints_;
  bool finalized_ = false;
  std::vector<int> free_dofs_, constrained_dofs_;
  std::vector<int> free_index_, constrained_index_;
};

// Scatters a full-length DOF vector into the per-element nodal matrix of
// one field (nodes_per_elem x n_comps).
Eigen::MatrixXd gather_field(const Mesh &mesh, const DofMap &dofs, const Eigen::VectorXd &x,
                             int elem, Field f, int n_comps);

}  // namespace ddporo
