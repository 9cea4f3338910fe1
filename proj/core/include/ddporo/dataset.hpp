// Material databases: collections of solid (strain, stress) or fluid
// (gradient, flux) states sampled from constitutive laws, their embedded
// coordinates under a phase-space metric, and porosity-labeled families of
// such databases. Includes CSV persistence with a JSON sidecar manifest.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ddporo/kdtree.hpp"
#include "ddporo/phase_space.hpp"

namespace ddporo {

enum class DatasetKind { Solid, Fluid };

struct PhaseDataset {
  DatasetKind kind = DatasetKind::Solid;
  int dim = 2;
  std::optional<double> label;  // porosity for family members

  std::vector<SolidPoint> solid_points;
  std::vector<FluidPoint> fluid_points;
  std::vector<EmbeddedPoint> embedded;  // row i corresponds to point i

  int size() const {
    return static_cast<int>(kind == DatasetKind::Solid ? solid_points.size()
                                                       : fluid_points.size());
  }
  bool empty() const { return size() == 0; }
};

// Porosity-labeled collection; members sorted by strictly increasing label.
struct DatasetFamily {
  std::vector<PhaseDataset> members;
};

// One sampling axis of a phase-space grid. Use fixed() for components held
// at a constant value (an inactive axis).
struct GridAxis {
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  static GridAxis fixed(double v) { return {v, v, 1}; }
};

// Cartesian product of equidistant samples, one axis per phase-space
// component, the last axis varying fastest. Throws on count < 1 or
// min > max.
std::vector<Eigen::VectorXd> generate_grid(const std::vector<GridAxis> &axes);

using FluidLaw = std::function<Eigen::VectorXd(const Eigen::VectorXd &)>;
using SolidLaw = std::function<SymTensor2(const SymTensor2 &)>;

// Evaluates a fluid law on gradient coordinates; each row of `coords` holds
// the `dim` gradient components. The embedding is left empty (see
// embed_dataset).
PhaseDataset sample_fluid_law(const std::vector<Eigen::VectorXd> &coords, const FluidLaw &law);

// Evaluates a solid law on strain coordinates; each row holds the
// kelvin_size(dim) strain components in storage order.
PhaseDataset sample_solid_law(int dim, const std::vector<Eigen::VectorXd> &coords,
                              const SolidLaw &law);

// Fills d.embedded from d's points under metric m.
void embed_dataset(PhaseDataset &d, const MetricSpec &m);

// Builds a search tree over d.embedded. The dataset must be embedded and
// non-empty.
KdTree build_dataset_tree(const PhaseDataset &d, int leaf_capacity = 10);

// Validates strictly increasing labels and uniform kind/dim, sorting members
// ascending by label first.
DatasetFamily make_family(std::vector<PhaseDataset> members);

// Index of the member with label nearest to phi; ties toward the lower
// label. Throws on an empty family or phi outside (0, 1).
int select_dataset_by_porosity(const DatasetFamily &f, double phi);

// CSV persistence (one point per row, 17 significant digits) plus a sidecar
// JSON manifest at manifest_path(path) recording kind, dim, and label.
void save_dataset(const PhaseDataset &d, const std::string &path);

// Loads a dataset written by save_dataset and recomputes its embedding
// under m. Malformed files produce errors naming the offending line.
PhaseDataset load_dataset(const std::string &path, const MetricSpec &m);

// "<stem>.json" next to the CSV file.
std::string manifest_path(const std::string &csv_path);

}  // namespace ddporo
