#pragma once

#include "odeident/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace odeident {

/// A registered system: spec + regression blocks + parameter map, with the
/// block execution order and flat sigma offsets precomputed.
struct Model {
    std::string name;
    SystemSpec spec;
    std::vector<RegressionBlock> blocks;
    ParameterMap pmap;
    std::vector<int> topo_order;     // block indices in dependency order
    std::vector<int> sigma_offsets;  // flat sigma offset of each block

    int block_count() const { return static_cast<int>(blocks.size()); }
};

class ModelRegistry {
  public:
    /// Validates block arity against pmap.sigma_dim and the dependency graph,
    /// computes the execution order, and stores the model under `name`.
    const Model& register_model(const std::string& name, SystemSpec spec,
                                std::vector<RegressionBlock> blocks, ParameterMap pmap);

    bool contains(const std::string& name) const { return models_.count(name) > 0; }
    const Model& get(const std::string& name) const;
    std::vector<std::string> names() const;

  private:
    std::map<std::string, Model> models_;
};

}  // namespace odeident
