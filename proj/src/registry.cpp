#include "odeident/registry.hpp"

#include <algorithm>
#include <queue>

namespace odeident {

namespace {

// Kahn's algorithm over the depends_on edges. Throws on cycles.
std::vector<int> topological_order(const std::vector<RegressionBlock>& blocks) {
    const int n = static_cast<int>(blocks.size());
    std::vector<std::vector<int>> dependents(n);
    std::vector<int> indegree(n, 0);
    for (int j = 0; j < n; ++j) {
        for (const auto& [dep_block, dep_comp] : blocks[j].depends_on) {
            if (dep_block < 0 || dep_block >= n)
                throw RegistryError("block " + std::to_string(j + 1) +
                                    " depends on unknown block index " +
                                    std::to_string(dep_block + 1));
            if (dep_block == j)
                throw RegistryError("block " + std::to_string(j + 1) + " depends on itself");
            if (dep_comp < 0 || dep_comp >= blocks[dep_block].basis_size)
                throw RegistryError("block " + std::to_string(j + 1) +
                                    " references sigma component " + std::to_string(dep_comp + 1) +
                                    " outside block " + std::to_string(dep_block + 1));
            dependents[dep_block].push_back(j);
            ++indegree[j];
        }
    }
    // min-heap keeps the order deterministic: ready blocks run lowest index first
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int j = 0; j < n; ++j)
        if (indegree[j] == 0) ready.push(j);
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        int j = ready.top();
        ready.pop();
        order.push_back(j);
        for (int k : dependents[j])
            if (--indegree[k] == 0) ready.push(k);
    }
    if (static_cast<int>(order.size()) != n)
        throw RegistryError("cyclic block dependencies");
    return order;
}

}  // namespace

const Model& ModelRegistry::register_model(const std::string& name, SystemSpec spec,
                                           std::vector<RegressionBlock> blocks,
                                           ParameterMap pmap) {
    if (models_.count(name)) throw RegistryError("model '" + name + "' already registered");
    if (blocks.empty()) throw RegistryError("model '" + name + "' has no regression blocks");

    int q = 0;
    std::vector<int> offsets;
    offsets.reserve(blocks.size());
    for (const auto& b : blocks) {
        if (b.basis_size <= 0 || static_cast<int>(b.basis.size()) != b.basis_size)
            throw RegistryError("block '" + b.label + "' basis size mismatch");
        if (!b.target && !b.target_simple)
            throw RegistryError("block '" + b.label + "' has no target evaluator");
        if (b.pointwise_ratio && b.basis_size != 1)
            throw RegistryError("block '" + b.label + "' marked pointwise but has basis size " +
                                std::to_string(b.basis_size));
        offsets.push_back(q);
        q += b.basis_size;
    }
    if (q != pmap.sigma_dim)
        throw RegistryError("model '" + name + "': block basis sizes sum to " + std::to_string(q) +
                            " but parameter map expects sigma dimension " +
                            std::to_string(pmap.sigma_dim));
    for (const auto& [i, j] : pmap.redundancy_pairs)
        if (i < 0 || j < 0 || i >= q || j >= q || i == j)
            throw RegistryError("model '" + name + "': invalid redundancy pair");

    Model model;
    model.name = name;
    model.spec = std::move(spec);
    model.blocks = std::move(blocks);
    model.pmap = std::move(pmap);
    model.topo_order = topological_order(model.blocks);
    model.sigma_offsets = std::move(offsets);
    auto [it, inserted] = models_.emplace(name, std::move(model));
    return it->second;
}

const Model& ModelRegistry::get(const std::string& name) const {
    auto it = models_.find(name);
    if (it == models_.end()) throw RegistryError("model '" + name + "' is not registered");
    return it->second;
}

std::vector<std::string> ModelRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(models_.size());
    for (const auto& [k, v] : models_) out.push_back(k);
    return out;
}

}  // namespace odeident
