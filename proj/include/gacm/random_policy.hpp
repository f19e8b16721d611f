#pragma once

// Small random policies for property tests and `gacm check --random`.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gacm/config.hpp"
#include "gacm/hierarchy.hpp"

namespace gacm {

struct RandomPolicyLimits {
  std::size_t max_principals = 10;
  std::size_t max_categories = 8;
  std::size_t max_actions = 5;
  std::size_t max_resources = 5;
  double max_density = 0.4;
};

/// Draws one policy. Sizes are uniform in [1, max]; each relation and
/// hierarchy edge is kept with its own density drawn from [0, max_density].
/// Hierarchy edges only run from a later category to an earlier one, so the
/// order is acyclic by construction.
inline PolicyConfig random_policy(std::mt19937_64& rng, const RandomPolicyLimits& lim = {}) {
  auto count = [&](std::size_t max) {
    return std::uniform_int_distribution<std::size_t>(1, max)(rng);
  };
  auto density = [&] { return std::uniform_real_distribution<double>(0.0, lim.max_density)(rng); };

  PolicyConfig cfg;
  auto id = [](char prefix, std::size_t i) { return std::string(1, prefix) + std::to_string(i); };

  const std::size_t np = count(lim.max_principals), nc = count(lim.max_categories),
                    na = count(lim.max_actions), nr = count(lim.max_resources);
  for (std::size_t i = 0; i < np; ++i) cfg.registry.principals[id('p', i)] = {id('p', i), "", ""};
  for (std::size_t i = 0; i < nc; ++i) cfg.registry.categories[id('c', i)] = {id('c', i), ""};
  for (std::size_t i = 0; i < na; ++i) cfg.registry.actions[id('a', i)] = {id('a', i), ""};
  for (std::size_t i = 0; i < nr; ++i) cfg.registry.resources[id('r', i)] = {id('r', i), ""};

  auto keep = [&](double d) { return std::bernoulli_distribution(d)(rng); };

  std::vector<HierarchyEdge> edges;
  const double d_edge = density();
  for (std::size_t child = 1; child < nc; ++child)
    for (std::size_t parent = 0; parent < child; ++parent)
      if (keep(d_edge)) edges.push_back({id('c', child), id('c', parent)});
  std::set<EntityId> nodes;
  for (const auto& [cid, _] : cfg.registry.categories) nodes.insert(cid);
  cfg.hierarchy = CategoryHierarchy(std::move(nodes), std::move(edges));

  const double d_pca = density(), d_arca = density(), d_barca = density();
  for (std::size_t p = 0; p < np; ++p)
    for (std::size_t c = 0; c < nc; ++c)
      if (keep(d_pca)) cfg.relations.pcas.insert({id('p', p), id('c', c)});
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t a = 0; a < na; ++a)
      for (std::size_t r = 0; r < nr; ++r) {
        Permission perm{id('a', a), id('r', r)};
        if (keep(d_arca)) cfg.relations.arcas.insert({id('c', c), perm});
        if (keep(d_barca)) cfg.relations.barcas.insert({id('c', c), perm});
      }
  return cfg;
}

}  // namespace gacm
