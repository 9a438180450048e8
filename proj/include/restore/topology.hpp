// Stage 1: target-island identification and minimum-diameter spanning tree
// topology selection (all-pairs shortest paths, exact absolute 1-center
// search over edges, shortest-path tree rooted at the center).
#pragma once

#include <map>
#include <string>
#include <vector>

#include "restore/netmodel.hpp"

namespace restore::topo {

struct IslandGraph {
  std::string id;  // smallest member bus id
  std::vector<std::string> vertices;
  struct Edge {
    std::string line_id;
    int u = 0, v = 0;   // indices into vertices
    double length = 0;  // electrical distance
    bool switchable = false;
  };
  std::vector<Edge> edges;
  std::vector<std::string> sources;  // source ids inside the island

  bool restorable() const { return !sources.empty(); }
  int vertex_index(const std::string& bus) const;
};

struct SpanningTree {
  std::string island_id;
  std::vector<std::string> edge_ids;  // sorted
  // close/open actions implied for switchable branches of the island
  std::vector<std::pair<std::string, bool>> switch_actions;  // (line id, close?)
  double diameter = 0.0;
  std::string root;  // tree vertex nearest the absolute center
  std::map<std::string, std::string> parent;  // vertex -> parent ("" at root)
};

// Mean magnitude of the per-phase self impedances.
double electrical_distance(const net::Line& line);

std::vector<IslandGraph> find_target_islands(const net::PostEventNetwork& pe);

SpanningTree minimum_diameter_spanning_tree(const IslandGraph& g);
SpanningTree minimum_diameter_spanning_tree_serial(const IslandGraph& g);

// Max over vertex pairs of shortest-path distance.
double tree_diameter(const IslandGraph& g);
double tree_diameter(const SpanningTree& t, const IslandGraph& g);

bool validate_radial(const SpanningTree& t, const IslandGraph& g);

}  // namespace restore::topo
