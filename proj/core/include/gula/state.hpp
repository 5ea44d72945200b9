// state.hpp — per-agent and swarm parameter state.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gula {

struct AgentState {
    Eigen::VectorXd w;
    int64_t tau = 0;  // activation count, mirrors the scheduler's clock
};

struct SwarmState {
    std::vector<AgentState> agents;
    int64_t cycle_index = 0;

    int size() const { return static_cast<int>(agents.size()); }
    Eigen::Index dim() const { return agents.empty() ? 0 : agents.front().w.size(); }
};

}  // namespace gula
