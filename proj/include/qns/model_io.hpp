#pragma once

#include <string>

#include "qns/model.hpp"

namespace qns::io {

// Loaders throw std::runtime_error with a violation summary on malformed
// input; dumps produce the same structured-text formats the loaders accept.

Topology load_topology(const std::string& path);
Topology topology_from_json(const std::string& text);
std::string topology_to_json(const Topology& t);

std::vector<Demand> load_demands(const std::string& path);
std::vector<Demand> demands_from_json(const std::string& text);
std::string demands_to_json(const std::vector<Demand>& demands);

// protocol dump: ops with explicit s_a/e_a in slots and full Q sets
RepeaterProtocol protocol_from_json(const std::string& text);
std::string protocol_to_json(const RepeaterProtocol& p);

// schedule dump: embeds the (demand, protocol) pairs so a schedule can be
// re-validated without other inputs
struct ScheduleDump {
    NetworkSchedule schedule;
    std::vector<DemandProtocol> pairs;
};

ScheduleDump schedule_from_json(const std::string& text);
std::string schedule_to_json(const ScheduleDump& dump);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace qns::io
