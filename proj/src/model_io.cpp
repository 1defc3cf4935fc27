#include "qns/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qns::io {

using nlohmann::json;

namespace {

json qubit_to_json(const QubitRef& q) {
    return json{{"node", q.node_id},
                {"kind", q.kind == QubitKind::communication ? "comm" : "storage"},
                {"index", q.index}};
}

QubitRef qubit_from_json(const json& j) {
    QubitRef q;
    q.node_id = j.at("node").get<std::string>();
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "comm") q.kind = QubitKind::communication;
    else if (kind == "storage") q.kind = QubitKind::storage;
    else throw std::runtime_error("unknown qubit kind: " + kind);
    q.index = j.at("index").get<int>();
    return q;
}

void throw_on_violations(const std::vector<Violation>& v, const std::string& what) {
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid " << what << ":";
    for (const auto& item : v) os << " [" << item.code << "] " << item.detail << ";";
    throw std::runtime_error(os.str());
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

Topology topology_from_json(const std::string& text) {
    const json j = json::parse(text);
    Topology t;
    for (const auto& jn : j.at("nodes")) {
        NodeSpec n;
        n.node_id = jn.at("id").get<std::string>();
        n.num_comm = jn.value("num_comm", 1);
        n.num_storage = jn.value("num_storage", 3);
        n.swap_latency_ms = jn.value("swap_latency_ms", 1.0);
        n.distill_latency_ms = jn.value("distill_latency_ms", 0.526);
        n.move_latency_ms = jn.value("move_latency_ms", 0.961);
        n.is_end_node = jn.value("end_node", false);
        t.nodes.push_back(n);
    }
    for (const auto& jl : j.at("links")) {
        LinkSpec l;
        l.node_a = jl.at("a").get<std::string>();
        l.node_b = jl.at("b").get<std::string>();
        l.length_km = jl.at("length_km").get<double>();
        for (const auto& jc : jl.at("capabilities"))
            l.capabilities.push_back({jc.at(0).get<double>(), jc.at(1).get<double>()});
        t.links.push_back(l);
    }
    throw_on_violations(validate_topology(t), "topology");
    return t;
}

Topology load_topology(const std::string& path) {
    return topology_from_json(read_file(path));
}

std::string topology_to_json(const Topology& t) {
    json j;
    j["nodes"] = json::array();
    for (const auto& n : t.nodes) {
        j["nodes"].push_back(json{{"id", n.node_id},
                                  {"num_comm", n.num_comm},
                                  {"num_storage", n.num_storage},
                                  {"swap_latency_ms", n.swap_latency_ms},
                                  {"distill_latency_ms", n.distill_latency_ms},
                                  {"move_latency_ms", n.move_latency_ms},
                                  {"end_node", n.is_end_node}});
    }
    j["links"] = json::array();
    for (const auto& l : t.links) {
        json caps = json::array();
        for (const auto& c : l.capabilities) caps.push_back(json::array({c.fidelity, c.rate_hz}));
        j["links"].push_back(json{{"a", l.node_a},
                                  {"b", l.node_b},
                                  {"length_km", l.length_km},
                                  {"capabilities", caps}});
    }
    return j.dump(2);
}

std::vector<Demand> demands_from_json(const std::string& text) {
    const json j = json::parse(text);
    std::vector<Demand> out;
    for (const auto& jd : j) {
        Demand d;
        d.id = jd.at("id").get<std::string>();
        d.src = jd.at("src").get<std::string>();
        d.dst = jd.at("dst").get<std::string>();
        d.f_min = jd.at("f_min").get<double>();
        d.r_min = jd.at("r_min_ebit_s").get<double>();
        if (jd.contains("j_max_s2")) d.j_max_s2 = jd.at("j_max_s2").get<double>();
        out.push_back(d);
    }
    return out;
}

std::vector<Demand> load_demands(const std::string& path) {
    return demands_from_json(read_file(path));
}

std::string demands_to_json(const std::vector<Demand>& demands) {
    json j = json::array();
    for (const auto& d : demands) {
        json jd{{"id", d.id}, {"src", d.src}, {"dst", d.dst},
                {"f_min", d.f_min}, {"r_min_ebit_s", d.r_min}};
        if (d.j_max_s2) jd["j_max_s2"] = *d.j_max_s2;
        j.push_back(jd);
    }
    return j.dump(2);
}

namespace {

json protocol_to_json_obj(const RepeaterProtocol& p) {
    json j;
    j["ops"] = json::array();
    for (const auto& op : p.ops) {
        json jo{{"id", op.op_id},
                {"kind", to_string(op.kind)},
                {"nodes", op.nodes},
                {"start_slot", op.start},
                {"end_slot", op.end}};
        if (op.link_fidelity) jo["fidelity"] = *op.link_fidelity;
        jo["consumes"] = json::array();
        for (const auto& q : op.consumes) jo["consumes"].push_back(qubit_to_json(q));
        jo["produces"] = json::array();
        for (const auto& q : op.produces) jo["produces"].push_back(qubit_to_json(q));
        j["ops"].push_back(jo);
    }
    j["edges"] = json::array();
    for (const auto& [from, to] : p.edges) j["edges"].push_back(json::array({from, to}));
    j["worst_case_fidelity"] = p.worst_case_fidelity;
    j["success_probability"] = p.success_probability;
    return j;
}

RepeaterProtocol protocol_from_json_obj(const json& j) {
    RepeaterProtocol p;
    for (const auto& jo : j.at("ops")) {
        ProtocolOp op;
        op.op_id = jo.at("id").get<std::string>();
        const std::string kind = jo.at("kind").get<std::string>();
        if (kind == "link") op.kind = OpKind::link;
        else if (kind == "swap") op.kind = OpKind::swap;
        else if (kind == "distill") op.kind = OpKind::distill;
        else throw std::runtime_error("unknown op kind: " + kind);
        op.nodes = jo.at("nodes").get<std::vector<std::string>>();
        if (jo.contains("fidelity")) op.link_fidelity = jo.at("fidelity").get<double>();
        op.start = jo.at("start_slot").get<Slots>();
        op.end = jo.at("end_slot").get<Slots>();
        for (const auto& jq : jo.at("consumes")) op.consumes.push_back(qubit_from_json(jq));
        for (const auto& jq : jo.at("produces")) op.produces.push_back(qubit_from_json(jq));
        p.ops.push_back(op);
    }
    for (const auto& je : j.at("edges"))
        p.edges.emplace_back(je.at(0).get<std::string>(), je.at(1).get<std::string>());
    p.worst_case_fidelity = j.value("worst_case_fidelity", 1.0);
    p.success_probability = j.value("success_probability", 1.0);
    return p;
}

}  // namespace

RepeaterProtocol protocol_from_json(const std::string& text) {
    return protocol_from_json_obj(json::parse(text));
}

std::string protocol_to_json(const RepeaterProtocol& p) {
    return protocol_to_json_obj(p).dump(2);
}

ScheduleDump schedule_from_json(const std::string& text) {
    const json j = json::parse(text);
    ScheduleDump dump;
    dump.schedule.t_slot_ms = j.at("t_slot_ms").get<double>();
    dump.schedule.length = j.at("length").get<Slots>();
    for (const auto& jp : j.at("pairs")) {
        DemandProtocol dp;
        const auto& jd = jp.at("demand");
        dp.demand.id = jd.at("id").get<std::string>();
        dp.demand.src = jd.at("src").get<std::string>();
        dp.demand.dst = jd.at("dst").get<std::string>();
        dp.demand.f_min = jd.at("f_min").get<double>();
        dp.demand.r_min = jd.at("r_min_ebit_s").get<double>();
        if (jd.contains("j_max_s2")) dp.demand.j_max_s2 = jd.at("j_max_s2").get<double>();
        dp.protocol = protocol_from_json_obj(jp.at("protocol"));
        dump.pairs.push_back(dp);
    }
    for (const auto& je : j.at("entries")) {
        InstanceKey key{je.at("demand").get<std::string>(), je.at("instance").get<int>()};
        dump.schedule.entries[key] = je.at("start_slot").get<Slots>();
    }
    if (j.contains("unscheduled")) {
        for (const auto& ju : j.at("unscheduled"))
            dump.schedule.unscheduled.push_back(
                {ju.at("demand").get<std::string>(), ju.at("instance").get<int>()});
    }
    derive_op_slots(dump.schedule, dump.pairs);
    return dump;
}

std::string schedule_to_json(const ScheduleDump& dump) {
    json j;
    j["t_slot_ms"] = dump.schedule.t_slot_ms;
    j["length"] = dump.schedule.length;
    j["pairs"] = json::array();
    for (const auto& dp : dump.pairs) {
        json jd{{"id", dp.demand.id}, {"src", dp.demand.src}, {"dst", dp.demand.dst},
                {"f_min", dp.demand.f_min}, {"r_min_ebit_s", dp.demand.r_min}};
        if (dp.demand.j_max_s2) jd["j_max_s2"] = *dp.demand.j_max_s2;
        j["pairs"].push_back(json{{"demand", jd}, {"protocol", protocol_to_json_obj(dp.protocol)}});
    }
    j["entries"] = json::array();
    for (const auto& [key, start] : dump.schedule.entries)
        j["entries"].push_back(json{{"demand", key.demand_id},
                                    {"instance", key.instance},
                                    {"start_slot", start}});
    j["unscheduled"] = json::array();
    for (const auto& key : dump.schedule.unscheduled)
        j["unscheduled"].push_back(json{{"demand", key.demand_id}, {"instance", key.instance}});
    return j.dump(2);
}

}  // namespace qns::io
