/*
 * Copyright 2026 The adhoc-cloud Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "adhoc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace adhoc {
namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string type_name(const json& j)
{
    return std::string(j.type_name());
}

/// Reads fields of one JSON object, collecting every problem under its dotted path.
class Reader {
public:
    Reader(const json& obj, std::string path, std::vector<std::string>& problems)
        : obj_(obj), path_(std::move(path)), problems_(problems)
    {
        if (!obj_.is_object())
            fail(path_, "must be an object, got " + type_name(obj_));
    }

    bool ok() const { return obj_.is_object(); }
    const std::string& path() const { return path_; }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void fail(const std::string& where, const std::string& what) const { problems_.push_back(where + " " + what); }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        if (!ok())
            return nullptr;
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    template <class T>
    bool read(const std::string& key, T& out, bool required = false)
    {
        const json* v = find(key);
        if (v == nullptr) {
            if (required && ok())
                fail(at(key), "is required");
            return false;
        }
        if constexpr (std::is_same_v<T, bool>) {
            if (!v->is_boolean())
                return fail(at(key), "must be a boolean"), false;
        } else if constexpr (std::is_integral_v<T>) {
            if (!v->is_number_integer())
                return fail(at(key), "must be an integer"), false;
            if (std::is_unsigned_v<T> && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)
                return fail(at(key), "must be >= 0"), false;
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v->is_number())
                return fail(at(key), "must be a number"), false;
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v->is_string())
                return fail(at(key), "must be a string"), false;
        }
        out = v->get<T>();
        return true;
    }

    template <class T>
    bool read(const std::string& key, std::optional<T>& out)
    {
        const json* v = find(key);
        if (v == nullptr || v->is_null())
            return false;
        T tmp{};
        if (!read(key, tmp))
            return false;
        out = tmp;
        return true;
    }

    /// Reports keys present in the object but never asked for.
    void finish() const
    {
        if (!ok())
            return;
        for (const auto& [k, v] : obj_.items())
            if (!seen_.count(k))
                fail(at(k), "is not a recognised field");
    }

private:
    const json& obj_;
    std::string path_;
    std::vector<std::string>& problems_;
    std::set<std::string> seen_;
};

ResourceVector read_resources(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    ResourceVector r;
    Reader rd(j, path, problems);
    rd.read("cpu", r.cpu);
    rd.read("memory", r.memory);
    rd.read("storage", r.storage);
    rd.read("network", r.network);
    rd.finish();
    return r;
}

Distribution read_distribution(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    if (j.is_number())
        return Constant{j.get<double>()};
    Reader rd(j, path, problems);
    std::string kind;
    if (!rd.read("kind", kind, true))
        return Constant{0.0};
    Distribution d = Constant{0.0};
    if (kind == "exponential") {
        Exponential e;
        rd.read("mean", e.mean, true);
        d = e;
    } else if (kind == "uniform") {
        Uniform u;
        rd.read("a", u.a, true);
        rd.read("b", u.b, true);
        d = u;
    } else if (kind == "constant") {
        Constant c;
        rd.read("value", c.value, true);
        d = c;
    } else if (kind == "two_point") {
        TwoPoint t;
        rd.read("p", t.p, true);
        rd.read("lo", t.lo, true);
        rd.read("hi", t.hi, true);
        d = t;
    } else {
        rd.fail(rd.at("kind"), "must be one of exponential, uniform, constant, two_point");
    }
    rd.finish();
    return d;
}

template <class F>
void read_optional_object(Reader& rd, const std::string& key, F&& f)
{
    if (const json* v = rd.find(key))
        f(*v, rd.at(key));
}

template <class T, class F>
void read_list(Reader& rd, const std::string& key, std::vector<T>& out, F&& item, std::vector<std::string>& problems)
{
    const json* v = rd.find(key);
    if (v == nullptr)
        return;
    if (!v->is_array()) {
        problems.push_back(rd.at(key) + " must be an array");
        return;
    }
    for (std::size_t i = 0; i < v->size(); ++i)
        out.push_back(item((*v)[i], rd.at(key) + "[" + std::to_string(i) + "]"));
}

ChurnModel read_churn(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    ChurnModel c;
    Reader rd(j, path, problems);
    std::optional<double> mean_up, mean_down;
    rd.read("mean_up_ms", mean_up);
    rd.read("mean_down_ms", mean_down);
    for (auto [key, mean, dist] : {std::tuple{"mean_up_ms", &mean_up, &c.up_duration},
                                   std::tuple{"mean_down_ms", &mean_down, &c.down_duration}}) {
        if (!*mean)
            continue;
        if (!(**mean > 0.0) || !std::isfinite(**mean))
            problems.push_back(rd.at(key) + " must be > 0");
        else
            *dist = Exponential{**mean};
    }
    read_optional_object(rd, "up", [&](const json& v, const std::string& p) {
        c.up_duration = read_distribution(v, p, problems);
    });
    read_optional_object(rd, "down", [&](const json& v, const std::string& p) {
        c.down_duration = read_distribution(v, p, problems);
    });
    rd.finish();
    return c;
}

UserLoadModel read_user_load(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    UserLoadModel m;
    Reader rd(j, path, problems);
    std::string kind = "none";
    rd.read("kind", kind);
    if (kind == "none") {
        m.kind = UserLoadModel::Kind::Trace;
    } else if (kind == "trace") {
        m.kind = UserLoadModel::Kind::Trace;
        read_list(
            rd, "points", m.trace,
            [&](const json& p, const std::string& pp) {
                TraceBreakpoint bp;
                Reader r2(p, pp, problems);
                r2.read("at", bp.at, true);
                read_optional_object(r2, "demand", [&](const json& v, const std::string& vp) {
                    bp.demand = read_resources(v, vp, problems);
                });
                r2.finish();
                return bp;
            },
            problems);
    } else if (kind == "markov2") {
        m.kind = UserLoadModel::Kind::Markov2;
        read_optional_object(rd, "idle_demand", [&](const json& v, const std::string& p) {
            m.markov.idle_demand = read_resources(v, p, problems);
        });
        read_optional_object(rd, "active_demand", [&](const json& v, const std::string& p) {
            m.markov.active_demand = read_resources(v, p, problems);
        });
        rd.read("mean_idle_ms", m.markov.mean_idle_ms, true);
        rd.read("mean_active_ms", m.markov.mean_active_ms, true);
    } else {
        rd.fail(rd.at("kind"), "must be one of none, trace, markov2");
    }
    rd.finish();
    return m;
}

CloudletPolicy read_policy(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    CloudletPolicy p;
    Reader rd(j, path, problems);
    rd.read("target_replication", p.target_replication);
    rd.read("heartbeat_interval_ms", p.heartbeat_interval_ms);
    rd.read("timeout_multiplier", p.timeout_multiplier);
    rd.read("min_members", p.min_members);
    rd.read("max_members", p.max_members);
    rd.read("high_watermark", p.high_watermark);
    rd.read("low_watermark", p.low_watermark);
    rd.finish();
    return p;
}

void read_intrusiveness(const json& j, const std::string& path, IntrusivenessPolicy& p,
                        std::vector<std::string>& problems)
{
    Reader rd(j, path, problems);
    rd.read("enabled", p.enabled);
    rd.read("grace_ms", p.grace_ms);
    rd.read("throttle_first", p.throttle_first);
    rd.read("max_violation_fraction", p.max_violation_fraction);
    rd.read("throttle_floor", p.throttle_floor);
    rd.finish();
}

void read_adaptation(const json& j, const std::string& path, AdaptationPolicy& p, std::vector<std::string>& problems)
{
    Reader rd(j, path, problems);
    rd.read("enabled", p.enabled);
    rd.read("epoch_ms", p.epoch_ms);
    rd.read("max_actions_per_epoch", p.max_actions_per_epoch);
    rd.read("rereplicate_cap", p.rereplicate_cap);
    rd.read("add_candidates", p.add_candidates);
    rd.read("epsilon", p.epsilon);
    rd.read("availability_ceiling", p.availability_ceiling);
    rd.read("deploy_cost", p.deploy_cost);
    rd.read("destroy_cost", p.destroy_cost);
    rd.read("rereplicate_cost_per_mb", p.rereplicate_cost_per_mb);
    rd.finish();
}

void read_settings(const json& j, const std::string& path, Settings& s, std::vector<std::string>& problems)
{
    Reader rd(j, path, problems);
    rd.read("deploy_latency_ms", s.deploy_latency_ms);
    rd.read("shutdown_latency_ms", s.shutdown_latency_ms);
    read_optional_object(rd, "network_latency", [&](const json& v, const std::string& p) {
        s.network_latency = read_distribution(v, p, problems);
    });
    rd.read("report_interval_ms", s.report_interval_ms);
    rd.read("series_interval_ms", s.series_interval_ms);
    rd.read("copy_bytes_per_ms", s.copy_bytes_per_ms);
    rd.read("margin_fraction", s.margin_fraction);
    read_optional_object(rd, "intrusiveness", [&](const json& v, const std::string& p) {
        read_intrusiveness(v, p, s.intrusiveness, problems);
    });
    read_optional_object(rd, "adaptation", [&](const json& v, const std::string& p) {
        read_adaptation(v, p, s.adaptation, problems);
    });
    std::string mode;
    if (rd.read("forecast_mode", mode)) {
        if (auto m = parse_forecast_mode(mode))
            s.forecast_mode = *m;
        else
            rd.fail(rd.at("forecast_mode"), "must be oracle or estimator");
    }
    rd.read("history_window_ms", s.history_window_ms);
    rd.read("exhaustive_threshold", s.exhaustive_threshold);
    rd.finish();
}

NodeSpec read_node(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    NodeSpec n;
    Reader rd(j, path, problems);
    rd.read("id", n.id, true);
    if (const json* v = rd.find("capacity"))
        n.capacity = read_resources(*v, rd.at("capacity"), problems);
    else if (rd.ok())
        rd.fail(rd.at("capacity"), "is required");
    if (const json* v = rd.find("margin"); v && !v->is_null())
        n.margin = read_resources(*v, rd.at("margin"), problems);
    if (const json* v = rd.find("churn"); v && !v->is_null())
        n.churn = read_churn(*v, rd.at("churn"), problems);
    read_optional_object(rd, "user_load", [&](const json& v, const std::string& p) {
        n.user_load = read_user_load(v, p, problems);
    });
    rd.finish();
    return n;
}

CloudletSpec read_cloudlet(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    CloudletSpec c;
    Reader rd(j, path, problems);
    rd.read("id", c.id, true);
    std::string engine = "kv_store";
    if (rd.read("engine", engine)) {
        if (auto k = parse_engine_kind(engine))
            c.engine = *k;
        else
            rd.fail(rd.at("engine"), "must be compute or kv_store");
    }
    read_optional_object(rd, "policy", [&](const json& v, const std::string& p) {
        c.policy = read_policy(v, p, problems);
    });
    read_optional_object(rd, "element_allocation", [&](const json& v, const std::string& p) {
        c.element_allocation = read_resources(v, p, problems);
    });
    if (const json* v = rd.find("placement")) {
        if (v->is_string()) {
            if (v->get<std::string>() != "auto")
                rd.fail(rd.at("placement"), "must be \"auto\" or a list of node ids");
        } else if (v->is_array()) {
            for (std::size_t i = 0; i < v->size(); ++i) {
                if ((*v)[i].is_string())
                    c.placement.push_back((*v)[i].get<std::string>());
                else
                    rd.fail(rd.at("placement") + "[" + std::to_string(i) + "]", "must be a node id string");
            }
            c.initial_elements = static_cast<int>(c.placement.size());
        } else {
            rd.fail(rd.at("placement"), "must be \"auto\" or a list of node ids");
        }
    }
    if (c.placement.empty())
        rd.read("initial_elements", c.initial_elements);
    else if (rd.find("initial_elements"))
        rd.fail(rd.at("initial_elements"), "must not be given with an explicit placement");
    rd.read("persistent", c.persistent);
    rd.finish();
    return c;
}

TaskWorkload read_task_workload(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    TaskWorkload w;
    Reader rd(j, path, problems);
    rd.read("cloudlet", w.cloudlet, true);
    std::string arrivals = "poisson";
    if (rd.read("arrivals", arrivals)) {
        if (arrivals == "poisson")
            w.arrivals = TaskWorkload::Arrivals::Poisson;
        else if (arrivals == "constant_interval")
            w.arrivals = TaskWorkload::Arrivals::ConstantInterval;
        else
            rd.fail(rd.at("arrivals"), "must be poisson or constant_interval");
    }
    rd.read("rate_per_s", w.rate_per_s, true);
    read_optional_object(rd, "work_units", [&](const json& v, const std::string& p) {
        w.work_units = read_distribution(v, p, problems);
    });
    rd.read("start", w.start);
    rd.read("stop", w.stop);
    rd.read("reservation", w.reservation);
    rd.finish();
    return w;
}

KvWorkload read_kv_workload(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    KvWorkload w;
    Reader rd(j, path, problems);
    rd.read("cloudlet", w.cloudlet, true);
    rd.read("rate_per_s", w.rate_per_s, true);
    rd.read("put_ratio", w.put_ratio);
    rd.read("key_space", w.key_space);
    rd.read("value_bytes", w.value_bytes);
    rd.read("start", w.start);
    rd.read("stop", w.stop);
    rd.finish();
    return w;
}

ReservationSpec read_reservation(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    ReservationSpec r;
    Reader rd(j, path, problems);
    rd.read("id", r.id, true);
    rd.read("cloudlet", r.cloudlet, true);
    rd.read("submit_at", r.submit_at);
    if (const json* v = rd.find("demand"))
        r.demand = read_resources(*v, rd.at("demand"), problems);
    else if (rd.ok())
        rd.fail(rd.at("demand"), "is required");
    rd.read("element_count", r.element_count);
    if (const json* v = rd.find("window")) {
        Reader w(*v, rd.at("window"), problems);
        w.read("start", r.window.start, true);
        w.read("end", r.window.end, true);
        w.finish();
    } else if (rd.ok()) {
        rd.fail(rd.at("window"), "is required");
    }
    rd.read("availability_target", r.availability_target);
    rd.finish();
    return r;
}

FaultSpec read_fault(const json& j, const std::string& path, std::vector<std::string>& problems)
{
    FaultSpec f;
    Reader rd(j, path, problems);
    rd.read("node", f.node, true);
    rd.read("at", f.at, true);
    rd.read("down_for", f.down_for);
    rd.finish();
    return f;
}

json optional_json(const std::optional<VirtualTime>& t)
{
    return t ? json(*t) : json(nullptr);
}

json user_load_to_json(const UserLoadModel& m)
{
    if (m.kind == UserLoadModel::Kind::Markov2)
        return {{"kind", "markov2"},
                {"idle_demand", m.markov.idle_demand},
                {"active_demand", m.markov.active_demand},
                {"mean_idle_ms", m.markov.mean_idle_ms},
                {"mean_active_ms", m.markov.mean_active_ms}};
    if (m.trace.empty())
        return {{"kind", "none"}};
    json points = json::array();
    for (const auto& bp : m.trace)
        points.push_back({{"at", bp.at}, {"demand", bp.demand}});
    return {{"kind", "trace"}, {"points", points}};
}

json policy_to_json(const CloudletPolicy& p)
{
    return {{"target_replication", p.target_replication},
            {"heartbeat_interval_ms", p.heartbeat_interval_ms},
            {"timeout_multiplier", p.timeout_multiplier},
            {"min_members", p.min_members},
            {"max_members", p.max_members},
            {"high_watermark", p.high_watermark},
            {"low_watermark", p.low_watermark}};
}

json weights_to_json(const UtilityWeights& w)
{
    return {{"w_avail", w.w_avail}, {"w_perf", w.w_perf}, {"w_intr", w.w_intr}, {"w_cost", w.w_cost}};
}

json settings_to_json(const Settings& s)
{
    const auto& i = s.intrusiveness;
    const auto& a = s.adaptation;
    return {
        {"deploy_latency_ms", s.deploy_latency_ms},
        {"shutdown_latency_ms", s.shutdown_latency_ms},
        {"network_latency", distribution_to_json(s.network_latency)},
        {"report_interval_ms", s.report_interval_ms},
        {"series_interval_ms", s.series_interval_ms},
        {"copy_bytes_per_ms", s.copy_bytes_per_ms},
        {"margin_fraction", s.margin_fraction},
        {"intrusiveness",
         {{"enabled", i.enabled},
          {"grace_ms", i.grace_ms},
          {"throttle_first", i.throttle_first},
          {"max_violation_fraction", i.max_violation_fraction},
          {"throttle_floor", i.throttle_floor}}},
        {"adaptation",
         {{"enabled", a.enabled},
          {"epoch_ms", a.epoch_ms},
          {"max_actions_per_epoch", a.max_actions_per_epoch},
          {"rereplicate_cap", a.rereplicate_cap},
          {"add_candidates", a.add_candidates},
          {"epsilon", a.epsilon},
          {"availability_ceiling", a.availability_ceiling},
          {"deploy_cost", a.deploy_cost},
          {"destroy_cost", a.destroy_cost},
          {"rereplicate_cost_per_mb", a.rereplicate_cost_per_mb}}},
        {"forecast_mode", to_string(s.forecast_mode)},
        {"history_window_ms", s.history_window_ms},
        {"exhaustive_threshold", s.exhaustive_threshold},
    };
}

bool latency_non_negative(const Distribution& d)
{
    return std::visit(overloaded{
                          [](const Exponential&) { return true; },
                          [](const Uniform& u) { return u.a >= 0.0; },
                          [](const Constant& c) { return c.value >= 0.0; },
                          [](const TwoPoint& t) { return t.lo >= 0.0 && t.hi >= 0.0; },
                      },
                      d);
}

std::optional<double> upper_bound(const Distribution& d)
{
    return std::visit(overloaded{
                          [](const Exponential&) -> std::optional<double> { return std::nullopt; },
                          [](const Uniform& u) -> std::optional<double> { return u.b; },
                          [](const Constant& c) -> std::optional<double> { return c.value; },
                          [](const TwoPoint& t) -> std::optional<double> { return std::max(t.lo, t.hi); },
                      },
                      d);
}

void add_all(std::vector<std::string>& out, const std::string& prefix, const std::vector<std::string>& found)
{
    for (const auto& f : found) {
        const auto word = f.find(' ');
        const bool field = word != std::string::npos && f.compare(word, 6, " must ") == 0 &&
                           f.find_first_not_of("abcdefghijklmnopqrstuvwxyz_") == word;
        out.push_back(prefix + (field ? "." : ": ") + f);
    }
}

void check_resources(std::vector<std::string>& out, const std::string& path, const ResourceVector& r,
                     bool need_positive)
{
    if (!r.non_negative()) {
        for (auto [name, v] : {std::pair{"cpu", r.cpu}, {"memory", r.memory}, {"storage", r.storage},
                               {"network", r.network}})
            if (!(v >= 0.0))
                out.push_back(path + "." + name + " must be non-negative");
    } else if (need_positive && !r.any_positive())
        out.push_back(path + " must be positive in at least one component");
}

void check_positive_mean(std::vector<std::string>& out, const std::string& path, const Distribution& d)
{
    add_all(out, path, validate(d));
    if (validate(d).empty() && !(mean_of(d) > 0.0))
        out.push_back(path + " mean must be > 0");
}

} // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error([&] {
          std::string msg = std::to_string(problems.size()) + " validation problem(s)";
          for (const auto& p : problems)
              msg += "\n  " + p;
          return msg;
      }()),
      problems_(std::move(problems))
{
}

std::optional<std::size_t> Scenario::node_index(const std::string& id) const
{
    for (std::size_t i = 0; i < fleet.size(); ++i)
        if (fleet[i].id == id)
            return i;
    return std::nullopt;
}

std::optional<std::size_t> Scenario::cloudlet_index(const std::string& id) const
{
    for (std::size_t i = 0; i < cloudlets.size(); ++i)
        if (cloudlets[i].id == id)
            return i;
    return std::nullopt;
}

json distribution_to_json(const Distribution& d)
{
    return std::visit(overloaded{
                          [](const Exponential& e) { return json{{"kind", "exponential"}, {"mean", e.mean}}; },
                          [](const Uniform& u) { return json{{"kind", "uniform"}, {"a", u.a}, {"b", u.b}}; },
                          [](const Constant& c) { return json{{"kind", "constant"}, {"value", c.value}}; },
                          [](const TwoPoint& t) {
                              return json{{"kind", "two_point"}, {"p", t.p}, {"lo", t.lo}, {"hi", t.hi}};
                          },
                      },
                      d);
}

std::vector<std::string> validate_scenario(const Scenario& s)
{
    std::vector<std::string> out;
    if (s.schema_version != kScenarioSchemaVersion)
        out.push_back("schema_version must be " + std::to_string(kScenarioSchemaVersion));
    if (s.run.until <= 0)
        out.push_back("run.until must be > 0");

    const Settings& st = s.settings;
    if (st.deploy_latency_ms < 0)
        out.push_back("settings.deploy_latency_ms must be >= 0");
    if (st.shutdown_latency_ms < 0)
        out.push_back("settings.shutdown_latency_ms must be >= 0");
    add_all(out, "settings.network_latency", validate(st.network_latency));
    if (!latency_non_negative(st.network_latency))
        out.push_back("settings.network_latency must not produce negative values");
    if (st.report_interval_ms <= 0)
        out.push_back("settings.report_interval_ms must be > 0");
    if (st.series_interval_ms < 0)
        out.push_back("settings.series_interval_ms must be >= 0");
    if (!(st.copy_bytes_per_ms > 0.0))
        out.push_back("settings.copy_bytes_per_ms must be > 0");
    if (!(st.margin_fraction >= 0.0 && st.margin_fraction < 1.0))
        out.push_back("settings.margin_fraction must lie in [0, 1)");
    add_all(out, "settings.intrusiveness", st.intrusiveness.validate());
    add_all(out, "settings.adaptation", st.adaptation.validate());
    if (st.history_window_ms < 0)
        out.push_back("settings.history_window_ms must be >= 0");
    if (st.exhaustive_threshold > 20)
        out.push_back("settings.exhaustive_threshold must be <= 20");

    if (s.fleet.empty())
        out.push_back("fleet must contain at least one node");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < s.fleet.size(); ++i) {
        const auto& n = s.fleet[i];
        const std::string p = "fleet[" + std::to_string(i) + "]";
        if (n.id.empty())
            out.push_back(p + ".id must be non-empty");
        else if (!ids.insert(n.id).second)
            out.push_back(p + ".id '" + n.id + "' is duplicated");
        check_resources(out, p + ".capacity", n.capacity, true);
        if (n.margin) {
            check_resources(out, p + ".margin", *n.margin, false);
            if (!fits_within(*n.margin, n.capacity, 0.0))
                out.push_back(p + ".margin must not exceed capacity");
        }
        if (n.churn) {
            check_positive_mean(out, p + ".churn.up", n.churn->up_duration);
            check_positive_mean(out, p + ".churn.down", n.churn->down_duration);
        }
        add_all(out, p + ".user_load", n.user_load.validate(n.capacity));
    }

    std::set<std::string> cids;
    for (std::size_t i = 0; i < s.cloudlets.size(); ++i) {
        const auto& c = s.cloudlets[i];
        const std::string p = "cloudlets[" + std::to_string(i) + "]";
        if (c.id.empty())
            out.push_back(p + ".id must be non-empty");
        else if (!cids.insert(c.id).second)
            out.push_back(p + ".id '" + c.id + "' is duplicated");
        add_all(out, p + ".policy", c.policy.validate());
        check_resources(out, p + ".element_allocation", c.element_allocation, true);
        std::set<std::string> placed;
        for (std::size_t k = 0; k < c.placement.size(); ++k) {
            const std::string pp = p + ".placement[" + std::to_string(k) + "]";
            if (!s.node_index(c.placement[k]))
                out.push_back(pp + " references unknown node '" + c.placement[k] + "'");
            else if (!placed.insert(c.placement[k]).second)
                out.push_back(pp + " places two elements on node '" + c.placement[k] + "'");
        }
        if (c.initial_elements < 0)
            out.push_back(p + ".initial_elements must be >= 0");
        if (c.initial_elements > c.policy.max_members)
            out.push_back(p + " starts with more elements than policy.max_members");
        if (auto bound = upper_bound(st.network_latency);
            bound && *bound >= static_cast<double>(c.policy.heartbeat_interval_ms))
            out.push_back(p + ".policy.heartbeat_interval_ms must exceed the largest network latency");
    }

    auto check_window = [&](const std::string& p, VirtualTime start, const std::optional<VirtualTime>& stop) {
        if (start < 0)
            out.push_back(p + ".start must be >= 0");
        if (stop && *stop <= start)
            out.push_back(p + ".stop must be after start");
    };
    auto check_cloudlet_ref = [&](const std::string& p, const std::string& id, EngineKind want) {
        auto idx = s.cloudlet_index(id);
        if (!idx)
            out.push_back(p + ".cloudlet references unknown cloudlet '" + id + "'");
        else if (s.cloudlets[*idx].engine != want)
            out.push_back(p + ".cloudlet '" + id + "' is not a " + std::string(to_string(want)) + " cloudlet");
    };
    for (std::size_t i = 0; i < s.task_workloads.size(); ++i) {
        const auto& w = s.task_workloads[i];
        const std::string p = "workloads.tasks[" + std::to_string(i) + "]";
        check_cloudlet_ref(p, w.cloudlet, EngineKind::Compute);
        if (!(w.rate_per_s > 0.0) || !std::isfinite(w.rate_per_s))
            out.push_back(p + ".rate_per_s must be > 0");
        check_positive_mean(out, p + ".work_units", w.work_units);
        check_window(p, w.start, w.stop);
        if (w.reservation && std::none_of(s.reservations.begin(), s.reservations.end(),
                                          [&](const ReservationSpec& r) { return r.id == *w.reservation; }))
            out.push_back(p + ".reservation references unknown reservation '" + *w.reservation + "'");
    }
    for (std::size_t i = 0; i < s.kv_workloads.size(); ++i) {
        const auto& w = s.kv_workloads[i];
        const std::string p = "workloads.kv[" + std::to_string(i) + "]";
        check_cloudlet_ref(p, w.cloudlet, EngineKind::KvStore);
        if (!(w.rate_per_s > 0.0) || !std::isfinite(w.rate_per_s))
            out.push_back(p + ".rate_per_s must be > 0");
        if (!(w.put_ratio >= 0.0 && w.put_ratio <= 1.0))
            out.push_back(p + ".put_ratio must lie in [0, 1]");
        if (w.key_space < 1)
            out.push_back(p + ".key_space must be >= 1");
        if (!(w.value_bytes >= 0.0))
            out.push_back(p + ".value_bytes must be >= 0");
        check_window(p, w.start, w.stop);
    }
    std::set<std::string> rids;
    for (std::size_t i = 0; i < s.reservations.size(); ++i) {
        const auto& r = s.reservations[i];
        const std::string p = "reservations[" + std::to_string(i) + "]";
        if (!rids.insert(r.id).second)
            out.push_back(p + ".id '" + r.id + "' is duplicated");
        if (!s.cloudlet_index(r.cloudlet))
            out.push_back(p + ".cloudlet references unknown cloudlet '" + r.cloudlet + "'");
        ReservationRequest req{r.id, CloudletId{}, r.demand, r.element_count, r.window, r.availability_target};
        add_all(out, p, req.validate());
        if (r.submit_at < 0)
            out.push_back(p + ".submit_at must be >= 0");
        if (r.submit_at > r.window.start)
            out.push_back(p + ".submit_at must not be after window.start");
    }
    for (std::size_t i = 0; i < s.faults.size(); ++i) {
        const auto& f = s.faults[i];
        const std::string p = "faults[" + std::to_string(i) + "]";
        if (!s.node_index(f.node))
            out.push_back(p + ".node references unknown node '" + f.node + "'");
        if (f.at < 0)
            out.push_back(p + ".at must be >= 0");
        if (f.down_for && *f.down_for <= 0)
            out.push_back(p + ".down_for must be > 0");
    }
    add_all(out, "weights", s.weights.validate());
    return out;
}

Scenario scenario_from_json(const json& j)
{
    std::vector<std::string> problems;
    Scenario s;
    Reader rd(j, "", problems);
    rd.read("schema_version", s.schema_version, true);
    if (const json* v = rd.find("run")) {
        Reader r(*v, "run", problems);
        r.read("until", s.run.until);
        r.read("seed", s.run.seed);
        r.finish();
    }
    read_optional_object(rd, "settings", [&](const json& v, const std::string& p) {
        read_settings(v, p, s.settings, problems);
    });
    read_list(
        rd, "fleet", s.fleet, [&](const json& v, const std::string& p) { return read_node(v, p, problems); },
        problems);
    read_list(
        rd, "cloudlets", s.cloudlets,
        [&](const json& v, const std::string& p) { return read_cloudlet(v, p, problems); }, problems);
    read_optional_object(rd, "workloads", [&](const json& v, const std::string& p) {
        Reader w(v, p, problems);
        read_list(
            w, "tasks", s.task_workloads,
            [&](const json& x, const std::string& xp) { return read_task_workload(x, xp, problems); }, problems);
        read_list(
            w, "kv", s.kv_workloads,
            [&](const json& x, const std::string& xp) { return read_kv_workload(x, xp, problems); }, problems);
        w.finish();
    });
    read_list(
        rd, "reservations", s.reservations,
        [&](const json& v, const std::string& p) { return read_reservation(v, p, problems); }, problems);
    read_list(
        rd, "faults", s.faults, [&](const json& v, const std::string& p) { return read_fault(v, p, problems); },
        problems);
    read_optional_object(rd, "weights", [&](const json& v, const std::string& p) {
        Reader w(v, p, problems);
        w.read("w_avail", s.weights.w_avail);
        w.read("w_perf", s.weights.w_perf);
        w.read("w_intr", s.weights.w_intr);
        w.read("w_cost", s.weights.w_cost);
        w.finish();
    });
    rd.finish();

    for (auto& p : validate_scenario(s))
        if (std::find(problems.begin(), problems.end(), p) == problems.end())
            problems.push_back(std::move(p));
    if (!problems.empty())
        throw ValidationError(std::move(problems));
    return s;
}

json to_json(const Scenario& s)
{
    json fleet = json::array();
    for (const auto& n : s.fleet) {
        json churn = nullptr;
        if (n.churn)
            churn = {{"up", distribution_to_json(n.churn->up_duration)},
                     {"down", distribution_to_json(n.churn->down_duration)}};
        fleet.push_back({{"id", n.id},
                         {"capacity", n.capacity},
                         {"margin", n.margin ? json(*n.margin) : json(nullptr)},
                         {"churn", churn},
                         {"user_load", user_load_to_json(n.user_load)}});
    }
    json cloudlets = json::array();
    for (const auto& c : s.cloudlets) {
        json entry = {{"id", c.id},
                      {"engine", to_string(c.engine)},
                      {"policy", policy_to_json(c.policy)},
                      {"element_allocation", c.element_allocation},
                      {"persistent", c.persistent}};
        if (c.placement.empty()) {
            entry["placement"] = "auto";
            entry["initial_elements"] = c.initial_elements;
        } else {
            entry["placement"] = c.placement;
        }
        cloudlets.push_back(entry);
    }
    json tasks = json::array();
    for (const auto& w : s.task_workloads)
        tasks.push_back(
            {{"cloudlet", w.cloudlet},
             {"arrivals", w.arrivals == TaskWorkload::Arrivals::Poisson ? "poisson" : "constant_interval"},
             {"rate_per_s", w.rate_per_s},
             {"work_units", distribution_to_json(w.work_units)},
             {"start", w.start},
             {"stop", optional_json(w.stop)},
             {"reservation", w.reservation ? json(*w.reservation) : json(nullptr)}});
    json kv = json::array();
    for (const auto& w : s.kv_workloads)
        kv.push_back({{"cloudlet", w.cloudlet},
                      {"rate_per_s", w.rate_per_s},
                      {"put_ratio", w.put_ratio},
                      {"key_space", w.key_space},
                      {"value_bytes", w.value_bytes},
                      {"start", w.start},
                      {"stop", optional_json(w.stop)}});
    json reservations = json::array();
    for (const auto& r : s.reservations)
        reservations.push_back({{"id", r.id},
                                {"cloudlet", r.cloudlet},
                                {"submit_at", r.submit_at},
                                {"demand", r.demand},
                                {"element_count", r.element_count},
                                {"window", {{"start", r.window.start}, {"end", r.window.end}}},
                                {"availability_target", r.availability_target}});
    json faults = json::array();
    for (const auto& f : s.faults)
        faults.push_back({{"node", f.node}, {"at", f.at}, {"down_for", optional_json(f.down_for)}});
    return {
        {"schema_version", s.schema_version},
        {"run", {{"until", s.run.until}, {"seed", s.run.seed}}},
        {"settings", settings_to_json(s.settings)},
        {"fleet", fleet},
        {"cloudlets", cloudlets},
        {"workloads", {{"tasks", tasks}, {"kv", kv}}},
        {"reservations", reservations},
        {"faults", faults},
        {"weights", weights_to_json(s.weights)},
    };
}

Scenario parse_scenario(const std::string& text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    return scenario_from_json(j);
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

json defaults_json()
{
    const CloudletSpec c;
    const NodeSpec n;
    const KvWorkload kv;
    const ReservationSpec r;
    return {
        {"settings", settings_to_json(Settings{})},
        {"cloudlet", {{"engine", to_string(c.engine)},
                      {"policy", policy_to_json(c.policy)},
                      {"element_allocation", c.element_allocation},
                      {"placement", "auto"},
                      {"initial_elements", c.initial_elements},
                      {"persistent", c.persistent}}},
        {"node", {{"churn", nullptr}, {"user_load", user_load_to_json(n.user_load)}, {"margin", "margin_fraction * capacity"}}},
        {"churn", {{"up", distribution_to_json(ChurnModel{}.up_duration)},
                   {"down", distribution_to_json(ChurnModel{}.down_duration)}}},
        {"kv_workload", {{"put_ratio", kv.put_ratio}, {"key_space", kv.key_space}, {"value_bytes", kv.value_bytes}}},
        {"task_workload", {{"arrivals", "poisson"}, {"work_units", distribution_to_json(TaskWorkload{}.work_units)}}},
        {"reservation", {{"element_count", r.element_count}, {"availability_target", r.availability_target}}},
        {"weights", weights_to_json(UtilityWeights{})},
        {"run", {{"until", RunSpec{}.until}, {"seed", RunSpec{}.seed}}},
    };
}

} // namespace adhoc
