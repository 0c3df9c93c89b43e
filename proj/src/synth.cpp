#include "segex/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segex/errors.hpp"
#include "segex/rng.hpp"
#include "segex/util.hpp"

namespace segex {

namespace {

using nlohmann::json;

PeriodSpec period_from_json(const json& j, const char* what) {
    if (!j.is_object() || !j.contains("start") || !j.contains("end"))
        throw InvalidSpec(std::string(what) + " must be an object with start and end");
    return PeriodSpec(j["start"].get<double>(), j["end"].get<double>());
}

struct RateEntry {
    std::string page;
    EventKind kind = EventKind::cpv;
    double rate = 0;
    double apv_ratio = 0; // only for cpv entries with a paired apv rate
    bool has_apv = false;
};

// decompose the rate map into cpv entries (with coupled apv ratios) and
// standalone click entries; apv is emitted per cpv event so the implication
// "apv on a page requires a cpv there" holds by construction
std::vector<RateEntry> compile_rates(const ArchetypeSpec& a) {
    std::map<std::string, double> cpv, apv, click;
    for (const auto& [key, rate] : a.rates) {
        const auto colon = key.find(':');
        if (colon == std::string::npos)
            throw InvalidSpec("rate key must look like page:event, got " + key);
        const std::string page = key.substr(0, colon);
        const std::string kind = key.substr(colon + 1);
        if (rate < 0) throw InvalidSpec("negative rate for " + key);
        if (kind == "cpv") cpv[page] = rate;
        else if (kind == "apv") apv[page] = rate;
        else if (kind == "click") click[page] = rate;
        else throw InvalidSpec("rate event must be cpv, apv or click: " + key);
    }
    std::vector<RateEntry> entries;
    for (const auto& [page, rate] : cpv) {
        RateEntry e;
        e.page = page;
        e.kind = EventKind::cpv;
        e.rate = rate;
        auto it = apv.find(page);
        if (it != apv.end()) {
            if (rate <= 0 || it->second > rate)
                throw InvalidSpec("apv rate must not exceed the cpv rate on page " + page);
            e.has_apv = true;
            e.apv_ratio = it->second / rate;
            apv.erase(it);
        }
        entries.push_back(e);
    }
    if (!apv.empty())
        throw InvalidSpec("apv rate without a cpv rate on page " + apv.begin()->first);
    for (const auto& [page, rate] : click) {
        RateEntry e;
        e.page = page;
        e.kind = EventKind::click;
        e.rate = rate;
        entries.push_back(e);
    }
    return entries;
}

struct Personality {
    double days_per_week = 0;
    double sessions_per_day = 1;
    std::vector<double> rates;      // per compiled entry
    std::vector<double> apv_ratios; // per compiled entry, 0 when unused
};

Personality draw_personality(const ArchetypeSpec& a, const std::vector<RateEntry>& entries, Rng& rng) {
    Personality p;
    p.days_per_week = std::min(7.0, a.days_per_week * std::exp(0.12 * rng.normal()));
    p.sessions_per_day = std::max(1.0, a.sessions_per_day * std::exp(0.12 * rng.normal()));
    p.rates.reserve(entries.size());
    p.apv_ratios.reserve(entries.size());
    for (const auto& e : entries) {
        p.rates.push_back(e.rate * std::exp(a.rate_dispersion * rng.normal()));
        p.apv_ratios.push_back(
            e.has_apv ? std::min(0.95, e.apv_ratio * std::exp(0.2 * rng.normal())) : 0.0);
    }
    return p;
}

void generate_period_events(const std::string& user_id, const Personality& p,
                            const std::vector<RateEntry>& entries, const PeriodSpec& period,
                            Rng& rng, std::vector<EventRecord>& out) {
    const auto n_days = static_cast<std::int64_t>(std::llround((period.end - period.start) / 86400.0));
    std::vector<std::int64_t> active_days;
    for (std::int64_t d = 0; d < n_days; ++d)
        if (rng.bernoulli(p.days_per_week / 7.0)) active_days.push_back(d);
    if (active_days.empty())
        active_days.push_back(static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(n_days))));

    EventRecord ev;
    ev.user_id = user_id;
    ev.arm = Arm::none;
    for (std::int64_t day : active_days) {
        const double day_start = period.start + static_cast<double>(day) * 86400.0;
        const auto n_sessions = 1 + rng.poisson(std::max(0.0, p.sessions_per_day - 1.0));
        for (std::int64_t s = 0; s < n_sessions; ++s) {
            // sessions stay clear of midnight so the day count is exact
            const double t0 = day_start + 1800.0 + static_cast<double>(rng.uniform_index(79200));
            ev.timestamp = t0;
            ev.page_type.clear();
            ev.event = EventKind::session_start;
            out.push_back(ev);
            for (std::size_t f = 0; f < entries.size(); ++f) {
                const auto count = rng.poisson(p.rates[f]);
                std::int64_t apv = 0;
                if (entries[f].has_apv) apv = rng.binomial(count, p.apv_ratios[f]);
                ev.page_type = entries[f].page;
                for (std::int64_t c = 0; c < count; ++c) {
                    ev.timestamp = t0 + 1.0 + static_cast<double>(rng.uniform_index(1500));
                    ev.event = entries[f].kind;
                    out.push_back(ev);
                }
                for (std::int64_t aa = 0; aa < apv; ++aa) {
                    ev.timestamp = t0 + 1.0 + static_cast<double>(rng.uniform_index(1500));
                    ev.event = EventKind::apv;
                    out.push_back(ev);
                }
            }
        }
    }
}

std::string user_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%07zu", index);
    return buf;
}

} // namespace

Scenario parse_scenario_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidSpec("scenario is not a JSON object");

    Scenario s;
    try {
        if (!j.contains("n_users") || !j["n_users"].is_number_integer() ||
            j["n_users"].get<std::int64_t>() < 1)
            throw InvalidSpec("scenario needs a positive integer n_users");
        s.n_users = j["n_users"].get<std::size_t>();
        s.definition_period = period_from_json(j.value("definition_period", json()), "definition_period");
        s.experiment_period = period_from_json(j.value("experiment_period", json()), "experiment_period");
        s.unseen_fraction = j.value("unseen_fraction", 0.0);
        s.dropout_fraction = j.value("dropout_fraction", 0.0);
        s.test_split = j.value("test_split", 0.5);

        if (!j.contains("archetypes") || !j["archetypes"].is_array())
            throw InvalidSpec("scenario needs an archetypes array");
        for (const auto& a : j["archetypes"]) {
            ArchetypeSpec spec;
            spec.name = a.value("name", std::string());
            spec.weight = a.value("weight", 0.0);
            spec.days_per_week = a.value("days_per_week", 0.0);
            spec.sessions_per_day = a.value("sessions_per_day", 1.0);
            spec.rate_dispersion = a.value("rate_dispersion", 0.3);
            if (a.contains("rates"))
                for (const auto& [key, rate] : a["rates"].items()) spec.rates[key] = rate.get<double>();
            s.archetypes.push_back(std::move(spec));
        }
        if (j.contains("injections"))
            for (const auto& inj : j["injections"]) {
                EffectInjection e;
                e.archetype = inj.value("archetype", std::string());
                e.metric = inj.value("metric", std::string());
                e.multiplier = inj.value("multiplier", 1.0);
                s.injections.push_back(std::move(e));
            }
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("malformed scenario: ") + e.what());
    }
    validate_scenario(s);
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario_json(ss.str());
}

void validate_scenario(const Scenario& s) {
    if (s.n_users < 1) throw InvalidSpec("n_users must be >= 1");
    if (s.archetypes.empty()) throw InvalidSpec("at least one archetype required");
    double total = 0;
    for (const auto& a : s.archetypes) {
        if (a.name.empty()) throw InvalidSpec("archetype without a name");
        if (a.weight <= 0 || a.weight >= 1.0 + 1e-9)
            throw InvalidSpec("archetype weight must lie in (0,1): " + a.name);
        if (a.days_per_week <= 0 || a.days_per_week > 7)
            throw InvalidSpec("days_per_week must lie in (0,7]: " + a.name);
        if (a.sessions_per_day < 1) throw InvalidSpec("sessions_per_day must be >= 1: " + a.name);
        if (a.rate_dispersion < 0) throw InvalidSpec("rate_dispersion must be >= 0: " + a.name);
        compile_rates(a); // validates keys and apv/cpv pairing
        total += a.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidSpec("archetype weights must sum to 1");
    if (s.unseen_fraction < 0 || s.dropout_fraction < 0 ||
        s.unseen_fraction + s.dropout_fraction > 1.0)
        throw InvalidSpec("unseen_fraction + dropout_fraction must stay within [0,1]");
    if (s.test_split <= 0 || s.test_split >= 1) throw InvalidSpec("test_split must lie in (0,1)");
    validate_period_pair(s.definition_period, s.experiment_period);
    // generation places whole sessions inside single days
    if (s.definition_period.end - s.definition_period.start < 86400 ||
        s.experiment_period.end - s.experiment_period.start < 86400)
        throw InvalidSpec("scenario periods must span at least one whole day");
    for (const auto& inj : s.injections) {
        if (inj.multiplier <= 0) throw InvalidSpec("injection multiplier must be > 0");
        bool known = false;
        for (const auto& a : s.archetypes) known = known || a.name == inj.archetype;
        if (!known) throw UnknownArchetype("injection targets unknown archetype " + inj.archetype);
    }
}

void generate_cohort_stream(const Scenario& s, std::uint64_t seed, const UserEventsFn& fn) {
    validate_scenario(s);
    std::vector<double> weights;
    std::vector<std::vector<RateEntry>> entries;
    for (const auto& a : s.archetypes) {
        weights.push_back(a.weight);
        entries.push_back(compile_rates(a));
    }

    for (std::size_t i = 0; i < s.n_users; ++i) {
        Rng meta(mix_seed(seed, 1000, i));
        TruthRow row;
        row.user_id = user_name(i);
        row.archetype = static_cast<int>(meta.discrete(weights));
        const double u = meta.next_double();
        if (u < s.unseen_fraction)
            row.status = 3;
        else if (u < s.unseen_fraction + s.dropout_fraction)
            row.status = 2;
        else
            row.status = 1;

        const auto& arch = s.archetypes[static_cast<std::size_t>(row.archetype)];
        const auto& ent = entries[static_cast<std::size_t>(row.archetype)];
        Rng pers_rng(mix_seed(seed, 1003, i));
        Personality pers = draw_personality(arch, ent, pers_rng);

        std::vector<EventRecord> def_events, exp_events;
        if (row.status != 3) {
            Rng rng(mix_seed(seed, 1001, i));
            generate_period_events(row.user_id, pers, ent, s.definition_period, rng, def_events);
        }
        if (row.status != 2) {
            Rng rng(mix_seed(seed, 1002, i));
            generate_period_events(row.user_id, pers, ent, s.experiment_period, rng, exp_events);
        }
        fn(row, std::move(def_events), std::move(exp_events));
    }
}

Cohort generate_cohort(const Scenario& s, std::uint64_t seed) {
    Cohort cohort;
    generate_cohort_stream(s, seed,
                           [&](const TruthRow& row, std::vector<EventRecord>&& def_events,
                               std::vector<EventRecord>&& exp_events) {
                               cohort.truth.push_back(row);
                               for (auto& ev : def_events) cohort.definition_events.push_back(std::move(ev));
                               for (auto& ev : exp_events) cohort.experiment_events.push_back(std::move(ev));
                           });
    return cohort;
}

Arm arm_for_user(std::uint64_t seed, const std::string& user_id, double test_split) {
    Rng rng(mix_seed(seed, 1005, fnv1a64(user_id)));
    return rng.bernoulli(test_split) ? Arm::test : Arm::control;
}

std::map<std::string, Arm> assign_arms(std::span<const TruthRow> truth, double test_split,
                                       std::uint64_t seed) {
    std::map<std::string, Arm> arms;
    for (const auto& row : truth)
        arms[row.user_id] = arm_for_user(seed, row.user_id, test_split);
    return arms;
}

namespace {

bool injection_matches(const EffectInjection& inj, const EventRecord& ev) {
    if (ev.event == EventKind::session_start) return false;
    if (inj.metric == "cpv") return ev.event == EventKind::cpv;
    if (inj.metric == "apv") return ev.event == EventKind::apv;
    if (inj.metric == "click") return ev.event == EventKind::click;
    const auto colon = inj.metric.find(':');
    if (colon == std::string::npos) return false;
    return ev.page_type == inj.metric.substr(0, colon) &&
           event_name(ev.event) == inj.metric.substr(colon + 1);
}

} // namespace

std::vector<EventRecord> inject_effects(std::vector<EventRecord> events,
                                        const std::map<std::string, int>& user_archetype,
                                        std::span<const std::string> archetype_names,
                                        std::span<const EffectInjection> injections,
                                        const std::map<std::string, Arm>& arms,
                                        std::uint64_t seed) {
    // resolve injection targets to archetype indices once
    std::vector<int> targets;
    for (const auto& inj : injections) {
        int target = -1;
        for (std::size_t a = 0; a < archetype_names.size(); ++a)
            if (archetype_names[a] == inj.archetype) target = static_cast<int>(a);
        if (target < 0) throw UnknownArchetype("injection targets unknown archetype " + inj.archetype);
        targets.push_back(target);
    }

    std::vector<EventRecord> out;
    out.reserve(events.size());
    std::map<std::string, Rng> user_rngs;
    for (auto& ev : events) {
        auto arm_it = arms.find(ev.user_id);
        if (arm_it == arms.end())
            throw DataError("inject_effects: no arm assignment for user " + ev.user_id);
        ev.arm = arm_it->second;

        const EffectInjection* hit = nullptr;
        if (ev.arm == Arm::test && !injections.empty()) {
            auto arch_it = user_archetype.find(ev.user_id);
            if (arch_it == user_archetype.end())
                throw DataError("inject_effects: unknown archetype for user " + ev.user_id);
            for (std::size_t ii = 0; ii < injections.size(); ++ii) {
                if (targets[ii] == arch_it->second && injection_matches(injections[ii], ev)) {
                    hit = &injections[ii];
                    break;
                }
            }
        }
        if (!hit) {
            out.push_back(std::move(ev));
            continue;
        }
        auto rng_it = user_rngs.find(ev.user_id);
        if (rng_it == user_rngs.end())
            rng_it = user_rngs.emplace(ev.user_id, Rng(mix_seed(seed, 1004, fnv1a64(ev.user_id)))).first;
        Rng& rng = rng_it->second;

        const double m = hit->multiplier;
        if (m < 1.0) {
            if (rng.bernoulli(m)) out.push_back(std::move(ev));
        } else {
            const auto copies = static_cast<std::int64_t>(std::floor(m - 1.0));
            const double frac = m - 1.0 - static_cast<double>(copies);
            const std::int64_t total = 1 + copies + (rng.bernoulli(frac) ? 1 : 0);
            for (std::int64_t c = 0; c < total; ++c) out.push_back(ev);
        }
    }
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw DimensionMismatch("adjusted_rand_index: size mismatch");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;

    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> row, col;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        row[a[i]] += 1;
        col[b[i]] += 1;
    }
    auto choose2 = [](double x) { return x * (x - 1) / 2.0; };
    double sum_joint = 0, sum_row = 0, sum_col = 0;
    for (const auto& [k, v] : joint) sum_joint += choose2(v);
    for (const auto& [k, v] : row) sum_row += choose2(v);
    for (const auto& [k, v] : col) sum_col += choose2(v);
    const double expected = sum_row * sum_col / choose2(n);
    const double max_index = (sum_row + sum_col) / 2.0;
    if (max_index == expected) return 1.0; // both labelings trivial
    return (sum_joint - expected) / (max_index - expected);
}

} // namespace segex
