#ifndef SEGEX_SYNTH_HPP
#define SEGEX_SYNTH_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "segex/ingest.hpp"

namespace segex {

// One behavioral archetype: visit-frequency parameters plus per-session event
// rates keyed "page:event" (e.g. "quotes:cpv"). rate_dispersion is the sigma
// of a per-user lognormal multiplier on every rate (negative-binomial-style
// overdispersion).
struct ArchetypeSpec {
    std::string name;
    double weight = 0;
    double days_per_week = 0;
    double sessions_per_day = 1;
    double rate_dispersion = 0.3;
    std::map<std::string, double> rates;
};

struct EffectInjection {
    std::string archetype;
    std::string metric;    // cpv | apv | click | "page:event"
    double multiplier = 1; // > 0; multiplies the test arm's event rate
};

struct Scenario {
    std::size_t n_users = 0;
    PeriodSpec definition_period;
    PeriodSpec experiment_period;
    double unseen_fraction = 0;  // experiment-only users (status 3)
    double dropout_fraction = 0; // definition-only users (status 2)
    double test_split = 0.5;     // probability of the test arm
    std::vector<ArchetypeSpec> archetypes;
    std::vector<EffectInjection> injections;
};

Scenario load_scenario_file(const std::string& path);
Scenario parse_scenario_json(const std::string& text);
void validate_scenario(const Scenario& s); // InvalidSpec on bad fields

struct TruthRow {
    std::string user_id;
    int archetype = 0;
    int status = 1; // 1 both periods, 2 definition only, 3 experiment only
};

struct Cohort {
    std::vector<EventRecord> definition_events; // arm none
    std::vector<EventRecord> experiment_events; // arm none until injection
    std::vector<TruthRow> truth;
};

// Seed-deterministic: every user draws from sub-seeds of the root, so the
// output is independent of generation order.
Cohort generate_cohort(const Scenario& s, std::uint64_t seed);

// streaming form used by the CLI and large runs; events arrive per user
using UserEventsFn = std::function<void(const TruthRow& user,
                                        std::vector<EventRecord>&& definition_events,
                                        std::vector<EventRecord>&& experiment_events)>;
void generate_cohort_stream(const Scenario& s, std::uint64_t seed, const UserEventsFn& fn);

// hash-seeded Bernoulli split, stable across generation order
Arm arm_for_user(std::uint64_t seed, const std::string& user_id, double test_split);

std::map<std::string, Arm> assign_arms(std::span<const TruthRow> truth, double test_split,
                                       std::uint64_t seed);

// Stamps arms onto the stream and applies injections to test-arm events of
// the targeted archetypes: multiplier < 1 thins events (exact Poisson rate
// scaling), multiplier > 1 replicates them (mean-exact, overdispersed).
std::vector<EventRecord> inject_effects(std::vector<EventRecord> events,
                                        const std::map<std::string, int>& user_archetype,
                                        std::span<const std::string> archetype_names,
                                        std::span<const EffectInjection> injections,
                                        const std::map<std::string, Arm>& arms,
                                        std::uint64_t seed);

// pair-counting adjusted Rand index between two labelings of the same items
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

} // namespace segex

#endif
