#ifndef SEGEX_SEGMENTS_HPP
#define SEGEX_SEGMENTS_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "segex/feature_matrix.hpp"
#include "segex/kmeans.hpp"

namespace segex {

struct SegmentProfile {
    int id = 0;
    std::string name;
    std::size_t size = 0;
    std::vector<std::string> metrics; // per-user metric space (stage-2 columns)
    std::vector<double> means;        // segment mean per metric
    std::vector<double> z;            // vs population, shared population stats
    bool empty = false;               // emitted with flag rather than failing
    bool degenerate_z = false;        // some population sd was 0
};

// Per-segment means of the original per-session / per-week metrics plus
// z-scores against the whole training population.
std::vector<SegmentProfile> profile_segments(const KMeansModel& model,
                                             const FeatureMatrix& stage2,
                                             std::span<const int> labels);

// "quotes_cpv_per_session" -> "Quotes"; frequency metrics -> "Frequency"
std::string metric_family(const std::string& column);

// Auto-name from the strongest metric families: up to two families with
// z >= threshold joined by " & "; a single qualifier with everything else
// negative earns an "Only" suffix; no qualifier at all means "Tourists".
// Manual overrides win; names are deduplicated with numeric suffixes.
void name_segments(std::vector<SegmentProfile>& profiles, double z_threshold = 1.0,
                   const std::map<int, std::string>& overrides = {});

} // namespace segex

#endif
