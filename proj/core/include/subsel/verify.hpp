#ifndef SUBSEL_VERIFY_HPP
#define SUBSEL_VERIFY_HPP

#include <string>
#include <vector>

#include "json.hpp"

namespace subsel::verify {

struct PropertyResult {
    std::string name;
    bool pass = false;
    nlohmann::json stats; // measured quantities behind the verdict
};

// Registered property names, in execution order.
std::vector<std::string> property_names();

// Run one named property. quick trims instance counts and marks the stats.
PropertyResult run_property(const std::string& name, bool quick = false);

// Run all (or the named subset); unknown names raise ConfigError.
std::vector<PropertyResult> run_properties(const std::vector<std::string>& only = {},
                                           bool quick = false);

// First-order parameter update error against exact retraining for one added
// point, averaged over `probes` candidates at each subset size in `sizes`.
// Exposed for the log-log slope checks.
std::vector<double> lemma1_errors(const std::vector<std::size_t>& sizes, std::size_t probes,
                                  std::size_t replicates, std::uint64_t seed);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<std::size_t>& x, const std::vector<double>& y);

} // namespace subsel::verify

#endif
