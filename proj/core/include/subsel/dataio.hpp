#ifndef SUBSEL_DATAIO_HPP
#define SUBSEL_DATAIO_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subsel/dataset.hpp"

namespace subsel::dataio {

// Target column by header name or 0-based position.
struct CsvSchema {
    std::string target_name;              // used when has_header and target_index unset
    std::optional<std::size_t> target_index;
    Task task = Task::regression;
    bool has_header = true;
};

// Comma-delimited, optional single header row, decimal-point reals.
// Classification targets are label-encoded in first-appearance order.
Dataset load_csv(const std::string& path, const CsvSchema& schema);
Dataset parse_csv(const std::string& text, const CsvSchema& schema); // same, from memory

struct SplitSpec {
    double test_fraction = 0.2;
    double val_fraction_of_remainder = 0.2;
    std::uint64_t seed = 0;
};

struct SplitData {
    Dataset train;
    Dataset validation;
    Dataset test;
    std::vector<std::size_t> train_idx, validation_idx, test_idx; // into the source
};

// floor(n * test_fraction) test rows, floor(val_fraction * remainder)
// validation rows, remainder train; seeded permutation. ConfigError when a
// split comes out empty.
SplitData split(const Dataset& data, const SplitSpec& spec);

// Per-column affine map fitted on the training split only. Constant columns
// store sd = 1 and map to zero.
class Standardizer {
public:
    static Standardizer fit(const Dataset& train);
    Dataset apply(const Dataset& data) const;
    void apply_in_place(Dataset& data) const;

    const std::vector<double>& means() const { return mean_; }
    const std::vector<double>& sds() const { return sd_; }

private:
    std::vector<double> mean_;
    std::vector<double> sd_;
};

enum class SyntheticKind { outlier_regression, hetero_regression, two_gaussians, multiclass_blobs };

SyntheticKind synthetic_kind_from_name(const std::string& name);
std::string synthetic_kind_name(SyntheticKind kind);

struct SyntheticParams {
    // outlier_regression
    double outlier_fraction = 0.1;
    double outlier_multiplier = 10.0;
    double noise_sd = 0.3;
    // hetero_regression: a dense low-radius core plus a sparse informative
    // tail, with noise sd = noise_sd * (1 + hetero_scale * ||x|| / sqrt(d))
    double hetero_scale = 0.6;
    double core_fraction = 0.7;
    double core_scale = 0.25;
    double tail_scale = 2.5;
    // two_gaussians / multiclass_blobs
    double separation = 2.0;
    double label_noise = 0.1;
    std::size_t num_classes = 3; // multiclass_blobs only
};

// Generation details for tests and diagnostics.
struct SyntheticMeta {
    std::vector<double> beta;          // regression coefficient (regression kinds)
    std::vector<std::uint8_t> outlier; // 1 where inflated noise / flipped label
};

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed,
                      const SyntheticParams& params = {}, SyntheticMeta* meta = nullptr);

// FNV-1a over the dataset's binary content; manifests fingerprint with this.
std::uint64_t content_hash(const Dataset& data);

} // namespace subsel::dataio

#endif
