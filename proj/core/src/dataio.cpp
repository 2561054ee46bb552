#include "subsel/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "subsel/rng.hpp"

namespace subsel::dataio {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const std::string t = trim(cell);
    if (t.empty()) throw ParseError("empty cell at row " + std::to_string(row) + ", column " +
                                        std::to_string(col),
                                    row, col);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) {
        throw ParseError("unparseable numeric cell '" + t + "' at row " + std::to_string(row) +
                             ", column " + std::to_string(col),
                         row, col);
    }
    return v;
}

} // namespace

Dataset parse_csv(const std::string& text, const CsvSchema& schema) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(split_line(line));
    }
    if (rows.empty()) throw ConfigError("csv: file has no rows");

    std::size_t first_data = 0;
    std::size_t target_col;
    const std::size_t ncols = rows[0].size();
    if (schema.has_header) {
        first_data = 1;
        if (schema.target_index) {
            target_col = *schema.target_index;
        } else {
            auto& hdr = rows[0];
            auto it = std::find_if(hdr.begin(), hdr.end(), [&](const std::string& h) {
                return trim(h) == schema.target_name;
            });
            if (it == hdr.end())
                throw ConfigError("csv: target column '" + schema.target_name + "' not in header");
            target_col = static_cast<std::size_t>(it - hdr.begin());
        }
    } else {
        if (!schema.target_index) throw ConfigError("csv: headerless file needs a target index");
        target_col = *schema.target_index;
    }
    if (target_col >= ncols) throw ConfigError("csv: target column index out of range");
    if (rows.size() <= first_data) throw ConfigError("csv: empty data section");
    if (ncols < 2) throw ConfigError("csv: need at least one feature column");

    const std::size_t n = rows.size() - first_data;
    const std::size_t d = ncols - 1;

    Dataset data;
    data.task = schema.task;
    data.features = numkit::DenseMatrix(n, d);
    data.targets.resize(n);

    std::unordered_map<std::string, double> label_codes;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cells = rows[first_data + i];
        if (cells.size() != ncols) {
            throw ParseError("row " + std::to_string(i) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(ncols),
                             i, cells.size());
        }
        std::size_t jj = 0;
        for (std::size_t j = 0; j < ncols; ++j) {
            if (j == target_col) continue;
            data.features(i, jj++) = parse_cell(cells[j], i, j);
        }
        if (schema.task == Task::classification) {
            const std::string label = trim(cells[target_col]);
            if (label.empty()) throw ParseError("empty label", i, target_col);
            auto [it, inserted] =
                label_codes.try_emplace(label, static_cast<double>(label_codes.size()));
            (void)inserted;
            data.targets[i] = it->second;
        } else {
            data.targets[i] = parse_cell(cells[target_col], i, target_col);
        }
    }
    if (schema.task == Task::classification) {
        data.num_classes = label_codes.size();
        if (data.num_classes < 2) throw ConfigError("csv: classification needs >= 2 classes");
    }
    data.validate();
    return data;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("csv: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), schema);
}

SplitData split(const Dataset& data, const SplitSpec& spec) {
    const std::size_t n = data.n();
    if (n < 5) throw ConfigError("split: need at least 5 rows");
    if (spec.test_fraction <= 0.0 || spec.test_fraction >= 1.0 ||
        spec.val_fraction_of_remainder <= 0.0 || spec.val_fraction_of_remainder >= 1.0) {
        throw ConfigError("split: fractions must lie in (0, 1)");
    }
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_fraction));
    const std::size_t rem = n - n_test;
    const auto n_val =
        static_cast<std::size_t>(std::floor(static_cast<double>(rem) * spec.val_fraction_of_remainder));
    const std::size_t n_train = rem - n_val;
    if (n_test == 0 || n_val == 0 || n_train == 0) {
        throw ConfigError("split: configured fractions produce an empty split");
    }

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(perm);

    SplitData out;
    out.test_idx.assign(perm.begin(), perm.begin() + static_cast<long>(n_test));
    out.validation_idx.assign(perm.begin() + static_cast<long>(n_test),
                              perm.begin() + static_cast<long>(n_test + n_val));
    out.train_idx.assign(perm.begin() + static_cast<long>(n_test + n_val), perm.end());
    out.test = data.subset_rows(out.test_idx);
    out.validation = data.subset_rows(out.validation_idx);
    out.train = data.subset_rows(out.train_idx);
    return out;
}

Standardizer Standardizer::fit(const Dataset& train) {
    const std::size_t n = train.n();
    const std::size_t d = train.dim();
    if (n == 0) throw ContractError("standardizer: empty training split");
    Standardizer s;
    s.mean_.assign(d, 0.0);
    s.sd_.assign(d, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = train.row(i);
        for (std::size_t j = 0; j < d; ++j) s.mean_[j] += r[j];
    }
    for (double& m : s.mean_) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = train.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - s.mean_[j];
            var[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(n));
        s.sd_[j] = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

void Standardizer::apply_in_place(Dataset& data) const {
    if (data.dim() != mean_.size()) throw ContractError("standardizer: dimension mismatch");
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) {
            data.features(i, j) = (data.features(i, j) - mean_[j]) / sd_[j];
        }
    }
}

Dataset Standardizer::apply(const Dataset& data) const {
    Dataset out = data;
    apply_in_place(out);
    return out;
}

SyntheticKind synthetic_kind_from_name(const std::string& name) {
    if (name == "outlier_regression") return SyntheticKind::outlier_regression;
    if (name == "hetero_regression") return SyntheticKind::hetero_regression;
    if (name == "two_gaussians") return SyntheticKind::two_gaussians;
    if (name == "multiclass_blobs") return SyntheticKind::multiclass_blobs;
    throw ConfigError("unknown synthetic kind '" + name + "'");
}

std::string synthetic_kind_name(SyntheticKind kind) {
    switch (kind) {
    case SyntheticKind::outlier_regression: return "outlier_regression";
    case SyntheticKind::hetero_regression: return "hetero_regression";
    case SyntheticKind::two_gaussians: return "two_gaussians";
    case SyntheticKind::multiclass_blobs: return "multiclass_blobs";
    }
    return "unknown";
}

Dataset gen_synthetic(SyntheticKind kind, std::size_t n, std::size_t d, std::uint64_t seed,
                      const SyntheticParams& params, SyntheticMeta* meta) {
    if (n < 1 || d < 1) throw ConfigError("gen_synthetic: need n >= 1 and d >= 1");
    Rng rng(seed);
    Dataset data;
    data.features = numkit::DenseMatrix(n, d);
    data.targets.resize(n);

    SyntheticMeta local;
    local.outlier.assign(n, 0);

    switch (kind) {
    case SyntheticKind::outlier_regression: {
        data.task = Task::regression;
        local.beta.resize(d);
        for (double& b : local.beta) b = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            double signal = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double x = rng.normal();
                data.features(i, j) = x;
                signal += x * local.beta[j];
            }
            double sd = params.noise_sd;
            if (params.outlier_fraction > 0.0 && rng.bernoulli(params.outlier_fraction)) {
                sd *= params.outlier_multiplier;
                local.outlier[i] = 1;
            }
            data.targets[i] = signal + rng.normal(0.0, sd);
        }
        break;
    }
    case SyntheticKind::hetero_regression: {
        // Most points sit in a tight redundant core; a minority spread wide
        // and carry most of the information. Noise grows with the radius.
        data.task = Task::regression;
        local.beta.resize(d);
        for (double& b : local.beta) b = rng.normal();
        for (std::size_t i = 0; i < n; ++i) {
            const bool core = rng.bernoulli(params.core_fraction);
            const double scale = core ? params.core_scale : params.tail_scale;
            local.outlier[i] = core ? 0 : 1;
            double signal = 0.0;
            double radius_sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double x = scale * rng.normal();
                data.features(i, j) = x;
                signal += x * local.beta[j];
                radius_sq += x * x;
            }
            const double sd =
                params.noise_sd *
                (1.0 + params.hetero_scale * std::sqrt(radius_sq / static_cast<double>(d)));
            data.targets[i] = signal + rng.normal(0.0, sd);
        }
        break;
    }
    case SyntheticKind::two_gaussians: {
        data.task = Task::classification;
        data.num_classes = 2;
        std::vector<double> dir(d);
        double norm = 0.0;
        for (double& v : dir) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (double& v : dir) v /= norm;
        for (std::size_t i = 0; i < n; ++i) {
            const double cls = rng.bernoulli(0.5) ? 1.0 : 0.0;
            const double sign = cls > 0.5 ? 1.0 : -1.0;
            for (std::size_t j = 0; j < d; ++j) {
                data.features(i, j) = sign * 0.5 * params.separation * dir[j] + rng.normal();
            }
            double label = cls;
            if (params.label_noise > 0.0 && rng.bernoulli(params.label_noise)) {
                label = 1.0 - label;
                local.outlier[i] = 1;
            }
            data.targets[i] = label;
        }
        break;
    }
    case SyntheticKind::multiclass_blobs: {
        data.task = Task::classification;
        const std::size_t k = std::max<std::size_t>(params.num_classes, 2);
        data.num_classes = k;
        // one unit direction per class
        std::vector<std::vector<double>> centers(k, std::vector<double>(d));
        for (auto& c : centers) {
            double norm = 0.0;
            for (double& v : c) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : c) v = v / norm * params.separation;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto cls = rng.below(k);
            for (std::size_t j = 0; j < d; ++j)
                data.features(i, j) = centers[cls][j] + rng.normal();
            double label = static_cast<double>(cls);
            if (params.label_noise > 0.0 && rng.bernoulli(params.label_noise)) {
                label = static_cast<double>(rng.below(k));
                local.outlier[i] = 1;
            }
            data.targets[i] = label;
        }
        break;
    }
    }

    data.validate();
    if (meta) *meta = std::move(local);
    return data;
}

std::uint64_t content_hash(const Dataset& data) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a 64 offset basis
    auto feed = [&h](const void* p, std::size_t bytes) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    const std::uint64_t shape[3] = {data.n(), data.dim(), data.num_classes};
    feed(shape, sizeof(shape));
    feed(data.features.entries().data(), data.features.entries().size() * sizeof(double));
    feed(data.targets.data(), data.targets.size() * sizeof(double));
    return h;
}

} // namespace subsel::dataio
