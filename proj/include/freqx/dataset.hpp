#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqx/linalg.hpp"
#include "freqx/rng.hpp"

namespace freqx {

struct LabeledDataset {
    Mat samples;                             // n x d
    std::vector<std::size_t> labels;         // n, values in [0, class_count)
    std::size_t class_count = 0;
    std::vector<std::string> feature_names;  // d

    std::size_t size() const { return samples.rows; }
    std::size_t dim() const { return samples.cols; }

    void validate() const {
        if (labels.size() != samples.rows) throw std::invalid_argument("dataset: label count != sample count");
        if (feature_names.size() != samples.cols) throw std::invalid_argument("dataset: feature name count != dim");
        std::vector<bool> seen(class_count, false);
        for (auto l : labels) {
            if (l >= class_count) throw std::invalid_argument("dataset: label out of range");
            seen[l] = true;
        }
        for (std::size_t c = 0; c < class_count; ++c)
            if (!seen[c]) throw std::invalid_argument("dataset: class " + std::to_string(c) + " has no samples");
    }

    Vec sample(std::size_t i) const { return samples.row_vec(i); }

    // Restrict to a feature subset (order preserved as given).
    LabeledDataset select_features(const std::vector<std::size_t>& idx) const {
        LabeledDataset out;
        out.samples = Mat(samples.rows, idx.size());
        for (std::size_t i = 0; i < samples.rows; ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) out.samples(i, j) = samples(i, idx[j]);
        out.labels = labels;
        out.class_count = class_count;
        for (auto j : idx) out.feature_names.push_back(feature_names[j]);
        return out;
    }

    LabeledDataset select_rows(const std::vector<std::size_t>& rows) const {
        LabeledDataset out;
        out.samples = Mat(rows.size(), samples.cols);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < samples.cols; ++j) out.samples(i, j) = samples(rows[i], j);
        for (auto r : rows) out.labels.push_back(labels[r]);
        out.class_count = class_count;
        out.feature_names = feature_names;
        return out;
    }
};

struct TrainTestSplit {
    LabeledDataset train, test;
};

inline TrainTestSplit split_dataset(const LabeledDataset& data, double test_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(seed, "split");
    std::shuffle(idx.begin(), idx.end(), rng);
    std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + n_test);
    std::vector<std::size_t> train_idx(idx.begin() + n_test, idx.end());
    return {data.select_rows(train_idx), data.select_rows(test_idx)};
}

struct Standardizer {
    Vec mean, stddev;  // stddev 1.0 where the column is constant

    void fit(const Mat& m) {
        mean.assign(m.cols, 0.0);
        stddev.assign(m.cols, 0.0);
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) mean[j] += m(i, j);
        for (auto& v : mean) v /= static_cast<double>(m.rows);
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) {
                double d = m(i, j) - mean[j];
                stddev[j] += d * d;
            }
        for (auto& v : stddev) {
            v = std::sqrt(v / static_cast<double>(m.rows));
            if (v == 0.0) v = 1.0;
        }
    }

    void apply(Mat& m) const {
        for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = (m(i, j) - mean[j]) / stddev[j];
    }
};

// Standardize in place with statistics taken from the training split only.
inline Standardizer standardize(TrainTestSplit& split) {
    Standardizer s;
    s.fit(split.train.samples);
    s.apply(split.train.samples);
    s.apply(split.test.samples);
    return s;
}

// ---------------------------------------------------------------------------
// CSV ingestion. Header row required; the label column holds integer class
// ids. Declared categorical columns are one-hot encoded.

struct CsvConfig {
    std::string label_column = "label";
    std::vector<std::string> categorical_columns;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace detail

inline LabeledDataset load_csv(const std::string& path, const CsvConfig& config = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);

    std::optional<std::size_t> label_col;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == config.label_column) label_col = j;
    if (!label_col) throw std::runtime_error(path + ": label column '" + config.label_column + "' not found in header");

    std::set<std::size_t> categorical;
    for (const auto& name : config.categorical_columns) {
        bool found = false;
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) {
                categorical.insert(j);
                found = true;
            }
        if (!found) throw std::runtime_error(path + ": categorical column '" + name + "' not found in header");
    }

    std::vector<std::vector<std::string>> raw_rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error(path + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(header.size()));
        raw_rows.push_back(std::move(cells));
    }
    if (raw_rows.empty()) throw std::runtime_error(path + ": no data rows");

    // Category levels per categorical column, in sorted order for determinism.
    std::vector<std::vector<std::string>> levels(header.size());
    for (auto j : categorical) {
        std::set<std::string> s;
        for (const auto& r : raw_rows) s.insert(r[j]);
        levels[j].assign(s.begin(), s.end());
    }

    LabeledDataset out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == *label_col) continue;
        if (categorical.count(j)) {
            for (const auto& lv : levels[j]) out.feature_names.push_back(header[j] + "=" + lv);
        } else {
            out.feature_names.push_back(header[j]);
        }
    }

    std::size_t d = out.feature_names.size();
    out.samples = Mat(raw_rows.size(), d);
    std::size_t max_label = 0;
    for (std::size_t i = 0; i < raw_rows.size(); ++i) {
        const auto& r = raw_rows[i];
        std::size_t col = 0;
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (j == *label_col) continue;
            if (categorical.count(j)) {
                for (const auto& lv : levels[j]) out.samples(i, col++) = (r[j] == lv) ? 1.0 : 0.0;
            } else {
                try {
                    std::size_t pos = 0;
                    out.samples(i, col) = std::stod(r[j], &pos);
                    if (pos != r[j].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    throw std::runtime_error(path + ": row " + std::to_string(i + 2) + ", column '" + header[j] +
                                             "': non-numeric cell '" + r[j] + "'");
                }
                ++col;
            }
        }
        long lab;
        try {
            lab = std::stol(r[*label_col]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ": row " + std::to_string(i + 2) + ": non-integer label '" + r[*label_col] + "'");
        }
        if (lab < 0) throw std::runtime_error(path + ": row " + std::to_string(i + 2) + ": negative label");
        out.labels.push_back(static_cast<std::size_t>(lab));
        max_label = std::max(max_label, out.labels.back());
    }
    out.class_count = max_label + 1;
    out.validate();
    return out;
}

inline void save_csv(const LabeledDataset& data, const std::string& path, const std::string& label_column = "label") {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    for (const auto& name : data.feature_names) out << name << ',';
    out << label_column << '\n';
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", data.samples(i, j));
            out << buf << ',';
        }
        out << data.labels[i] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic generators

enum class SyntheticKind { TwoFeatureBlobs, PlantedSignal, ConceptBlocks };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::TwoFeatureBlobs;
    std::size_t n = 200;
    std::size_t d = 2;
    std::size_t class_count = 2;
    double noise_sigma = 0.5;
    std::vector<std::size_t> informative_indices;  // PlantedSignal
    std::size_t block_size = 5;                    // ConceptBlocks
};

inline LabeledDataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    for (auto j : spec.informative_indices)
        if (j >= spec.d) throw std::invalid_argument("synthetic: informative index out of range");
    auto rng = make_rng(seed, "synthetic");
    std::normal_distribution<double> gauss(0.0, 1.0);

    LabeledDataset out;
    out.class_count = spec.class_count;
    for (std::size_t j = 0; j < spec.d; ++j) out.feature_names.push_back("f" + std::to_string(j));
    out.samples = Mat(spec.n, spec.d);
    out.labels.resize(spec.n);

    switch (spec.kind) {
        case SyntheticKind::TwoFeatureBlobs: {
            // Class centers on a circle, separation 4 units.
            for (std::size_t i = 0; i < spec.n; ++i) {
                std::size_t c = i % spec.class_count;
                double angle = 2.0 * M_PI * static_cast<double>(c) / static_cast<double>(spec.class_count);
                Vec center(spec.d, 0.0);
                center[0] = 2.0 * std::cos(angle);
                if (spec.d > 1) center[1] = 2.0 * std::sin(angle);
                for (std::size_t j = 0; j < spec.d; ++j)
                    out.samples(i, j) = center[j] + spec.noise_sigma * gauss(rng);
                out.labels[i] = c;
            }
            break;
        }
        case SyntheticKind::PlantedSignal: {
            // Labels depend only on informative features: linear logits + noise.
            if (spec.informative_indices.empty())
                throw std::invalid_argument("synthetic: PlantedSignal needs informative_indices");
            // Fixed per-class weight vectors over the informative coordinates.
            std::vector<Vec> w(spec.class_count, Vec(spec.informative_indices.size()));
            for (auto& wc : w)
                for (auto& v : wc) v = gauss(rng);
            for (std::size_t i = 0; i < spec.n; ++i) {
                for (std::size_t j = 0; j < spec.d; ++j) out.samples(i, j) = gauss(rng);
                Vec logits(spec.class_count, 0.0);
                for (std::size_t c = 0; c < spec.class_count; ++c) {
                    for (std::size_t k = 0; k < spec.informative_indices.size(); ++k)
                        logits[c] += w[c][k] * out.samples(i, spec.informative_indices[k]);
                    logits[c] += spec.noise_sigma * gauss(rng);
                }
                out.labels[i] = argmax(logits);
            }
            break;
        }
        case SyntheticKind::ConceptBlocks: {
            // Contiguous feature blocks; each class activates a fixed subset of
            // blocks with a block-specific pattern.
            std::size_t blocks = spec.d / spec.block_size;
            if (blocks == 0) throw std::invalid_argument("synthetic: d < block_size");
            std::vector<Vec> pattern(blocks, Vec(spec.block_size));
            for (auto& p : pattern)
                for (auto& v : p) v = 2.0 * gauss(rng);
            for (std::size_t i = 0; i < spec.n; ++i) {
                std::size_t c = i % spec.class_count;
                for (std::size_t j = 0; j < spec.d; ++j) out.samples(i, j) = spec.noise_sigma * gauss(rng);
                for (std::size_t b = 0; b < blocks; ++b) {
                    // class c activates block b when b ≡ c (mod class_count)
                    if (b % spec.class_count != c) continue;
                    for (std::size_t k = 0; k < spec.block_size; ++k)
                        out.samples(i, b * spec.block_size + k) += pattern[b][k];
                }
                out.labels[i] = c;
            }
            break;
        }
    }
    // Ensure every class is present (n >= class_count suffices with round-robin
    // kinds; PlantedSignal can miss a class on tiny n).
    std::vector<bool> seen(out.class_count, false);
    for (auto l : out.labels) seen[l] = true;
    for (std::size_t c = 0; c < out.class_count; ++c)
        if (!seen[c]) out.labels[c % out.labels.size()] = c;
    out.validate();
    return out;
}

}  // namespace freqx
