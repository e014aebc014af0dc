#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "alforge/matrix.hpp"

namespace alforge {

/// Tabular samples. Labels are 0/1 and either present for every row or absent
/// entirely. `quadrants` is generator metadata (ground-truth region ids for
/// the synthetic sigmoid data); empty for loaded datasets without the column.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<int> quadrants;
    std::vector<std::string> feature_names;
    std::string name;

    std::size_t size() const { return features.rows; }
    std::size_t width() const { return features.cols; }
    bool has_labels() const { return !labels.empty(); }

    Dataset subset(std::span<const std::size_t> idx) const;
    void validate() const;
};

using ColumnRef = std::variant<std::string, std::size_t>;

/// Parses a UTF-8 CSV with a header row. The label column (by name or
/// zero-based index) must hold only 0/1 values; every other retained column
/// must parse as a decimal number. Columns listed in `ignore_columns` are
/// dropped from the feature matrix; an ignored integer column named
/// "quadrant" is captured as metadata instead.
Dataset load_csv(const std::string& path, const ColumnRef& label_column, char delimiter = ',',
                 const std::vector<std::string>& ignore_columns = {});

/// Writes features, then the label column `y`, then (when present) the
/// `quadrant` metadata column. Numbers are emitted with 17 significant digits
/// so a reload reproduces the exact doubles.
void save_csv(const Dataset& ds, const std::string& path, char delimiter = ',');

struct ZscoreStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // population std; constant columns keep 0
};

/// Per-feature standardization fitted on the training split and reused
/// verbatim for validation/test/pool data. Constant features map to 0.
ZscoreStats zscore_fit(const Dataset& train);
Dataset zscore_apply(const ZscoreStats& stats, const Dataset& ds);
std::pair<Dataset, ZscoreStats> zscore_fit_transform(const Dataset& train);

struct SplitRatios {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

struct Split {
    Dataset train, val, test;
};

/// Random permutation split. The train share rounds up, validation rounds
/// down, and test takes the remaining rows; ratios must sum to 1 within 1e-9.
Split split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed);

/// Sizes only, exposed for direct verification of the rounding rule.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios);

/// P(y=1 | x) for the synthetic generator: sigma(x1 * x2).
double sigmoid_label_prob(double x1, double x2);

/// Quadrant id of a 2-D point: 0:(+,+) 1:(-,+) 2:(+,-) 3:(-,-).
int quadrant_of(double x1, double x2);

/// Two features uniform on [-5,5]^2, Bernoulli labels with p = sigma(x1*x2),
/// plus the ground-truth quadrant of every sample as metadata.
Dataset make_sigmoid_dataset(std::size_t n, std::uint64_t seed);

}  // namespace alforge
