#include "alforge/dataset.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "alforge/rng.hpp"

namespace alforge {

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.features = features.take_rows(idx);
    out.feature_names = feature_names;
    out.name = name;
    if (has_labels()) {
        out.labels.reserve(idx.size());
        for (std::size_t i : idx) out.labels.push_back(labels[i]);
    }
    if (!quadrants.empty()) {
        out.quadrants.reserve(idx.size());
        for (std::size_t i : idx) out.quadrants.push_back(quadrants[i]);
    }
    return out;
}

void Dataset::validate() const {
    if (width() < 1) throw DataError("dataset '" + name + "': needs at least one feature");
    if (!features.all_finite()) throw DataError("dataset '" + name + "': non-finite feature value");
    if (has_labels()) {
        if (labels.size() != size()) throw DataError("dataset '" + name + "': label count mismatch");
        for (int y : labels)
            if (y != 0 && y != 1) throw DataError("dataset '" + name + "': non-binary label");
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) cells.push_back(cell);
    if (!line.empty() && line.back() == delim) cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno == 0;
}

}  // namespace

Dataset load_csv(const std::string& path, const ColumnRef& label_column, char delimiter,
                 const std::vector<std::string>& ignore_columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line)) throw DataError("'" + path + "': empty file");
    const auto header = split_line(header_line, delimiter);

    std::vector<std::string> names;
    names.reserve(header.size());
    for (const auto& h : header) names.push_back(trim(h));

    std::size_t label_idx = names.size();
    if (std::holds_alternative<std::string>(label_column)) {
        const auto& want = std::get<std::string>(label_column);
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == want) label_idx = i;
        if (label_idx == names.size())
            throw DataError("'" + path + "': no label column named '" + want + "'");
    } else {
        label_idx = std::get<std::size_t>(label_column);
        if (label_idx >= names.size())
            throw DataError("'" + path + "': label column index out of range");
    }

    std::vector<std::size_t> feature_cols;
    std::size_t quadrant_idx = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i == label_idx) continue;
        const bool ignored =
            std::find(ignore_columns.begin(), ignore_columns.end(), names[i]) != ignore_columns.end();
        if (ignored) {
            if (names[i] == "quadrant") quadrant_idx = i;
            continue;
        }
        feature_cols.push_back(i);
    }
    if (feature_cols.empty()) throw DataError("'" + path + "': no feature columns");

    Dataset ds;
    ds.name = path;
    for (std::size_t c : feature_cols) ds.feature_names.push_back(names[c]);

    std::vector<double> values;
    std::vector<int> labels, quadrants;
    std::string line;
    std::size_t row_no = 1;  // header is row 1
    std::size_t n_rows = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line, delimiter);
        if (cells.size() != names.size())
            throw DataError("'" + path + "' row " + std::to_string(row_no) + ": expected " +
                            std::to_string(names.size()) + " cells, got " + std::to_string(cells.size()));
        for (std::size_t c : feature_cols) {
            double v;
            if (!parse_double(cells[c], v))
                throw DataError("'" + path + "' row " + std::to_string(row_no) + ": column '" +
                                names[c] + "' is not numeric (categorical columns must be encoded "
                                "before loading)");
            if (!std::isfinite(v))
                throw DataError("'" + path + "' row " + std::to_string(row_no) + ": non-finite value");
            values.push_back(v);
        }
        double y;
        if (!parse_double(cells[label_idx], y) || (y != 0.0 && y != 1.0))
            throw DataError("'" + path + "' row " + std::to_string(row_no) +
                            ": label must be 0 or 1, got '" + trim(cells[label_idx]) + "'");
        labels.push_back(static_cast<int>(y));
        if (quadrant_idx < names.size()) {
            double q;
            if (parse_double(cells[quadrant_idx], q)) quadrants.push_back(static_cast<int>(q));
        }
        ++n_rows;
    }
    if (n_rows == 0) throw DataError("'" + path + "': no data rows");

    ds.features.rows = n_rows;
    ds.features.cols = feature_cols.size();
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    if (quadrants.size() == n_rows) ds.quadrants = std::move(quadrants);
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path, char delimiter) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < ds.width(); ++j) {
        out << (j ? std::string(1, delimiter) : "")
            << (j < ds.feature_names.size() ? ds.feature_names[j] : "x" + std::to_string(j + 1));
    }
    if (ds.has_labels()) out << delimiter << 'y';
    if (!ds.quadrants.empty()) out << delimiter << "quadrant";
    out << '\n';

    char buf[40];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.width(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
            out << (j ? std::string(1, delimiter) : "") << buf;
        }
        if (ds.has_labels()) out << delimiter << ds.labels[i];
        if (!ds.quadrants.empty()) out << delimiter << ds.quadrants[i];
        out << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

ZscoreStats zscore_fit(const Dataset& train) {
    if (train.size() == 0) throw DataError("zscore_fit: empty dataset");
    const std::size_t n = train.size(), m = train.width();
    ZscoreStats st;
    st.mean.assign(m, 0.0);
    st.stddev.assign(m, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) st.mean[j] += train.features(i, j);
    for (double& v : st.mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double d = train.features(i, j) - st.mean[j];
            st.stddev[j] += d * d;
        }
    for (double& v : st.stddev) v = std::sqrt(v / static_cast<double>(n));
    return st;
}

Dataset zscore_apply(const ZscoreStats& stats, const Dataset& ds) {
    if (stats.mean.size() != ds.width()) throw DimensionError("zscore_apply: feature width mismatch");
    Dataset out = ds;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.width(); ++j) {
            const double sd = stats.stddev[j];
            out.features(i, j) = sd > 0.0 ? (ds.features(i, j) - stats.mean[j]) / sd : 0.0;
        }
    return out;
}

std::pair<Dataset, ZscoreStats> zscore_fit_transform(const Dataset& train) {
    ZscoreStats st = zscore_fit(train);
    return {zscore_apply(st, train), std::move(st)};
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitRatios& ratios) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0)
        throw ConfigError("split: negative ratio");
    const double nd = static_cast<double>(n);
    const auto n_train = static_cast<std::size_t>(std::ceil(ratios.train * nd - 1e-9));
    const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * nd + 1e-9));
    if (n_train + n_val > n) throw ConfigError("split: sizes exceed dataset");
    return {n_train, n_val, n - n_train - n_val};
}

Split split(const Dataset& ds, const SplitRatios& ratios, std::uint64_t seed) {
    const auto sizes = split_sizes(ds.size(), ratios);
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);

    auto sorted_block = [&](std::size_t off, std::size_t len) {
        std::vector<std::size_t> idx(perm.begin() + off, perm.begin() + off + len);
        std::sort(idx.begin(), idx.end());
        return idx;
    };
    const auto train_idx = sorted_block(0, sizes[0]);
    const auto val_idx = sorted_block(sizes[0], sizes[1]);
    const auto test_idx = sorted_block(sizes[0] + sizes[1], sizes[2]);
    return {ds.subset(train_idx), ds.subset(val_idx), ds.subset(test_idx)};
}

double sigmoid_label_prob(double x1, double x2) {
    const double z = x1 * x2;
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

int quadrant_of(double x1, double x2) {
    return (x1 >= 0.0 ? 0 : 1) + (x2 >= 0.0 ? 0 : 2);
}

Dataset make_sigmoid_dataset(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ConfigError("make_sigmoid_dataset: n must be >= 1");
    Dataset ds;
    ds.name = "sigmoid";
    ds.feature_names = {"x1", "x2"};
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    ds.quadrants.resize(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = rng.uniform(-5.0, 5.0);
        const double x2 = rng.uniform(-5.0, 5.0);
        ds.features(i, 0) = x1;
        ds.features(i, 1) = x2;
        ds.labels[i] = rng.bernoulli(sigmoid_label_prob(x1, x2)) ? 1 : 0;
        ds.quadrants[i] = quadrant_of(x1, x2);
    }
    return ds;
}

}  // namespace alforge
