#include "imfas/meta_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "imfas/errors.hpp"
#include "imfas/rng.hpp"

namespace imfas {

namespace {

double sigmoid(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("could not parse number '" + s + "' in " + where);
    }
}

long parse_index(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size() || v < 0) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("could not parse index '" + s + "' in " + where);
    }
}

std::string zero_pad(int value, int width) {
    std::ostringstream out;
    out << value;
    std::string s = out.str();
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

Vec MetaDataset::final_performances(int dataset) const {
    return performances.at(dataset).col(num_fidelities() - 1);
}

void MetaDataset::validate() const {
    const int m = num_datasets();
    const int a = num_algorithms();
    const int n = num_fidelities();
    if (m < 1) throw ValidationError("meta-dataset has no datasets");
    if (a < 2) throw ValidationError("meta-dataset needs at least two algorithms");
    if (n < 2) throw ValidationError("meta-dataset needs at least two fidelities");
    if (meta_features.rows() != m) {
        throw ValidationError("meta-feature rows do not match the dataset count");
    }
    if (static_cast<int>(performances.size()) != m) {
        throw ValidationError("performance tensor does not match the dataset count");
    }
    for (int i = 1; i < n; ++i) {
        if (!(fidelity_grid[i] > fidelity_grid[i - 1])) {
            throw ValidationError("fidelity grid is not strictly increasing");
        }
    }
    for (int d = 0; d < m; ++d) {
        if (performances[d].rows() != a || performances[d].cols() != n) {
            throw ValidationError("performance matrix shape mismatch for dataset " +
                                  dataset_ids[d]);
        }
        for (int i = 0; i < a; ++i) {
            for (int j = 0; j < n; ++j) {
                const double v = performances[d](i, j);
                if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
                    std::ostringstream msg;
                    msg << "performance out of [0,1] at (" << dataset_ids[d] << ", "
                        << algorithm_ids[i] << ", fidelity " << j << "): " << v;
                    throw ValidationError(msg.str());
                }
            }
        }
        if (!meta_features.row(d).allFinite()) {
            throw ValidationError("non-finite meta-feature for dataset " + dataset_ids[d]);
        }
    }
}

void SyntheticSpec::validate() const {
    if (num_datasets < 1) throw SpecError("synthetic spec: num_datasets must be >= 1");
    if (num_algorithms < 2) throw SpecError("synthetic spec: num_algorithms must be >= 2");
    if (num_fidelities < 2) throw SpecError("synthetic spec: num_fidelities must be >= 2");
    if (num_meta_features < 1) throw SpecError("synthetic spec: num_meta_features must be >= 1");
    if (latent_dim < 1 || latent_dim > num_meta_features) {
        throw SpecError("synthetic spec: latent_dim must lie in [1, num_meta_features]");
    }
    if (noise_sd < 0.0) throw SpecError("synthetic spec: noise_sd must be >= 0");
    if (crossing_fraction < 0.0 || crossing_fraction > 1.0) {
        throw SpecError("synthetic spec: crossing_fraction must lie in [0, 1]");
    }
    if ((rate_min > 0.0) != (rate_max > 0.0) || rate_min > rate_max) {
        throw SpecError("synthetic spec: rate override needs 0 < rate_min <= rate_max");
    }
}

MetaDataset load_csv(const std::string& curves_path, const std::string& meta_path) {
    std::ifstream curves(curves_path);
    if (!curves) throw IoError("cannot open curves file: " + curves_path);
    std::ifstream meta(meta_path);
    if (!meta) throw IoError("cannot open meta-features file: " + meta_path);

    std::string line;
    if (!std::getline(curves, line) ||
        line != "dataset_id,algorithm_id,fidelity_index,performance") {
        throw ValidationError("curves file header must be "
                              "'dataset_id,algorithm_id,fidelity_index,performance'");
    }

    struct Cell {
        long fidelity;
        double performance;
    };
    std::map<std::string, std::map<std::string, std::vector<Cell>>> table;
    long max_fidelity = -1;
    long row_no = 1;
    while (std::getline(curves, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 4) {
            throw ValidationError("curves row " + std::to_string(row_no) +
                                  ": expected 4 fields");
        }
        const std::string where = "curves row " + std::to_string(row_no);
        const long fid = parse_index(fields[2], where);
        const double perf = parse_double(fields[3], where);
        max_fidelity = std::max(max_fidelity, fid);
        table[fields[0]][fields[1]].push_back({fid, perf});
    }
    if (table.empty()) throw ValidationError("curves file has no data rows");
    const int n = static_cast<int>(max_fidelity + 1);

    // Sorted, deduplicated algorithm universe.
    std::vector<std::string> algorithm_ids;
    for (const auto& [ds, algos] : table) {
        for (const auto& [algo, cells] : algos) algorithm_ids.push_back(algo);
    }
    std::sort(algorithm_ids.begin(), algorithm_ids.end());
    algorithm_ids.erase(std::unique(algorithm_ids.begin(), algorithm_ids.end()),
                        algorithm_ids.end());

    MetaDataset ds;
    ds.algorithm_ids = algorithm_ids;
    for (int j = 0; j < n; ++j) ds.fidelity_grid.push_back(static_cast<double>(j));

    for (const auto& [dataset, algos] : table) {
        ds.dataset_ids.push_back(dataset);
        Mat perf = Mat::Constant(static_cast<int>(algorithm_ids.size()), n,
                                 std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < algorithm_ids.size(); ++i) {
            const auto it = algos.find(algorithm_ids[i]);
            if (it == algos.end()) {
                throw ValidationError("incomplete grid: no rows for (" + dataset + ", " +
                                      algorithm_ids[i] + ")");
            }
            for (const Cell& cell : it->second) {
                if (cell.fidelity >= n) continue;
                if (!std::isnan(perf(i, cell.fidelity))) {
                    throw ValidationError("duplicate cell (" + dataset + ", " +
                                          algorithm_ids[i] + ", fidelity " +
                                          std::to_string(cell.fidelity) + ")");
                }
                perf(i, cell.fidelity) = cell.performance;
            }
            for (int j = 0; j < n; ++j) {
                if (std::isnan(perf(i, j))) {
                    throw ValidationError("incomplete grid: missing cell (" + dataset + ", " +
                                          algorithm_ids[i] + ", fidelity " +
                                          std::to_string(j) + ")");
                }
            }
        }
        ds.performances.push_back(std::move(perf));
    }

    // Meta-features; every dataset in the curves file must appear exactly once.
    if (!std::getline(meta, line)) throw ValidationError("meta-features file is empty");
    const auto header = split_line(line);
    if (header.size() < 2 || header[0] != "dataset_id") {
        throw ValidationError("meta-features header must be 'dataset_id,f_0,...'");
    }
    const int f = static_cast<int>(header.size()) - 1;
    ds.meta_features = Mat::Zero(static_cast<int>(ds.dataset_ids.size()), f);
    std::map<std::string, Vec> meta_rows;
    row_no = 1;
    while (std::getline(meta, line)) {
        ++row_no;
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (static_cast<int>(fields.size()) != f + 1) {
            throw ValidationError("meta-features row " + std::to_string(row_no) +
                                  ": expected " + std::to_string(f + 1) + " fields");
        }
        Vec row(f);
        for (int j = 0; j < f; ++j) {
            row[j] = parse_double(fields[j + 1],
                                  "meta-features row " + std::to_string(row_no));
        }
        if (!meta_rows.emplace(fields[0], std::move(row)).second) {
            throw ValidationError("duplicate meta-feature row for dataset " + fields[0]);
        }
    }
    for (std::size_t d = 0; d < ds.dataset_ids.size(); ++d) {
        const auto it = meta_rows.find(ds.dataset_ids[d]);
        if (it == meta_rows.end()) {
            throw ValidationError("no meta-features for dataset " + ds.dataset_ids[d]);
        }
        ds.meta_features.row(d) = it->second.transpose();
    }
    if (meta_rows.size() != ds.dataset_ids.size()) {
        throw ValidationError("meta-features file lists datasets absent from the curves file");
    }

    ds.validate();
    return ds;
}

void save_csv(const MetaDataset& ds, const std::string& curves_path,
              const std::string& meta_path) {
    ds.validate();
    std::ofstream curves(curves_path);
    if (!curves) throw IoError("cannot write curves file: " + curves_path);
    curves << "dataset_id,algorithm_id,fidelity_index,performance\n";

    // Deterministic row order: (dataset_id, algorithm_id, fidelity_index).
    std::vector<int> d_order(ds.num_datasets());
    std::iota(d_order.begin(), d_order.end(), 0);
    std::sort(d_order.begin(), d_order.end(),
              [&](int a, int b) { return ds.dataset_ids[a] < ds.dataset_ids[b]; });
    std::vector<int> a_order(ds.num_algorithms());
    std::iota(a_order.begin(), a_order.end(), 0);
    std::sort(a_order.begin(), a_order.end(),
              [&](int a, int b) { return ds.algorithm_ids[a] < ds.algorithm_ids[b]; });

    for (int d : d_order) {
        for (int i : a_order) {
            for (int j = 0; j < ds.num_fidelities(); ++j) {
                curves << ds.dataset_ids[d] << ',' << ds.algorithm_ids[i] << ',' << j << ','
                       << format_double(ds.performances[d](i, j)) << '\n';
            }
        }
    }
    if (!curves.good()) throw IoError("write failed: " + curves_path);

    std::ofstream meta(meta_path);
    if (!meta) throw IoError("cannot write meta-features file: " + meta_path);
    meta << "dataset_id";
    for (int j = 0; j < ds.num_meta_features(); ++j) meta << ",f_" << j;
    meta << '\n';
    for (int d : d_order) {
        meta << ds.dataset_ids[d];
        for (int j = 0; j < ds.num_meta_features(); ++j) {
            meta << ',' << format_double(ds.meta_features(d, j));
        }
        meta << '\n';
    }
    if (!meta.good()) throw IoError("write failed: " + meta_path);
}

MetaDataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const int m = spec.num_datasets;
    const int a = spec.num_algorithms;
    const int n = spec.num_fidelities;
    const int f = spec.num_meta_features;
    const int latent = spec.latent_dim;

    Rng rng(spec.seed, /*stream=*/0x9e7a);

    Mat z(m, latent);
    for (int d = 0; d < m; ++d) {
        for (int l = 0; l < latent; ++l) z(d, l) = rng.normal();
    }
    Mat w_algo(a, latent);
    const double latent_scale = 1.0 / std::sqrt(static_cast<double>(latent));
    for (int i = 0; i < a; ++i) {
        for (int l = 0; l < latent; ++l) w_algo(i, l) = rng.normal() * latent_scale;
    }
    Mat readout(f, latent);
    for (int i = 0; i < f; ++i) {
        for (int l = 0; l < latent; ++l) readout(i, l) = rng.normal();
    }

    const int n_cross = static_cast<int>(std::llround(spec.crossing_fraction * a));
    const bool rate_override = spec.rate_min > 0.0;

    MetaDataset ds;
    const int id_width = std::max<int>(3, static_cast<int>(std::to_string(m - 1).size()));
    for (int d = 0; d < m; ++d) ds.dataset_ids.push_back("ds_" + zero_pad(d, id_width));
    for (int i = 0; i < a; ++i) ds.algorithm_ids.push_back("algo_" + zero_pad(i, 3));
    for (int j = 0; j < n; ++j) ds.fidelity_grid.push_back(static_cast<double>(j));

    ds.meta_features.resize(m, f);
    for (int d = 0; d < m; ++d) {
        Mat perf(a, n);
        for (int i = 0; i < a; ++i) {
            const bool crossing = i < n_cross;
            const double affinity = z.row(d).dot(w_algo.row(i));
            const double asymptote_noise = rng.normal(0.0, 0.35);
            // Crossing algorithms: boosted asymptote, slow approach, low start.
            const double p_inf =
                sigmoid(affinity + asymptote_noise + (crossing ? 1.25 : 0.0));
            double rate;
            if (rate_override) {
                rate = rng.uniform(spec.rate_min, spec.rate_max);
            } else if (crossing) {
                rate = rng.uniform(0.12, 0.35);
            } else {
                rate = rng.uniform(0.8, 2.0);
            }
            const double p0 = rng.uniform01() * (crossing ? 0.25 : 0.6) * p_inf;
            for (int j = 0; j < n; ++j) {
                const double k = static_cast<double>(j + 1);
                double v = p_inf - (p_inf - p0) * std::exp(-rate * k);
                if (spec.noise_sd > 0.0) v += rng.normal(0.0, spec.noise_sd);
                perf(i, j) = std::min(1.0, std::max(0.0, v));
            }
        }
        ds.performances.push_back(std::move(perf));
        Vec meta = readout * z.row(d).transpose();
        for (int j = 0; j < f; ++j) ds.meta_features(d, j) = meta[j] + rng.normal(0.0, 0.1);
    }

    ds.validate();
    return ds;
}

FeatureScaler fit_feature_scaler(const MetaDataset& train) {
    if (train.num_datasets() < 2) {
        throw SpecError("feature scaler needs at least two training datasets");
    }
    const int f = train.num_meta_features();
    FeatureScaler scaler;
    scaler.mean.resize(f);
    scaler.inv_sd.resize(f);
    for (int j = 0; j < f; ++j) {
        const double mean = train.meta_features.col(j).mean();
        const double var =
            (train.meta_features.col(j).array() - mean).square().sum() / train.num_datasets();
        const double sd = std::sqrt(var);
        scaler.mean[j] = mean;
        scaler.inv_sd[j] = (sd > 1e-12) ? 1.0 / sd : 0.0;
    }
    return scaler;
}

MetaDataset apply_feature_scaler(const FeatureScaler& scaler, const MetaDataset& ds) {
    if (scaler.mean.size() != ds.num_meta_features()) {
        throw ShapeError("feature scaler dim does not match the dataset");
    }
    MetaDataset out = ds;
    for (int j = 0; j < ds.num_meta_features(); ++j) {
        out.meta_features.col(j) =
            (ds.meta_features.col(j).array() - scaler.mean[j]) * scaler.inv_sd[j];
    }
    return out;
}

MetaDataset normalize_meta_features(const MetaDataset& train, const MetaDataset& apply_to) {
    return apply_feature_scaler(fit_feature_scaler(train), apply_to);
}

MetaDataset subset(const MetaDataset& ds, const std::vector<int>& indices) {
    MetaDataset out;
    out.algorithm_ids = ds.algorithm_ids;
    out.fidelity_grid = ds.fidelity_grid;
    out.meta_features.resize(static_cast<int>(indices.size()), ds.num_meta_features());
    int row = 0;
    for (int idx : indices) {
        out.dataset_ids.push_back(ds.dataset_ids.at(idx));
        out.performances.push_back(ds.performances.at(idx));
        out.meta_features.row(row++) = ds.meta_features.row(idx);
    }
    return out;
}

std::pair<MetaDataset, MetaDataset> split(const MetaDataset& ds, double test_fraction,
                                          std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw SpecError("split: test_fraction must lie strictly in (0, 1)");
    }
    const int m = ds.num_datasets();
    const int n_test = static_cast<int>(std::floor(m * test_fraction + 1e-9));
    if (n_test < 1 || n_test >= m) {
        throw SpecError("split: fraction yields an empty train or test side");
    }

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed, /*stream=*/0x5711);
    rng.shuffle(order);

    std::vector<int> test_idx(order.begin(), order.begin() + n_test);
    std::vector<int> train_idx(order.begin() + n_test, order.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    return {subset(ds, train_idx), subset(ds, test_idx)};
}

}  // namespace imfas
